//! CSV and LIBSVM readers.
//!
//! CSV: comma-separated, optional header row, `.` decimal point. LIBSVM:
//! `label index:value ...` per line, whitespace-separated, 1-based indices,
//! omitted entries are zero, `#` starts a comment.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{DataError, Dataset};

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
    /// Every column is a feature; labels are set to zero.
    None,
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(if s.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else if s.eq_ignore_ascii_case("none") {
            LabelColumn::None
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::None => f.write_str("none"),
        }
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label: &LabelColumn,
    has_header: bool,
) -> Result<Dataset, DataError> {
    read_csv(File::open(path)?, label, has_header)
}

/// Reads CSV rows in file order. Line and column numbers in errors are 1-based.
pub fn read_csv<R: Read>(
    reader: R,
    label: &LabelColumn,
    has_header: bool,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers: Option<Vec<String>> = if has_header {
        let h = rdr.headers().map_err(csv_error)?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut width: Option<usize> = headers.as_ref().map(Vec::len).filter(|&w| w > 0);
    let mut label_idx: Option<usize> = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();

    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(row + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(DataError::RaggedRows {
                row: line,
                expected: w,
                found: record.len(),
            });
        }
        let li = match label_idx {
            Some(li) => li,
            None => *label_idx.insert(resolve_label(label, headers.as_deref(), w)?),
        };
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                line,
                column: col + 1,
                message: format!("`{field}` is not a number"),
            })?;
            if col == li {
                labels.push(v);
            } else {
                features.push(v);
            }
        }
        if li == NO_LABEL {
            labels.push(0.0);
        }
    }

    let w = match (width, label_idx) {
        (Some(w), Some(_)) => w,
        _ => return Err(DataError::EmptyFile),
    };
    let unlabeled = label_idx == Some(NO_LABEL);
    let ds = Dataset::from_flat(features, w - usize::from(!unlabeled), labels)?;
    Ok(match (headers, label_idx) {
        (Some(names), Some(NO_LABEL)) => ds.with_feature_names(names),
        (Some(mut names), Some(li)) => {
            names.remove(li);
            ds.with_feature_names(names)
        }
        _ => ds,
    })
}

const NO_LABEL: usize = usize::MAX;

fn resolve_label(
    label: &LabelColumn,
    headers: Option<&[String]>,
    width: usize,
) -> Result<usize, DataError> {
    let idx = match label {
        LabelColumn::None => Some(NO_LABEL),
        LabelColumn::Last => width.checked_sub(1),
        LabelColumn::Index(i) => Some(*i).filter(|&i| i < width),
        LabelColumn::Name(name) => headers.and_then(|h| h.iter().position(|c| c == name)),
    };
    idx.ok_or_else(|| DataError::MissingLabelColumn(label.to_string()))
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::Io(io),
        other => DataError::Parse {
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    read_libsvm(BufReader::new(File::open(path)?))
}

/// Reads a LIBSVM file into a dense dataset whose width is the largest index seen.
/// `qid:` tokens are skipped.
pub fn read_libsvm<R: BufRead>(reader: R) -> Result<Dataset, DataError> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut width = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok.parse().map_err(|_| DataError::Parse {
            line: line_no,
            column: 1,
            message: format!("label `{label_tok}` is not a number"),
        })?;
        let mut entries = Vec::new();
        for (t, token) in tokens.enumerate() {
            let column = t + 2;
            let (idx, val) = token.split_once(':').ok_or_else(|| DataError::Parse {
                line: line_no,
                column,
                message: format!("`{token}` is not an index:value pair"),
            })?;
            if idx == "qid" {
                continue;
            }
            let idx: i64 = idx.parse().map_err(|_| DataError::Parse {
                line: line_no,
                column,
                message: format!("feature index `{idx}` is not an integer"),
            })?;
            if idx <= 0 {
                return Err(DataError::NonPositiveIndex {
                    line: line_no,
                    index: idx,
                });
            }
            let val: f64 = val.parse().map_err(|_| DataError::Parse {
                line: line_no,
                column,
                message: format!("feature value `{val}` is not a number"),
            })?;
            let idx = idx as usize;
            if entries.iter().any(|&(j, _)| j == idx) {
                return Err(DataError::Parse {
                    line: line_no,
                    column,
                    message: format!("feature index {idx} repeated"),
                });
            }
            width = width.max(idx);
            entries.push((idx, val));
        }
        labels.push(label);
        rows.push(entries);
    }

    if labels.is_empty() {
        return Err(DataError::EmptyFile);
    }
    let mut features = vec![0.0; labels.len() * width];
    for (r, entries) in rows.iter().enumerate() {
        for &(idx, val) in entries {
            features[r * width + idx - 1] = val;
        }
    }
    Dataset::from_flat(features, width, labels)
}

/// Writes non-zero entries in LIBSVM form using the shortest round-tripping float text.
pub fn write_libsvm<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    for (row, y) in ds.rows().zip(ds.labels()) {
        write!(out, "{y}")?;
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

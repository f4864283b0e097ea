//! Dense vectors and symmetric matrices, sized for the small Gram systems
//! (d at most a few dozen) produced by the weighted normal equations.

use thiserror::Error;

/// Smallest jitter ever applied to a diagonal; an `alpha` of zero is raised to this.
pub const MIN_JITTER: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("factorization failed at pivot {pivot} (value {value}); matrix is not numerically positive definite")]
    FactorizationFailure { pivot: usize, value: f64 },
    #[error("weight must be finite and non-negative, got {0}")]
    InvalidWeight(f64),
    #[error("jitter must be finite and non-negative, got {0}")]
    InvalidJitter(f64),
    #[error("non-finite entry in input")]
    NonFinite,
}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64, LinalgError> {
    check_len(a.len(), b.len())?;
    Ok(dot_unchecked(a, b))
}

pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y + a * x`
pub fn axpy(a: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(xi, yi)| yi + a * xi).collect())
}

pub fn scale(x: &[f64], a: f64) -> Vec<f64> {
    x.iter().map(|v| v * a).collect()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// A dense symmetric matrix. Only symmetry-preserving updates are exposed,
/// and every update writes both triangles with the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.add_diagonal(1.0);
        m
    }

    /// Builds from the lower triangle of `f(i, j)`, `j <= i`.
    pub fn from_lower(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// `M^T M`, symmetric by construction. `rows` is row-major with `cols` columns.
    pub fn gram(rows: &[f64], cols: usize) -> Self {
        let mut m = Self::zeros(cols);
        if cols == 0 {
            return m;
        }
        for r in rows.chunks_exact(cols) {
            m.rank_one_update(r, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += v;
        }
    }

    /// `self += s * x x^T`.
    pub fn accumulate_weighted_outer(&mut self, x: &[f64], s: f64) -> Result<(), LinalgError> {
        check_len(self.dim, x.len())?;
        if !(s >= 0.0 && s.is_finite()) {
            return Err(LinalgError::InvalidWeight(s));
        }
        self.rank_one_update(x, s);
        Ok(())
    }

    fn rank_one_update(&mut self, x: &[f64], s: f64) {
        let d = self.dim;
        for (i, xi) in x.iter().enumerate() {
            let sx = s * xi;
            if sx == 0.0 {
                continue;
            }
            for (j, xj) in x.iter().enumerate().take(i + 1) {
                let v = self.data[i * d + j] + sx * xj;
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.dim, x.len())?;
        Ok((0..self.dim)
            .map(|i| dot_unchecked(self.row(i), x))
            .collect())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self, LinalgError> {
        let d = a.dim;
        let mut l = vec![0.0; d * d];
        for j in 0..d {
            let mut diag = a.get(j, j);
            for k in 0..j {
                diag -= l[j * d + k] * l[j * d + k];
            }
            if !(diag > 0.0 && diag.is_finite()) {
                return Err(LinalgError::FactorizationFailure {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[j * d + j] = ljj;
            for i in (j + 1)..d {
                let mut v = a.get(i, j);
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k];
                }
                l[i * d + j] = v / ljj;
            }
        }
        Ok(Cholesky { dim: d, lower: l })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let d = self.dim;
        check_len(d, b.len())?;
        let l = &self.lower;
        let mut z = b.to_vec();
        for i in 0..d {
            let mut v = z[i];
            for k in 0..i {
                v -= l[i * d + k] * z[k];
            }
            z[i] = v / l[i * d + i];
        }
        for i in (0..d).rev() {
            let mut v = z[i];
            for k in (i + 1)..d {
                v -= l[k * d + i] * z[k];
            }
            z[i] = v / l[i * d + i];
        }
        Ok(z)
    }
}

/// Solves `(A + alpha I) w = b` by Cholesky with one step of iterative refinement.
///
/// `alpha = 0` is raised to [`MIN_JITTER`]. A factorization failure means the
/// jittered matrix is numerically indefinite; retrying with a larger `alpha` is
/// the caller's choice.
pub fn solve_spd_with_jitter(
    a: &SymMatrix,
    b: &[f64],
    alpha: f64,
) -> Result<Vec<f64>, LinalgError> {
    check_len(a.dim, b.len())?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(LinalgError::InvalidJitter(alpha));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let alpha = alpha.max(MIN_JITTER);
    let mut shifted = a.clone();
    shifted.add_diagonal(alpha);
    let chol = Cholesky::factor(&shifted)?;
    let mut w = chol.solve(b)?;

    let aw = shifted.mul_vec(&w)?;
    let residual: Vec<f64> = b.iter().zip(&aw).map(|(bi, ai)| bi - ai).collect();
    let correction = chol.solve(&residual)?;
    for (wi, ci) in w.iter_mut().zip(&correction) {
        *wi += ci;
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(w)
}

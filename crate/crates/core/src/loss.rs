//! Base M-estimator losses and their half-quadratic weight functions.
//!
//! Every loss is a symmetric function `phi(e)` of the residual with `phi(0) = 0`.
//! The multiplicative half-quadratic minimizer is `delta(e) = phi'(e) / e`,
//! extended continuously at `e = 0`. For every kind in the catalog `delta` is
//! positive and non-increasing in `|e|`, which is what makes the alternating
//! solver a descent method on the original risk.
//!
//! Losses are written in text as `kind[:scale]`, for example
//! `welsch:1.0,l1l2,huber:0.5`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("ensemble must contain at least one loss")]
    EmptyEnsemble,
    #[error("{kind} scale must be a positive finite number, got {scale}")]
    NonPositiveScale { kind: LossKind, scale: f64 },
    #[error("duplicate loss {0} in ensemble")]
    DuplicateLoss(String),
    #[error("unknown loss kind `{0}` (expected welsch, l1l2, huber, fair or logcosh)")]
    UnknownKind(String),
    #[error("{0} is fixed-shape and takes no scale")]
    ScaleNotApplicable(LossKind),
    #[error("invalid scale `{0}`")]
    InvalidScale(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `1 - exp(-e^2 / sigma^2)`, bounded and redescending.
    Welsch,
    /// `sqrt(1 + e^2) - 1`.
    L1L2,
    /// `e^2 / (4 eps)` for `|e| < 2 eps`, else `|e| - eps`.
    Huber,
    /// `c^2 (|e|/c - ln(1 + |e|/c))`.
    Fair,
    /// `ln(cosh(e))`.
    LogCosh,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Welsch,
        LossKind::L1L2,
        LossKind::Huber,
        LossKind::Fair,
        LossKind::LogCosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Welsch => "welsch",
            LossKind::L1L2 => "l1l2",
            LossKind::Huber => "huber",
            LossKind::Fair => "fair",
            LossKind::LogCosh => "logcosh",
        }
    }

    /// Whether the kind has a tunable scale parameter.
    pub fn uses_scale(self) -> bool {
        matches!(self, LossKind::Welsch | LossKind::Huber | LossKind::Fair)
    }

    pub fn default_scale(self) -> f64 {
        1.0
    }

    /// Convex kinds have a unique minimizer of any positive combination.
    pub fn is_convex(self) -> bool {
        !matches!(self, LossKind::Welsch)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "welsch" => Ok(LossKind::Welsch),
            "l1l2" | "l1_l2" | "l1-l2" => Ok(LossKind::L1L2),
            "huber" => Ok(LossKind::Huber),
            "fair" => Ok(LossKind::Fair),
            "logcosh" | "log-cosh" | "log_cosh" => Ok(LossKind::LogCosh),
            other => Err(LossError::UnknownKind(other.to_string())),
        }
    }
}

/// One base loss: a kind plus its scale (`sigma`, `eps` or `c`).
///
/// Fixed-shape kinds carry `scale = 1.0`, which is ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub scale: f64,
}

impl LossSpec {
    /// Checked constructor.
    pub fn new(kind: LossKind, scale: f64) -> Result<Self, LossError> {
        let spec = LossSpec { kind, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_default_scale(kind: LossKind) -> Self {
        LossSpec {
            kind,
            scale: kind.default_scale(),
        }
    }

    pub fn welsch(sigma: f64) -> Self {
        LossSpec {
            kind: LossKind::Welsch,
            scale: sigma,
        }
    }

    pub fn l1l2() -> Self {
        Self::with_default_scale(LossKind::L1L2)
    }

    pub fn huber(eps: f64) -> Self {
        LossSpec {
            kind: LossKind::Huber,
            scale: eps,
        }
    }

    pub fn fair(c: f64) -> Self {
        LossSpec {
            kind: LossKind::Fair,
            scale: c,
        }
    }

    pub fn logcosh() -> Self {
        Self::with_default_scale(LossKind::LogCosh)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if self.kind.uses_scale() && !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(LossError::NonPositiveScale {
                kind: self.kind,
                scale: self.scale,
            });
        }
        Ok(())
    }

    /// Identity used for duplicate detection; the scale of fixed-shape kinds is ignored.
    fn key(&self) -> (LossKind, u64) {
        if self.kind.uses_scale() {
            (self.kind, self.scale.to_bits())
        } else {
            (self.kind, 0)
        }
    }

    /// Loss value `phi(e)`.
    pub fn phi(&self, e: f64) -> f64 {
        let a = e.abs();
        match self.kind {
            LossKind::Welsch => {
                let s2 = self.scale * self.scale;
                -(-(e * e) / s2).exp_m1()
            }
            LossKind::L1L2 => {
                let h = a.hypot(1.0);
                if a < 1e8 {
                    // avoids cancellation in sqrt(1 + e^2) - 1 near zero
                    a * a / (h + 1.0)
                } else {
                    h - 1.0
                }
            }
            LossKind::Huber => {
                let eps = self.scale;
                if a < 2.0 * eps {
                    a * a / (4.0 * eps)
                } else {
                    a - eps
                }
            }
            LossKind::Fair => {
                let c = self.scale;
                let r = a / c;
                c * c * (r - r.ln_1p())
            }
            LossKind::LogCosh => {
                if a < 20.0 {
                    // cosh(a) - 1 = 2 sinh^2(a/2)
                    let s = (0.5 * a).sinh();
                    (2.0 * s * s).ln_1p()
                } else {
                    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
                }
            }
        }
    }

    /// First derivative `phi'(e)`.
    pub fn derivative(&self, e: f64) -> f64 {
        e * self.delta(e)
    }

    /// Half-quadratic weight `delta(e) = phi'(e) / e`, continuous at zero.
    pub fn delta(&self, e: f64) -> f64 {
        let a = e.abs();
        match self.kind {
            LossKind::Welsch => {
                let s2 = self.scale * self.scale;
                2.0 / s2 * (-(e * e) / s2).exp()
            }
            LossKind::L1L2 => 1.0 / a.hypot(1.0),
            LossKind::Huber => {
                let eps = self.scale;
                if a < 2.0 * eps {
                    1.0 / (2.0 * eps)
                } else {
                    1.0 / a
                }
            }
            LossKind::Fair => 1.0 / (1.0 + a / self.scale),
            LossKind::LogCosh => {
                if a == 0.0 {
                    1.0
                } else {
                    a.tanh() / a
                }
            }
        }
    }

    /// `delta(0)`, the largest weight the loss ever assigns.
    pub fn delta_at_zero(&self) -> f64 {
        self.delta(0.0)
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.uses_scale() {
            write!(f, "{}:{}", self.kind, self.scale)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

impl FromStr for LossSpec {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, scale) = match s.split_once(':') {
            Some((k, v)) => (k, Some(v)),
            None => (s, None),
        };
        let kind: LossKind = kind.parse()?;
        match scale {
            None => Ok(LossSpec::with_default_scale(kind)),
            Some(_) if !kind.uses_scale() => Err(LossError::ScaleNotApplicable(kind)),
            Some(v) => {
                let scale: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| LossError::InvalidScale(v.to_string()))?;
                LossSpec::new(kind, scale)
            }
        }
    }
}

impl Serialize for LossSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LossSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Check a loss list: non-empty, valid scales, no repeated `(kind, scale)`.
pub fn validate(losses: &[LossSpec]) -> Result<(), LossError> {
    if losses.is_empty() {
        return Err(LossError::EmptyEnsemble);
    }
    let mut seen = HashSet::with_capacity(losses.len());
    for loss in losses {
        loss.validate()?;
        if !seen.insert(loss.key()) {
            return Err(LossError::DuplicateLoss(loss.to_string()));
        }
    }
    Ok(())
}

/// An ordered, validated list of base losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LossSpec>", into = "Vec<LossSpec>")]
pub struct EnsembleSpec {
    losses: Vec<LossSpec>,
}

impl EnsembleSpec {
    pub fn new(losses: Vec<LossSpec>) -> Result<Self, LossError> {
        validate(&losses)?;
        Ok(EnsembleSpec { losses })
    }

    pub fn single(loss: LossSpec) -> Result<Self, LossError> {
        Self::new(vec![loss])
    }

    pub fn losses(&self) -> &[LossSpec] {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    /// Same ensemble with every scaled loss multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self, LossError> {
        let losses = self
            .losses
            .iter()
            .map(|l| {
                if l.kind.uses_scale() {
                    LossSpec {
                        kind: l.kind,
                        scale: l.scale * factor,
                    }
                } else {
                    *l
                }
            })
            .collect();
        Self::new(losses)
    }

    /// Sum of all base losses at residual `e`, without ensemble weights.
    pub fn phi_sum(&self, e: f64) -> f64 {
        self.losses.iter().map(|l| l.phi(e)).sum()
    }
}

impl TryFrom<Vec<LossSpec>> for EnsembleSpec {
    type Error = LossError;

    fn try_from(losses: Vec<LossSpec>) -> Result<Self, Self::Error> {
        Self::new(losses)
    }
}

impl From<EnsembleSpec> for Vec<LossSpec> {
    fn from(e: EnsembleSpec) -> Self {
        e.losses
    }
}

impl fmt::Display for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.losses.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for EnsembleSpec {
    type Err = LossError;

    /// Parses `kind[:scale](,kind[:scale])*`. Blank input is an empty ensemble.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let losses = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<LossSpec>, _>>()?;
        Self::new(losses)
    }
}

impl Default for EnsembleSpec {
    /// `welsch,l1l2,huber` at unit scales.
    fn default() -> Self {
        EnsembleSpec {
            losses: vec![
                LossSpec::welsch(1.0),
                LossSpec::l1l2(),
                LossSpec::huber(1.0),
            ],
        }
    }
}

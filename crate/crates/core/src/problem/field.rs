use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `amplitude * exp(-width * |x - center|^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
}

impl Bump {
    pub fn new(amplitude: f64, width: f64, center: impl Into<Vec<f64>>) -> Self {
        Bump { amplitude, width, center: center.into() }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.amplitude * (-self.width * r2).exp()
    }

    /// sup |∇| of the bump, attained at radius 1/sqrt(2 width).
    fn slope_bound(&self) -> f64 {
        self.amplitude.abs() * (2.0 * self.width / E).sqrt()
    }
}

/// Closed-form scalar fields used for both the potential V and the profile φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant { value: f64 },
    /// `base + Σ bumps`
    GaussianBumps { base: f64, bumps: Vec<Bump> },
    /// `Π cos(π x_j / (2 ℓ_j))`
    Cosine { half_lengths: Vec<f64> },
    /// Cosine profile multiplied by `base + Σ bumps`.
    CosineGaussian { half_lengths: Vec<f64>, base: f64, bumps: Vec<Bump> },
}

fn bump_sum(base: f64, bumps: &[Bump], x: &[f64]) -> f64 {
    bumps.iter().fold(base, |acc, b| acc + b.eval(x))
}

fn cosine(half_lengths: &[f64], x: &[f64]) -> f64 {
    half_lengths
        .iter()
        .zip(x)
        .map(|(l, xi)| (PI * xi / (2.0 * l)).cos())
        .product()
}

fn cosine_slope(half_lengths: &[f64]) -> f64 {
    half_lengths
        .iter()
        .map(|l| (PI / (2.0 * l)).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn bumps_sup(base: f64, bumps: &[Bump]) -> f64 {
    bumps.iter().fold(base.abs(), |acc, b| acc + b.amplitude.abs())
}

fn bumps_slope(bumps: &[Bump]) -> f64 {
    bumps.iter().map(Bump::slope_bound).sum()
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Constant { value }
    }

    pub fn cosine(half_lengths: impl Into<Vec<f64>>) -> Self {
        FieldSpec::Cosine { half_lengths: half_lengths.into() }
    }

    pub fn bumps(base: f64, bumps: Vec<Bump>) -> Self {
        FieldSpec::GaussianBumps { base, bumps }
    }

    pub fn cosine_bumps(half_lengths: impl Into<Vec<f64>>, base: f64, bumps: Vec<Bump>) -> Self {
        FieldSpec::CosineGaussian { half_lengths: half_lengths.into(), base, bumps }
    }

    /// The spatial dimension the field is tied to, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            FieldSpec::Constant { .. } => None,
            FieldSpec::GaussianBumps { bumps, .. } => bumps.first().map(|b| b.center.len()),
            FieldSpec::Cosine { half_lengths } | FieldSpec::CosineGaussian { half_lengths, .. } => {
                Some(half_lengths.len())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidField(msg));
        let check_bumps = |bumps: &[Bump], dim: Option<usize>| -> Result<()> {
            for b in bumps {
                if !(b.width.is_finite() && b.width > 0.0) {
                    return Err(Error::InvalidField(format!(
                        "bump width must be positive, got {}",
                        b.width
                    )));
                }
                if !b.amplitude.is_finite() || b.center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidField("non-finite bump parameter".into()));
                }
                if let Some(d) = dim {
                    if b.center.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: b.center.len() });
                    }
                }
            }
            Ok(())
        };
        match self {
            FieldSpec::Constant { value } if !value.is_finite() => bad("non-finite constant".into()),
            FieldSpec::Constant { .. } => Ok(()),
            FieldSpec::GaussianBumps { base, bumps } => {
                if !base.is_finite() {
                    return bad("non-finite base".into());
                }
                check_bumps(bumps, self.dimension())
            }
            FieldSpec::Cosine { half_lengths } | FieldSpec::CosineGaussian { half_lengths, .. } => {
                if half_lengths.is_empty() || half_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return bad(format!("cosine half-lengths must be positive, got {half_lengths:?}"));
                }
                if let FieldSpec::CosineGaussian { base, bumps, .. } = self {
                    if !base.is_finite() {
                        return bad("non-finite base".into());
                    }
                    check_bumps(bumps, Some(half_lengths.len()))?;
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FieldSpec::Constant { value } => *value,
            FieldSpec::GaussianBumps { base, bumps } => bump_sum(*base, bumps, x),
            FieldSpec::Cosine { half_lengths } => cosine(half_lengths, x),
            FieldSpec::CosineGaussian { half_lengths, base, bumps } => {
                cosine(half_lengths, x) * bump_sum(*base, bumps, x)
            }
        }
    }

    /// Upper bound for |∇f| over all of R^N; also a Lipschitz constant.
    pub fn gradient_bound(&self) -> f64 {
        match self {
            FieldSpec::Constant { .. } => 0.0,
            FieldSpec::GaussianBumps { bumps, .. } => bumps_slope(bumps),
            FieldSpec::Cosine { half_lengths } => cosine_slope(half_lengths),
            FieldSpec::CosineGaussian { half_lengths, base, bumps } => {
                // |∇(cg)| <= |∇c| sup|g| + sup|c| |∇g|, with sup|c| = 1
                cosine_slope(half_lengths) * bumps_sup(*base, bumps) + bumps_slope(bumps)
            }
        }
    }

    pub fn is_cosine_kind(&self) -> bool {
        matches!(self, FieldSpec::Cosine { .. } | FieldSpec::CosineGaussian { .. })
    }
}

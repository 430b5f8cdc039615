use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane or on the line. Its length is the spatial dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Convex computational domains centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    /// (-half_length, half_length)
    Interval { half_length: f64 },
    /// (-half_x, half_x) x (-half_y, half_y)
    Rectangle { half_x: f64, half_y: f64 },
    /// Disc of the given radius.
    Disc { radius: f64 },
}

// Relative slack when testing membership of lattice points.
const MEMBERSHIP_TOL: f64 = 1e-12;

impl DomainSpec {
    pub fn interval(half_length: f64) -> Result<Self> {
        let d = DomainSpec::Interval { half_length };
        d.validate()?;
        Ok(d)
    }

    pub fn rectangle(half_x: f64, half_y: f64) -> Result<Self> {
        let d = DomainSpec::Rectangle { half_x, half_y };
        d.validate()?;
        Ok(d)
    }

    pub fn disc(radius: f64) -> Result<Self> {
        let d = DomainSpec::Disc { radius };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            DomainSpec::Interval { half_length } if !ok(half_length) => Err(Error::InvalidDomain(
                format!("interval half-length must be positive, got {half_length}"),
            )),
            DomainSpec::Rectangle { half_x, half_y } if !ok(half_x) || !ok(half_y) => {
                Err(Error::InvalidDomain(format!(
                    "rectangle half-sides must be positive, got {half_x} x {half_y}"
                )))
            }
            DomainSpec::Disc { radius } if !ok(radius) => Err(Error::InvalidDomain(format!(
                "disc radius must be positive, got {radius}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Rectangle { .. } | DomainSpec::Disc { .. } => 2,
        }
    }

    /// Half-lengths of the bounding box, one per axis.
    pub fn half_extents(&self) -> Vec<f64> {
        match *self {
            DomainSpec::Interval { half_length } => vec![half_length],
            DomainSpec::Rectangle { half_x, half_y } => vec![half_x, half_y],
            DomainSpec::Disc { radius } => vec![radius, radius],
        }
    }

    fn scale(&self) -> f64 {
        self.half_extents().into_iter().fold(0.0, f64::max)
    }

    /// Membership in the closure of the domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance_to_boundary(x) >= -MEMBERSHIP_TOL * self.scale()
    }

    /// Membership in the open domain.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        self.distance_to_boundary(x) > MEMBERSHIP_TOL * self.scale()
    }

    /// Signed distance to the boundary, positive inside.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match *self {
            DomainSpec::Interval { half_length } => half_length - x[0].abs(),
            DomainSpec::Rectangle { half_x, half_y } => {
                (half_x - x[0].abs()).min(half_y - x[1].abs())
            }
            DomainSpec::Disc { radius } => radius - x[0].hypot(x[1]),
        }
    }

    /// Whether the closed ball of `radius` around `center` fits inside the domain.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        self.distance_to_boundary(center) >= radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_sizes() {
        assert!(DomainSpec::interval(0.0).is_err());
        assert!(DomainSpec::rectangle(1.0, -1.0).is_err());
        assert!(DomainSpec::disc(f64::NAN).is_err());
        assert!(DomainSpec::disc(0.5).is_ok());
    }

    #[test]
    fn membership() {
        let d = DomainSpec::disc(1.0).unwrap();
        assert!(d.contains(&[1.0, 0.0]));
        assert!(!d.contains_interior(&[1.0, 0.0]));
        assert!(!d.contains(&[0.8, 0.8]));
        let r = DomainSpec::rectangle(1.0, 0.5).unwrap();
        assert!(r.contains_ball(&[0.0, 0.0], 0.5));
        assert!(!r.contains_ball(&[0.0, 0.1], 0.5));
    }
}

//! Exact solutions of the diffusion-free problem `u_t = V(x) u^p`, `u(0) = Mφ(x)`.
//!
//! Each point evolves independently and blows up at
//! `T_x = (Mφ)^{1-p} / ((p-1) V)`, with `u(t) = Mφ (1 - t/T_x)^{-1/(p-1)}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{Grid, Point, ProblemSpec};

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveInput { name, value })
    }
}

/// Closed-form solution at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeSolution {
    pub base: f64,
    pub rate: f64,
    pub exponent: f64,
    pub blowup_time: f64,
}

impl OdeSolution {
    pub fn new(base: f64, rate: f64, exponent: f64) -> Result<Self> {
        positive("u0", base)?;
        positive("V", rate)?;
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::NonPositiveInput { name: "p - 1", value: exponent - 1.0 });
        }
        let blowup_time = base.powf(1.0 - exponent) / ((exponent - 1.0) * rate);
        Ok(OdeSolution { base, rate, exponent, blowup_time })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if t >= self.blowup_time {
            return Err(Error::PastBlowup { t, blowup_time: self.blowup_time });
        }
        Ok(self.base * (1.0 - t / self.blowup_time).powf(-1.0 / (self.exponent - 1.0)))
    }
}

/// `T = M^{1-p} / ((p-1) V φ^{p-1})`.
pub fn ode_blowup_time(m: f64, phi_x: f64, v_x: f64, p: f64) -> Result<f64> {
    positive("M", m)?;
    positive("phi", phi_x)?;
    Ok(OdeSolution::new(m * phi_x, v_x, p)?.blowup_time)
}

pub fn ode_value(m: f64, phi_x: f64, v_x: f64, p: f64, t: f64) -> Result<f64> {
    positive("M", m)?;
    positive("phi", phi_x)?;
    OdeSolution::new(m * phi_x, v_x, p)?.value(t)
}

/// Earliest pointwise blow-up time over interior nodes, and where it happens.
/// Nodes with `φ <= 0` never blow up and are skipped.
pub fn ode_min_blowup_time(problem: &ProblemSpec, grid: &Grid) -> Result<(f64, Point)> {
    let m = positive("M", problem.amplitude)?;
    let p = problem.exponent;
    let mut best: Option<(f64, usize)> = None;
    for &node in grid.interior() {
        let x = grid.coord(node);
        let phi = problem.profile.eval(x);
        if phi <= 0.0 {
            continue;
        }
        let t = ode_blowup_time(m, phi, problem.potential.eval(x), p)?;
        if best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, node));
        }
    }
    let (t, node) = best.ok_or(Error::NonPositiveInput { name: "max phi", value: 0.0 })?;
    Ok((t, grid.point(node)))
}

/// Pointwise blow-up times at every node (`+inf` where `φ <= 0` or on the boundary).
pub fn ode_blowup_times(problem: &ProblemSpec, grid: &Grid) -> Result<Vec<f64>> {
    let m = positive("M", problem.amplitude)?;
    (0..grid.len())
        .map(|node| {
            let x = grid.coord(node);
            let phi = problem.profile.eval(x);
            if grid.is_boundary(node) || phi <= 0.0 {
                Ok(f64::INFINITY)
            } else {
                ode_blowup_time(m, phi, problem.potential.eval(x), problem.exponent)
            }
        })
        .collect()
}

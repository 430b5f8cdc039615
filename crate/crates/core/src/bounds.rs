//! Explicit theoretical quantities: the constant `A`, the small-ball
//! subsolution bound on the blow-up time, the rate constant and the
//! concentration exponent.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{argmax_weight, powp, Grid, Point, ProblemSpec};

/// Relative tolerance of the `ε` root solve.
pub const EPSILON_TOL: f64 = 1e-10;

/// `A = 1 / max φ^{p-1} V` and the maximizer.
pub fn compute_a(problem: &ProblemSpec, grid: &Grid) -> Result<(f64, Point)> {
    let w = argmax_weight(problem, grid)?;
    Ok((w.a_constant(), w.point))
}

/// `J₀(x)` by its power series; accurate to rounding for `|x| <= 4`.
fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of `J₀`, by bisection on `[2, 3]`.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    debug_assert!(bessel_j0(lo) > 0.0 && bessel_j0(hi) < 0.0);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First Dirichlet eigenvalue of the unit ball in `R^N`, so that
/// `λ₁(δ) = D / δ²` on the ball of radius `δ`.
pub fn eigenvalue_constant(dim: usize) -> Result<f64> {
    match dim {
        1 => Ok(PI * PI / 4.0),
        2 => Ok(bessel_j0_first_zero().powi(2)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub a_constant: f64,
    pub x_bar: Point,
    /// Larger of the closed-form slope bounds of `φ` and `V`.
    pub k_lipschitz: f64,
    pub d_constant: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda1: f64,
    pub t_upper: f64,
    pub rate_constant: f64,
    pub gamma: f64,
    pub amplitude: f64,
}

fn epsilon_residual(eps: f64, m: f64, phi: f64, p: f64, d: f64, k: f64) -> f64 {
    0.5 * eps * powp(m * (phi - eps), p - 1.0) - d * powp(2.0 * k / eps, 2.0)
}

/// Smallest root of `(ε/2)(M(φ̄ - ε))^{p-1} = D (2K/ε)²` in
/// `(0, min(φ̄, V̄)/2]`, or `None` when there is none.
///
/// The left side is not monotone on the whole bracket for `p > 2`, so the
/// first sign change on a fine scan is bisected.
pub fn solve_epsilon(m: f64, phi_bar: f64, v_bar: f64, p: f64, d: f64, k: f64) -> Option<f64> {
    let cap = 0.5 * phi_bar.min(v_bar);
    if !(cap > 0.0 && k > 0.0 && m > 0.0) {
        return None;
    }
    let g = |e: f64| epsilon_residual(e, m, phi_bar, p, d, k);
    const SCAN: usize = 4096;
    let mut lo = 0.0;
    let mut hi = None;
    for j in 1..=SCAN {
        let e = cap * j as f64 / SCAN as f64;
        if g(e) >= 0.0 {
            hi = Some(e);
            break;
        }
        lo = e;
    }
    let mut hi = hi?;
    while hi - lo > 1e-3 * EPSILON_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Blow-up time bound from the eigenfunction subsolution on `B(x̄, δ)`.
///
/// Fails with [`Error::AmplitudeTooSmall`] when the `ε` equation has no
/// admissible root or the ball leaves the domain.
pub fn comparison_upper_bound(problem: &ProblemSpec, grid: &Grid) -> Result<BoundsReport> {
    let (a_constant, x_bar) = compute_a(problem, grid)?;
    let m = problem.amplitude;
    let p = problem.exponent;
    let phi_bar = problem.profile.eval(x_bar.coords());
    let v_bar = problem.potential.eval(x_bar.coords());
    let k = problem.profile.gradient_bound().max(problem.potential.gradient_bound());
    let d = eigenvalue_constant(problem.dimension())?;
    let eps = solve_epsilon(m, phi_bar, v_bar, p, d, k).ok_or_else(|| {
        Error::AmplitudeTooSmall(format!("no admissible epsilon root at M = {m}"))
    })?;
    let delta = eps / (2.0 * k);
    if !problem.domain.contains_ball(x_bar.coords(), delta) {
        return Err(Error::AmplitudeTooSmall(format!(
            "ball of radius {delta} around the weight maximum leaves the domain at M = {m}"
        )));
    }
    let t_upper = 1.0 / (powp(m, p - 1.0) * (p - 1.0) * (v_bar - eps) * powp(phi_bar - eps, p - 1.0));
    Ok(BoundsReport {
        a_constant,
        x_bar,
        k_lipschitz: k,
        d_constant: d,
        epsilon: eps,
        delta,
        lambda1: d / (delta * delta),
        t_upper,
        rate_constant: rate_bound_constant(problem, grid),
        gamma: gamma_exponent(p),
        amplitude: m,
    })
}

/// `C = (2 / (m (p-1)))^{1/(p-1)}` with `m` the smallest nodal value of `V`.
pub fn rate_bound_constant(problem: &ProblemSpec, grid: &Grid) -> f64 {
    let m = (0..grid.len())
        .map(|n| problem.potential.eval(grid.coord(n)))
        .fold(f64::INFINITY, f64::min);
    rate_constant(m, problem.exponent)
}

pub fn rate_constant(m: f64, p: f64) -> f64 {
    (2.0 / (m * (p - 1.0))).powf(1.0 / (p - 1.0))
}

/// Bounds on `T M^{p-1}`: `A/(p-1) - C₁ M^{-(p-1)/4}` and `A/(p-1) + C₂ M^{-(p-1)/3}`.
pub fn scaling_window(a: f64, p: f64, m: f64, c1: f64, c2: f64) -> (f64, f64) {
    let centre = a / (p - 1.0);
    (centre - c1 * m.powf(-(p - 1.0) / 4.0), centre + c2 * m.powf(-(p - 1.0) / 3.0))
}

pub fn gamma_exponent(p: f64) -> f64 {
    ((p - 1.0) / 4.0).min(1.0 / 3.0)
}

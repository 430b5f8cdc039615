//! Empirical blow-up time, point, set and rate from a recorded trajectory.
//!
//! Near blow-up `u_max ≈ C (T - t)^{-1/(p-1)}`, so `u_max^{1-p}` is
//! asymptotically linear in `t` with root `T`. The time estimate is the root
//! of a least-squares line through the tail; the rate is the slope of
//! `log u_max` against `log(T_est - t)` on the same tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{StopReason, TrajectoryRecord};
use crate::problem::{Point, ProblemSpec};
use crate::stats::linear_fit;

/// The `u_max` band used for tail fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
    pub min_points: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { lo: 1e4, hi: f64::INFINITY, min_points: 50 }
    }
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        FitWindow { lo, hi, ..Default::default() }
    }

    pub fn with_min_points(self, min_points: usize) -> Self {
        FitWindow { min_points, ..self }
    }
}

fn require_blowup(traj: &TrajectoryRecord) -> Result<()> {
    if traj.stop_reason == StopReason::ThresholdReached {
        Ok(())
    } else {
        Err(Error::NoBlowup(traj.stop_reason.to_string()))
    }
}

fn tail(traj: &TrajectoryRecord, window: &FitWindow) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..traj.umax.len())
        .filter(|&i| traj.umax[i] >= window.lo && traj.umax[i] <= window.hi)
        .collect();
    if idx.len() < window.min_points.max(2) {
        return Err(Error::InsufficientTail { found: idx.len(), required: window.min_points.max(2) });
    }
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupTime {
    pub t_est: f64,
    /// RMS distance, measured along the time axis, of the tail points from
    /// the fitted line.
    pub residual: f64,
    pub points: usize,
}

pub fn estimate_blowup_time(traj: &TrajectoryRecord, p: f64, window: &FitWindow) -> Result<BlowupTime> {
    require_blowup(traj)?;
    let idx = tail(traj, window)?;
    if idx.windows(2).any(|w| traj.umax[w[1]] <= traj.umax[w[0]]) {
        return Err(Error::NonmonotoneTail);
    }
    let t: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| traj.umax[i].powf(1.0 - p)).collect();
    let fit = linear_fit(&t, &y).ok_or(Error::DegenerateFit)?;
    if !(fit.slope < 0.0) {
        return Err(Error::DegenerateFit);
    }
    let t_est = fit.root();
    let t_last = *t.last().unwrap();
    if !(t_est > t_last) {
        return Err(Error::DegenerateFit);
    }
    Ok(BlowupTime { t_est, residual: fit.residual_rms / fit.slope.abs(), points: idx.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupPoint {
    pub point: Point,
    pub node: usize,
    /// The argmax node moved during the last decade of growth.
    pub wandering: bool,
}

/// Refined location of the final argmax.
///
/// The final spike is often narrower than the mesh, so a parabola through
/// `u` itself locks onto the node. Near blow-up `u^{1-p}` is close to a
/// quadratic in space, and the vertex of the parabola through `-u^{1-p}`
/// resolves the point well below `h`.
pub fn estimate_blowup_point(traj: &TrajectoryRecord, p: f64) -> Result<BlowupPoint> {
    require_blowup(traj)?;
    let field = &traj.final_snapshot.field;
    let (_, node) = field.max();
    let decade = traj.final_umax() / 10.0;
    let wandering = traj
        .umax
        .iter()
        .zip(&traj.argmax_node)
        .any(|(&u, &a)| u >= decade && a != node);
    let reciprocal: Vec<f64> = field
        .values
        .iter()
        .map(|&u| if u > 0.0 { -u.powf(1.0 - p) } else { f64::MIN / 4.0 })
        .collect();
    let point = field.grid.refine_peak(&reciprocal, node);
    Ok(BlowupPoint { point, node, wandering })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupSet {
    pub fraction: f64,
    /// Nodes whose final value is at least `fraction * u_max`.
    pub nodes: Vec<usize>,
    /// The lattice-connected part of `nodes` containing the argmax.
    pub component: Vec<usize>,
}

pub fn extract_blowup_set(traj: &TrajectoryRecord, fraction: f64) -> Result<BlowupSet> {
    require_blowup(traj)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("set fraction must lie in (0, 1), got {fraction}")));
    }
    let field = &traj.final_snapshot.field;
    let grid = &field.grid;
    let (umax, top) = field.max();
    let level = fraction * umax;
    let member: Vec<bool> = field.values.iter().map(|&v| v >= level).collect();
    let nodes: Vec<usize> = (0..member.len()).filter(|&i| member[i]).collect();

    let mut seen = vec![false; member.len()];
    let mut stack = vec![top];
    seen[top] = true;
    let mut component = Vec::new();
    while let Some(n) = stack.pop() {
        component.push(n);
        for axis in 0..grid.dim() {
            let i = grid.axis_index(n, axis);
            let s = grid.stride(axis);
            let mut visit = |m: usize| {
                if member[m] && !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            };
            if i > 0 {
                visit(n - s);
            }
            if i + 1 < grid.shape()[axis] {
                visit(n + s);
            }
        }
    }
    component.sort_unstable();
    Ok(BlowupSet { fraction, nodes, component })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `log u_max` against `log(T_est - t)`.
    pub exponent: f64,
    /// `exp` of the intercept.
    pub constant: f64,
    pub residual: f64,
}

/// Tail points closer to `T_est` than this many time residuals carry no
/// information about `T_est - t` and are left out of the rate fit.
pub const RESOLVED_RESIDUALS: f64 = 10.0;

/// Indices of the fit window whose distance to the estimated blow-up time is
/// resolved by the time fit.
pub fn resolved_tail(traj: &TrajectoryRecord, time: &BlowupTime, window: &FitWindow) -> Result<Vec<usize>> {
    let gap = RESOLVED_RESIDUALS * time.residual;
    let idx: Vec<usize> = tail(traj, window)?
        .into_iter()
        .filter(|&i| time.t_est - traj.times[i] > gap)
        .collect();
    if idx.len() < window.min_points.max(2) {
        return Err(Error::InsufficientTail { found: idx.len(), required: window.min_points.max(2) });
    }
    Ok(idx)
}

pub fn fit_blowup_rate(traj: &TrajectoryRecord, time: &BlowupTime, window: &FitWindow) -> Result<RateFit> {
    if traj.times.iter().any(|&t| t >= time.t_est) {
        return Err(Error::DegenerateFit);
    }
    let idx = resolved_tail(traj, time, window)?;
    let x: Vec<f64> = idx.iter().map(|&i| (time.t_est - traj.times[i]).ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| traj.umax[i].ln()).collect();
    let fit = linear_fit(&x, &y).ok_or(Error::DegenerateFit)?;
    Ok(RateFit { exponent: fit.slope, constant: fit.intercept.exp(), residual: fit.residual_rms })
}

/// Largest `u_max (T_est - t)^{1/(p-1)}` over the resolved tail.
pub fn rate_envelope(traj: &TrajectoryRecord, time: &BlowupTime, p: f64, window: &FitWindow) -> Result<f64> {
    Ok(resolved_tail(traj, time, window)?
        .into_iter()
        .map(|i| traj.umax[i] * (time.t_est - traj.times[i]).powf(1.0 / (p - 1.0)))
        .fold(0.0, f64::max))
}

/// `1/A - φ^{p-1}(a) V(a)`; zero at the weight maximum, positive elsewhere.
pub fn concentration_residual(point: &Point, problem: &ProblemSpec, a_constant: f64) -> Result<f64> {
    if point.dim() != problem.dimension() || !problem.domain.contains(point.coords()) {
        return Err(Error::PointOutsideDomain(point.0.clone()));
    }
    Ok(1.0 / a_constant - problem.weight_at(point.coords()))
}

/// Everything extracted from one blow-up trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupEstimate {
    pub t_est: f64,
    pub t_residual: f64,
    pub fit_window: FitWindow,
    pub blowup_point: Point,
    pub wandering: bool,
    pub blowup_set: Vec<usize>,
    pub rate_exponent: f64,
    pub rate_constant: f64,
    pub fit_residual: f64,
}

pub fn analyze(traj: &TrajectoryRecord, p: f64, window: &FitWindow, set_fraction: f64) -> Result<BlowupEstimate> {
    let time = estimate_blowup_time(traj, p, window)?;
    let point = estimate_blowup_point(traj, p)?;
    let set = extract_blowup_set(traj, set_fraction)?;
    let rate = fit_blowup_rate(traj, &time, window)?;
    Ok(BlowupEstimate {
        t_est: time.t_est,
        t_residual: time.residual,
        fit_window: *window,
        blowup_point: point.point,
        wandering: point.wandering,
        blowup_set: set.nodes,
        rate_exponent: rate.exponent,
        rate_constant: rate.constant,
        fit_residual: rate.residual,
    })
}

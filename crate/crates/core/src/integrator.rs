//! Explicit finite-difference integration of `u_t = Δu + V u^p` up to a
//! blow-up threshold.
//!
//! Each step is forward Euler with the central Laplacian. The step size is
//! `dt = min(σ h² / (2N), η / (max V · u_max^{p-1}))`: the first bound keeps
//! the diffusion update monotone (and therefore positivity preserving), the
//! second caps the relative growth of `u_max` per step at about `η`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{powp, sample_field, Grid, GridField, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// σ in (0, 1]
    pub diffusion_safety: f64,
    /// η, the admitted relative increase of `u_max` per step.
    pub growth_cap: f64,
    /// Integration stops once `u_max` reaches this level.
    pub stop_threshold: f64,
    pub max_steps: u64,
    /// `u_max` levels at which a full copy of the solution is stored.
    pub snapshot_levels: Vec<f64>,
    /// Drop the Laplacian (pointwise ODE mode).
    pub reaction_only: bool,
    /// Consecutive decreasing steps (with `u_max` below its initial value)
    /// after which the run is declared decaying.
    pub decay_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            diffusion_safety: 0.4,
            growth_cap: 0.05,
            stop_threshold: 1e8,
            max_steps: 10_000_000,
            snapshot_levels: vec![1e2, 1e3, 1e4],
            reaction_only: false,
            decay_window: 1000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSolverConfig(m));
        if !(self.diffusion_safety > 0.0 && self.diffusion_safety <= 1.0) {
            return bad(format!("sigma must lie in (0, 1], got {}", self.diffusion_safety));
        }
        if !(self.growth_cap > 0.0 && self.growth_cap.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.growth_cap));
        }
        if !(self.stop_threshold > 0.0 && self.stop_threshold.is_finite()) {
            return bad(format!("u_stop must be positive, got {}", self.stop_threshold));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if self.decay_window == 0 {
            return bad("decay_window must be positive".into());
        }
        if self.snapshot_levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return bad(format!("snapshot levels must be positive, got {:?}", self.snapshot_levels));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ThresholdReached,
    MaxSteps,
    DecayDetected,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ThresholdReached => "threshold-reached",
            StopReason::MaxSteps => "max-steps",
            StopReason::DecayDetected => "decay-detected",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub umax: f64,
    pub field: GridField,
}

/// The recorded discrete orbit of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub umax: Vec<f64>,
    pub argmax_node: Vec<usize>,
    /// Solutions stored as `u_max` first crosses each configured level.
    pub snapshots: Vec<Snapshot>,
    /// Solution at the last accepted step.
    pub final_snapshot: Snapshot,
    pub stop_reason: StopReason,
    /// Fraction of steps on which `u_t >= (m/2) u^p` held at the argmax node.
    pub monotone_diagnostic: f64,
    pub stop_threshold: f64,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn final_umax(&self) -> f64 {
        *self.umax.last().unwrap_or(&0.0)
    }
}

enum Power {
    Square,
    Cube,
    Int(i32),
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        match p {
            _ if p == 2.0 => Power::Square,
            _ if p == 3.0 => Power::Cube,
            _ if p == p.trunc() && p.abs() <= 16.0 => Power::Int(p as i32),
            _ => Power::Real(p),
        }
    }
}

struct StepOutcome {
    dt: f64,
    umax: f64,
    argmax: usize,
}

/// Precomputed per-problem data for the update kernel.
struct Stepper {
    grid: Arc<Grid>,
    potential: Vec<f64>,
    max_potential: f64,
    min_potential: f64,
    exponent: f64,
    power: Power,
    inv_h2: Vec<f64>,
    dt_diffusion: f64,
    growth_cap: f64,
    reaction_only: bool,
}

impl Stepper {
    fn new(problem: &ProblemSpec, grid: &Arc<Grid>, config: &SolverConfig) -> Result<Self> {
        let potential = sample_field(&problem.potential, grid)?.values;
        let (mut max_potential, mut min_potential) = (f64::NEG_INFINITY, f64::INFINITY);
        for &n in grid.interior() {
            max_potential = max_potential.max(potential[n]);
            min_potential = min_potential.min(potential[n]);
        }
        let dim = grid.dim();
        let h_min = (0..dim).map(|a| grid.spacing(a)).fold(f64::INFINITY, f64::min);
        Ok(Stepper {
            grid: Arc::clone(grid),
            potential,
            max_potential,
            min_potential,
            exponent: problem.exponent,
            power: Power::new(problem.exponent),
            inv_h2: (0..dim).map(|a| 1.0 / (grid.spacing(a) * grid.spacing(a))).collect(),
            dt_diffusion: config.diffusion_safety * h_min * h_min / (2.0 * dim as f64),
            growth_cap: config.growth_cap,
            reaction_only: config.reaction_only,
        })
    }

    fn time_step(&self, umax: f64) -> f64 {
        let reaction = if umax > 0.0 && self.max_potential > 0.0 {
            self.growth_cap / (self.max_potential * powp(umax, self.exponent - 1.0))
        } else {
            f64::INFINITY
        };
        let dt = if self.reaction_only { reaction } else { reaction.min(self.dt_diffusion) };
        if dt.is_finite() {
            dt
        } else {
            // zero state: every step size leaves it unchanged
            self.dt_diffusion
        }
    }

    fn advance(&self, cur: &[f64], next: &mut [f64], umax: f64) -> Result<StepOutcome> {
        let dt = self.time_step(umax);
        let (new_max, argmax) = match self.power {
            Power::Square => self.kernel(cur, next, dt, |u| u * u),
            Power::Cube => self.kernel(cur, next, dt, |u| u * u * u),
            Power::Int(k) => self.kernel(cur, next, dt, |u| u.powi(k)),
            Power::Real(p) => self.kernel(cur, next, dt, |u| u.powf(p)),
        };
        if !new_max.is_finite() {
            let node = next.iter().position(|v| !v.is_finite()).unwrap_or(argmax);
            return Err(Error::NonFinite { node });
        }
        Ok(StepOutcome { dt, umax: new_max, argmax })
    }

    /// One forward Euler update of every interior node; returns the new
    /// maximum and its first location. Boundary nodes of `next` are zeroed.
    fn kernel<F: Fn(f64) -> f64>(&self, cur: &[f64], next: &mut [f64], dt: f64, pow: F) -> (f64, usize) {
        let v = &self.potential;
        let mut best = (0.0f64, 0usize);
        let mut nonfinite = false;
        let mut update = |i: usize, lap: f64, next: &mut [f64]| {
            let u = cur[i];
            let val = u + dt * (lap + v[i] * pow(u));
            debug_assert!(!(val < 0.0), "negative value {val} at node {i}");
            next[i] = val;
            nonfinite |= !val.is_finite();
            if val > best.0 {
                best = (val, i);
            }
        };
        let grid = &*self.grid;
        match grid.dim() {
            1 => {
                let n = cur.len();
                let c = self.inv_h2[0];
                next[0] = 0.0;
                next[n - 1] = 0.0;
                for i in 1..n - 1 {
                    let lap = if self.reaction_only {
                        0.0
                    } else {
                        ((cur[i - 1] + cur[i + 1]) - 2.0 * cur[i]) * c
                    };
                    update(i, lap, next);
                }
            }
            _ => {
                for (i, &b) in grid.boundary_mask().iter().enumerate() {
                    if b {
                        next[i] = 0.0;
                    }
                }
                let sy = grid.stride(0);
                let (cx, cy) = (self.inv_h2[0], self.inv_h2[1]);
                for &i in grid.interior() {
                    let lap = if self.reaction_only {
                        0.0
                    } else {
                        ((cur[i - sy] + cur[i + sy]) - 2.0 * cur[i]) * cx
                            + ((cur[i - 1] + cur[i + 1]) - 2.0 * cur[i]) * cy
                    };
                    update(i, lap, next);
                }
            }
        }
        if nonfinite {
            (f64::INFINITY, best.1)
        } else {
            best
        }
    }

    /// Discrete `u_t` at `node` under the forward Euler update.
    fn rate_at(&self, cur: &[f64], node: usize) -> f64 {
        let lap = if self.reaction_only { 0.0 } else { self.grid.laplacian_at(cur, node) };
        lap + self.potential[node] * powp(cur[node], self.exponent)
    }
}

/// Advances `state` by one adaptive step; returns the new state and the step size.
pub fn step(state: &GridField, problem: &ProblemSpec, config: &SolverConfig) -> Result<(GridField, f64)> {
    let stepper = Stepper::new(problem, &state.grid, config)?;
    let umax = state.grid.interior().iter().map(|&n| state.values[n]).fold(0.0, f64::max);
    let mut next = vec![0.0; state.values.len()];
    let out = stepper.advance(&state.values, &mut next, umax)?;
    Ok((GridField { grid: Arc::clone(&state.grid), values: next }, out.dt))
}

/// Initial datum `M φ` with the boundary pinned to zero.
pub fn initial_field(problem: &ProblemSpec, grid: &Arc<Grid>) -> Result<GridField> {
    let mut field = sample_field(&problem.profile, grid)?.scaled(problem.amplitude);
    field.pin_boundary();
    for v in field.values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(field)
}

/// Runs forward Euler from `M φ` until a stopping rule fires.
pub fn integrate(problem: &ProblemSpec, grid: &Arc<Grid>, config: &SolverConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let stepper = Stepper::new(problem, grid, config)?;
    let start = initial_field(problem, grid)?;
    let mut cur = start.values;
    let mut next = vec![0.0; cur.len()];

    let (u0, node0) = GridField { grid: Arc::clone(grid), values: cur.clone() }.max();
    let u0 = u0.max(0.0);
    let mut times = vec![0.0];
    let mut umax = vec![u0];
    let mut argmax_node = vec![node0];

    let mut levels = config.snapshot_levels.clone();
    levels.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    let mut next_level = 0;
    let mut take_snapshots = |t: f64, u: f64, values: &[f64], snaps: &mut Vec<Snapshot>| {
        while next_level < levels.len() && u >= levels[next_level] {
            snaps.push(Snapshot {
                time: t,
                umax: u,
                field: GridField { grid: Arc::clone(grid), values: values.to_vec() },
            });
            next_level += 1;
        }
    };
    take_snapshots(0.0, u0, &cur, &mut snapshots);

    let half_floor = 0.5 * stepper.min_potential;
    let mut monotone_hits = 0usize;
    let mut decreasing_run = 0usize;
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut current_max = u0;
    let mut current_arg = node0;

    let stop_reason = loop {
        if current_max >= config.stop_threshold {
            break StopReason::ThresholdReached;
        }
        if current_max == 0.0 {
            break StopReason::DecayDetected;
        }
        if decreasing_run >= config.decay_window && current_max < u0 {
            break StopReason::DecayDetected;
        }
        if steps >= config.max_steps {
            break StopReason::MaxSteps;
        }
        let out = match stepper.advance(&cur, &mut next, current_max) {
            Ok(out) => out,
            // overflow: the previous state is as far as the run can go
            Err(Error::NonFinite { .. }) => break StopReason::ThresholdReached,
            Err(e) => return Err(e),
        };

        let rate = stepper.rate_at(&cur, current_arg);
        let target = half_floor * powp(cur[current_arg], problem.exponent);
        if rate >= target - 1e-12 * (rate.abs() + target.abs()) {
            monotone_hits += 1;
        }

        t += out.dt;
        steps += 1;
        decreasing_run = if out.umax < current_max { decreasing_run + 1 } else { 0 };
        current_max = out.umax;
        current_arg = out.argmax;
        std::mem::swap(&mut cur, &mut next);
        times.push(t);
        umax.push(current_max);
        argmax_node.push(current_arg);
        take_snapshots(t, current_max, &cur, &mut snapshots);
    };

    let monotone_diagnostic = if steps == 0 { 1.0 } else { monotone_hits as f64 / steps as f64 };
    Ok(TrajectoryRecord {
        final_snapshot: Snapshot {
            time: t,
            umax: current_max,
            field: GridField { grid: Arc::clone(grid), values: cur },
        },
        times,
        umax,
        argmax_node,
        snapshots,
        stop_reason,
        monotone_diagnostic,
        stop_threshold: config.stop_threshold,
    })
}

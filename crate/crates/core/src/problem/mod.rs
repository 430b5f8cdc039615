//! Problem instances for `u_t = Δu + V(x) u^p` with zero Dirichlet data and
//! initial datum `M φ`, together with the static quantities of the data.

mod domain;
mod field;
mod grid;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use domain::{DomainSpec, Point};
pub use field::{Bump, FieldSpec};
pub use grid::{build_grid, Grid, GridField, MIN_INTERIOR_PER_AXIS};

use crate::error::{Error, Result};

/// Tolerance for the profile vanishing on boundary nodes.
pub const BOUNDARY_ZERO_TOL: f64 = 1e-12;

/// Relative slack in the initial-datum condition, scaled by `M^p`.
pub const INITIAL_CONDITION_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    pub potential: FieldSpec,
    pub profile: FieldSpec,
    pub exponent: f64,
    pub amplitude: f64,
    /// Declared lower bound `c > 0` for the potential.
    pub potential_floor: f64,
}

impl ProblemSpec {
    /// `Ω = (-1, 1)`, `φ = cos(πx/2)`, `V ≡ 1`, `p = 2`.
    pub fn reference(amplitude: f64) -> Self {
        ProblemSpec {
            domain: DomainSpec::Interval { half_length: 1.0 },
            potential: FieldSpec::constant(1.0),
            profile: FieldSpec::cosine([1.0]),
            exponent: 2.0,
            amplitude,
            potential_floor: 1.0,
        }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        ProblemSpec { amplitude, ..self.clone() }
    }

    pub fn with_exponent(&self, exponent: f64) -> Self {
        ProblemSpec { exponent, ..self.clone() }
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// `φ(x)^{p-1} V(x)`, with φ clipped at zero.
    pub fn weight_at(&self, x: &[f64]) -> f64 {
        powp(self.profile.eval(x).max(0.0), self.exponent - 1.0) * self.potential.eval(x)
    }
}

/// `x^p` with a fast path for small integer exponents.
#[inline]
pub(crate) fn powp(x: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() <= 16.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

pub fn sample_field(spec: &FieldSpec, grid: &Arc<Grid>) -> Result<GridField> {
    if let Some(d) = spec.dimension() {
        if d != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), found: d });
        }
    }
    spec.validate()?;
    let values = (0..grid.len()).map(|node| spec.eval(grid.coord(node))).collect();
    GridField::new(Arc::clone(grid), values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Largest difference quotient of V over adjacent nodes.
    pub lipschitz_empirical: f64,
    pub min_potential: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn min_over_domain(field: &FieldSpec, grid: &Grid) -> f64 {
    (0..grid.len())
        .filter(|&n| grid.domain().contains(grid.coord(n)))
        .map(|n| field.eval(grid.coord(n)))
        .fold(f64::INFINITY, f64::min)
}

/// Largest `|f(x) - f(y)| / |x - y|` over lattice-adjacent nodes in the domain.
pub fn empirical_lipschitz(field: &FieldSpec, grid: &Grid) -> f64 {
    let mut best: f64 = 0.0;
    for node in 0..grid.len() {
        let x = grid.coord(node);
        if !grid.domain().contains(x) {
            continue;
        }
        for axis in 0..grid.dim() {
            if grid.axis_index(node, axis) + 1 == grid.shape()[axis] {
                continue;
            }
            let next = node + grid.stride(axis);
            let y = grid.coord(next);
            if !grid.domain().contains(y) {
                continue;
            }
            let q = (field.eval(x) - field.eval(y)).abs() / grid.spacing(axis);
            best = best.max(q);
        }
    }
    best
}

/// Checks every standing assumption on the data; failures are reported, not thrown.
pub fn validate_problem(problem: &ProblemSpec, grid: &Grid) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });

    let p = problem.exponent;
    push("exponent", p.is_finite() && p > 1.0, format!("p = {p}"));
    let m = problem.amplitude;
    push("amplitude", m.is_finite() && m >= 0.0, format!("M = {m}"));

    let dim = grid.dim();
    let dims_ok = problem.dimension() == dim
        && [&problem.potential, &problem.profile]
            .iter()
            .all(|f| f.dimension().is_none_or(|d| d == dim) && f.validate().is_ok());
    push("fields", dims_ok, format!("grid dimension {dim}"));
    if !dims_ok {
        return ValidationReport { checks, lipschitz_empirical: f64::NAN, min_potential: f64::NAN };
    }

    let c = problem.potential_floor;
    let min_v = min_over_domain(&problem.potential, grid);
    push(
        "potential_floor",
        c > 0.0 && min_v >= c,
        format!("min V = {min_v}, declared floor c = {c}"),
    );

    let min_phi = grid
        .interior()
        .iter()
        .map(|&n| problem.profile.eval(grid.coord(n)))
        .fold(f64::INFINITY, f64::min);
    push("profile_positive", min_phi > 0.0, format!("min interior phi = {min_phi}"));

    if problem.profile.is_cosine_kind() {
        let worst = (0..grid.len())
            .filter(|&n| grid.is_boundary(n))
            .map(|n| problem.profile.eval(grid.coord(n)).abs())
            .fold(0.0, f64::max);
        push(
            "profile_boundary_zero",
            worst <= BOUNDARY_ZERO_TOL,
            format!("max boundary |phi| = {worst:e}"),
        );
    }

    let lip = empirical_lipschitz(&problem.potential, grid);
    let bound = problem.potential.gradient_bound();
    push(
        "potential_lipschitz",
        lip <= bound * (1.0 + 1e-9) + 1e-12,
        format!("empirical L = {lip}, analytic bound = {bound}"),
    );

    ValidationReport { checks, lipschitz_empirical: lip, min_potential: min_v }
}

/// Minimum over interior nodes of `M Δ_h φ + (m/2) M^p φ^p`, where `m` is the
/// smallest sampled potential, and whether it clears `-1e-8 M^p`.
pub fn check_initial_condition(problem: &ProblemSpec, grid: &Grid) -> (bool, f64) {
    let p = problem.exponent;
    let m_amp = problem.amplitude;
    let mut phi: Vec<f64> = (0..grid.len()).map(|n| problem.profile.eval(grid.coord(n))).collect();
    for (v, &b) in phi.iter_mut().zip(grid.boundary_mask()) {
        if b {
            *v = 0.0;
        }
    }
    let min_v = min_over_domain(&problem.potential, grid);
    let mp = powp(m_amp, p);
    let worst = grid
        .interior()
        .iter()
        .map(|&n| m_amp * grid.laplacian_at(&phi, n) + 0.5 * min_v * mp * powp(phi[n].max(0.0), p))
        .fold(f64::INFINITY, f64::min);
    (worst >= -INITIAL_CONDITION_SLACK * mp, worst)
}

/// Location and value of `max φ^{p-1} V`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMaximum {
    /// Best lattice node.
    pub node: usize,
    /// Quadratically refined location.
    pub point: Point,
    /// `φ^{p-1} V` at `point`.
    pub value: f64,
}

impl WeightMaximum {
    /// `A = 1 / max φ^{p-1} V`.
    pub fn a_constant(&self) -> f64 {
        1.0 / self.value
    }
}

pub fn argmax_weight(problem: &ProblemSpec, grid: &Grid) -> Result<WeightMaximum> {
    let weights: Vec<f64> = (0..grid.len()).map(|n| problem.weight_at(grid.coord(n))).collect();
    let node = grid
        .interior()
        .iter()
        .copied()
        .fold(None, |best: Option<usize>, n| match best {
            Some(b) if weights[b] >= weights[n] => Some(b),
            _ => Some(n),
        })
        .ok_or(Error::DegenerateWeight(0.0))?;
    let node_value = weights[node];
    if !(node_value > 0.0) {
        return Err(Error::DegenerateWeight(node_value));
    }
    let refined = grid.refine_peak(&weights, node);
    let refined_value = problem.weight_at(refined.coords());
    let (point, value) = if refined_value >= node_value && grid.domain().contains(refined.coords()) {
        (refined, refined_value)
    } else {
        (grid.point(node), node_value)
    };
    Ok(WeightMaximum { node, point, value })
}

//! Similarity variables around a blow-up point and the weighted energy of
//! the frozen-potential problem.
//!
//! With `w(y, s) = (T - t)^{1/(p-1)} u(a + y (T - t)^{1/2}, t)` and
//! `s = log(T / (T - t))`, a blow-up of the expected type makes `w` converge
//! to the constant `k(a) = (V(a)(p-1))^{-1/(p-1)}`, and the Gaussian-weighted
//! energy of `w` converges to that of the constant.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Snapshot;
use crate::problem::{powp, Grid, GridField, Point, ProblemSpec};

/// Default bound on `max_s (E(s) - E(w_0)) / T²`.
pub const DEFAULT_C_SLACK: f64 = 10.0;

/// Floor on `|E(k)|` in relative energy errors.
pub const ENERGY_ERROR_FLOOR: f64 = 1e-3;

/// A snapshot expressed in similarity variables.
///
/// The y-nodes are the images `(x - a) / (T - t)^{1/2}` of the lattice nodes,
/// so `w` is never interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledProfile {
    pub center: Point,
    pub s: f64,
    /// `(T - t)^{1/2}`, the length scale mapping y back to x.
    pub scale: f64,
    pub grid: Arc<Grid>,
    /// Node coordinates in y, `dim` entries per node.
    pub y_nodes: Vec<f64>,
    pub w_values: Vec<f64>,
    /// Whether `a + y (T - t)^{1/2}` lies in the closed domain.
    pub omega_mask: Vec<bool>,
}

impl RescaledProfile {
    pub fn y(&self, node: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.y_nodes[node * d..(node + 1) * d]
    }

    /// Mesh width in y along `axis`.
    pub fn y_spacing(&self, axis: usize) -> f64 {
        self.grid.spacing(axis) / self.scale
    }

    /// Index of the y-node closest to the origin.
    pub fn center_node(&self) -> usize {
        self.grid.nearest_node(self.center.coords())
    }
}

pub fn rescale_snapshot(time: f64, field: &GridField, a: &Point, blowup_time: f64, p: f64) -> Result<RescaledProfile> {
    if !(time >= 0.0 && time < blowup_time) {
        return Err(Error::PastBlowup { t: time, blowup_time });
    }
    let grid = &field.grid;
    if a.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), found: a.dim() });
    }
    if !grid.domain().contains(a.coords()) {
        return Err(Error::PointOutsideDomain(a.0.clone()));
    }
    let remaining = blowup_time - time;
    let scale = remaining.sqrt();
    let factor = remaining.powf(1.0 / (p - 1.0));
    let dim = grid.dim();
    let mut y_nodes = Vec::with_capacity(grid.len() * dim);
    let mut w_values = Vec::with_capacity(grid.len());
    let mut omega_mask = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let x = grid.coord(node);
        y_nodes.extend(x.iter().zip(a.coords()).map(|(xi, ai)| (xi - ai) / scale));
        let inside = grid.domain().contains(x);
        omega_mask.push(inside);
        w_values.push(if inside { factor * field.values[node].max(0.0) } else { 0.0 });
    }
    Ok(RescaledProfile {
        center: a.clone(),
        s: (blowup_time / remaining).ln(),
        scale,
        grid: Arc::clone(grid),
        y_nodes,
        w_values,
        omega_mask,
    })
}

/// `Γ = ∫ exp(-|y|²/4) dy = (4π)^{N/2}` over `R^N`.
pub fn gaussian_mass(dim: usize) -> f64 {
    (4.0 * PI).powf(dim as f64 / 2.0)
}

/// Trapezoidal quadrature of the frozen-potential energy
/// `∫ (|∇w|²/2 + w²/(2(p-1)) - V_a w^{p+1}/(p+1)) ρ dy` over the mask.
///
/// Gradients are central differences in y (one-sided on the lattice edge);
/// values outside the mask count as zero.
pub fn weighted_energy(profile: &RescaledProfile, v_a: f64, p: f64) -> Result<f64> {
    if !profile.omega_mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let grid = &profile.grid;
    let dim = grid.dim();
    let dy: Vec<f64> = (0..dim).map(|axis| profile.y_spacing(axis)).collect();
    let w = |n: usize| if profile.omega_mask[n] { profile.w_values[n] } else { 0.0 };
    let mut total = 0.0;
    for node in 0..grid.len() {
        if !profile.omega_mask[node] {
            continue;
        }
        let mut weight = 1.0;
        let mut grad2 = 0.0;
        for axis in 0..dim {
            let i = grid.axis_index(node, axis);
            let n = grid.shape()[axis];
            let s = grid.stride(axis);
            let last = i + 1 == n;
            weight *= if i == 0 || last { 0.5 * dy[axis] } else { dy[axis] };
            let g = match (i, last) {
                (0, _) => (w(node + s) - w(node)) / dy[axis],
                (_, true) => (w(node) - w(node - s)) / dy[axis],
                _ => (w(node + s) - w(node - s)) / (2.0 * dy[axis]),
            };
            grad2 += g * g;
        }
        let wv = w(node);
        let y2: f64 = profile.y(node).iter().map(|c| c * c).sum();
        let density = 0.5 * grad2 + f_function(wv, v_a, p).0;
        total += weight * density * (-0.25 * y2).exp();
    }
    Ok(total)
}

pub fn k_of_a(v_a: f64, p: f64) -> Result<f64> {
    if !(v_a > 0.0 && v_a.is_finite()) {
        return Err(Error::NonPositiveInput { name: "V(a)", value: v_a });
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::NonPositiveInput { name: "p - 1", value: p - 1.0 });
    }
    Ok((v_a * (p - 1.0)).powf(-1.0 / (p - 1.0)))
}

/// `F(z) = z²/(2(p-1)) - V_a z^{p+1}/(p+1)` and `F''(z) = 1/(p-1) - p V_a z^{p-1}`.
pub fn f_function(z: f64, v_a: f64, p: f64) -> (f64, f64) {
    let zp = powp(z, p);
    let value = z * z / (2.0 * (p - 1.0)) - v_a * zp * z / (p + 1.0);
    let second = 1.0 / (p - 1.0) - p * v_a * powp(z, p - 1.0);
    (value, second)
}

/// Energy of the constant function `b`: `Γ F(b)`.
pub fn energy_of_constant(b: f64, v_a: f64, p: f64, dim: usize) -> f64 {
    gaussian_mass(dim) * f_function(b, v_a, p).0
}

/// Closed form of `E(k(a))`: `k² (1/(2(p-1)) - 1/((p+1)(p-1))) Γ`.
pub fn energy_at_limit(v_a: f64, p: f64, dim: usize) -> Result<f64> {
    let k = k_of_a(v_a, p)?;
    Ok(k * k * (1.0 / (2.0 * (p - 1.0)) - 1.0 / ((p + 1.0) * (p - 1.0))) * gaussian_mass(dim))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub s_values: Vec<f64>,
    pub e_values: Vec<f64>,
    /// `w` at the y-node nearest the origin.
    pub w_center: Vec<f64>,
    pub k_target: f64,
    pub e_target: f64,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }

    /// `|w(0, s)/k - 1|` per entry.
    pub fn w_errors(&self) -> Vec<f64> {
        self.w_center.iter().map(|w| (w / self.k_target - 1.0).abs()).collect()
    }

    /// `|E(s) - E(k)| / max(|E(k)|, floor)` per entry.
    pub fn energy_errors(&self) -> Vec<f64> {
        let denom = self.e_target.abs().max(ENERGY_ERROR_FLOOR);
        self.e_values.iter().map(|e| (e - self.e_target).abs() / denom).collect()
    }

    pub fn final_w_error(&self) -> Option<f64> {
        self.w_errors().last().copied()
    }

    pub fn final_energy_error(&self) -> Option<f64> {
        self.energy_errors().last().copied()
    }

    /// `s,E,w_center` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,E,w_center\n");
        for i in 0..self.len() {
            let _ = writeln!(out, "{},{},{}", self.s_values[i], self.e_values[i], self.w_center[i]);
        }
        out
    }
}

/// Rescales each snapshot around `a` and records `w(0, s)` and `E(w(s))`.
pub fn convergence_diagnostic(
    snapshots: &[Snapshot],
    a: &Point,
    blowup_time: f64,
    problem: &ProblemSpec,
) -> Result<EnergyTrace> {
    let mut levels: Vec<f64> = snapshots.iter().map(|s| s.umax).collect();
    levels.dedup();
    if levels.len() < 3 {
        return Err(Error::InsufficientSnapshots { found: levels.len(), required: 3 });
    }
    let p = problem.exponent;
    let v_a = problem.potential.eval(a.coords());
    let k_target = k_of_a(v_a, p)?;
    let dim = problem.dimension();
    let mut trace = EnergyTrace {
        s_values: Vec::with_capacity(snapshots.len()),
        e_values: Vec::with_capacity(snapshots.len()),
        w_center: Vec::with_capacity(snapshots.len()),
        k_target,
        e_target: energy_of_constant(k_target, v_a, p, dim),
    };
    for snap in snapshots {
        let profile = rescale_snapshot(snap.time, &snap.field, a, blowup_time, p)?;
        trace.s_values.push(profile.s);
        trace.e_values.push(weighted_energy(&profile, v_a, p)?);
        trace.w_center.push(profile.w_values[profile.center_node()]);
    }
    Ok(trace)
}

/// `slack = max_s (E(s) - E_w0) / T²`; passes when `slack <= c_slack`.
pub fn energy_inequality_check(trace: &EnergyTrace, e_w0: f64, blowup_time: f64, c_slack: f64) -> (f64, bool) {
    let t2 = blowup_time * blowup_time;
    let slack = trace
        .e_values
        .iter()
        .map(|e| (e - e_w0) / t2)
        .fold(f64::NEG_INFINITY, f64::max);
    (slack, slack <= c_slack)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::problem::{build_grid, DomainSpec};

    fn grid(h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&DomainSpec::interval(1.0).unwrap(), h).unwrap())
    }

    fn constant(grid: &Arc<Grid>, value: f64) -> GridField {
        GridField::new(Arc::clone(grid), vec![value; grid.len()]).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(k_of_a(1.0, 2.0).unwrap(), 1.0);
        assert_relative_eq!(k_of_a(2.0, 3.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(k_of_a(1.0, 3.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-15);
        assert!(k_of_a(0.0, 2.0).is_err());
        assert_relative_eq!(gaussian_mass(1), 2.0 * PI.sqrt(), max_relative = 1e-15);
        assert_eq!(energy_of_constant(0.0, 1.0, 2.0, 1), 0.0);
        assert_relative_eq!(energy_of_constant(1.0, 1.0, 2.0, 1), PI.sqrt() / 3.0, max_relative = 1e-15);
        assert_eq!(f_function(0.0, 1.7, 2.5), (0.0, 1.0 / 1.5));
    }

    #[test]
    fn constant_orbit_is_fixed_in_similarity_variables() {
        let g = grid(0.0125);
        let a = Point::new([0.0]);
        for t in [0.0, 0.5, 0.9, 0.999] {
            // u = κ (1 - t)^{-1} with κ = 1.3
            let u = constant(&g, 1.3 / (1.0 - t));
            let prof = rescale_snapshot(t, &u, &a, 1.0, 2.0).unwrap();
            assert_relative_eq!(prof.s, -(1.0 - t).ln(), max_relative = 1e-15);
            for (&w, &m) in prof.w_values.iter().zip(&prof.omega_mask) {
                assert!(m);
                assert_relative_eq!(w, 1.3, max_relative = 1e-12);
            }
        }
        assert!(matches!(
            rescale_snapshot(1.0, &constant(&g, 1.0), &a, 1.0, 2.0),
            Err(Error::PastBlowup { .. })
        ));
    }

    #[test]
    fn y_nodes_are_images_of_x_nodes() {
        let g = grid(0.0125);
        let prof = rescale_snapshot(0.75, &constant(&g, 1.0), &Point::new([0.25]), 1.0, 3.0).unwrap();
        assert_relative_eq!(prof.y_spacing(0), 0.025, max_relative = 1e-12);
        assert_relative_eq!(prof.y(0)[0], -2.5, max_relative = 1e-12);
        assert_eq!(prof.y(prof.center_node())[0], 0.0);
        assert_relative_eq!(prof.w_values[3], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn zero_profile_has_zero_energy() {
        let g = grid(0.0125);
        let prof = rescale_snapshot(0.0, &constant(&g, 0.0), &Point::new([0.0]), 1.0, 2.0).unwrap();
        assert_eq!(weighted_energy(&prof, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_matches_constant_energy() {
        // y covers |y| <= 20, where the Gaussian tail is below 1e-40
        let g = grid(0.0025);
        let remaining: f64 = 1.0 / 400.0;
        for (v, p) in [(1.0, 2.0), (2.0, 3.0), (0.7, 1.5)] {
            let k = k_of_a(v, p).unwrap();
            let u = constant(&g, k * remaining.powf(-1.0 / (p - 1.0)));
            let prof = rescale_snapshot(1.0 - remaining, &u, &Point::new([0.0]), 1.0, p).unwrap();
            let e = weighted_energy(&prof, v, p).unwrap();
            assert!((e - energy_of_constant(k, v, p, 1)).abs() < 1e-6, "{e}");
        }
    }

    #[test]
    fn half_plateau_energy_is_between() {
        let g = grid(0.0025);
        let remaining: f64 = 1.0 / 400.0;
        let mut u = constant(&g, 1.0 / remaining);
        for (node, v) in u.values.iter_mut().enumerate() {
            if g.coord(node)[0] > 0.0 {
                *v = 0.0;
            }
        }
        let prof = rescale_snapshot(1.0 - remaining, &u, &Point::new([0.0]), 1.0, 2.0).unwrap();
        let e = weighted_energy(&prof, 1.0, 2.0).unwrap();
        let full = energy_of_constant(1.0, 1.0, 2.0, 1);
        // half the plateau energy plus the jump's gradient term
        let jump = 0.25 / prof.y_spacing(0);
        assert!(e > 0.0 && e < full + jump, "{e}");
    }

    #[test]
    fn two_dimensional_quadrature() {
        let g = Arc::new(build_grid(&DomainSpec::rectangle(1.0, 1.0).unwrap(), 0.0125).unwrap());
        let remaining: f64 = 1.0 / 100.0;
        let prof = rescale_snapshot(1.0 - remaining, &constant(&g, 1.0 / remaining), &Point::new([0.0, 0.0]), 1.0, 2.0)
            .unwrap();
        let e = weighted_energy(&prof, 1.0, 2.0).unwrap();
        assert_relative_eq!(e, energy_of_constant(1.0, 1.0, 2.0, 2), max_relative = 1e-6);
    }

    #[test]
    fn trace_from_exact_orbit() {
        let g = grid(0.0125);
        let problem = ProblemSpec::reference(1.0);
        let snaps: Vec<Snapshot> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&t| Snapshot { time: t, umax: 1.0 / (1.0 - t), field: constant(&g, 1.0 / (1.0 - t)) })
            .collect();
        let trace = convergence_diagnostic(&snaps, &Point::new([0.0]), 1.0, &problem).unwrap();
        assert_eq!(trace.k_target, 1.0);
        for w in trace.w_errors() {
            assert!(w < 1e-12);
        }
        assert!(trace.s_values.windows(2).all(|s| s[1] > s[0]));
        assert!(matches!(
            convergence_diagnostic(&snaps[..2], &Point::new([0.0]), 1.0, &problem),
            Err(Error::InsufficientSnapshots { found: 2, required: 3 })
        ));
    }

    #[test]
    fn energy_inequality_cases() {
        let flat = EnergyTrace {
            s_values: vec![0.0, 1.0, 2.0],
            e_values: vec![0.5; 3],
            w_center: vec![1.0; 3],
            k_target: 1.0,
            e_target: 0.5,
        };
        let (slack, pass) = energy_inequality_check(&flat, 0.5, 0.1, DEFAULT_C_SLACK);
        assert!(slack <= 0.0 && pass);
        let t: f64 = 0.1;
        let bad = EnergyTrace { e_values: vec![0.5, 0.5 + 100.0 * t * t, 0.5], ..flat };
        let (slack, pass) = energy_inequality_check(&bad, 0.5, t, DEFAULT_C_SLACK);
        assert_relative_eq!(slack, 100.0, max_relative = 1e-12);
        assert!(!pass);
    }

    proptest! {
        #[test]
        fn limit_constant_is_a_nondegenerate_maximum(v in 0.5f64..5.0, p in 1.01f64..4.0) {
            let k = k_of_a(v, p).unwrap();
            let (fk, f2) = f_function(k, v, p);
            prop_assert!((f2 + 1.0).abs() < 1e-12);
            let closed = energy_at_limit(v, p, 1).unwrap();
            prop_assert!((energy_of_constant(k, v, p, 1) - closed).abs() <= 1e-12 * closed.abs().max(1.0));
            for j in 0..=2000 {
                let b = 2.0 * k * j as f64 / 2000.0;
                if (b - k).abs() > 1e-3 * k {
                    prop_assert!(f_function(b, v, p).0 < fk);
                }
            }
        }

        #[test]
        fn unit_potential_constant(p in 1.01f64..6.0) {
            let k = k_of_a(1.0, p).unwrap();
            prop_assert!((k / (p - 1.0).powf(-1.0 / (p - 1.0)) - 1.0).abs() < 1e-14);
        }
    }
}

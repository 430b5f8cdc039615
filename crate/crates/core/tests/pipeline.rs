use std::sync::Arc;

use approx::assert_relative_eq;

use blowup_core::analysis::{analyze, estimate_blowup_time, FitWindow};
use blowup_core::harness::{run_single, ExperimentConfig, Study};
use blowup_core::integrator::{integrate, SolverConfig, StopReason};
use blowup_core::problem::{build_grid, DomainSpec, FieldSpec, ProblemSpec};
use blowup_core::reaction::{ode_blowup_time, ode_min_blowup_time};

fn grid(h: f64) -> Arc<blowup_core::problem::Grid> {
    Arc::new(build_grid(&DomainSpec::interval(1.0).unwrap(), h).unwrap())
}

// Diffusion only delays blow-up, so the pointwise ODE time is a lower bound.
#[test]
fn diffusion_delays_blowup() {
    let g = grid(0.025);
    for m in [20.0, 80.0] {
        let problem = ProblemSpec::reference(m);
        let traj = integrate(&problem, &g, &SolverConfig { growth_cap: 0.01, ..Default::default() }).unwrap();
        let t = estimate_blowup_time(&traj, 2.0, &FitWindow::default()).unwrap().t_est;
        let (ode, _) = ode_min_blowup_time(&problem, &g).unwrap();
        assert!(t > ode, "M={m}: {t} <= {ode}");
    }
}

#[test]
fn euler_bias_shrinks_with_eta() {
    let g = grid(0.05);
    let problem = ProblemSpec::reference(10.0);
    let exact = ode_blowup_time(10.0, 1.0, 1.0, 2.0).unwrap();
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&eta| {
            let config = SolverConfig { growth_cap: eta, reaction_only: true, ..Default::default() };
            let traj = integrate(&problem, &g, &config).unwrap();
            estimate_blowup_time(&traj, 2.0, &FitWindow::default()).unwrap().t_est / exact - 1.0
        })
        .collect();
    // first order in η
    assert_relative_eq!(errs[0] / errs[1], 2.0, max_relative = 0.05);
    assert_relative_eq!(errs[1] / errs[2], 2.0, max_relative = 0.05);
}

#[test]
fn small_amplitude_decays() {
    let g = grid(0.05);
    let traj = integrate(&ProblemSpec::reference(0.5), &g, &SolverConfig::default()).unwrap();
    assert_eq!(traj.stop_reason, StopReason::DecayDetected);
    assert!(analyze(&traj, 2.0, &FitWindow::default(), 0.5).is_err());
}

#[test]
fn symmetric_data_blow_up_at_center() {
    let g = grid(0.025);
    let mut problem = ProblemSpec::reference(50.0);
    problem.profile = FieldSpec::cosine([1.0]);
    let traj = integrate(&problem, &g, &SolverConfig { growth_cap: 0.01, ..Default::default() }).unwrap();
    let est = analyze(&traj, 2.0, &FitWindow::default(), 0.5).unwrap();
    assert!(est.blowup_point.0[0].abs() < 1e-9);
}

#[test]
fn disc_run_completes() {
    let text = "\
[domain]
dimension = 2
shape = disc
half_length = 1

[potential]
kind = constant
value = 1
floor = 1

[profile]
kind = gaussian_bumps
base = 0
bumps = 1 2 0 0

[exponent]
p = 2

[amplitude]
m = 60

[solver]
h = 0.1
eta = 0.02
snapshot_levels = 1e3, 1e4

[checks]
enabled = completed, rate
";
    let study = Study::new(ExperimentConfig::parse(text).unwrap()).unwrap();
    let out = run_single(&study, 60.0);
    assert_eq!(out.row.error, None, "{:?}", out.row.notes);
    assert_eq!(out.row.blowup_point.as_ref().unwrap().len(), 2);
    let rate = out.row.rate_exponent.unwrap();
    assert!((rate + 1.0).abs() < 0.05, "{rate}");
}

#[test]
fn single_run_matches_sweep_row() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.ini");
    let study = Study::new(ExperimentConfig::from_file(path).unwrap()).unwrap();
    let rows = blowup_core::harness::run_sweep(&study, 2, |_| {});
    assert_eq!(run_single(&study, 160.0).row, rows.last().unwrap().row);
}

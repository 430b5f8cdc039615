//! End-to-end acceptance checks on the reference problem. Runs without the
//! libtest harness so every verdict is printed; exits nonzero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use blowup_core::analysis::{estimate_blowup_time, fit_blowup_rate, rate_envelope, FitWindow};
use blowup_core::bounds::{gamma_exponent, comparison_upper_bound, rate_constant};
use blowup_core::harness::{run_sweep, ExperimentConfig, RunOutcome, Study, SweepRow};
use blowup_core::integrator::{integrate, SolverConfig};
use blowup_core::problem::{build_grid, check_initial_condition, DomainSpec, ProblemSpec};
use blowup_core::reaction::ode_blowup_time;
use blowup_core::selfsim::{
    energy_at_limit, energy_inequality_check, energy_of_constant, f_function, gaussian_mass, k_of_a, EnergyTrace,
    DEFAULT_C_SLACK,
};
use blowup_core::stats::linear_fit;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: u32, name: &'static str, pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { id, name, pass, detail: detail.into() }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn study(name: &str) -> Study {
    Study::new(ExperimentConfig::from_file(config_path(name)).unwrap()).unwrap()
}

fn sweep(name: &str) -> (Study, Vec<RunOutcome>, Duration) {
    let study = study(name);
    let start = Instant::now();
    let outcomes = run_sweep(&study, 4, |_| {});
    (study, outcomes, start.elapsed())
}

/// The reference sweep is shared by several tests.
fn reference() -> &'static (Study, Vec<RunOutcome>, Duration) {
    static CELL: OnceLock<(Study, Vec<RunOutcome>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| sweep("reference.ini"))
}

fn rows(outcomes: &[RunOutcome]) -> Vec<&SweepRow> {
    outcomes.iter().map(|o| &o.row).collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn monotone(v: &[f64]) -> bool {
    strictly_decreasing(v) || v.windows(2).all(|w| w[1] > w[0])
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn reference_grid() -> Arc<blowup_core::problem::Grid> {
    Arc::new(build_grid(&DomainSpec::interval(1.0).unwrap(), 0.0125).unwrap())
}

fn reaction_only_matches_ode() -> Verdict {
    let grid = reference_grid();
    let config = SolverConfig { reaction_only: true, growth_cap: 5e-4, ..Default::default() };
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for p in [2.0, 3.0] {
        for m in [10.0, 100.0] {
            let problem = ProblemSpec::reference(m).with_exponent(p);
            let traj = integrate(&problem, &grid, &config).unwrap();
            let t = estimate_blowup_time(&traj, p, &FitWindow::default()).unwrap().t_est;
            let exact = ode_blowup_time(m, 1.0, 1.0, p).unwrap();
            let rel = (t / exact - 1.0).abs();
            worst = worst.max(rel);
            parts.push(format!("p={p} M={m}: {rel:.2e}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        "reaction-only blow-up time",
        worst <= 1e-3 && elapsed < 5.0,
        format!("rel err {} (tol 1e-3), {elapsed:.2} s (limit 5 s)", parts.join(", ")),
    )
}

fn scaling_law() -> Verdict {
    let (study, outcomes, elapsed) = reference();
    let rows = rows(outcomes);
    let ts: Vec<f64> = rows.iter().map(|r| r.t_est_scaled.unwrap()).collect();
    let gaps: Vec<f64> = ts.iter().map(|t| (t - study.scaled_limit()).abs()).collect();
    let last = *gaps.last().unwrap();
    let pass = monotone(&ts) && strictly_decreasing(&gaps) && last <= 0.15 && elapsed.as_secs_f64() < 120.0;
    verdict(2, "scaling law", pass, format!("T*M = {ts:.5?}, |T*M - 1| at M=160 = {last:.5} (tol 0.15), {:.2} s", elapsed.as_secs_f64()))
}

fn upper_bound_soundness() -> Verdict {
    let (_, outcomes, _) = sweep("upper_bound.ini");
    let bounded: Vec<&SweepRow> = rows(&outcomes).into_iter().filter(|r| r.t_upper.is_some()).collect();
    let sound = bounded.iter().all(|r| r.t_est.unwrap() <= r.t_upper.unwrap());
    let excess: Vec<f64> = bounded.iter().map(|r| r.t_upper_scaled.unwrap() - 1.0).collect();
    let ms: Vec<f64> = bounded.iter().map(|r| r.m).collect();
    let pass = !bounded.is_empty() && sound && excess.iter().all(|&e| e > 0.0) && strictly_decreasing(&excess);
    verdict(3, "upper bound", pass, format!("rows with a root: M = {ms:?}, T_est <= T_upper: {sound}, T_upper*M - 1 = {excess:.4?}"))
}

fn epsilon_order() -> Verdict {
    let grid = reference_grid();
    let start = Instant::now();
    let amplitudes = [1e2, 1e3, 1e4, 1e5];
    let eps: Vec<Option<f64>> = amplitudes
        .iter()
        .map(|&m| comparison_upper_bound(&ProblemSpec::reference(m), &grid).ok().map(|b| b.epsilon))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let found: Vec<(f64, f64)> = amplitudes.iter().zip(&eps).filter_map(|(&m, e)| e.map(|e| (m.ln(), e.ln()))).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = found.iter().copied().unzip();
    let slope = linear_fit(&x, &y).map(|f| f.slope);
    let all_roots = eps.iter().all(Option::is_some);
    let pass = all_roots && slope.is_some_and(|s| (s / (-1.0 / 3.0) - 1.0).abs() <= 0.02) && elapsed < 1.0;
    verdict(
        4,
        "epsilon order",
        pass,
        format!("epsilon = {eps:.4?}, slope over available roots = {slope:.4?} (target -1/3 within 2%), {elapsed:.3} s"),
    )
}

fn rate_exponent(p: f64) -> f64 {
    let grid = reference_grid();
    let problem = ProblemSpec::reference(160.0).with_exponent(p);
    let config = SolverConfig { growth_cap: 0.002, ..Default::default() };
    let traj = integrate(&problem, &grid, &config).unwrap();
    let window = FitWindow::default();
    let time = estimate_blowup_time(&traj, p, &window).unwrap();
    fit_blowup_rate(&traj, &time, &window).unwrap().exponent
}

fn rate_exponent_and_envelope() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [2.0, 3.0] {
        let e = rate_exponent(p);
        let target = -1.0 / (p - 1.0);
        let rel = (e / target - 1.0).abs();
        pass &= rel <= 0.05;
        parts.push(format!("p={p}: exponent {e:.5} (rel err {rel:.4})"));

        let study = study(&format!("rate_p{}.ini", p as u32));
        let problem = &study.config.problem;
        let (holds, _) = check_initial_condition(problem, &study.grid);
        if holds {
            let config = &study.config.solver;
            let window = &study.config.analysis.window;
            let traj = integrate(problem, &study.grid, config).unwrap();
            let time = estimate_blowup_time(&traj, p, window).unwrap();
            let env = rate_envelope(&traj, &time, p, window).unwrap();
            let bound = 1.1 * rate_constant(1.0, p);
            pass &= env <= bound;
            parts.push(format!("envelope {env:.4} vs {bound:.4}"));
        } else {
            parts.push("envelope skipped: initial-datum condition fails".into());
        }
    }
    verdict(5, "rate exponent", pass, parts.join("; "))
}

fn concentration() -> Verdict {
    let (study, outcomes, _) = sweep("bump_potential.ini");
    let rows = rows(&outcomes);
    let dist: Vec<f64> = rows.iter().map(|r| r.point_distance.unwrap()).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.concentration_residual.unwrap()).collect();
    let tol = 2.0 * study.grid.h();
    let last = *dist.last().unwrap();
    let pass = strictly_decreasing(&dist) && last <= tol && strictly_decreasing(&res);
    verdict(
        6,
        "concentration",
        pass,
        format!("x_bar = {:.6}, |a - x_bar| = {dist:.6?} (last <= {tol}), r = {}", study.weight.point.0[0], sci(&res)),
    )
}

fn self_similar_limit() -> Verdict {
    let (_, outcomes, _) = reference();
    let last = outcomes.last().unwrap();
    let trace = last.trace.as_ref().unwrap();
    let w = trace.w_errors();
    let e = trace.final_energy_error().unwrap();
    let pass = w.len() == 3 && strictly_decreasing(&w) && w[2] <= 0.10 && e <= 0.15;
    verdict(7, "self-similar limit", pass, format!("M={}: |w/k - 1| = {w:.5?}, |E/E(k) - 1| = {e:.2e}", last.row.m))
}

fn energy_inequality() -> Verdict {
    let (_, outcomes, _) = reference();
    let row = &outcomes.last().unwrap().row;
    let (slack, holds) = (row.energy_slack.unwrap(), row.energy_pass.unwrap());

    let t = 0.01;
    let adversarial = EnergyTrace {
        s_values: vec![0.0, 1.0, 2.0],
        e_values: vec![0.5, 0.5, 0.5 + 100.0 * t * t],
        w_center: vec![1.0; 3],
        k_target: 1.0,
        e_target: 0.5,
    };
    let (bad_slack, bad_holds) = energy_inequality_check(&adversarial, 0.5, t, DEFAULT_C_SLACK);
    verdict(
        8,
        "energy inequality",
        holds && !bad_holds,
        format!("reference slack {slack:.4} <= {DEFAULT_C_SLACK}: {holds}; synthetic slack {bad_slack:.1} rejected: {}", !bad_holds),
    )
}

fn closed_form_identities() -> Verdict {
    let start = Instant::now();
    let mut runner = TestRunner::deterministic();
    let strategy = (0.1f64..10.0, 1.1f64..6.0);
    let mut worst_f: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for _ in 0..20 {
        let (v, p) = strategy.new_tree(&mut runner).unwrap().current();
        let k = k_of_a(v, p).unwrap();
        worst_f = worst_f.max((f_function(k, v, p).1 + 1.0).abs());
        let closed = k * k * (1.0 / (2.0 * (p - 1.0)) - 1.0 / ((p + 1.0) * (p - 1.0))) * gaussian_mass(1);
        let direct = energy_of_constant(k, v, p, 1);
        let limit = energy_at_limit(v, p, 1).unwrap();
        worst_e = worst_e.max((closed - direct).abs().max((closed - limit).abs()) / closed.abs());
    }
    let mut worst_c: f64 = 0.0;
    let mut worst_g: f64 = 0.0;
    for i in 0..=40 {
        let p = 1.05 + 0.1 * i as f64;
        for m in [0.5, 1.0, 2.0] {
            worst_c = worst_c.max((rate_constant(m, p).powf(p - 1.0) * m * (p - 1.0) - 2.0).abs());
        }
        worst_g = worst_g.max((gamma_exponent(p) - ((p - 1.0) / 4.0).min(1.0 / 3.0)).abs());
    }
    let gamma_err = (gaussian_mass(1) - 2.0 * std::f64::consts::PI.sqrt()).abs();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_f <= 1e-12 && worst_e <= 1e-12 && worst_c <= 1e-12 && worst_g == 0.0 && gamma_err <= 1e-12 && elapsed < 1.0;
    verdict(
        9,
        "closed-form identities",
        pass,
        format!(
            "|F''(k)+1| {worst_f:.1e}, E(k) rel {worst_e:.1e}, C_rate {worst_c:.1e}, gamma {worst_g:.1e}, Gaussian mass {gamma_err:.1e}, {elapsed:.3} s"
        ),
    )
}

fn sweep_is_deterministic() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, jobs: &str| {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_blowup"))
            .args(["--jobs", jobs, "sweep"])
            .arg(config_path("reference.ini"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.code().is_some());
        std::fs::read(out.join("results.csv")).unwrap()
    };
    let first = run("a", "4");
    let second = run("b", "4");
    let serial = run("c", "1");
    let pass = !first.is_empty() && first == second && first == serial;
    verdict(10, "determinism", pass, format!("results.csv {} bytes; identical across runs and job counts: {pass}", first.len()))
}


fn main() {
    let checks: [fn() -> Verdict; 10] = [
        reaction_only_matches_ode,
        scaling_law,
        upper_bound_soundness,
        epsilon_order,
        rate_exponent_and_envelope,
        concentration,
        self_similar_limit,
        energy_inequality,
        closed_form_identities,
        sweep_is_deterministic,
    ];
    let mut failed = 0;
    for check in checks {
        let v = check();
        println!("{} [{:>2}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

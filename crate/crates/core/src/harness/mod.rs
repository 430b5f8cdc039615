//! Configured experiments: single runs, amplitude sweeps, fits, checks and
//! persisted results.

mod checks;
mod config;
mod fit;
mod output;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};

use serde::{Deserialize, Serialize};

pub use checks::{evaluate_checks, CheckResult};
pub use config::{AnalysisConfig, CheckKind, ChecksConfig, ExperimentConfig, Format, OutputConfig};
pub use fit::{fit_concentration, fit_convergence, ConcentrationFit, FitReport, RESIDUAL_RESOLUTION};
pub use output::{emit_outputs, load_results, render_report, OutputSink};

use crate::analysis::{
    concentration_residual, estimate_blowup_point, estimate_blowup_time, extract_blowup_set, fit_blowup_rate,
    rate_envelope,
};
use crate::bounds::{gamma_exponent, comparison_upper_bound, rate_bound_constant};
use crate::error::{Error, Result};
use crate::integrator::{initial_field, integrate, Snapshot, StopReason};
use crate::problem::{argmax_weight, build_grid, check_initial_condition, powp, validate_problem, Grid, WeightMaximum};
use crate::selfsim::{convergence_diagnostic, energy_inequality_check, rescale_snapshot, weighted_energy, EnergyTrace};

/// One amplitude's results. Optional fields are null when the stage that
/// produces them did not run; `notes` and `error` say why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: f64,
    pub t_est: Option<f64>,
    /// `T_est M^{p-1}`
    pub t_est_scaled: Option<f64>,
    pub t_upper: Option<f64>,
    pub blowup_point: Option<Vec<f64>>,
    pub concentration_residual: Option<f64>,
    pub rate_exponent: Option<f64>,
    pub w_center_final: Option<f64>,
    pub e_final: Option<f64>,
    pub e_target: Option<f64>,
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,

    pub steps: usize,
    pub t_residual: Option<f64>,
    pub t_upper_scaled: Option<f64>,
    pub epsilon: Option<f64>,
    /// `max u_max (T_est - t)^{1/(p-1)}` over the resolved fit window.
    pub rate_envelope: Option<f64>,
    pub initial_condition: Option<bool>,
    /// Distance from the blow-up point to the weight maximum.
    pub point_distance: Option<f64>,
    pub wandering: Option<bool>,
    pub blowup_set_size: Option<usize>,
    pub monotone_diagnostic: Option<f64>,
    pub w_errors: Vec<f64>,
    pub energy_errors: Vec<f64>,
    pub e_w0: Option<f64>,
    pub energy_slack: Option<f64>,
    pub energy_pass: Option<bool>,
    pub notes: Vec<String>,
}

impl SweepRow {
    pub fn empty(m: f64) -> Self {
        SweepRow {
            m,
            t_est: None,
            t_est_scaled: None,
            t_upper: None,
            blowup_point: None,
            concentration_residual: None,
            rate_exponent: None,
            w_center_final: None,
            e_final: None,
            e_target: None,
            stop_reason: None,
            error: None,
            steps: 0,
            t_residual: None,
            t_upper_scaled: None,
            epsilon: None,
            rate_envelope: None,
            initial_condition: None,
            point_distance: None,
            wandering: None,
            blowup_set_size: None,
            monotone_diagnostic: None,
            w_errors: Vec::new(),
            energy_errors: Vec::new(),
            e_w0: None,
            energy_slack: None,
            energy_pass: None,
            notes: Vec::new(),
        }
    }
}

/// A row together with the data the output stage needs besides the table.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: SweepRow,
    pub trace: Option<EnergyTrace>,
    pub snapshots: Vec<Snapshot>,
}

/// A configuration with its grid and amplitude-independent constants.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: ExperimentConfig,
    pub grid: Arc<Grid>,
    pub weight: WeightMaximum,
    pub rate_constant: f64,
    pub gamma: f64,
}

impl Study {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let grid = Arc::new(build_grid(&config.problem.domain, config.h)?);
        let weight = argmax_weight(&config.problem, &grid)?;
        let rate_constant = rate_bound_constant(&config.problem, &grid);
        let gamma = gamma_exponent(config.problem.exponent);
        Ok(Study { config, grid, weight, rate_constant, gamma })
    }

    pub fn a_constant(&self) -> f64 {
        self.weight.a_constant()
    }

    /// `A / (p - 1)`, the limit of `T M^{p-1}`.
    pub fn scaled_limit(&self) -> f64 {
        self.a_constant() / (self.config.problem.exponent - 1.0)
    }
}

/// Integrates and analyses one amplitude. Failures land in the row's
/// `error` field; fields computed before the failure are kept.
pub fn run_single(study: &Study, m: f64) -> RunOutcome {
    let mut out = RunOutcome { row: SweepRow::empty(m), trace: None, snapshots: Vec::new() };
    if let Err(e) = fill_row(study, m, &mut out) {
        out.row.error = Some(e.to_string());
    }
    out
}

fn fill_row(study: &Study, m: f64, out: &mut RunOutcome) -> Result<()> {
    let cfg = &study.config;
    let grid = &study.grid;
    let problem = cfg.problem.with_amplitude(m);
    let p = problem.exponent;
    let row = &mut out.row;

    let report = validate_problem(&problem, grid);
    if !report.passed() {
        let failed: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(Error::Config(format!("validation failed ({})", failed.join("; "))));
    }
    row.initial_condition = Some(check_initial_condition(&problem, grid).0);

    match comparison_upper_bound(&problem, grid) {
        Ok(b) => {
            row.t_upper = Some(b.t_upper);
            row.t_upper_scaled = Some(b.t_upper * powp(m, p - 1.0));
            row.epsilon = Some(b.epsilon);
        }
        Err(Error::AmplitudeTooSmall(msg)) => row.notes.push(format!("no upper bound: {msg}")),
        Err(e) => return Err(e),
    }

    let traj = integrate(&problem, grid, &cfg.solver)?;
    row.stop_reason = Some(traj.stop_reason);
    row.steps = traj.steps();
    row.monotone_diagnostic = Some(traj.monotone_diagnostic);
    if cfg.output.formats.contains(&Format::Snapshots) {
        out.snapshots = traj.snapshots.clone();
    }
    if traj.stop_reason != StopReason::ThresholdReached {
        row.notes.push(format!("no blow-up ({}); analysis skipped", traj.stop_reason));
        return Ok(());
    }

    let window = &cfg.analysis.window;
    let time = estimate_blowup_time(&traj, p, window)?;
    row.t_est = Some(time.t_est);
    row.t_residual = Some(time.residual);
    row.t_est_scaled = Some(time.t_est * powp(m, p - 1.0));

    let point = estimate_blowup_point(&traj, p)?;
    row.point_distance = Some(point.point.distance(&study.weight.point));
    row.wandering = Some(point.wandering);
    row.concentration_residual = Some(concentration_residual(&point.point, &problem, study.a_constant())?);
    row.blowup_point = Some(point.point.0.clone());
    row.blowup_set_size = Some(extract_blowup_set(&traj, cfg.analysis.set_fraction)?.nodes.len());

    let rate = fit_blowup_rate(&traj, &time, window)?;
    row.rate_exponent = Some(rate.exponent);
    row.rate_envelope = Some(rate_envelope(&traj, &time, p, window)?);

    let trace = match convergence_diagnostic(&traj.snapshots, &point.point, time.t_est, &problem) {
        Ok(trace) => trace,
        Err(Error::InsufficientSnapshots { found, required }) => {
            row.notes.push(format!("energy trace skipped: {found} snapshot level(s), need {required}"));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let v_a = problem.potential.eval(point.point.coords());
    let start = rescale_snapshot(0.0, &initial_field(&problem, grid)?, &point.point, time.t_est, p)?;
    let e_w0 = weighted_energy(&start, v_a, p)?;
    let (slack, pass) = energy_inequality_check(&trace, e_w0, time.t_est, cfg.analysis.c_slack);
    row.w_center_final = trace.w_center.last().copied();
    row.e_final = trace.e_values.last().copied();
    row.e_target = Some(trace.e_target);
    row.w_errors = trace.w_errors();
    row.energy_errors = trace.energy_errors();
    row.e_w0 = Some(e_w0);
    row.energy_slack = Some(slack);
    row.energy_pass = Some(pass);
    out.trace = Some(trace);
    Ok(())
}

/// Runs every configured amplitude on up to `jobs` threads. `on_row` sees
/// the outcomes in amplitude order as soon as each prefix is complete.
pub fn run_sweep(study: &Study, jobs: usize, mut on_row: impl FnMut(&RunOutcome)) -> Vec<RunOutcome> {
    let ms = &study.config.m_values;
    let jobs = jobs.clamp(1, ms.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, RunOutcome)>();
    let mut done: Vec<RunOutcome> = Vec::with_capacity(ms.len());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= ms.len() {
                    break;
                }
                if tx.send((i, run_single(study, ms[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (i, outcome) in rx {
            pending.insert(i, outcome);
            while let Some(outcome) = pending.remove(&done.len()) {
                on_row(&outcome);
                done.push(outcome);
            }
        }
    });
    done
}

/// Sweep-level constants, fits and checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dimension: usize,
    pub h: f64,
    pub p: f64,
    pub a_constant: f64,
    pub x_bar: Vec<f64>,
    pub weight_max: f64,
    pub gamma: f64,
    pub rate_constant: f64,
    pub c_slack: f64,
    pub m_values: Vec<f64>,
    pub convergence: Option<FitReport>,
    pub convergence_note: Option<String>,
    pub concentration: Option<ConcentrationFit>,
    pub concentration_note: Option<String>,
    pub checks: Vec<CheckResult>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Fits and checks over finished rows. With `single`, checks that compare
/// rows are skipped.
pub fn summarize(study: &Study, rows: &[SweepRow], single: bool) -> Summary {
    let p = study.config.problem.exponent;
    let (convergence, convergence_note) = match fit_convergence(rows, study.a_constant(), p) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (concentration, concentration_note) = match fit_concentration(rows, study.gamma) {
        Ok(c) if c.saturated => (Some(c), Some("concentration saturated at grid resolution".to_string())),
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Summary {
        dimension: study.grid.dim(),
        h: study.grid.h(),
        p,
        a_constant: study.a_constant(),
        x_bar: study.weight.point.0.clone(),
        weight_max: study.weight.value,
        gamma: study.gamma,
        rate_constant: study.rate_constant,
        c_slack: study.config.analysis.c_slack,
        m_values: rows.iter().map(|r| r.m).collect(),
        convergence,
        convergence_note,
        concentration,
        concentration_note,
        checks: evaluate_checks(study, rows, single),
    }
}

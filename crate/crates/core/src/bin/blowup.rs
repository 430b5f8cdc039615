use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blowup_core::bounds::comparison_upper_bound;
use blowup_core::harness::{
    load_results, render_report, run_single, run_sweep, summarize, ExperimentConfig, OutputSink, Study, SweepRow,
};
use blowup_core::problem::{check_initial_condition, validate_problem};
use blowup_core::Result;

#[derive(Parser)]
#[command(name = "blowup", version, about = "Blow-up experiments for u_t = Δu + V(x)u^p")]
struct Cli {
    /// Sweep cells run in parallel
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and the standing assumptions on its data
    Validate { config: PathBuf },
    /// Run the single amplitude given in [amplitude]
    Run {
        config: PathBuf,
        /// Results directory (overrides [output] dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every amplitude in [sweep] m_values
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the report of a finished run
    Report { results_dir: PathBuf },
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn validate(path: &Path) -> Result<bool> {
    let config = ExperimentConfig::from_file(path)?;
    let study = Study::new(config)?;
    let cfg = &study.config;
    println!("grid: {} nodes, {} interior, h = {}", study.grid.len(), study.grid.interior().len(), study.grid.h());
    println!("A = {}, x_bar = {:?}", study.a_constant(), study.weight.point.0);
    let mut ok = true;
    let mut amplitudes = cfg.m_values.clone();
    if !amplitudes.contains(&cfg.problem.amplitude) {
        amplitudes.push(cfg.problem.amplitude);
    }
    for m in amplitudes {
        let problem = cfg.problem.with_amplitude(m);
        let report = validate_problem(&problem, &study.grid);
        ok &= report.passed();
        println!("M = {m}:");
        for c in &report.checks {
            println!("  {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        let (holds, worst) = check_initial_condition(&problem, &study.grid);
        println!("  info initial-datum condition {}: min = {worst:e}", if holds { "holds" } else { "fails" });
        match comparison_upper_bound(&problem, &study.grid) {
            Ok(b) => println!("  info upper bound: epsilon = {}, T_upper = {}", b.epsilon, b.t_upper),
            Err(e) => println!("  info upper bound: {e}"),
        }
    }
    Ok(ok)
}

fn execute(path: &Path, out: Option<PathBuf>, jobs: usize, single: bool) -> Result<bool> {
    let mut config = ExperimentConfig::from_file(path)?;
    if single {
        config.m_values = vec![config.problem.amplitude];
    }
    let dir = out.unwrap_or_else(|| config.output.dir.clone());
    let study = Study::new(config)?;
    let mut sink = OutputSink::create(&dir, &study.config.output.formats, study.grid.dim())?;
    let mut write_err = None;
    let outcomes = if single {
        let o = run_single(&study, study.config.problem.amplitude);
        sink.push(&o)?;
        vec![o]
    } else {
        run_sweep(&study, jobs, |o| {
            eprintln!("M = {}: {}", o.row.m, o.row.error.as_deref().unwrap_or("done"));
            if let Err(e) = sink.push(o) {
                write_err.get_or_insert(e);
            }
        })
    };
    if let Some(e) = write_err {
        return Err(e);
    }
    let rows: Vec<SweepRow> = outcomes.into_iter().map(|o| o.row).collect();
    let summary = summarize(&study, &rows, single);
    sink.finish(&summary, &rows)?;
    print!("{}", render_report(&summary, &rows));
    Ok(summary.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run { config, out } => execute(&config, out, cli.jobs, true),
        Command::Sweep { config, out } => execute(&config, out, cli.jobs, false),
        Command::Report { results_dir } => load_results(&results_dir).map(|(summary, rows)| {
            print!("{}", render_report(&summary, &rows));
            summary.passed()
        }),
    };
    match result {
        Ok(ok) => status(ok),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

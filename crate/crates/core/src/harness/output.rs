use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Format, RunOutcome, Summary, SweepRow};
use crate::error::{Error, Result};
use crate::selfsim::EnergyTrace;

const AXES: [&str; 2] = ["x", "y"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["M", "T_est", "T_est_scaled", "T_upper"].iter().map(|s| s.to_string()).collect();
    h.extend(AXES[..dim].iter().map(|a| format!("blowup_point_{a}")));
    h.extend(
        ["concentration_residual", "rate_exponent", "w_center_final", "E_final", "E_target", "stop_reason", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn csv_record(row: &SweepRow, dim: usize) -> Vec<String> {
    let mut r = vec![row.m.to_string(), opt(row.t_est), opt(row.t_est_scaled), opt(row.t_upper)];
    for axis in 0..dim {
        r.push(opt(row.blowup_point.as_ref().map(|p| p[axis])));
    }
    r.extend([
        opt(row.concentration_residual),
        opt(row.rate_exponent),
        opt(row.w_center_final),
        opt(row.e_final),
        opt(row.e_target),
        row.stop_reason.map_or_else(String::new, |s| s.to_string()),
        row.error.clone().unwrap_or_default(),
    ]);
    r
}

/// Writes results as rows arrive; [`OutputSink::finish`] adds the
/// sweep-level files.
pub struct OutputSink {
    dir: PathBuf,
    formats: BTreeSet<Format>,
    dim: usize,
    csv: Option<csv::Writer<File>>,
    jsonl: Option<BufWriter<File>>,
    last_trace: Option<EnergyTrace>,
}

impl OutputSink {
    pub fn create(dir: &Path, formats: &BTreeSet<Format>, dim: usize) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let csv = if formats.contains(&Format::Csv) {
            let path = dir.join("results.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
            w.write_record(csv_header(dim)).map_err(|e| io_err(&path, e))?;
            w.flush().map_err(|e| io_err(&path, e))?;
            Some(w)
        } else {
            None
        };
        let jsonl = if formats.contains(&Format::Jsonl) { Some(create(&dir.join("results.jsonl"))?) } else { None };
        for (format, sub) in [(Format::Traces, "traces"), (Format::Snapshots, "snapshots"), (Format::Plotdata, "plotdata")] {
            if formats.contains(&format) {
                let path = dir.join(sub);
                fs::create_dir_all(&path).map_err(|e| io_err(&path, e))?;
            }
        }
        Ok(OutputSink { dir: dir.to_path_buf(), formats: formats.clone(), dim, csv, jsonl, last_trace: None })
    }

    pub fn push(&mut self, outcome: &RunOutcome) -> Result<()> {
        let row = &outcome.row;
        if let Some(w) = &mut self.csv {
            let path = self.dir.join("results.csv");
            w.write_record(csv_record(row, self.dim)).map_err(|e| io_err(&path, e))?;
            w.flush().map_err(|e| io_err(&path, e))?;
        }
        if let Some(w) = &mut self.jsonl {
            let path = self.dir.join("results.jsonl");
            let line = serde_json::to_string(row).map_err(|e| io_err(&path, e))?;
            writeln!(w, "{line}").and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
        }
        if let Some(trace) = &outcome.trace {
            if self.formats.contains(&Format::Traces) {
                write_file(&self.dir.join("traces").join(format!("energy_M{}.csv", row.m)), &trace.to_csv())?;
            }
            self.last_trace = Some(trace.clone());
        }
        if self.formats.contains(&Format::Snapshots) {
            for (k, snap) in outcome.snapshots.iter().enumerate() {
                let mut text = format!("# time = {}, u_max = {}\n", snap.time, snap.umax);
                let grid = &snap.field.grid;
                for node in 0..grid.len() {
                    for c in grid.coord(node) {
                        let _ = write!(text, "{c},");
                    }
                    let _ = writeln!(text, "{}", snap.field.values[node]);
                }
                write_file(&self.dir.join("snapshots").join(format!("M{}_{k}.csv", row.m)), &text)?;
            }
        }
        Ok(())
    }

    pub fn finish(self, summary: &Summary, rows: &[SweepRow]) -> Result<()> {
        if self.formats.contains(&Format::Plotdata) {
            let plot = self.dir.join("plotdata");
            let mut tm = String::from("# M T_est*M^(p-1)\n");
            let mut r = String::from("# M concentration_residual\n");
            for row in rows {
                if let Some(ts) = row.t_est_scaled {
                    let _ = writeln!(tm, "{} {ts}", row.m);
                }
                if let Some(res) = row.concentration_residual {
                    let _ = writeln!(r, "{} {res}", row.m);
                }
            }
            let mut energy = String::from("# s E\n");
            if let Some(trace) = &self.last_trace {
                for (s, e) in trace.s_values.iter().zip(&trace.e_values) {
                    let _ = writeln!(energy, "{s} {e}");
                }
            }
            write_file(&plot.join("tm_vs_M.dat"), &tm)?;
            write_file(&plot.join("r_vs_M.dat"), &r)?;
            write_file(&plot.join("energy_vs_s.dat"), &energy)?;
        }
        if self.formats.contains(&Format::Report) {
            write_file(&self.dir.join("report.txt"), &render_report(summary, rows))?;
        }
        let json = serde_json::to_string_pretty(summary).map_err(|e| io_err(&self.dir, e))?;
        write_file(&self.dir.join("summary.json"), &(json + "\n"))
    }
}

/// Writes every configured output for a finished sweep.
pub fn emit_outputs(outcomes: &[RunOutcome], summary: &Summary, dir: &Path, formats: &BTreeSet<Format>) -> Result<()> {
    let mut sink = OutputSink::create(dir, formats, summary.dimension)?;
    for o in outcomes {
        sink.push(o)?;
    }
    let rows: Vec<SweepRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    sink.finish(summary, &rows)
}

/// Reads `summary.json` and `results.jsonl` back from a results directory.
pub fn load_results(dir: &Path) -> Result<(Summary, Vec<SweepRow>)> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let summary: Summary = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
    let path = dir.join("results.jsonl");
    let rows = match fs::read_to_string(&path) {
        Ok(text) => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| io_err(&path, e)))
            .collect::<Result<Vec<SweepRow>>>()?,
        Err(_) => Vec::new(),
    };
    Ok((summary, rows))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

pub fn render_report(summary: &Summary, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let s = summary;
    let coords: Vec<String> = s.x_bar.iter().map(|c| format!("{c:.6}")).collect();
    let _ = writeln!(out, "blow-up sweep report");
    let _ = writeln!(out, "dimension {}, h = {}, p = {}", s.dimension, s.h, s.p);
    let _ = writeln!(
        out,
        "A = {:.9}, x_bar = ({}), A/(p-1) = {:.9}",
        s.a_constant,
        coords.join(", "),
        s.a_constant / (s.p - 1.0)
    );
    let _ = writeln!(out, "gamma = {}, C_rate = {:.6}, C_slack = {}", s.gamma, s.rate_constant, s.c_slack);
    let _ = writeln!(out);
    let _ = writeln!(out, "rows: {}", rows.len());
    if !rows.is_empty() {
        let _ = writeln!(
            out,
            "{:>10} {:>12} {:>12} {:>12} {:>12} {:>12}  stop",
            "M", "T*M^(p-1)", "Tup*M^(p-1)", "rate", "|w/k-1|", "r"
        );
    }
    for r in rows {
        let _ = writeln!(
            out,
            "{:>10} {:>12} {:>12} {:>12} {:>12} {:>12}  {}{}",
            r.m,
            cell(r.t_est_scaled),
            cell(r.t_upper_scaled),
            cell(r.rate_exponent),
            cell(r.w_errors.last().copied()),
            r.concentration_residual.map_or("-".into(), |x| format!("{x:.3e}")),
            r.stop_reason.map_or("-".into(), |x| x.to_string()),
            r.error.as_ref().map_or(String::new(), |e| format!(" error: {e}")),
        );
    }
    let _ = writeln!(out);
    match (&s.convergence, &s.convergence_note) {
        (Some(f), _) => {
            let _ = writeln!(
                out,
                "convergence: C1 = {}, C2 = {}, slope = {} (stderr {})",
                cell(f.c1_fit),
                cell(f.c2_fit),
                cell(f.slope),
                cell(f.slope_stderr)
            );
            for n in &f.notes {
                let _ = writeln!(out, "  note: {n}");
            }
        }
        (None, Some(n)) => {
            let _ = writeln!(out, "convergence: not fitted ({n})");
        }
        (None, None) => {}
    }
    match (&s.concentration, &s.concentration_note) {
        (Some(c), note) => {
            let _ = writeln!(
                out,
                "concentration: C = {}, slope = {}, rows used {}, below resolution {}{}",
                cell(c.c_fit),
                cell(c.slope),
                c.rows_used,
                c.rows_excluded,
                note.as_ref().map_or(String::new(), |n| format!(" ({n})"))
            );
        }
        (None, Some(n)) => {
            let _ = writeln!(out, "concentration: not fitted ({n})");
        }
        (None, None) => {}
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "checks: {}", s.checks.len());
    for c in &s.checks {
        let tag = if c.skipped { "SKIP" } else if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "  {tag} {}: {}", c.name, c.detail);
    }
    let _ = writeln!(out, "overall: {}", if s.passed() { "PASS" } else { "FAIL" });
    out
}

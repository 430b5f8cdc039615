use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::{Deserialize, Serialize};

use crate::analysis::FitWindow;
use crate::error::{Error, Result};
use crate::integrator::SolverConfig;
use crate::problem::{Bump, DomainSpec, FieldSpec, ProblemSpec};
use crate::selfsim::DEFAULT_C_SLACK;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub window: FitWindow,
    pub set_fraction: f64,
    pub c_slack: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { window: FitWindow::default(), set_fraction: 0.5, c_slack: DEFAULT_C_SLACK }
    }
}

/// Sweep-level checks that decide the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Every row reached the threshold without an error.
    Completed,
    /// `T_est M^{p-1}` monotone and approaching `A/(p-1)`.
    Scaling,
    /// `T_est <= T_upper` and the bound decreasing towards `A/(p-1)`.
    UpperBound,
    /// Rate exponent of the largest-M row.
    Rate,
    /// `u_max (T_est - t)^{1/(p-1)} <= 1.1 C_rate` when the datum condition holds.
    RateEnvelope,
    /// Convergence of `w(0, s)` and `E` towards the constant state.
    SelfSimilar,
    /// `max_s (E(s) - E(w0)) / T² <= C_slack` on every row.
    Energy,
    /// Blow-up point and residual approaching the weight maximum.
    Concentration,
}

impl CheckKind {
    pub const ALL: [CheckKind; 8] = [
        CheckKind::Completed,
        CheckKind::Scaling,
        CheckKind::UpperBound,
        CheckKind::Rate,
        CheckKind::RateEnvelope,
        CheckKind::SelfSimilar,
        CheckKind::Energy,
        CheckKind::Concentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Completed => "completed",
            CheckKind::Scaling => "scaling",
            CheckKind::UpperBound => "upper_bound",
            CheckKind::Rate => "rate",
            CheckKind::RateEnvelope => "rate_envelope",
            CheckKind::SelfSimilar => "self_similar",
            CheckKind::Energy => "energy",
            CheckKind::Concentration => "concentration",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check '{s}'")))
    }

    /// Whether the check needs more than one row.
    pub fn is_sweep_level(self) -> bool {
        matches!(self, CheckKind::Scaling | CheckKind::UpperBound | CheckKind::Concentration)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksConfig {
    pub enabled: BTreeSet<CheckKind>,
    /// Largest admitted `|T_est M^{p-1} - A/(p-1)|` on the last row.
    pub scaling_tol: f64,
    /// Relative tolerance on the rate exponent.
    pub rate_tol: f64,
    /// Factor on `C_rate` for the envelope check.
    pub envelope_factor: f64,
    /// Largest admitted `|w(0, s)/k - 1|` on the last snapshot.
    pub w_tol: f64,
    /// Largest admitted relative energy error on the last snapshot.
    pub energy_tol: f64,
    /// Largest admitted distance to the weight maximum, in mesh widths.
    pub point_tol_h: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            enabled: BTreeSet::new(),
            scaling_tol: 0.15,
            rate_tol: 0.05,
            envelope_factor: 1.1,
            w_tol: 0.10,
            energy_tol: 0.15,
            point_tol_h: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Jsonl,
    Plotdata,
    Report,
    Traces,
    Snapshots,
}

impl Format {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "csv" => Format::Csv,
            "jsonl" => Format::Jsonl,
            "plotdata" => Format::Plotdata,
            "report" => Format::Report,
            "traces" => Format::Traces,
            "snapshots" => Format::Snapshots,
            _ => return Err(Error::Config(format!("unknown output format '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("results"),
            formats: [Format::Csv, Format::Jsonl, Format::Plotdata, Format::Report, Format::Traces]
                .into_iter()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// The problem; its amplitude is the `[amplitude]` value used by `run`.
    pub problem: ProblemSpec,
    pub h: f64,
    pub solver: SolverConfig,
    /// Strictly increasing amplitudes for `sweep`.
    pub m_values: Vec<f64>,
    pub analysis: AnalysisConfig,
    pub checks: ChecksConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut sections = Sections::new(&ini)?;
        let config = build(&mut sections)?;
        sections.finish()?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_values.is_empty() {
            return Err(Error::Config("[sweep] m_values must not be empty".into()));
        }
        if self.m_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!(
                "[sweep] m_values must be strictly increasing, got {:?}",
                self.m_values
            )));
        }
        if self.m_values.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Config("[sweep] m_values must be finite and nonnegative".into()));
        }
        let p = self.problem.exponent;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("[exponent] p must exceed 1, got {p}")));
        }
        self.solver.validate()?;
        let a = &self.analysis;
        if !(a.window.lo >= 0.0 && a.window.hi > a.window.lo) {
            return Err(Error::Config(format!("fit window [{}, {}] is empty", a.window.lo, a.window.hi)));
        }
        if !(a.set_fraction > 0.0 && a.set_fraction < 1.0) {
            return Err(Error::Config(format!("set_fraction must lie in (0, 1), got {}", a.set_fraction)));
        }
        // grid precondition up front, before any run
        crate::problem::build_grid(&self.problem.domain, self.h).map(|_| ())
    }
}

/// Typed access to the parsed file that remembers which keys were read.
struct Sections {
    values: BTreeMap<String, BTreeMap<String, String>>,
    used: BTreeSet<(String, String)>,
}

const SECTIONS: [&str; 10] = [
    "domain", "potential", "profile", "exponent", "amplitude", "solver", "sweep", "analysis", "checks", "output",
];

impl Sections {
    fn new(ini: &Ini) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err(Error::Config("keys outside any section".into()));
                }
                continue;
            };
            if !SECTIONS.contains(&name) {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
            let entry: &mut BTreeMap<String, String> = values.entry(name.to_string()).or_default();
            for (k, v) in props.iter() {
                entry.insert(k.to_string(), v.trim().to_string());
            }
        }
        Ok(Sections { values, used: BTreeSet::new() })
    }

    fn get(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.values.get(section)?.get(key)?.clone();
        self.used.insert((section.to_string(), key.to_string()));
        Some(v)
    }

    fn require(&mut self, section: &str, key: &str) -> Result<String> {
        self.get(section, key)
            .ok_or_else(|| Error::Config(format!("missing key '{key}' in [{section}]")))
    }

    fn number(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key).map(|v| parse_number(section, key, &v)).transpose()
    }

    fn require_number(&mut self, section: &str, key: &str) -> Result<f64> {
        let v = self.require(section, key)?;
        parse_number(section, key, &v)
    }

    fn list(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|v| split_list(&v).map(|s| parse_number(section, key, s)).collect())
            .transpose()
    }

    fn finish(self) -> Result<()> {
        for (section, keys) in &self.values {
            for key in keys.keys() {
                if !self.used.contains(&(section.clone(), key.clone())) {
                    return Err(Error::Config(format!("unknown key '{key}' in [{section}]")));
                }
            }
        }
        Ok(())
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_number(section: &str, key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => v
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("[{section}] {key}: expected a number, got '{v}'"))),
    }
}

fn parse_bool(section: &str, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("[{section}] {key}: expected a boolean, got '{v}'"))),
    }
}

/// `amplitude width c1 [c2]; ...`
fn parse_bumps(section: &str, v: &str, dim: usize) -> Result<Vec<Bump>> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|b| {
            let nums: Vec<f64> = b
                .split_whitespace()
                .map(|t| parse_number(section, "bumps", t))
                .collect::<Result<_>>()?;
            if nums.len() != 2 + dim {
                return Err(Error::Config(format!(
                    "[{section}] bumps: '{b}' needs amplitude, width and {dim} center coordinate(s)"
                )));
            }
            Ok(Bump::new(nums[0], nums[1], nums[2..].to_vec()))
        })
        .collect()
}

fn parse_domain(s: &mut Sections) -> Result<DomainSpec> {
    let dim = s.require_number("domain", "dimension")?;
    let shape = s.require("domain", "shape")?;
    let half = s.list("domain", "half_length")?.unwrap_or_default();
    let (domain, expected) = match (shape.as_str(), half.as_slice()) {
        ("interval", [l]) => (DomainSpec::interval(*l)?, 1.0),
        ("rectangle", [l]) => (DomainSpec::rectangle(*l, *l)?, 2.0),
        ("rectangle", [lx, ly]) => (DomainSpec::rectangle(*lx, *ly)?, 2.0),
        ("disc", [r]) => (DomainSpec::disc(*r)?, 2.0),
        ("interval" | "rectangle" | "disc", _) => {
            return Err(Error::Config(format!("[domain] half_length {half:?} does not fit shape '{shape}'")))
        }
        _ => return Err(Error::Config(format!("[domain] unknown shape '{shape}'"))),
    };
    if dim != expected {
        return Err(Error::Config(format!("[domain] dimension {dim} does not match shape '{shape}'")));
    }
    Ok(domain)
}

fn parse_field(s: &mut Sections, section: &str, domain: &DomainSpec) -> Result<FieldSpec> {
    let dim = domain.dimension();
    let kind = s.require(section, "kind")?;
    let half_lengths = |s: &mut Sections| -> Result<Vec<f64>> {
        let h = s.list(section, "half_lengths")?.unwrap_or_else(|| domain.half_extents());
        if h.len() != dim {
            return Err(Error::Config(format!("[{section}] half_lengths needs {dim} value(s)")));
        }
        Ok(h)
    };
    let bumps = |s: &mut Sections| -> Result<Vec<Bump>> {
        s.get(section, "bumps").map_or(Ok(Vec::new()), |v| parse_bumps(section, &v, dim))
    };
    let field = match kind.as_str() {
        "constant" => FieldSpec::constant(s.require_number(section, "value")?),
        "gaussian_bumps" => {
            let base = s.require_number(section, "base")?;
            FieldSpec::bumps(base, bumps(s)?)
        }
        "cosine" => FieldSpec::cosine(half_lengths(s)?),
        "cosine_gaussian" => {
            let h = half_lengths(s)?;
            let base = s.require_number(section, "base")?;
            FieldSpec::cosine_bumps(h, base, bumps(s)?)
        }
        _ => return Err(Error::Config(format!("[{section}] unknown kind '{kind}'"))),
    };
    field.validate()?;
    Ok(field)
}

fn build(s: &mut Sections) -> Result<ExperimentConfig> {
    let domain = parse_domain(s)?;
    let potential = parse_field(s, "potential", &domain)?;
    let potential_floor = s.require_number("potential", "floor")?;
    let profile = parse_field(s, "profile", &domain)?;
    let exponent = s.require_number("exponent", "p")?;

    let m_values = s.list("sweep", "m_values")?.unwrap_or_default();
    let amplitude = match s.number("amplitude", "m")? {
        Some(m) => m,
        None => *m_values
            .last()
            .ok_or_else(|| Error::Config("need [amplitude] m or [sweep] m_values".into()))?,
    };
    let m_values = if m_values.is_empty() { vec![amplitude] } else { m_values };

    let h = s.require_number("solver", "h")?;
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        diffusion_safety: s.number("solver", "sigma")?.unwrap_or(defaults.diffusion_safety),
        growth_cap: s.number("solver", "eta")?.unwrap_or(defaults.growth_cap),
        stop_threshold: s.number("solver", "u_stop")?.unwrap_or(defaults.stop_threshold),
        max_steps: match s.number("solver", "max_steps")? {
            Some(n) if n >= 1.0 && n.fract() == 0.0 => n as u64,
            Some(n) => return Err(Error::Config(format!("[solver] max_steps must be a positive integer, got {n}"))),
            None => defaults.max_steps,
        },
        snapshot_levels: s.list("solver", "snapshot_levels")?.unwrap_or(defaults.snapshot_levels),
        reaction_only: match s.get("solver", "reaction_only") {
            Some(v) => parse_bool("solver", "reaction_only", &v)?,
            None => false,
        },
        decay_window: match s.number("solver", "decay_window")? {
            Some(n) if n >= 1.0 && n.fract() == 0.0 => n as usize,
            Some(n) => return Err(Error::Config(format!("[solver] decay_window must be a positive integer, got {n}"))),
            None => defaults.decay_window,
        },
    };

    let da = AnalysisConfig::default();
    let mut window = FitWindow::new(
        s.number("analysis", "fit_window_lo")?.unwrap_or(da.window.lo),
        s.number("analysis", "fit_window_hi")?.unwrap_or(da.window.hi),
    );
    if let Some(n) = s.number("analysis", "min_fit_points")? {
        window = window.with_min_points(n as usize);
    }
    let analysis = AnalysisConfig {
        window,
        set_fraction: s.number("analysis", "set_fraction")?.unwrap_or(da.set_fraction),
        c_slack: s.number("analysis", "c_slack")?.unwrap_or(da.c_slack),
    };

    let dc = ChecksConfig::default();
    let enabled = match s.get("checks", "enabled") {
        Some(v) if v == "all" => CheckKind::ALL.into_iter().collect(),
        Some(v) => split_list(&v).map(CheckKind::parse).collect::<Result<_>>()?,
        None => BTreeSet::new(),
    };
    let checks = ChecksConfig {
        enabled,
        scaling_tol: s.number("checks", "scaling_tol")?.unwrap_or(dc.scaling_tol),
        rate_tol: s.number("checks", "rate_tol")?.unwrap_or(dc.rate_tol),
        envelope_factor: s.number("checks", "envelope_factor")?.unwrap_or(dc.envelope_factor),
        w_tol: s.number("checks", "w_tol")?.unwrap_or(dc.w_tol),
        energy_tol: s.number("checks", "energy_tol")?.unwrap_or(dc.energy_tol),
        point_tol_h: s.number("checks", "point_tol_h")?.unwrap_or(dc.point_tol_h),
    };

    let od = OutputConfig::default();
    let output = OutputConfig {
        dir: s.get("output", "dir").map(PathBuf::from).unwrap_or(od.dir),
        formats: match s.get("output", "formats") {
            Some(v) => split_list(&v).map(Format::parse).collect::<Result<_>>()?,
            None => od.formats,
        },
    };

    Ok(ExperimentConfig {
        problem: ProblemSpec { domain, potential, profile, exponent, amplitude, potential_floor },
        h,
        solver,
        m_values,
        analysis,
        checks,
        output,
    })
}

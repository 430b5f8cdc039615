use serde::{Deserialize, Serialize};

use super::{CheckKind, Study, SweepRow};
use crate::integrator::StopReason;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub skipped: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(kind: CheckKind, passed: bool, detail: String) -> Self {
        CheckResult { name: kind.name().into(), passed, skipped: false, detail }
    }

    fn skip(kind: CheckKind, reason: impl Into<String>) -> Self {
        CheckResult { name: kind.name().into(), passed: true, skipped: true, detail: reason.into() }
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn monotone(v: &[f64]) -> bool {
    strictly_decreasing(v) || v.windows(2).all(|w| w[1] > w[0])
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|x| if x.abs() >= 1e-3 || *x == 0.0 { format!("{x:.6}") } else { format!("{x:.4e}") })
        .collect();
    format!("[{}]", parts.join(", "))
}

/// Evaluates every enabled check over the rows, in a fixed order.
pub fn evaluate_checks(study: &Study, rows: &[SweepRow], single: bool) -> Vec<CheckResult> {
    let checks = &study.config.checks;
    checks
        .enabled
        .iter()
        .map(|&kind| {
            if single && kind.is_sweep_level() {
                return CheckResult::skip(kind, "compares rows; not applicable to a single run");
            }
            evaluate(kind, study, rows)
        })
        .collect()
}

fn evaluate(kind: CheckKind, study: &Study, rows: &[SweepRow]) -> CheckResult {
    let cfg = &study.config.checks;
    let p = study.config.problem.exponent;
    let limit = study.scaled_limit();
    let Some(last) = rows.last() else {
        return CheckResult::new(kind, false, "no rows".into());
    };
    match kind {
        CheckKind::Completed => {
            let bad: Vec<String> = rows
                .iter()
                .filter(|r| r.error.is_some() || r.stop_reason != Some(StopReason::ThresholdReached))
                .map(|r| format!("M={}", r.m))
                .collect();
            CheckResult::new(kind, bad.is_empty(), if bad.is_empty() { "all rows blew up".into() } else { format!("incomplete: {}", bad.join(", ")) })
        }
        CheckKind::Scaling => {
            let Some(ts) = rows.iter().map(|r| r.t_est_scaled).collect::<Option<Vec<f64>>>() else {
                return CheckResult::new(kind, false, "some rows lack T_est".into());
            };
            if ts.len() < 2 {
                return CheckResult::new(kind, false, "needs at least two rows".into());
            }
            let gaps: Vec<f64> = ts.iter().map(|t| (t - limit).abs()).collect();
            let last_gap = *gaps.last().unwrap();
            let ok = monotone(&ts) && strictly_decreasing(&gaps) && last_gap <= cfg.scaling_tol;
            CheckResult::new(kind, ok, format!("T*M^(p-1) = {}, |gap| = {}, tol {}", fmt_list(&ts), fmt_list(&gaps), cfg.scaling_tol))
        }
        CheckKind::UpperBound => {
            let bounded: Vec<&SweepRow> = rows.iter().filter(|r| r.t_upper.is_some()).collect();
            if bounded.is_empty() {
                return CheckResult::new(kind, true, "vacuous: no row has an admissible epsilon root".into());
            }
            let sound = bounded.iter().all(|r| r.t_est.is_some_and(|t| t <= r.t_upper.unwrap()));
            let excess: Vec<f64> = bounded.iter().map(|r| r.t_upper_scaled.unwrap() - limit).collect();
            let ok = sound && excess.iter().all(|&e| e > 0.0) && strictly_decreasing(&excess);
            let pairs: Vec<String> = bounded
                .iter()
                .map(|r| format!("M={}: T_est={} T_upper={}", r.m, r.t_est.map_or("null".into(), |t| t.to_string()), r.t_upper.unwrap()))
                .collect();
            CheckResult::new(kind, ok, format!("{}; T_upper*M^(p-1) - A/(p-1) = {}", pairs.join("; "), fmt_list(&excess)))
        }
        CheckKind::Rate => {
            let target = -1.0 / (p - 1.0);
            match last.rate_exponent {
                Some(e) => {
                    let rel = (e / target - 1.0).abs();
                    CheckResult::new(kind, rel <= cfg.rate_tol, format!("M={}: exponent {e:.6} vs {target:.6}, rel err {rel:.4}, tol {}", last.m, cfg.rate_tol))
                }
                None => CheckResult::new(kind, false, format!("M={}: no rate fit", last.m)),
            }
        }
        CheckKind::RateEnvelope => {
            if last.initial_condition != Some(true) {
                return CheckResult::skip(kind, format!("skipped: initial-datum condition fails at M={}", last.m));
            }
            let bound = cfg.envelope_factor * study.rate_constant;
            match last.rate_envelope {
                Some(env) => CheckResult::new(kind, env <= bound, format!("M={}: sup u(T-t)^(1/(p-1)) = {env:.6} vs {bound:.6}", last.m)),
                None => CheckResult::new(kind, false, format!("M={}: no envelope", last.m)),
            }
        }
        CheckKind::SelfSimilar => {
            let w = &last.w_errors;
            let (Some(&w_last), Some(&e_last)) = (w.last(), last.energy_errors.last()) else {
                return CheckResult::new(kind, false, format!("M={}: no energy trace", last.m));
            };
            let ok = strictly_decreasing(w) && w_last <= cfg.w_tol && e_last <= cfg.energy_tol;
            CheckResult::new(kind, ok, format!("M={}: |w/k-1| = {}, |E/E(k)-1| = {e_last:.6}", last.m, fmt_list(w)))
        }
        CheckKind::Energy => {
            let traced: Vec<&SweepRow> = rows.iter().filter(|r| r.energy_pass.is_some()).collect();
            if traced.is_empty() {
                return CheckResult::new(kind, false, "no row has an energy trace".into());
            }
            let ok = traced.iter().all(|r| r.energy_pass == Some(true));
            let slacks: Vec<f64> = traced.iter().map(|r| r.energy_slack.unwrap()).collect();
            CheckResult::new(kind, ok, format!("slack = {}, C_slack {}", fmt_list(&slacks), study.config.analysis.c_slack))
        }
        CheckKind::Concentration => {
            let Some(dist) = rows.iter().map(|r| r.point_distance).collect::<Option<Vec<f64>>>() else {
                return CheckResult::new(kind, false, "some rows lack a blow-up point".into());
            };
            let res: Vec<f64> = rows.iter().filter_map(|r| r.concentration_residual).collect();
            let tol = cfg.point_tol_h * study.grid.h();
            let ok = strictly_decreasing(&dist) && *dist.last().unwrap() <= tol && strictly_decreasing(&res);
            CheckResult::new(kind, ok, format!("|a - x_bar| = {}, tol {tol}; r = {}", fmt_list(&dist), fmt_list(&res)))
        }
    }
}

use serde::{Deserialize, Serialize};

use super::SweepRow;
use crate::error::{Error, Result};
use crate::stats::linear_fit;

/// Residuals at or below this are treated as unresolved by the grid.
pub const RESIDUAL_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Smallest `C₁` with `T M^{p-1} - A/(p-1) >= -C₁ M^{-(p-1)/4}` on the rows below the limit.
    pub c1_fit: Option<f64>,
    /// Smallest `C₂` with `T M^{p-1} - A/(p-1) <= C₂ M^{-(p-1)/3}` on the rows above the limit.
    pub c2_fit: Option<f64>,
    /// Slope of `log |T M^{p-1} - A/(p-1)|` against `log M`.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub rows_used: usize,
    pub notes: Vec<String>,
}

pub fn fit_convergence(rows: &[SweepRow], a: f64, p: f64) -> Result<FitReport> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.t_est_scaled.map(|ts| (r.m, ts - a / (p - 1.0))))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientRows { found: pts.len(), required: 3 });
    }
    let mut notes = Vec::new();
    let above: Vec<f64> = pts.iter().filter(|(_, d)| *d > 0.0).map(|(m, d)| d * m.powf((p - 1.0) / 3.0)).collect();
    let below: Vec<f64> = pts.iter().filter(|(_, d)| *d < 0.0).map(|(m, d)| -d * m.powf((p - 1.0) / 4.0)).collect();
    let on_limit = pts.iter().filter(|(_, d)| *d == 0.0).count();
    let c2_fit = if above.is_empty() && on_limit == 0 {
        notes.push("no rows above the limit; C2 not fitted".into());
        None
    } else {
        Some(above.iter().copied().fold(0.0, f64::max))
    };
    let c1_fit = if below.is_empty() && on_limit == 0 {
        notes.push("no rows below the limit; C1 not fitted".into());
        None
    } else {
        Some(below.iter().copied().fold(0.0, f64::max))
    };

    let (x, y): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|(_, d)| *d != 0.0)
        .map(|(m, d)| (m.ln(), d.abs().ln()))
        .unzip();
    let fit = if x.len() >= 2 { linear_fit(&x, &y) } else { None };
    if fit.is_none() {
        notes.push("slope undefined: fewer than two rows off the limit".into());
    }
    Ok(FitReport {
        c1_fit,
        c2_fit,
        slope: fit.map(|f| f.slope),
        slope_stderr: fit.map(|f| f.slope_stderr),
        rows_used: pts.len(),
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationFit {
    /// `max r M^γ` over resolved rows.
    pub c_fit: Option<f64>,
    /// Slope of `log r` against `log M`.
    pub slope: Option<f64>,
    pub rows_used: usize,
    /// Rows with `r` at or below the resolution.
    pub rows_excluded: usize,
    /// Every row is below the resolution.
    pub saturated: bool,
}

pub fn fit_concentration(rows: &[SweepRow], gamma: f64) -> Result<ConcentrationFit> {
    let all: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.concentration_residual.map(|res| (r.m, res)))
        .collect();
    if all.len() < 3 {
        return Err(Error::InsufficientRows { found: all.len(), required: 3 });
    }
    let resolved: Vec<(f64, f64)> = all.iter().copied().filter(|(_, r)| *r > RESIDUAL_RESOLUTION).collect();
    let excluded = all.len() - resolved.len();
    if resolved.is_empty() {
        return Ok(ConcentrationFit { c_fit: None, slope: None, rows_used: 0, rows_excluded: excluded, saturated: true });
    }
    let c_fit = resolved.iter().map(|(m, r)| r * m.powf(gamma)).fold(0.0, f64::max);
    let slope = if resolved.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = resolved.iter().map(|(m, r)| (m.ln(), r.ln())).unzip();
        linear_fit(&x, &y).map(|f| f.slope)
    } else {
        None
    };
    Ok(ConcentrationFit { c_fit: Some(c_fit), slope, rows_used: resolved.len(), rows_excluded: excluded, saturated: false })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn row(m: f64, ts: f64, r: f64) -> SweepRow {
        SweepRow { m, t_est_scaled: Some(ts), concentration_residual: Some(r), ..SweepRow::empty(m) }
    }

    #[test]
    fn recovers_upper_power_law() {
        let rows: Vec<SweepRow> = [10.0, 100.0, 1000.0, 1e4]
            .iter()
            .map(|&m| row(m, 1.0 + m.powf(-1.0 / 3.0), 0.0))
            .collect();
        let f = fit_convergence(&rows, 1.0, 2.0).unwrap();
        assert_relative_eq!(f.c2_fit.unwrap(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(f.slope.unwrap(), -1.0 / 3.0, max_relative = 1e-9);
        assert_eq!(f.c1_fit, None);
    }

    #[test]
    fn rows_on_the_limit() {
        let rows: Vec<SweepRow> = [10.0, 20.0, 40.0].iter().map(|&m| row(m, 1.0, 0.0)).collect();
        let f = fit_convergence(&rows, 1.0, 2.0).unwrap();
        assert_eq!((f.c1_fit, f.c2_fit, f.slope), (Some(0.0), Some(0.0), None));
        assert!(!f.notes.is_empty());
        assert!(matches!(fit_convergence(&rows[..2], 1.0, 2.0), Err(Error::InsufficientRows { .. })));
    }

    #[test]
    fn concentration_power_law_and_saturation() {
        let gamma = 0.25;
        let rows: Vec<SweepRow> = [10.0, 100.0, 1000.0].iter().map(|&m| row(m, 1.0, m.powf(-gamma))).collect();
        let c = fit_concentration(&rows, gamma).unwrap();
        assert_relative_eq!(c.c_fit.unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.slope.unwrap(), -gamma, max_relative = 1e-9);

        let flat: Vec<SweepRow> = [10.0, 100.0, 1000.0].iter().map(|&m| row(m, 1.0, 0.0)).collect();
        let c = fit_concentration(&flat, gamma).unwrap();
        assert!(c.saturated && c.c_fit.is_none());
        assert_eq!(c.rows_excluded, 3);
    }
}

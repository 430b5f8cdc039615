//! Ordinary least squares on a line, computed around the sample means.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the vertical residuals.
    pub residual_rms: f64,
    /// Standard error of the slope (NaN for fewer than three points).
    pub slope_stderr: f64,
    pub mean_x: f64,
    pub mean_y: f64,
}

impl LineFit {
    /// Abscissa where the fitted line crosses zero.
    pub fn root(&self) -> f64 {
        self.mean_x - self.mean_y / self.slope
    }
}

/// Returns `None` for fewer than two points or a degenerate abscissa.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = x[..n].iter().sum::<f64>() / nf;
    let mean_y = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        sxx += dx * dx;
        sxy += dx * (yi - mean_y);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - mean_y - slope * (xi - mean_x);
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 { (ss / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    Some(LineFit {
        slope,
        intercept: mean_y - slope * mean_x,
        residual_rms: (ss / nf).sqrt(),
        slope_stderr,
        mean_x,
        mean_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-15);
        assert!((fit.intercept - 3.0).abs() < 1e-15);
        assert!((fit.root() - 6.0).abs() < 1e-14);
        assert!(fit.residual_rms < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }
}

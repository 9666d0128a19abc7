//! Least-squares line fits shared by the scaling estimators and the
//! convergence-curve rate reports.

use serde::Serialize;

/// Ordinary least-squares fit of `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit a line through `(x, y)` pairs. Requires at least two distinct
/// abscissae; returns `None` otherwise.
///
/// `r_squared` is `1 - SS_res / SS_tot`. When the ordinates are constant
/// (`SS_tot ~ 0`) the fit is exact by convention: `r_squared = 1`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = ys
        .iter()
        .zip(xs)
        .map(|(&y, &x)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>();
    let scale = syy.max(my * my * nf);
    let r_squared = if syy <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) || syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fit the tail of a positive curve in log scale: the window is the last
/// half of the points and at least `min_points`. Entries that are not
/// strictly positive are rejected (returns `None`).
pub fn fit_log_tail(values: &[f64], min_points: usize) -> Option<(LineFit, usize)> {
    let n = values.len();
    let want = (n / 2).max(min_points);
    if n < want || want < 2 {
        return None;
    }
    let start = n - want;
    if values[start..].iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let xs: Vec<f64> = (start..n).map(|k| k as f64).collect();
    let ys: Vec<f64> = values[start..].iter().map(|v| v.ln()).collect();
    fit_line(&xs, &ys).map(|f| (f, start))
}

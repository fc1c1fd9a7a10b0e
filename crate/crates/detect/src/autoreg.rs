use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Axis};

use crate::{ArimaConfig, VarConfig};

/// Added to the normal-equation diagonal (relative to its mean) when the
/// regression is rank deficient.
const RIDGE: f64 = 1e-8;

/// Least-squares fit of `Y = X B`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Regressors x targets.
    pub coef: DMatrix<f64>,
    /// Residual covariance `E'E / (rows - regressors)`.
    pub residual_cov: DMatrix<f64>,
    pub ridge_used: bool,
}

fn solve_normal(mut xtx: DMatrix<f64>, xty: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    if let Some(ch) = xtx.clone().cholesky() {
        let b = ch.solve(xty);
        if b.iter().all(|v| v.is_finite()) {
            return (b, false);
        }
    }
    let p = xtx.nrows();
    let scale = (xtx.trace() / p as f64).max(f64::MIN_POSITIVE);
    for i in 0..p {
        xtx[(i, i)] += RIDGE * scale;
    }
    log::warn!("rank-deficient autoregression; adding ridge {:e}", RIDGE * scale);
    let b = match xtx.clone().cholesky() {
        Some(ch) => ch.solve(xty),
        None => xtx.lu().solve(xty).unwrap_or_else(|| DMatrix::zeros(p, xty.ncols())),
    };
    (b, true)
}

/// Ordinary least squares through the normal equations.
pub fn ols_fit(x: &DMatrix<f64>, y: &DMatrix<f64>) -> OlsFit {
    let xt = x.transpose();
    let (coef, ridge_used) = solve_normal(&xt * x, &(&xt * y));
    let resid = y - x * &coef;
    let dof = (x.nrows().saturating_sub(x.ncols())).max(1) as f64;
    let residual_cov = resid.transpose() * &resid / dof;
    OlsFit { coef, residual_cov, ridge_used }
}

/// Series differenced `d` times; entries before index `d` are NaN so that
/// indices stay aligned with ticks.
fn difference(x: &[f64], d: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    for k in 0..d {
        for t in (k + 1..out.len()).rev() {
            out[t] -= out[t - 1];
        }
        if k < out.len() {
            out[k] = f64::NAN;
        }
    }
    out
}

/// One-step residual of an AR(p) model (no intercept) for `dd[t]`, fitted on
/// the `window` targets `dd[t - window..t]`. Returns the residual, the
/// residual standard error and the coefficients.
pub(crate) fn ar_step(dd: &[f64], t: usize, p: usize, window: usize) -> (f64, f64, Vec<f64>) {
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DMatrix::zeros(p, 1);
    let mut yy = 0.0;
    for s in t - window..t {
        let y = dd[s];
        yy += y * y;
        for a in 0..p {
            let xa = dd[s - 1 - a];
            xty[(a, 0)] += xa * y;
            for b in 0..=a {
                xtx[(a, b)] += xa * dd[s - 1 - b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(b, a)] = xtx[(a, b)];
        }
    }
    let (beta, _) = solve_normal(xtx, &xty);
    let predict = |s: usize| (0..p).map(|a| beta[(a, 0)] * dd[s - 1 - a]).sum::<f64>();
    let rss: f64 = (t - window..t).map(|s| (dd[s] - predict(s)).powi(2)).sum();
    let sigma = (rss / (window - p) as f64).sqrt();
    let floor = 1e-9 * (yy / window as f64).sqrt().max(1.0);
    (dd[t] - predict(t), sigma.max(floor), beta.iter().copied().collect())
}

/// ARIMA(p, d, 0) per sensor with a rolling least-squares fit; the tick
/// score is the largest absolute standardized one-step residual.
pub fn arima_scores(values: &Array2<f64>, cfg: &ArimaConfig) -> Vec<Option<f64>> {
    let n = values.nrows();
    let first = cfg.fit_window + cfg.p + cfg.d;
    let mut scores = vec![None; n];
    let diffs: Vec<Vec<f64>> = values.axis_iter(Axis(1)).map(|c| difference(&c.to_vec(), cfg.d)).collect();
    for (t, slot) in scores.iter_mut().enumerate().skip(first) {
        let best = diffs
            .iter()
            .map(|dd| {
                let (e, sigma, _) = ar_step(dd, t, cfg.p, cfg.fit_window);
                e.abs() / sigma
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            *slot = Some(best);
        }
    }
    scores
}

/// Normal approximation of a chi-square variate with `k` degrees of freedom.
pub fn wilson_hilferty(chi2: f64, k: usize) -> f64 {
    let k = k as f64;
    let v = 2.0 / (9.0 * k);
    ((chi2 / k).cbrt() - (1.0 - v)) / v.sqrt()
}

/// Sensors with the largest variance of the differenced series over
/// `range`; ties keep roster order.
fn top_variance(diffs: &[Vec<f64>], range: std::ops::Range<usize>, m: usize) -> Vec<usize> {
    let var = |d: &Vec<f64>| {
        let xs = &d[range.clone()];
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    };
    let mut idx: Vec<(usize, f64)> = diffs.iter().map(var).enumerate().collect();
    idx.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut keep: Vec<usize> = idx.into_iter().take(m).map(|(i, _)| i).collect();
    keep.sort_unstable();
    keep
}

/// Design matrix row `[1, D_{s-1}, ..., D_{s-p}]` for the selected channels.
fn var_row(diffs: &[&Vec<f64>], s: usize, p: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(1 + p * diffs.len());
    row.push(1.0);
    for lag in 1..=p {
        row.extend(diffs.iter().map(|d| d[s - lag]));
    }
    row
}

/// VAR(p) with intercept on the differenced series of a top-variance sensor
/// subset (chosen from the history before the first scored tick). The tick
/// score is the Mahalanobis distance of the one-step residual under the
/// fitted residual covariance, mapped to a standard-normal scale.
pub fn var_scores(values: &Array2<f64>, cfg: &VarConfig) -> Vec<Option<f64>> {
    let (n, p, w) = (values.nrows(), cfg.max_lags, cfg.fit_window);
    let first = w + p + cfg.differencing;
    let mut scores = vec![None; n];
    if n <= first {
        return scores;
    }
    let diffs: Vec<Vec<f64>> =
        values.axis_iter(Axis(1)).map(|c| difference(&c.to_vec(), cfg.differencing)).collect();
    let keep = top_variance(&diffs, cfg.differencing..first, cfg.channel_limit().min(diffs.len()));
    let sel: Vec<&Vec<f64>> = keep.iter().map(|&i| &diffs[i]).collect();
    let m = sel.len();
    for (t, slot) in scores.iter_mut().enumerate().skip(first) {
        let rows: Vec<Vec<f64>> = (t - w..t).map(|s| var_row(&sel, s, p)).collect();
        let x = DMatrix::from_fn(w, rows[0].len(), |i, j| rows[i][j]);
        let y = DMatrix::from_fn(w, m, |i, j| sel[j][t - w + i]);
        let fit = ols_fit(&x, &y);
        let xt = DVector::from_vec(var_row(&sel, t, p));
        let e = DVector::from_fn(m, |j, _| sel[j][t]) - fit.coef.transpose() * xt;
        let (cov, _) = solve_normal(fit.residual_cov.clone(), &DMatrix::from_column_slice(m, 1, e.as_slice()));
        let d2 = e.dot(&cov.column(0)).max(0.0);
        *slot = Some(wilson_hilferty(d2, m));
    }
    scores
}

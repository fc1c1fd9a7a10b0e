use ndarray::{Array2, Axis};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::GesdConfig;

/// Result of one generalized ESD test.
#[derive(Debug, Clone, PartialEq)]
pub struct GesdOutcome {
    /// `R_i` for steps `1..=max_anoms`; steps after the variance collapses
    /// are 0.
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Index (into the input) removed at each step.
    pub removed: Vec<usize>,
    /// Largest `i` with `R_i > lambda_i`; the first `n_outliers` removed
    /// points are the outliers.
    pub n_outliers: usize,
}

impl GesdOutcome {
    pub fn is_outlier(&self, index: usize) -> bool {
        self.removed[..self.n_outliers].contains(&index)
    }
}

/// Critical value `lambda_i` (1-based `i`) for a sample of size `n`.
pub fn gesd_critical(n: usize, i: usize, alpha: f64) -> f64 {
    let (n, i) = (n as f64, i as f64);
    let p = 1.0 - alpha / (2.0 * (n - i + 1.0));
    let dof = n - i - 1.0;
    let t = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom").inverse_cdf(p);
    (n - i) * t / ((dof + t * t) * (n - i + 1.0)).sqrt()
}

fn run(x: &[f64], lambda: &[f64]) -> GesdOutcome {
    let mut alive: Vec<usize> = (0..x.len()).collect();
    let mut r = Vec::with_capacity(lambda.len());
    let mut removed = Vec::with_capacity(lambda.len());
    for _ in 0..lambda.len() {
        let m = alive.len() as f64;
        let mean = alive.iter().map(|&i| x[i]).sum::<f64>() / m;
        let var = alive.iter().map(|&i| (x[i] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let (pos, dev) = alive
            .iter()
            .enumerate()
            .map(|(p, &i)| (p, (x[i] - mean).abs()))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let sd = var.sqrt();
        r.push(if sd > 0.0 { dev / sd } else { 0.0 });
        removed.push(alive.remove(pos));
    }
    let n_outliers = (0..r.len()).rev().find(|&i| r[i] > lambda[i]).map_or(0, |i| i + 1);
    GesdOutcome { r, lambda: lambda.to_vec(), removed, n_outliers }
}

/// Generalized ESD test for up to `max_anoms` outliers.
pub fn gesd(x: &[f64], max_anoms: usize, alpha: f64) -> GesdOutcome {
    let lambda: Vec<f64> = (1..=max_anoms).map(|i| gesd_critical(x.len(), i, alpha)).collect();
    run(x, &lambda)
}

/// Sliding-window GESD on every sensor. Tick `t` is scored once a full
/// window ending at `t` exists. The per-sensor score is the newest point's
/// studentized deviation in the window minus `lambda_1` (0 for a
/// zero-variance window); the tick score is the maximum over sensors and
/// the tick is flagged when the test marks the newest point as an outlier
/// on any sensor.
pub fn gesd_scores(values: &Array2<f64>, cfg: &GesdConfig) -> (Vec<Option<f64>>, Vec<bool>) {
    let (n, w) = (values.nrows(), cfg.window);
    let lambda: Vec<f64> = (1..=cfg.max_anoms).map(|i| gesd_critical(w, i, cfg.alpha)).collect();
    let mut scores = vec![None; n];
    let mut flags = vec![false; n];
    let columns: Vec<Vec<f64>> = values.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    for t in w.saturating_sub(1)..n {
        let mut best = f64::NEG_INFINITY;
        let mut flag = false;
        for col in &columns {
            let x = &col[t + 1 - w..=t];
            let mean = x.iter().sum::<f64>() / w as f64;
            let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w as f64 - 1.0)).sqrt();
            if sd <= 0.0 {
                best = best.max(0.0);
                continue;
            }
            best = best.max((x[w - 1] - mean).abs() / sd - lambda[0]);
            if !flag {
                flag = run(x, &lambda).is_outlier(w - 1);
            }
        }
        if best.is_finite() {
            scores[t] = Some(best);
            flags[t] = flag;
        }
    }
    (scores, flags)
}

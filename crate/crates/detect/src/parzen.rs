use std::f64::consts::PI;

use crate::{DetectError, ParzenConfig, Result};

/// Gaussian product-kernel density estimate with a per-dimension
/// bandwidth from Silverman's rule.
#[derive(Debug, Clone)]
pub struct Parzen {
    train: Vec<Vec<f64>>,
    pub bandwidth: Vec<f64>,
    /// `sum(ln h_j) + d/2 ln(2 pi)`
    log_kernel_norm: f64,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Parzen {
    pub fn fit(train: Vec<Vec<f64>>, cfg: &ParzenConfig) -> Result<Self> {
        let n = train.len();
        if n < 2 {
            return Err(DetectError::TooFew { detector: "parzen", need: 2, got: n });
        }
        let d = train[0].len();
        let factor = (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0));
        let bandwidth: Vec<f64> = (0..d)
            .map(|j| {
                let mean = train.iter().map(|x| x[j]).sum::<f64>() / n as f64;
                let sd = (train.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
                (factor * sd).max(cfg.bandwidth_floor)
            })
            .collect();
        let log_kernel_norm = bandwidth.iter().map(|h| h.ln()).sum::<f64>() + 0.5 * d as f64 * (2.0 * PI).ln();
        Ok(Self { train, bandwidth, log_kernel_norm })
    }

    fn log_density_excluding(&self, q: &[f64], skip: Option<usize>) -> f64 {
        let terms: Vec<f64> = self
            .train
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, x)| {
                -0.5 * x.iter().zip(q).zip(&self.bandwidth).map(|((a, b), h)| ((a - b) / h).powi(2)).sum::<f64>()
            })
            .collect();
        log_sum_exp(&terms) - (terms.len() as f64).ln() - self.log_kernel_norm
    }

    pub fn log_density(&self, q: &[f64]) -> f64 {
        self.log_density_excluding(q, None)
    }

    /// Negative log density.
    pub fn score(&self, q: &[f64]) -> f64 {
        -self.log_density(q)
    }

    /// Leave-one-out scores of the training points.
    pub fn train_scores(&self) -> Vec<f64> {
        (0..self.train.len()).map(|i| -self.log_density_excluding(&self.train[i], Some(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridrisk_core::SimRng;

    fn fit(train: Vec<Vec<f64>>) -> Parzen {
        Parzen::fit(train, &ParzenConfig::default()).unwrap()
    }

    #[test]
    fn one_dimensional_integrates_to_one() {
        let mut rng = SimRng::new(1);
        let p = fit((0..60).map(|_| vec![rng.normal()]).collect());
        let (lo, hi, steps) = (-12.0, 12.0, 24_000);
        let dx = (hi - lo) / steps as f64;
        let total: f64 = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                w * p.log_density(&[lo + i as f64 * dx]).exp()
            })
            .sum::<f64>()
            * dx;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn identical_points_give_kernel_peak() {
        let p = fit(vec![vec![2.0, -1.0]; 5]);
        let h = ParzenConfig::default().bandwidth_floor;
        let peak = 1.0 / (2.0 * PI * h * h);
        assert!((p.log_density(&[2.0, -1.0]) - peak.ln()).abs() < 1e-9);
    }

    #[test]
    fn mirrored_data_mirrored_density() {
        let mut rng = SimRng::new(2);
        let train: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.normal(), 2.0 * rng.normal()]).collect();
        let mirror: Vec<Vec<f64>> = train.iter().map(|x| x.iter().map(|v| -v).collect()).collect();
        let (a, b) = (fit(train), fit(mirror));
        for q in [[0.3, -0.7], [2.0, 1.0]] {
            let neg = [-q[0], -q[1]];
            assert!((a.log_density(&q) - b.log_density(&neg)).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_sum() {
        let mut rng = SimRng::new(3);
        let train: Vec<Vec<f64>> = (0..25).map(|_| vec![rng.normal(), rng.normal(), rng.normal()]).collect();
        let p = fit(train.clone());
        let (n, d) = (25.0_f64, 3.0_f64);
        let q = [0.2, 0.1, -0.4];
        let h: Vec<f64> = (0..3)
            .map(|j| {
                let m = train.iter().map(|x| x[j]).sum::<f64>() / n;
                let sd = (train.iter().map(|x| (x[j] - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                sd * (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0))
            })
            .collect();
        let dens: f64 = train
            .iter()
            .map(|x| (0..3).map(|j| (-0.5 * ((q[j] - x[j]) / h[j]).powi(2)).exp() / ((2.0 * PI).sqrt() * h[j])).product::<f64>())
            .sum::<f64>()
            / n;
        assert!((p.score(&q) + dens.ln()).abs() <= 1e-10);
        // Leave-one-out equals refitting the density sum without the point.
        let loo = p.train_scores()[0];
        let dens0: f64 = train[1..]
            .iter()
            .map(|x| (0..3).map(|j| (-0.5 * ((train[0][j] - x[j]) / h[j]).powi(2)).exp() / ((2.0 * PI).sqrt() * h[j])).product::<f64>())
            .sum::<f64>()
            / (n - 1.0);
        assert!((loo + dens0.ln()).abs() <= 1e-10);
    }
}

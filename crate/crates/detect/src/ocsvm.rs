use crate::{DetectError, OcsvmConfig, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// nu one-class SVM with an RBF kernel, trained by SMO on the dual
///
/// `min 1/2 a'Ka  s.t.  0 <= a_i <= 1/(nu n),  sum a_i = 1`.
#[derive(Debug, Clone)]
pub struct OneClassSvm {
    train: Vec<Vec<f64>>,
    pub gamma: f64,
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// Upper bound `1/(nu n)` on each multiplier.
    pub bound: f64,
    pub iterations: usize,
    /// Final maximal KKT violation `max G_j - min G_i` over feasible pairs.
    pub gap: f64,
    /// `K a` for the training points.
    gradient: Vec<f64>,
}

impl OneClassSvm {
    pub fn fit(train: Vec<Vec<f64>>, cfg: &OcsvmConfig) -> Result<Self> {
        let n = train.len();
        if n < 2 {
            return Err(DetectError::TooFew { detector: "ocsvm", need: 2, got: n });
        }
        let gamma = cfg.gamma.unwrap_or_else(|| default_gamma(&train));
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = 1.0;
            for j in i + 1..n {
                let v = (-gamma * sq_dist(&train[i], &train[j])).exp();
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let bound = 1.0 / (cfg.nu * n as f64);
        // Start like LIBSVM: the first floor(nu n) points at the bound, the
        // remainder of the unit mass on the next one.
        let mut alpha = vec![0.0; n];
        let full = ((cfg.nu * n as f64).floor() as usize).min(n);
        alpha[..full].iter_mut().for_each(|a| *a = bound);
        if full < n {
            alpha[full] = (1.0 - full as f64 * bound).max(0.0);
        }
        let mut g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i * n + j] * alpha[j]).sum()).collect();

        let mut iterations = 0;
        let gap = loop {
            let (mut up, mut g_up) = (usize::MAX, f64::INFINITY);
            let (mut down, mut g_down) = (usize::MAX, f64::NEG_INFINITY);
            for i in 0..n {
                if alpha[i] < bound && g[i] < g_up {
                    up = i;
                    g_up = g[i];
                }
                if alpha[i] > 0.0 && g[i] > g_down {
                    down = i;
                    g_down = g[i];
                }
            }
            let gap = g_down - g_up;
            if up == usize::MAX || down == usize::MAX || gap <= cfg.tol {
                break gap.max(0.0);
            }
            if iterations >= cfg.max_iter {
                return Err(DetectError::NotConverged { iterations, gap });
            }
            iterations += 1;
            let (i, j) = (up, down);
            let curv = (k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j]).max(1e-12);
            let room_i = bound - alpha[i];
            let room_j = alpha[j];
            let mut delta = gap / curv;
            if delta >= room_i.min(room_j) {
                delta = room_i.min(room_j);
            }
            // Snap to the bounds exactly so the active sets stay clean.
            if delta == room_i {
                alpha[i] = bound;
            } else {
                alpha[i] += delta;
            }
            if delta == room_j {
                alpha[j] = 0.0;
            } else {
                alpha[j] -= delta;
            }
            for (r, gr) in g.iter_mut().enumerate() {
                *gr += delta * (k[r * n + i] - k[r * n + j]);
            }
        };

        let free: Vec<f64> = (0..n).filter(|&i| alpha[i] > 0.0 && alpha[i] < bound).map(|i| g[i]).collect();
        let rho = if free.is_empty() {
            let lo = (0..n).filter(|&i| alpha[i] >= bound).map(|i| g[i]).fold(f64::NEG_INFINITY, f64::max);
            let hi = (0..n).filter(|&i| alpha[i] <= 0.0).map(|i| g[i]).fold(f64::INFINITY, f64::min);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo,
                (false, true) => hi,
                _ => 0.0,
            }
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        };
        Ok(Self { train, gamma, alpha, rho, bound, iterations, gap, gradient: g })
    }

    /// `sum a_i K(x_i, q) - rho`; negative on the outlier side.
    pub fn decision(&self, q: &[f64]) -> f64 {
        self.train
            .iter()
            .zip(&self.alpha)
            .filter(|(_, &a)| a > 0.0)
            .map(|(x, a)| a * (-self.gamma * sq_dist(x, q)).exp())
            .sum::<f64>()
            - self.rho
    }

    /// `rho - decision`; positive on the outlier side.
    pub fn score(&self, q: &[f64]) -> f64 {
        -self.decision(q)
    }

    pub fn train_scores(&self) -> Vec<f64> {
        self.gradient.iter().map(|g| self.rho - g).collect()
    }
}

/// `1 / (n_features * var(X))` over all entries; 1 for constant data.
fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x[0].len();
    let count = (x.len() * d) as f64;
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

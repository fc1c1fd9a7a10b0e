use crate::{DetectError, Result};

/// Guards the reachability mean against duplicate points.
const EPS: f64 = 1e-10;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Local outlier factor with exact neighbour search.
#[derive(Debug, Clone)]
pub struct Lof {
    train: Vec<Vec<f64>>,
    k: usize,
    /// k nearest training neighbours of each training point (itself excluded).
    neighbours: Vec<Vec<(usize, f64)>>,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

impl Lof {
    pub fn fit(train: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        if train.len() <= k {
            return Err(DetectError::TooFew { detector: "lof", need: k + 1, got: train.len() });
        }
        let n = train.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = dist(&train[i], &train[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| Self::nearest((0..n).filter(|&j| j != i).map(|j| (j, d[i * n + j])), k))
            .collect();
        let k_distance: Vec<f64> = neighbours.iter().map(|nb| nb[k - 1].1).collect();
        let lrd = neighbours.iter().map(|nb| Self::lrd_of(nb, &k_distance)).collect();
        Ok(Self { train, k, neighbours, k_distance, lrd })
    }

    /// The `k` smallest distances; ties go to the lower index.
    fn nearest(cands: impl Iterator<Item = (usize, f64)>, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = cands.collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    fn lrd_of(nb: &[(usize, f64)], k_distance: &[f64]) -> f64 {
        let mean = nb.iter().map(|&(o, d)| d.max(k_distance[o])).sum::<f64>() / nb.len() as f64;
        1.0 / (mean + EPS)
    }

    fn factor(&self, nb: &[(usize, f64)]) -> f64 {
        let own = Self::lrd_of(nb, &self.k_distance);
        nb.iter().map(|&(o, _)| self.lrd[o]).sum::<f64>() / (nb.len() as f64 * own)
    }

    pub fn score(&self, query: &[f64]) -> f64 {
        let nb = Self::nearest(self.train.iter().enumerate().map(|(j, x)| (j, dist(query, x))), self.k);
        self.factor(&nb)
    }

    /// LOF of every training point against the rest of the training set.
    pub fn train_scores(&self) -> Vec<f64> {
        self.neighbours.iter().map(|nb| self.factor(nb)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridrisk_core::SimRng;

    /// Transliteration of the definitions with no precomputation.
    fn oracle(train: &[Vec<f64>], q: &[f64], k: usize) -> f64 {
        let knn = |p: &[f64], skip: Option<usize>| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..train.len()).filter(|&j| Some(j) != skip).collect();
            idx.sort_by(|&a, &b| dist(p, &train[a]).total_cmp(&dist(p, &train[b])).then(a.cmp(&b)));
            idx.truncate(k);
            idx
        };
        let kdist = |o: usize| {
            let nb = knn(&train[o], Some(o));
            dist(&train[o], &train[nb[k - 1]])
        };
        let lrd = |p: &[f64], skip: Option<usize>| {
            let nb = knn(p, skip);
            let s: f64 = nb.iter().map(|&o| kdist(o).max(dist(p, &train[o]))).sum();
            1.0 / (s / k as f64 + 1e-10)
        };
        let nb = knn(q, None);
        let lq = lrd(q, None);
        nb.iter().map(|&o| lrd(&train[o], Some(o))).sum::<f64>() / (k as f64 * lq)
    }

    fn blob(seed: u64, n: usize) -> Vec<Vec<f64>> {
        let mut rng = SimRng::new(seed);
        (0..n).map(|_| vec![rng.normal(), rng.normal(), 0.5 * rng.normal()]).collect()
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..5 {
            let train = blob(seed, 40);
            let lof = Lof::fit(train.clone(), 3).unwrap();
            for q in [vec![0.1, -0.2, 0.0], vec![6.0, 6.0, 1.0], train[3].clone()] {
                let (a, b) = (lof.score(&q), oracle(&train, &q, 3));
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            }
            assert!(lof.score(&[6.0, 6.0, 1.0]) > 3.0);
        }
    }

    #[test]
    fn uniform_grid_interior_near_one() {
        let train: Vec<Vec<f64>> = (0..10).flat_map(|i| (0..10).map(move |j| vec![i as f64, j as f64])).collect();
        let lof = Lof::fit(train, 3).unwrap();
        let s = lof.score(&[4.5, 4.5]);
        assert!((s - 1.0).abs() < 0.1, "{s}");
    }

    #[test]
    fn duplicates_stay_finite() {
        let train = vec![vec![1.0, 1.0]; 6];
        let lof = Lof::fit(train, 3).unwrap();
        assert!(lof.score(&[1.0, 1.0]).is_finite());
        assert!(lof.train_scores().iter().all(|s| s.is_finite()));
    }

    #[test]
    fn too_few_points() {
        assert!(Lof::fit(vec![vec![0.0]; 3], 3).is_err());
    }
}

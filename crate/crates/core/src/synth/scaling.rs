use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Result, SynthError};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// One factor per sample shared by every load.
    Naive,
    /// One factor per (sample, load group).
    Grouped,
    /// One factor per (sample, load).
    BruteForce,
}

impl ScalingMode {
    pub const ALL: [ScalingMode; 3] = [ScalingMode::Naive, ScalingMode::Grouped, ScalingMode::BruteForce];

    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::Naive => "naive",
            ScalingMode::Grouped => "grouped",
            ScalingMode::BruteForce => "brute_force",
        }
    }
}

/// Factor matrix (`n_samples x groups.len()`), drawn i.i.d. uniform on
/// `range`. Within a sample, grouped factors are drawn in ascending group id
/// order and brute-force factors in load order.
pub fn scale_factors(
    mode: ScalingMode,
    range: (f64, f64),
    groups: &[u32],
    n_samples: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let (lo, hi) = range;
    if !(lo > 0.0 && lo <= hi) {
        return Err(SynthError::FactorRange(lo, hi));
    }
    if mode == ScalingMode::Grouped && groups.is_empty() {
        return Err(SynthError::EmptyGroups);
    }
    let n = groups.len();
    let mut distinct: Vec<u32> = groups.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let slot: Vec<usize> = groups.iter().map(|g| distinct.binary_search(g).expect("group listed")).collect();
    let mut rng = SimRng::new(seed);
    let mut out = Array2::zeros((n_samples, n));
    for mut row in out.rows_mut() {
        match mode {
            ScalingMode::Naive => row.fill(rng.uniform_range(lo, hi)),
            ScalingMode::Grouped => {
                let f: Vec<f64> = distinct.iter().map(|_| rng.uniform_range(lo, hi)).collect();
                for (j, s) in slot.iter().enumerate() {
                    row[j] = f[*s];
                }
            }
            ScalingMode::BruteForce => row.iter_mut().for_each(|v| *v = rng.uniform_range(lo, hi)),
        }
    }
    Ok(out)
}

/// `load(i, j) = c(i, j) * base_j` with factors from [`scale_factors`].
pub fn scale_loads(
    base: &[f64],
    mode: ScalingMode,
    range: (f64, f64),
    groups: &[u32],
    n_samples: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let groups: Vec<u32> = if mode == ScalingMode::Grouped {
        if groups.len() != base.len() {
            return Err(SynthError::EmptyGroups);
        }
        groups.to_vec()
    } else {
        vec![0; base.len()]
    };
    let mut m = scale_factors(mode, range, &groups, n_samples, seed)?;
    for mut row in m.rows_mut() {
        for (v, b) in row.iter_mut().zip(base) {
            *v *= b;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BASE: [f64; 6] = [1.0, 2.0, 0.5, 3.0, 1.5, 0.2];
    const GROUPS: [u32; 6] = [0, 1, 0, 2, 1, 2];

    #[test]
    fn unit_range_returns_base() {
        for mode in ScalingMode::ALL {
            let m = scale_loads(&BASE, mode, (1.0, 1.0), &GROUPS, 4, 3).unwrap();
            for row in m.rows() {
                assert_eq!(row.to_vec(), BASE.to_vec());
            }
        }
    }

    #[test]
    fn grouped_requires_groups() {
        assert!(matches!(scale_loads(&BASE, ScalingMode::Grouped, (0.8, 1.2), &[], 4, 3), Err(SynthError::EmptyGroups)));
        assert!(scale_loads(&BASE, ScalingMode::Naive, (0.8, 1.2), &[], 4, 3).is_ok());
        assert!(matches!(scale_loads(&BASE, ScalingMode::Naive, (1.2, 0.8), &[], 4, 3), Err(SynthError::FactorRange(..))));
    }

    #[test]
    fn brute_force_factor_moments() {
        let f = scale_factors(ScalingMode::BruteForce, (0.8, 1.2), &[0; 10], 1000, 7).unwrap();
        let mean = f.mean().unwrap();
        assert!((0.99..=1.01).contains(&mean), "{mean}");
        assert!(f.iter().all(|&v| (0.8..=1.2).contains(&v)));
    }

    proptest! {
        #[test]
        fn ratio_structure(seed in 0u64..1000) {
            let naive = scale_loads(&BASE, ScalingMode::Naive, (0.8, 1.2), &GROUPS, 5, seed).unwrap();
            let grouped = scale_loads(&BASE, ScalingMode::Grouped, (0.8, 1.2), &GROUPS, 5, seed).unwrap();
            let brute = scale_loads(&BASE, ScalingMode::BruteForce, (0.8, 1.2), &GROUPS, 5, seed).unwrap();
            for i in 0..5 {
                let r = |m: &Array2<f64>, j: usize| m[(i, j)] / BASE[j];
                for j in 0..6 {
                    prop_assert!((r(&naive, j) - r(&naive, 0)).abs() < 1e-12);
                    for k in 0..6 {
                        if GROUPS[j] == GROUPS[k] {
                            prop_assert!((r(&grouped, j) - r(&grouped, k)).abs() < 1e-12);
                        }
                    }
                }
            }
            for j in 0..6 {
                for k in (j + 1)..6 {
                    let same = (0..5).all(|i| (brute[(i, j)] / BASE[j] - brute[(i, k)] / BASE[k]).abs() < 1e-12);
                    prop_assert!(!same);
                }
            }
        }
    }
}

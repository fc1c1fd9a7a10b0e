use gridrisk_core::grid::GridCase;
use gridrisk_core::scenario::{group_styles, DAY_SAMPLES};
use gridrisk_core::synth::{decompose_trace, scale_factors, style_profile, synthesize_trace, ScalingMode};
use gridrisk_core::SimRng;
use serde::{Deserialize, Serialize};

use crate::{AcopfError, Result};

/// Relative amplitude of the daily group styles in realistic data.
pub const REALISTIC_AMPLITUDE: f64 = 0.3;

/// Range of the augmentation factors.
pub const FACTOR_RANGE: (f64, f64) = (0.8, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Realistic,
    Naive,
    Grouped,
    BruteForce,
}

impl From<ScalingMode> for Provenance {
    fn from(m: ScalingMode) -> Self {
        match m {
            ScalingMode::Naive => Provenance::Naive,
            ScalingMode::Grouped => Provenance::Grouped,
            ScalingMode::BruteForce => Provenance::BruteForce,
        }
    }
}

/// One load configuration: `pd`, `qd` per case load, in pu.
#[derive(Debug, Clone, PartialEq)]
pub struct AcopfSample {
    pub pd: Vec<f64>,
    pub qd: Vec<f64>,
    pub provenance: Provenance,
}

/// [`gen_realistic_with`] at [`REALISTIC_AMPLITUDE`].
pub fn gen_realistic(case: &GridCase, n_real: usize, seed: u64) -> Result<Vec<AcopfSample>> {
    gen_realistic_with(case, n_real, REALISTIC_AMPLITUDE, seed)
}

/// `n_real` consecutive configurations spanning one day. Every load group
/// follows its own style (peak time and step drawn per group); the group's
/// daily curve is decomposed and re-synthesized at `n_real` points, and each
/// load is its case value times the group multiplier, so loads within a
/// group keep their ratios exactly.
pub fn gen_realistic_with(case: &GridCase, n_real: usize, amplitude: f64, seed: u64) -> Result<Vec<AcopfSample>> {
    let mut multipliers = Vec::new();
    for (g, params) in group_styles(case, amplitude, seed) {
        let tag = u64::from(g);
        let day = style_profile(&params, DAY_SAMPLES, SimRng::derive(seed, 0x100 + tag).next_u64());
        let comp = decompose_trace(&day, 5)?;
        let noise_seed = SimRng::derive(seed, 0x200 + tag).next_u64();
        let m: Vec<f64> = synthesize_trace(&comp, n_real, 1.0, noise_seed)?.into_iter().map(|v| v / comp.mu).collect();
        multipliers.push((g, m));
    }
    let slot: Vec<usize> = case
        .loads
        .iter()
        .map(|l| multipliers.iter().position(|(g, _)| *g == l.group).expect("every group styled"))
        .collect();
    Ok((0..n_real)
        .map(|t| AcopfSample {
            pd: case.loads.iter().zip(&slot).map(|(l, &s)| l.pd * multipliers[s].1[t]).collect(),
            qd: case.loads.iter().zip(&slot).map(|(l, &s)| l.qd * multipliers[s].1[t]).collect(),
            provenance: Provenance::Realistic,
        })
        .collect())
}

/// Random `(pool, test)` partition with `n_test` test samples; both keep the
/// original order.
pub fn split_test(samples: &[AcopfSample], n_test: usize, seed: u64) -> Result<(Vec<AcopfSample>, Vec<AcopfSample>)> {
    if n_test == 0 || n_test >= samples.len() {
        return Err(AcopfError::Config(format!("test split of {n_test} from {} samples", samples.len())));
    }
    let mut rng = SimRng::new(seed);
    let mut is_test = vec![false; samples.len()];
    for i in rng.sample_indices(samples.len(), n_test) {
        is_test[i] = true;
    }
    let (test, pool): (Vec<_>, Vec<_>) = samples.iter().cloned().zip(is_test).partition(|(_, t)| *t);
    Ok((pool.into_iter().map(|p| p.0).collect(), test.into_iter().map(|p| p.0).collect()))
}

/// Per-load mean `(pd, qd)` of `samples`.
pub fn mean_loads(samples: &[AcopfSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = samples.first().ok_or(AcopfError::Empty)?;
    let n = samples.len() as f64;
    let mut pd = vec![0.0; first.pd.len()];
    let mut qd = vec![0.0; first.qd.len()];
    for s in samples {
        pd.iter_mut().zip(&s.pd).for_each(|(a, v)| *a += v / n);
        qd.iter_mut().zip(&s.qd).for_each(|(a, v)| *a += v / n);
    }
    Ok((pd, qd))
}

/// `load(i, j) = c(i, j) * base_j` with factors on [`FACTOR_RANGE`] shared
/// per sample (naive), per load group (grouped) or drawn per load (brute
/// force). Each load's `pd` and `qd` take the same factor.
pub fn gen_augmented(
    case: &GridCase,
    base: &(Vec<f64>, Vec<f64>),
    mode: ScalingMode,
    n_fake: usize,
    seed: u64,
) -> Result<Vec<AcopfSample>> {
    let (base_pd, base_qd) = base;
    if base_pd.len() != case.loads.len() || base_qd.len() != case.loads.len() {
        return Err(AcopfError::Dimension { what: "base loads", expected: case.loads.len(), got: base_pd.len() });
    }
    let groups: Vec<u32> = case.loads.iter().map(|l| l.group).collect();
    let factors = scale_factors(mode, FACTOR_RANGE, &groups, n_fake, seed)?;
    Ok(factors
        .rows()
        .into_iter()
        .map(|c| AcopfSample {
            pd: c.iter().zip(base_pd).map(|(f, b)| f * b).collect(),
            qd: c.iter().zip(base_qd).map(|(f, b)| f * b).collect(),
            provenance: mode.into(),
        })
        .collect())
}

use std::io::Write;

use gridrisk_core::grid::GridCase;
use gridrisk_core::synth::ScalingMode;
use gridrisk_core::SimRng;
use serde::{Deserialize, Serialize};

use crate::data::{gen_augmented, gen_realistic_with, mean_loads, split_test, REALISTIC_AMPLITUDE};
use crate::train::{evaluate_generalization, init_model, train_penalty, TrainConfig};
use crate::{AcopfError, Result};

/// Full-scale realistic sample count for case30. The default sweep uses a
/// tenth of it to keep runtime in minutes.
pub const FULL_SCALE_N_REAL: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: String,
    pub n_real: usize,
    /// Share of the realistic samples held out for evaluation.
    pub test_fraction: f64,
    pub n_fake: Vec<usize>,
    pub modes: Vec<ScalingMode>,
    pub seeds: Vec<u64>,
    pub amplitude: f64,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: "case30".into(),
            n_real: 200,
            test_fraction: 0.2,
            n_fake: vec![200, 1000],
            modes: ScalingMode::ALL.to_vec(),
            seeds: (0..10).map(|k| 10 * k).collect(),
            amplitude: REALISTIC_AMPLITUDE,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn n_test(&self) -> usize {
        (self.n_real as f64 * self.test_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n_test = self.n_test();
        if n_test == 0 || n_test >= self.n_real {
            return Err(AcopfError::Config(format!(
                "n_real {} with test_fraction {} leaves no test or no pool samples",
                self.n_real, self.test_fraction
            )));
        }
        if self.seeds.is_empty() || self.modes.is_empty() || self.n_fake.is_empty() {
            return Err(AcopfError::Config("seeds, modes and n_fake must be nonempty".into()));
        }
        if self.n_fake.contains(&0) {
            return Err(AcopfError::Config("n_fake entries must be positive".into()));
        }
        if !(self.amplitude >= 0.0) {
            return Err(AcopfError::Config("amplitude must be non-negative".into()));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: ScalingMode,
    pub n_fake: usize,
    pub seed: u64,
    pub equality_mean: f64,
    pub inequality_mean: f64,
    pub overall_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub mode: ScalingMode,
    pub n_fake: usize,
    pub seed: u64,
    pub error: String,
}

/// Mean and sample standard deviation of `overall_mean` over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub mode: ScalingMode,
    pub n_fake: usize,
    pub runs: usize,
    pub mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    pub fn summary(&self) -> Vec<CellSummary> {
        let mut keys: Vec<(ScalingMode, usize)> = Vec::new();
        for r in &self.rows {
            if !keys.contains(&(r.mode, r.n_fake)) {
                keys.push((r.mode, r.n_fake));
            }
        }
        keys.into_iter()
            .map(|(mode, n_fake)| {
                let v: Vec<f64> =
                    self.rows.iter().filter(|r| r.mode == mode && r.n_fake == n_fake).map(|r| r.overall_mean).collect();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let spread = if v.len() > 1 {
                    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
                } else {
                    0.0
                };
                CellSummary { mode, n_fake, runs: v.len(), mean, spread }
            })
            .collect()
    }

    /// Mean `overall_mean` of one mode over every `n_fake` and seed.
    pub fn mode_mean(&self, mode: ScalingMode) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.mode == mode).map(|r| r.overall_mean).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn row(&self, mode: ScalingMode, n_fake: usize, seed: u64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.mode == mode && r.n_fake == n_fake && r.seed == seed)
    }
}

/// Generate, train and evaluate one `(mode, n_fake, seed)` cell. The
/// realistic data, test split and network initialization depend on `seed`
/// only, so modes are compared on identical test samples.
pub fn run_cell(case: &GridCase, cfg: &ExperimentConfig, mode: ScalingMode, n_fake: usize, seed: u64) -> Result<SweepRow> {
    let realistic = gen_realistic_with(case, cfg.n_real, cfg.amplitude, seed)?;
    let (pool, test) = split_test(&realistic, cfg.n_test(), SimRng::derive(seed, 1).next_u64())?;
    let base = mean_loads(&pool)?;
    let train = gen_augmented(case, &base, mode, n_fake, SimRng::derive(seed, 2).next_u64())?;
    let model = init_model(case, &base, &cfg.train, SimRng::derive(seed, 3).next_u64())?;
    let trained = train_penalty(model, &train, case, &cfg.train, SimRng::derive(seed, 4).next_u64())?;
    let report = evaluate_generalization(&trained.model, &test, case)?;
    Ok(SweepRow {
        mode,
        n_fake,
        seed,
        equality_mean: report.equality_mean,
        inequality_mean: report.inequality_mean,
        overall_mean: report.overall_mean,
    })
}

/// Every cell of the grid, in mode, `n_fake`, seed order. A failing cell is
/// recorded and the sweep moves on.
pub fn experiment_sweep(case: &GridCase, cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let mut out = SweepResult::default();
    for &mode in &cfg.modes {
        for &n_fake in &cfg.n_fake {
            for &seed in &cfg.seeds {
                match run_cell(case, cfg, mode, n_fake, seed) {
                    Ok(row) => {
                        log::info!("{} n_fake={n_fake} seed={seed}: {:.6e}", mode.name(), row.overall_mean);
                        out.rows.push(row);
                    }
                    Err(e) => {
                        log::warn!("{} n_fake={n_fake} seed={seed} failed: {e}", mode.name());
                        out.failures.push(CellFailure { mode, n_fake, seed, error: e.to_string() });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `mode,n_fake,seed,equality_mean,inequality_mean,overall_mean`
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "n_fake", "seed", "equality_mean", "inequality_mean", "overall_mean"])?;
    for r in rows {
        w.write_record([
            r.mode.name().to_string(),
            r.n_fake.to_string(),
            r.seed.to_string(),
            r.equality_mean.to_string(),
            r.inequality_mean.to_string(),
            r.overall_mean.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

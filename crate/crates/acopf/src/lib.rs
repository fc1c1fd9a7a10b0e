//! Neural surrogates for AC optimal power flow trained without labels on a
//! constraint-penalty loss, and the sweep comparing how load-augmentation
//! strategies generalize to realistic load patterns.

pub mod data;
pub mod mlp;
pub mod model;
pub mod physics;
pub mod sweep;
pub mod train;

use gridrisk_core::grid::GridError;
use gridrisk_core::powerflow::PfError;
use gridrisk_core::scenario::ScenarioError;
use gridrisk_core::synth::SynthError;
use thiserror::Error;

pub use data::{
    gen_augmented, gen_realistic, gen_realistic_with, mean_loads, split_test, AcopfSample, Provenance, FACTOR_RANGE,
    REALISTIC_AMPLITUDE,
};
pub use mlp::{Activation, Mlp};
pub use model::{AcopfModel, InputScaling, OutputMap};
pub use physics::{acopf_violations, Decision, LossWeights, Physics, ViolationReport};
pub use sweep::{experiment_sweep, run_cell, write_sweep_csv, ExperimentConfig, SweepResult, SweepRow};
pub use train::{evaluate_generalization, init_model, train_penalty, EpochLoss, TrainConfig, Trained};

#[derive(Debug, Error)]
pub enum AcopfError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    PowerFlow(#[from] PfError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("case has no slack bus")]
    NoSlack,
    #[error("reference power flow did not converge")]
    Reference,
    #[error("{what} has {got} entries, expected {expected}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("no samples")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = AcopfError> = std::result::Result<T, E>;

//! Unsupervised anomaly detectors over labelled measurement streams.
//!
//! Every detector produces one optional score per tick (higher is more
//! anomalous). Sequential detectors (GESD, ARIMA, VAR, topology-aware) score
//! tick `t` from frames `<= t` only. Fitted detectors (LOF, Parzen, one-class
//! SVM, isolation forest) are fitted on the train split and then score every
//! frame; train ticks get leave-one-out or in-sample scores so that flag
//! thresholds can be set without touching test data.

mod autoreg;
mod gesd;
mod iforest;
mod lof;
mod ocsvm;
mod parzen;
mod report;
pub mod robust;
mod topo;

use std::fmt;
use std::str::FromStr;

use gridrisk_core::scenario::LabeledStream;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use autoreg::{arima_scores, ols_fit, var_scores, wilson_hilferty, OlsFit};
pub use gesd::{gesd, gesd_critical, gesd_scores, GesdOutcome};
pub use iforest::{average_path_length, IsolationForest, ITree, Node};
pub use lof::Lof;
pub use ocsvm::OneClassSvm;
pub use parzen::Parzen;
pub use report::{evaluate, write_report_csv, write_scores_csv, DetectionReport, DetectorOutcome};
pub use topo::{topo_aware_scores, GraphDistance};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("unknown detector '{0}' (valid: gesd, arima, var, lof, parzen, ocsvm, iforest, topo)")]
    UnknownDetector(String),
    #[error("{detector}: needs at least {need} points, got {got}")]
    TooFew { detector: &'static str, need: usize, got: usize },
    #[error("one-class SVM stopped after {iterations} iterations with duality gap {gap:e}")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("invalid detector config: {0}")]
    Config(String),
    #[error("topology-aware detector needs graph distances for the case")]
    MissingGraph,
    #[error("graph distance: {0}")]
    Graph(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DetectError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Gesd,
    Arima,
    Var,
    Lof,
    Parzen,
    Ocsvm,
    Iforest,
    Topo,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 8] = [
        DetectorKind::Gesd,
        DetectorKind::Arima,
        DetectorKind::Var,
        DetectorKind::Lof,
        DetectorKind::Parzen,
        DetectorKind::Ocsvm,
        DetectorKind::Iforest,
        DetectorKind::Topo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Gesd => "gesd",
            DetectorKind::Arima => "arima",
            DetectorKind::Var => "var",
            DetectorKind::Lof => "lof",
            DetectorKind::Parzen => "parzen",
            DetectorKind::Ocsvm => "ocsvm",
            DetectorKind::Iforest => "iforest",
            DetectorKind::Topo => "topo",
        }
    }

    /// Fitted on the train split rather than run sequentially.
    pub fn is_fitted(self) -> bool {
        matches!(self, DetectorKind::Lof | DetectorKind::Parzen | DetectorKind::Ocsvm | DetectorKind::Iforest)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| DetectError::UnknownDetector(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GesdConfig {
    pub window: usize,
    pub max_anoms: usize,
    pub alpha: f64,
}

impl Default for GesdConfig {
    fn default() -> Self {
        Self { window: 50, max_anoms: 2, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaConfig {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Rolling history length (rows) of each least-squares fit.
    pub fit_window: usize,
}

impl Default for ArimaConfig {
    fn default() -> Self {
        Self { p: 5, d: 1, q: 0, fit_window: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarConfig {
    pub max_lags: usize,
    pub differencing: usize,
    pub fit_window: usize,
}

impl Default for VarConfig {
    fn default() -> Self {
        Self { max_lags: 5, differencing: 1, fit_window: 200 }
    }
}

impl VarConfig {
    /// Channels kept so that the regressor count stays below a quarter of
    /// the fit window.
    pub fn channel_limit(&self) -> usize {
        (self.fit_window / (4 * self.max_lags.max(1))).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LofConfig {
    pub k: usize,
}

impl Default for LofConfig {
    fn default() -> Self {
        Self { k: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParzenConfig {
    /// Smallest per-dimension bandwidth.
    pub bandwidth_floor: f64,
}

impl Default for ParzenConfig {
    fn default() -> Self {
        Self { bandwidth_floor: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcsvmConfig {
    pub nu: f64,
    /// RBF width; `None` uses `1 / (n_features * var(X))`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OcsvmConfig {
    fn default() -> Self {
        Self { nu: 0.5, gamma: None, tol: 1e-8, max_iter: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IforestConfig {
    pub trees: usize,
    pub features_per_tree: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for IforestConfig {
    fn default() -> Self {
        Self { trees: 100, features_per_tree: 1, subsample: 256, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopoConfig {
    /// Distance scale of the history weights `exp(-d / tau)`.
    pub tau: f64,
    /// Ticks are scored only once the summed history weight reaches this.
    pub min_weight: f64,
    /// History samples lighter than this are ignored.
    pub weight_cutoff: f64,
    /// At most this many of the most recent qualifying samples are used.
    pub max_history: usize,
}

impl Default for TopoConfig {
    fn default() -> Self {
        Self { tau: 1e-3, min_weight: 15.0, weight_cutoff: 1e-3, max_history: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub gesd: GesdConfig,
    pub arima: ArimaConfig,
    pub var: VarConfig,
    pub lof: LofConfig,
    pub parzen: ParzenConfig,
    pub ocsvm: OcsvmConfig,
    pub iforest: IforestConfig,
    pub topo: TopoConfig,
    pub threshold: ThresholdConfig,
}

/// Flags fire where a score exceeds the median of the train-split scores by
/// `z` robust standard deviations (1.4826 MAD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub z: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { z: 3.0 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DetectError::Config(m));
        if self.gesd.window <= self.gesd.max_anoms + 2 {
            return bad(format!("gesd window {} must exceed max_anoms + 2", self.gesd.window));
        }
        if !(self.gesd.alpha > 0.0 && self.gesd.alpha < 1.0) {
            return bad(format!("gesd alpha {} outside (0, 1)", self.gesd.alpha));
        }
        if self.arima.q != 0 {
            return bad("only pure autoregressive models (q = 0) are supported".into());
        }
        if self.arima.p == 0 || self.var.max_lags == 0 {
            return bad("autoregressive order must be at least 1".into());
        }
        if self.arima.fit_window <= self.arima.p || self.var.fit_window <= 4 * self.var.max_lags {
            return bad("fit window too short for the autoregressive order".into());
        }
        if !(self.ocsvm.nu > 0.0 && self.ocsvm.nu <= 1.0) {
            return bad(format!("nu {} outside (0, 1]", self.ocsvm.nu));
        }
        if self.lof.k == 0 {
            return bad("lof k must be at least 1".into());
        }
        if self.iforest.trees == 0 || self.iforest.features_per_tree == 0 || self.iforest.subsample < 2 {
            return bad("isolation forest needs trees >= 1, features_per_tree >= 1, subsample >= 2".into());
        }
        if self.topo.tau <= 0.0 {
            return bad("topo tau must be positive".into());
        }
        Ok(())
    }
}

/// Per-tick scores and flags of one detector over a whole stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyScoreSeries {
    pub detector: DetectorKind,
    pub scores: Vec<Option<f64>>,
    pub flags: Vec<bool>,
    /// Score threshold behind the flags. GESD flags come from the test
    /// itself; its threshold is reported as 0 on the `R - lambda` scale.
    pub threshold: f64,
}

impl AnomalyScoreSeries {
    fn thresholded(detector: DetectorKind, scores: Vec<Option<f64>>, train: &[bool], z: f64) -> Self {
        let fit: Vec<f64> = scores.iter().zip(train).filter(|(_, &t)| t).filter_map(|(s, _)| *s).collect();
        let threshold = robust::robust_threshold(&fit, z).unwrap_or(f64::INFINITY);
        let flags = scores.iter().map(|s| s.is_some_and(|v| v > threshold)).collect();
        Self { detector, scores, flags, threshold }
    }
}

fn split_rows(values: &Array2<f64>, train: &[bool]) -> Vec<Vec<f64>> {
    values
        .axis_iter(Axis(0))
        .zip(train)
        .filter(|(_, &t)| t)
        .map(|(r, _)| r.to_vec())
        .collect()
}

/// Runs one detector over `stream`. `graph` is needed only by the
/// topology-aware detector.
pub fn run_detector(
    kind: DetectorKind,
    stream: &LabeledStream,
    cfg: &DetectorConfig,
    graph: Option<&GraphDistance>,
) -> Result<AnomalyScoreSeries> {
    cfg.validate()?;
    let values = stream.values();
    let train: Vec<bool> = (0..stream.len()).map(|t| stream.is_train(t)).collect();
    let z = cfg.threshold.z;
    let rows = || values.axis_iter(Axis(0)).map(|r| r.to_vec()).collect::<Vec<_>>();
    let fitted_scores = |train_scores: Vec<f64>, score: &dyn Fn(&[f64]) -> f64| -> Vec<Option<f64>> {
        let mut it = train_scores.into_iter();
        rows()
            .iter()
            .zip(&train)
            .map(|(r, &t)| Some(if t { it.next().expect("one score per train row") } else { score(r) }))
            .collect()
    };
    let series = match kind {
        DetectorKind::Gesd => {
            let (scores, flags) = gesd_scores(&values, &cfg.gesd);
            AnomalyScoreSeries { detector: kind, scores, flags, threshold: 0.0 }
        }
        DetectorKind::Arima => AnomalyScoreSeries::thresholded(kind, arima_scores(&values, &cfg.arima), &train, z),
        DetectorKind::Var => AnomalyScoreSeries::thresholded(kind, var_scores(&values, &cfg.var), &train, z),
        DetectorKind::Topo => {
            let graph = graph.ok_or(DetectError::MissingGraph)?;
            let scores =
                topo_aware_scores(&values, &stream.topology_id_per_tick, &stream.topologies, graph, &cfg.topo);
            AnomalyScoreSeries::thresholded(kind, scores, &train, z)
        }
        DetectorKind::Lof => {
            let m = Lof::fit(split_rows(&values, &train), cfg.lof.k)?;
            let s = fitted_scores(m.train_scores(), &|q| m.score(q));
            AnomalyScoreSeries::thresholded(kind, s, &train, z)
        }
        DetectorKind::Parzen => {
            let m = Parzen::fit(split_rows(&values, &train), &cfg.parzen)?;
            let s = fitted_scores(m.train_scores(), &|q| m.score(q));
            AnomalyScoreSeries::thresholded(kind, s, &train, z)
        }
        DetectorKind::Ocsvm => {
            let m = OneClassSvm::fit(split_rows(&values, &train), &cfg.ocsvm)?;
            let s = fitted_scores(m.train_scores(), &|q| m.score(q));
            AnomalyScoreSeries::thresholded(kind, s, &train, z)
        }
        DetectorKind::Iforest => {
            let m = IsolationForest::fit(&split_rows(&values, &train), &cfg.iforest)?;
            let s = fitted_scores(m.train_scores(), &|q| m.score(q));
            AnomalyScoreSeries::thresholded(kind, s, &train, z)
        }
    };
    Ok(series)
}

use gridrisk_core::scenario::{TopologySignature, TopologyWeights};
use gridrisk_core::GridCase;
use ndarray::{Array2, Axis};

use crate::robust::{weighted_median, MAD_SCALE};
use crate::{DetectError, Result, TopoConfig};

/// Sensitivity-weighted distance between topologies of one case: the summed
/// reference flow share of every branch whose status differs (plus switch and
/// generator status differences, weighted alike).
#[derive(Debug, Clone)]
pub struct GraphDistance {
    weights: TopologyWeights,
}

impl GraphDistance {
    /// Weights from one power flow on the reference topology `case`.
    pub fn new(case: &GridCase) -> Result<Self> {
        TopologyWeights::reference(case)
            .map(Self::from_weights)
            .map_err(|e| DetectError::Graph(e.to_string()))
    }

    pub fn from_weights(weights: TopologyWeights) -> Self {
        Self { weights }
    }

    pub fn distance(&self, a: &TopologySignature, b: &TopologySignature) -> f64 {
        self.weights.distance(a, b)
    }
}

/// Per-sensor robust z-scores against the tick's own history, weighted by
/// `exp(-d / tau)` where `d` is the graph distance between the announced
/// topology at the current tick and at the history tick. The tick score is
/// the largest z over sensors. Ticks whose summed history weight is below
/// `min_weight` (e.g. right after a change to an unseen topology) are not
/// scored.
pub fn topo_aware_scores(
    values: &Array2<f64>,
    topology_id_per_tick: &[usize],
    topologies: &[TopologySignature],
    graph: &GraphDistance,
    cfg: &TopoConfig,
) -> Vec<Option<f64>> {
    let k = topologies.len();
    let mut weight = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            weight[a * k + b] = (-graph.distance(&topologies[a], &topologies[b]) / cfg.tau).exp();
        }
    }
    let columns: Vec<Vec<f64>> = values.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
    let mut scores = vec![None; values.nrows()];
    let mut pairs = Vec::new();
    for (t, slot) in scores.iter_mut().enumerate() {
        let here = topology_id_per_tick[t];
        let history: Vec<(usize, f64)> = (0..t)
            .rev()
            .map(|s| (s, weight[here * k + topology_id_per_tick[s]]))
            .filter(|&(_, w)| w >= cfg.weight_cutoff)
            .take(cfg.max_history)
            .collect();
        if history.iter().map(|h| h.1).sum::<f64>() < cfg.min_weight {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        for col in &columns {
            pairs.clear();
            pairs.extend(history.iter().map(|&(s, w)| (col[s], w)));
            let med = weighted_median(&mut pairs).expect("positive weight");
            pairs.iter_mut().for_each(|p| p.0 = (p.0 - med).abs());
            let mad = weighted_median(&mut pairs).expect("positive weight");
            let scale = (MAD_SCALE * mad).max(1e-12 * med.abs().max(1.0));
            best = best.max((col[t] - med).abs() / scale);
        }
        if best.is_finite() {
            *slot = Some(best);
        }
    }
    scores
}

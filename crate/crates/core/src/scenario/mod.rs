//! Timed experiment scenarios: load profiles, topology event schedules,
//! the per-tick power-flow loop and noisy labelled measurement streams.

mod dispatch;
mod export;
mod profiles;
mod run;
mod schedule;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{apply_event, connectivity_check, EventLabel, GridCase, GridError, TopologyEvent};
use crate::powerflow::PfError;
use crate::rng::SimRng;
use crate::synth::SynthError;

pub use dispatch::generation_dispatch;
pub use export::{read_labeled_stream, write_labeled_stream, StreamFiles};
pub use profiles::{group_day_trace, group_styles, load_multipliers, reference_day_trace, LoadVariant, DAY_SAMPLES};
pub use run::{run_scenario, LabeledStream, MeasurementFrame, Sensor, SensorKind};
pub use schedule::{
    base_solution, event_rates, is_operable, random_schedule, EventRates, TopologySignature, TopologyWeights,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("power flow failed at tick {tick}: {source}")]
    Pf { tick: usize, source: PfError },
    #[error("power flow diverged at tick {tick} (mismatch {mismatch:e})")]
    Diverged { tick: usize, mismatch: f64 },
    #[error("dispatch: {0}")]
    Dispatch(String),
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("event {event}: {reason}")]
    Event { event: String, reason: String },
    #[error("stream data: {0}")]
    Data(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: usize,
    /// Number of distinct topologies; known changes fall on equal-length
    /// segment boundaries. Ignored when `known_events` is given.
    pub topology_count: usize,
    /// Topologies (in order of first appearance) used for fitting.
    pub train_topologies: usize,
    pub tick_minutes: f64,
    pub variant: LoadVariant,
    /// Variation scaling for the small-variation profile.
    pub small_alpha: f64,
    /// Variation scaling for the realistic per-group profiles.
    pub realistic_alpha: f64,
    /// Relative amplitude of realistic per-group daily styles.
    pub realistic_amplitude: f64,
    pub known_events: Option<Vec<TopologyEvent>>,
    pub anomaly_events: Option<Vec<TopologyEvent>>,
    pub anomalies_per_segment: usize,
    pub anomaly_duration: usize,
    /// Earliest tick offset of an anomaly inside its segment.
    pub anomaly_min_offset: usize,
    /// Smallest weighted distance between generated topologies, and the
    /// smallest reference flow share of a tripped line.
    pub min_distance: f64,
    pub noise_sigma_rel: f64,
    pub noise_floor: f64,
    pub loss_fraction: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon: 780,
            topology_count: 13,
            train_topologies: 10,
            tick_minutes: 1440.0 / 780.0,
            variant: LoadVariant::Small,
            small_alpha: 0.5,
            realistic_alpha: 1.0,
            realistic_amplitude: 0.3,
            known_events: None,
            anomaly_events: None,
            anomalies_per_segment: 1,
            anomaly_duration: 1,
            anomaly_min_offset: 20,
            min_distance: 0.01,
            noise_sigma_rel: 0.01,
            noise_floor: 0.01,
            loss_fraction: 0.02,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// No events, constant loads.
    pub fn stationary(horizon: usize) -> Self {
        Self {
            horizon,
            topology_count: 1,
            train_topologies: 1,
            known_events: Some(Vec::new()),
            anomaly_events: Some(Vec::new()),
            small_alpha: 0.0,
            ..Self::default()
        }
    }
}

/// A fully materialized scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub case: GridCase,
    pub config: ScenarioConfig,
    /// Per load (case order), per tick multiplier on the base demand.
    pub multipliers: Vec<Vec<f64>>,
    /// Known and anomaly events in tick order.
    pub events: Vec<TopologyEvent>,
    pub topology_id_per_tick: Vec<usize>,
    pub topologies: Vec<TopologySignature>,
    pub weights: TopologyWeights,
}

impl Scenario {
    pub fn known_change_ticks(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.events.iter().filter(|e| e.label == EventLabel::Known).map(|e| e.tick).collect();
        t.dedup();
        t
    }

    /// Ticks at which an unannounced outage starts.
    pub fn anomaly_ticks(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self
            .events
            .iter()
            .filter(|e| e.label == EventLabel::Anomaly && e.kind.is_outage())
            .map(|e| e.tick)
            .collect();
        t.dedup();
        t
    }
}

pub fn build_scenario(case: &GridCase, cfg: &ScenarioConfig) -> Result<Scenario> {
    if cfg.horizon < 2 {
        return Err(ScenarioError::Schedule(format!("horizon {} too short", cfg.horizon)));
    }
    let weights = TopologyWeights::reference(case)?;
    let segments = cfg.topology_count.max(1);
    let params = schedule::ScheduleParams {
        segments,
        segment_ticks: cfg.horizon / segments,
        min_distance: cfg.min_distance,
        loss_fraction: cfg.loss_fraction,
        anomalies_per_segment: cfg.anomalies_per_segment,
        anomaly_duration: cfg.anomaly_duration.max(1),
        anomaly_min_offset: cfg.anomaly_min_offset,
    };
    let mut rng = SimRng::derive(cfg.seed, 0x6576_656e_7473);
    let known = match &cfg.known_events {
        Some(ev) => ev.iter().map(|e| TopologyEvent { label: EventLabel::Known, ..*e }).collect(),
        None => schedule::generate_known_events(case, &weights, &params, &mut rng)?,
    };
    let anomalies = match &cfg.anomaly_events {
        Some(ev) => ev.iter().map(|e| TopologyEvent { label: EventLabel::Anomaly, ..*e }).collect(),
        None => schedule::generate_anomalies(case, &known, &weights, &params, &mut rng)?,
    };
    let mut events: Vec<TopologyEvent> = known.into_iter().chain(anomalies).collect();
    events.sort_by_key(|e| (e.tick, e.label == EventLabel::Anomaly));
    if let Some(e) = events.iter().find(|e| e.tick >= cfg.horizon) {
        return Err(ScenarioError::Event { event: e.to_string(), reason: format!("outside horizon {}", cfg.horizon) });
    }
    let known_ticks: Vec<usize> = events.iter().filter(|e| e.label == EventLabel::Known).map(|e| e.tick).collect();
    if let Some(e) = events.iter().find(|e| e.label == EventLabel::Anomaly && known_ticks.contains(&e.tick)) {
        return Err(ScenarioError::Event { event: e.to_string(), reason: "coincides with a known change".into() });
    }

    // Replay everything to validate, and the known events alone for topology ids.
    let mut full = case.clone();
    let mut announced = case.clone();
    let mut ids: HashMap<TopologySignature, usize> = HashMap::new();
    let mut topologies = vec![TopologySignature::of(case)];
    ids.insert(topologies[0].clone(), 0);
    let mut current = 0;
    let mut topology_id_per_tick = Vec::with_capacity(cfg.horizon);
    let mut next = 0;
    for tick in 0..cfg.horizon {
        while next < events.len() && events[next].tick == tick {
            let ev = &events[next];
            full = apply_event(&full, ev)
                .map_err(|e| ScenarioError::Event { event: ev.to_string(), reason: e.to_string() })?
                .case;
            if ev.label == EventLabel::Known {
                announced = apply_event(&announced, ev)?.case;
                let sig = TopologySignature::of(&announced);
                let n = ids.len();
                current = *ids.entry(sig.clone()).or_insert_with(|| {
                    topologies.push(sig);
                    n
                });
            }
            next += 1;
        }
        if events[..next].last().is_some_and(|e| e.tick == tick) {
            if let Some(island) = connectivity_check(&full).unservable().next() {
                let ev = events[..next].last().expect("event applied");
                return Err(ScenarioError::Event {
                    event: ev.to_string(),
                    reason: format!("island containing bus {} cannot be served", island.buses[0]),
                });
            }
        }
        topology_id_per_tick.push(current);
    }

    let multipliers = if cfg.small_alpha == 0.0 && cfg.variant == LoadVariant::Small {
        vec![vec![1.0; cfg.horizon]; case.loads.len()]
    } else {
        let alpha = match cfg.variant {
            LoadVariant::Small => cfg.small_alpha,
            LoadVariant::Realistic => cfg.realistic_alpha,
        };
        load_multipliers(case, cfg.variant, cfg.horizon, alpha, cfg.realistic_amplitude, cfg.seed)?
    };
    Ok(Scenario {
        case: case.clone(),
        config: cfg.clone(),
        multipliers,
        events,
        topology_id_per_tick,
        topologies,
        weights,
    })
}

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::dispatch::generation_dispatch;
use super::{Result, Scenario, ScenarioError, TopologySignature};
use crate::grid::{apply_event, BusId, GridCase};
use crate::powerflow::{branch_flows, solve_pf, PfOptions, PfStart};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Vmag,
    Pinj,
    Qinj,
    Pflow,
    Qflow,
    Imag,
}

impl SensorKind {
    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Vmag => "vmag",
            SensorKind::Pinj => "pinj",
            SensorKind::Qinj => "qinj",
            SensorKind::Pflow => "pflow",
            SensorKind::Qflow => "qflow",
            SensorKind::Imag => "imag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Vmag, Self::Pinj, Self::Qinj, Self::Pflow, Self::Qflow, Self::Imag]
            .into_iter()
            .find(|k| k.name() == s)
    }

    pub fn on_branch(self) -> bool {
        matches!(self, SensorKind::Pflow | SensorKind::Qflow | SensorKind::Imag)
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A bus sensor (element = bus id) or a branch sensor at the from end
/// (element = branch id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sensor {
    pub element: u32,
    pub kind: SensorKind,
}

/// Bus vmag/pinj/qinj for every bus, then branch pflow/qflow/imag for every
/// branch, in case order.
pub fn default_roster(case: &GridCase) -> Vec<Sensor> {
    let mut out = Vec::new();
    for kind in [SensorKind::Vmag, SensorKind::Pinj, SensorKind::Qinj] {
        out.extend(case.buses.iter().map(|b| Sensor { element: b.id, kind }));
    }
    for kind in [SensorKind::Pflow, SensorKind::Qflow, SensorKind::Imag] {
        out.extend(case.branches.iter().map(|b| Sensor { element: b.id, kind }));
    }
    out
}

/// One tick of readings, aligned with the stream's sensor roster.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    pub tick: usize,
    pub values: Vec<f64>,
    pub sigmas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub sensors: Vec<Sensor>,
    pub frames: Vec<MeasurementFrame>,
    pub anomaly_ticks: BTreeSet<usize>,
    pub known_change_ticks: BTreeSet<usize>,
    pub topology_id_per_tick: Vec<usize>,
    /// Topology ids below this are the fitting (train) part.
    pub train_topologies: usize,
    pub topologies: Vec<TopologySignature>,
}

impl LabeledStream {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_train(&self, tick: usize) -> bool {
        self.topology_id_per_tick[tick] < self.train_topologies
    }

    pub fn train_ticks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&t| self.is_train(t)).collect()
    }

    pub fn test_ticks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&t| !self.is_train(t)).collect()
    }

    /// Ticks x sensors matrix of readings.
    pub fn values(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.frames.len(), self.sensors.len()));
        for (mut row, f) in m.rows_mut().into_iter().zip(&self.frames) {
            row.iter_mut().zip(&f.values).for_each(|(d, s)| *d = *s);
        }
        m
    }

    pub fn topology(&self, tick: usize) -> &TopologySignature {
        &self.topologies[self.topology_id_per_tick[tick]]
    }
}

/// Per-tick loop: apply due events, scale loads, dispatch, solve (warm
/// started from the previous tick), read sensors and add Gaussian noise with
/// std `noise_sigma_rel * max(|truth|, noise_floor)`.
pub fn run_scenario(sc: &Scenario) -> Result<LabeledStream> {
    let cfg = &sc.config;
    let base = &sc.case;
    let sensors = default_roster(base);
    let gen_home: Vec<BusId> = base.generators.iter().map(|g| g.bus).collect();
    let load_home: Vec<BusId> = base.loads.iter().map(|l| l.bus).collect();
    let mut noise = SimRng::derive(cfg.seed, 0x6e6f_6973_65);
    let opts = PfOptions::default();

    let mut state = base.clone();
    let mut last_v: HashMap<BusId, (f64, f64)> = HashMap::new();
    let mut frames = Vec::with_capacity(cfg.horizon);
    let mut next = 0;
    for tick in 0..cfg.horizon {
        while next < sc.events.len() && sc.events[next].tick == tick {
            let out = apply_event(&state, &sc.events[next])?;
            if let Some(w) = out.warning {
                log::warn!("{w}");
            }
            state = out.case;
            next += 1;
        }
        for (load, (b, m)) in state.loads.iter_mut().zip(base.loads.iter().zip(&sc.multipliers)) {
            load.pd = b.pd * m[tick];
            load.qd = b.qd * m[tick];
        }
        let pg = generation_dispatch(&state, state.total_load(), cfg.loss_fraction)?;
        for (g, p) in state.generators.iter_mut().zip(pg) {
            g.pg = p;
        }
        let start = if last_v.is_empty() {
            PfStart::Flat
        } else {
            let (vm, va) = state
                .buses
                .iter()
                .map(|b| match last_v.get(&b.id) {
                    Some(&(m, a)) if m > 0.0 => (m, a),
                    _ => (1.0, 0.0),
                })
                .unzip();
            PfStart::Warm { vm, va }
        };
        let sol = solve_pf(&state, &start, &opts).map_err(|source| ScenarioError::Pf { tick, source })?;
        if !sol.converged {
            return Err(ScenarioError::Diverged { tick, mismatch: sol.max_mismatch });
        }
        last_v = sol.bus_ids.iter().zip(sol.vm.iter().zip(&sol.va)).map(|(&id, (&m, &a))| (id, (m, a))).collect();

        let idx = state.bus_index();
        let flows: HashMap<u32, _> = state.branches.iter().map(|b| b.id).zip(branch_flows(&state, &sol)).collect();
        let mut p_inj: HashMap<BusId, f64> = HashMap::new();
        let mut q_inj: HashMap<BusId, f64> = HashMap::new();
        for (k, home) in gen_home.iter().enumerate() {
            *p_inj.entry(*home).or_default() += sol.pg[k];
            *q_inj.entry(*home).or_default() += sol.qg[k];
        }
        for (l, home) in state.loads.iter().zip(&load_home) {
            *p_inj.entry(*home).or_default() -= l.pd;
            *q_inj.entry(*home).or_default() -= l.qd;
        }
        let mut values = Vec::with_capacity(sensors.len());
        let mut sigmas = Vec::with_capacity(sensors.len());
        for s in &sensors {
            let truth = match s.kind {
                SensorKind::Vmag => state.resolve_bus(s.element).map_or(0.0, |b| sol.vm[idx[&b]]),
                SensorKind::Pinj => p_inj.get(&s.element).copied().unwrap_or(0.0),
                SensorKind::Qinj => q_inj.get(&s.element).copied().unwrap_or(0.0),
                SensorKind::Pflow => flows.get(&s.element).map_or(0.0, |f| f.p_from),
                SensorKind::Qflow => flows.get(&s.element).map_or(0.0, |f| f.q_from),
                SensorKind::Imag => flows.get(&s.element).map_or(0.0, |f| f.i_from),
            };
            let sigma = cfg.noise_sigma_rel * truth.abs().max(cfg.noise_floor);
            let value = if sigma > 0.0 { truth + sigma * noise.normal() } else { truth };
            values.push(value);
            sigmas.push(sigma);
        }
        frames.push(MeasurementFrame { tick, values, sigmas });
    }
    Ok(LabeledStream {
        sensors,
        frames,
        anomaly_ticks: sc.anomaly_ticks().into_iter().collect(),
        known_change_ticks: sc.known_change_ticks().into_iter().collect(),
        topology_id_per_tick: sc.topology_id_per_tick.clone(),
        train_topologies: cfg.train_topologies,
        topologies: sc.topologies.clone(),
    })
}

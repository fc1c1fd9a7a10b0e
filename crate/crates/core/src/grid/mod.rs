//! Bus/branch network model with an optional node-breaker switch layer.
//!
//! All electrical quantities are per-unit on `base_mva`; angles are radians.
//! A [`GridCase`] is a plain value: topology mutations return a new case.

mod case_io;
mod topology;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use case_io::{bundled_case, bundled_case_names, load_case, load_case_file, serialize_case};
pub use topology::{
    apply_event, connectivity_check, topology_processor, EventOutcome, Island, IslandReport,
};

pub type BusId = u32;
pub type BranchId = u32;
pub type GenId = u32;
pub type LoadId = u32;
pub type SwitchId = u32;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid case: {0}")]
    Validation(String),
    #[error("conflicting slack: buses {0} and {1} would be merged")]
    ConflictingSlack(BusId, BusId),
    #[error("invalid event at tick {tick}: {reason}")]
    Event { tick: usize, reason: String },
    #[error("unknown case fixture `{0}`")]
    UnknownFixture(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, GridError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl BusKind {
    /// Precedence when buses are contracted: the survivor keeps the strongest kind.
    fn rank(self) -> u8 {
        match self {
            BusKind::Slack => 2,
            BusKind::Pv => 1,
            BusKind::Pq => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub vm: f64,
    pub va: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub gs: f64,
    pub bs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchState {
    Closed,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub tap: f64,
    pub shift: f64,
    /// Apparent-power rating; 0 means unlimited.
    pub rate_a: f64,
    pub status: SwitchState,
}

impl Branch {
    pub fn is_closed(&self) -> bool {
        self.status == SwitchState::Closed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenStatus {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    pub pg: f64,
    pub qg: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub v_set: f64,
    pub status: GenStatus,
    pub cost_c2: f64,
    pub cost_c1: f64,
    pub cost_c0: f64,
}

impl Generator {
    pub fn is_on(&self) -> bool {
        self.status == GenStatus::On
    }

    pub fn cost(&self, pg: f64) -> f64 {
        self.cost_c2 * pg * pg + self.cost_c1 * pg + self.cost_c0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadStyle {
    Constant,
    Smooth,
    Oscillating,
    Abrupt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub id: LoadId,
    pub bus: BusId,
    pub pd: f64,
    pub qd: f64,
    pub group: u32,
    pub style: LoadStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchLink {
    pub id: SwitchId,
    pub bus_a: BusId,
    pub bus_b: BusId,
    pub status: SwitchState,
}

/// Which end of a branch was re-homed by a merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchEnd {
    From,
    To,
}

/// Everything needed to undo one bus merge exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeRecord {
    pub switch: SwitchLink,
    pub switch_index: usize,
    pub survivor: Bus,
    pub absorbed: Bus,
    /// Positions (`switch_index`, `absorbed_index`, internal branch slots)
    /// index the element order with every merge undone.
    pub absorbed_index: usize,
    pub branch_ends: Vec<(BranchId, BranchEnd)>,
    pub generators: Vec<GenId>,
    pub loads: Vec<LoadId>,
    /// Branches that became internal to the merged bus, with their positions.
    pub internal_branches: Vec<(usize, Branch)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCase {
    pub base_mva: f64,
    #[serde(rename = "bus")]
    pub buses: Vec<Bus>,
    #[serde(rename = "branch", default)]
    pub branches: Vec<Branch>,
    #[serde(rename = "generator", default)]
    pub generators: Vec<Generator>,
    #[serde(rename = "load", default)]
    pub loads: Vec<Load>,
    #[serde(rename = "switch", default, skip_serializing_if = "Vec::is_empty")]
    pub switches: Vec<SwitchLink>,
    #[serde(rename = "merge", default, skip_serializing_if = "Vec::is_empty")]
    pub merges: Vec<MergeRecord>,
}

impl GridCase {
    pub fn bus_index(&self) -> HashMap<BusId, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn generator(&self, id: GenId) -> Option<&Generator> {
        self.generators.iter().find(|g| g.id == id)
    }

    pub fn switch(&self, id: SwitchId) -> Option<&SwitchLink> {
        self.switches.iter().find(|s| s.id == id)
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn online_generators(&self) -> impl Iterator<Item = &Generator> {
        self.generators.iter().filter(|g| g.is_on())
    }

    pub fn total_load(&self) -> f64 {
        self.loads.iter().map(|l| l.pd).sum()
    }

    /// The bus a (possibly absorbed) bus id currently lives in.
    pub fn resolve_bus(&self, id: BusId) -> Option<BusId> {
        let mut cur = id;
        // Merge records form a forest; follow absorbed -> survivor links.
        for _ in 0..=self.merges.len() {
            if self.buses.iter().any(|b| b.id == cur) {
                return Some(cur);
            }
            match self.merges.iter().find(|m| m.absorbed.id == cur) {
                Some(m) => cur = m.survivor.id,
                None => return None,
            }
        }
        None
    }

    /// Distinct load groups in ascending order.
    pub fn load_groups(&self) -> Vec<u32> {
        let mut g: Vec<u32> = self.loads.iter().map(|l| l.group).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Check every structural invariant, including one slack per energized island.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(GridError::Validation("base_mva must be positive".into()));
        }
        let idx = self.bus_index();
        if idx.len() != self.buses.len() {
            return Err(GridError::Validation("duplicate bus id".into()));
        }
        for b in &self.buses {
            if !(b.v_min < b.v_max) {
                return Err(GridError::Validation(format!("bus {}: v_min must be below v_max", b.id)));
            }
            if !(b.vm > 0.0) {
                return Err(GridError::Validation(format!("bus {}: vm must be positive", b.id)));
            }
        }
        let unknown = |what: &str, id: u32, bus: BusId| {
            GridError::Validation(format!("{what} {id} references unknown bus {bus}"))
        };
        check_unique("branch", self.branches.iter().map(|b| b.id))?;
        for br in &self.branches {
            for bus in [br.from_bus, br.to_bus] {
                if !idx.contains_key(&bus) {
                    return Err(unknown("branch", br.id, bus));
                }
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(GridError::Validation(format!("branch {}: zero impedance", br.id)));
            }
            if !(br.tap > 0.0) {
                return Err(GridError::Validation(format!("branch {}: tap must be positive", br.id)));
            }
        }
        check_unique("generator", self.generators.iter().map(|g| g.id))?;
        for g in &self.generators {
            if !idx.contains_key(&g.bus) {
                return Err(unknown("generator", g.id, g.bus));
            }
            if g.p_min > g.p_max || g.q_min > g.q_max {
                return Err(GridError::Validation(format!("generator {}: inverted limits", g.id)));
            }
        }
        check_unique("load", self.loads.iter().map(|l| l.id))?;
        for l in &self.loads {
            if !idx.contains_key(&l.bus) {
                return Err(unknown("load", l.id, l.bus));
            }
        }
        check_unique("switch", self.switches.iter().map(|s| s.id))?;
        for s in &self.switches {
            for bus in [s.bus_a, s.bus_b] {
                if !idx.contains_key(&bus) {
                    return Err(unknown("switch", s.id, bus));
                }
            }
            if s.bus_a == s.bus_b {
                return Err(GridError::Validation(format!("switch {}: bus_a equals bus_b", s.id)));
            }
        }
        for island in connectivity_check(self).islands {
            let energized = island.has_load || island.generator_count > 0;
            if energized && island.slack_count != 1 {
                return Err(GridError::Validation(format!(
                    "island containing bus {} has {} slack buses (expected 1)",
                    island.buses[0], island.slack_count
                )));
            }
        }
        Ok(())
    }
}

fn check_unique(what: &str, ids: impl Iterator<Item = u32>) -> Result<()> {
    let mut seen = BTreeMap::new();
    for id in ids {
        if seen.insert(id, ()).is_some() {
            return Err(GridError::Validation(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LineOpen,
    LineClose,
    BusSplit,
    BusMerge,
    GenOn,
    GenOff,
}

impl EventKind {
    /// Events that take an element out of service.
    pub fn is_outage(self) -> bool {
        matches!(self, EventKind::LineOpen | EventKind::GenOff)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::LineOpen => "line_open",
            EventKind::LineClose => "line_close",
            EventKind::BusSplit => "bus_split",
            EventKind::BusMerge => "bus_merge",
            EventKind::GenOn => "gen_on",
            EventKind::GenOff => "gen_off",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventLabel {
    Known,
    Anomaly,
}

/// A timestamped status change. `target` is a branch id for line events, a
/// switch id for bus events and a generator id for generator events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyEvent {
    pub tick: usize,
    pub kind: EventKind,
    pub target: u32,
    pub label: EventLabel,
}

impl TopologyEvent {
    pub fn new(tick: usize, kind: EventKind, target: u32, label: EventLabel) -> Self {
        Self { tick, kind, target, label }
    }
}

impl fmt::Display for TopologyEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) at tick {}", self.kind, self.target, self.tick)
    }
}

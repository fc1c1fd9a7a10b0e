use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::dispatch::generation_dispatch;
use super::{Result, ScenarioError};
use crate::grid::{
    apply_event, connectivity_check, BranchId, EventKind, EventLabel, GenId, GridCase, SwitchId,
    TopologyEvent,
};
use crate::powerflow::{branch_flows, solve_pf, PfOptions, PfSolution, PfStart};
use crate::rng::SimRng;

/// Status of every switchable element; two cases with equal signatures have
/// the same bus-branch topology.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TopologySignature {
    pub open_branches: BTreeSet<BranchId>,
    pub merged_switches: BTreeSet<SwitchId>,
    pub offline_generators: BTreeSet<GenId>,
}

impl TopologySignature {
    /// Branches absorbed into a merged bus count as open.
    pub fn of(case: &GridCase) -> Self {
        let mut open: BTreeSet<BranchId> = case.branches.iter().filter(|b| !b.is_closed()).map(|b| b.id).collect();
        for m in &case.merges {
            open.extend(m.internal_branches.iter().map(|(_, b)| b.id));
        }
        Self {
            open_branches: open,
            merged_switches: case.merges.iter().map(|m| m.switch.id).collect(),
            offline_generators: case.generators.iter().filter(|g| !g.is_on()).map(|g| g.id).collect(),
        }
    }
}

/// Per-element sensitivity weights used to compare topologies: each branch
/// gets its share of total apparent-power flow in a reference solution;
/// a switch takes the weight of a branch joining the same buses, or the
/// largest branch weight if none does; a generator takes its output share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyWeights {
    pub branch: HashMap<BranchId, f64>,
    pub switch: HashMap<SwitchId, f64>,
    pub generator: HashMap<GenId, f64>,
}

impl TopologyWeights {
    pub fn from_solution(case: &GridCase, sol: &PfSolution) -> Self {
        let flows = branch_flows(case, sol);
        let mags: Vec<f64> = flows.iter().map(|f| f.s_from().max(f.s_to())).collect();
        let total: f64 = mags.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let branch: HashMap<BranchId, f64> = case.branches.iter().zip(&mags).map(|(b, m)| (b.id, m / total)).collect();
        let max_w = branch.values().cloned().fold(0.0, f64::max);
        let switch = case
            .switches
            .iter()
            .map(|s| {
                let parallel = case
                    .branches
                    .iter()
                    .filter(|b| (b.from_bus, b.to_bus) == (s.bus_a, s.bus_b) || (b.from_bus, b.to_bus) == (s.bus_b, s.bus_a))
                    .map(|b| branch[&b.id])
                    .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w))));
                (s.id, parallel.unwrap_or(max_w))
            })
            .collect();
        let gen_total: f64 = sol.pg.iter().map(|p| p.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let generator = case.generators.iter().zip(&sol.pg).map(|(g, p)| (g.id, p.abs() / gen_total)).collect();
        Self { branch, switch, generator }
    }

    /// Weights from a flat-start solve of `case` as given.
    pub fn reference(case: &GridCase) -> Result<Self> {
        let sol = solve_pf(case, &PfStart::Flat, &PfOptions::default()).map_err(|e| ScenarioError::Schedule(e.to_string()))?;
        if !sol.converged {
            return Err(ScenarioError::Schedule("reference power flow did not converge".into()));
        }
        Ok(Self::from_solution(case, &sol))
    }

    /// Weighted size of the symmetric difference between two topologies.
    pub fn distance(&self, a: &TopologySignature, b: &TopologySignature) -> f64 {
        let sum = |x: &BTreeSet<u32>, y: &BTreeSet<u32>, w: &HashMap<u32, f64>| -> f64 {
            x.symmetric_difference(y).map(|id| w.get(id).copied().unwrap_or(0.0)).sum()
        };
        sum(&a.open_branches, &b.open_branches, &self.branch)
            + sum(&a.merged_switches, &b.merged_switches, &self.switch)
            + sum(&a.offline_generators, &b.offline_generators, &self.generator)
    }
}

/// Expected daily event counts for a case, scaled from field observations of
/// 46 bus splits/merges per ~20,000 buses and 137 line status changes per
/// ~17,000 lines in 24 hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRates {
    pub bus_ops_per_day: f64,
    pub line_changes_per_day: f64,
}

pub const OBSERVED_BUS_OPS: f64 = 46.0;
pub const OBSERVED_BUSES: f64 = 20_000.0;
pub const OBSERVED_LINE_CHANGES: f64 = 137.0;
pub const OBSERVED_LINES: f64 = 17_000.0;

pub fn event_rates(case: &GridCase) -> EventRates {
    EventRates {
        bus_ops_per_day: OBSERVED_BUS_OPS / OBSERVED_BUSES * case.n_buses() as f64,
        line_changes_per_day: OBSERVED_LINE_CHANGES / OBSERVED_LINES * case.branches.len() as f64,
    }
}

/// Poisson-sampled event times over `horizon` ticks of `tick_minutes` each.
/// Line events alternate open/close per line; bus events alternate merge/split
/// per switch. Statuses are not checked against the case.
pub fn random_schedule(case: &GridCase, horizon: usize, tick_minutes: f64, seed: u64) -> Vec<TopologyEvent> {
    let rates = event_rates(case);
    let days = horizon as f64 * tick_minutes / 1440.0;
    let mut rng = SimRng::derive(seed, 0x7261_7465);
    let mut events = Vec::new();
    let mut line_open: HashMap<BranchId, bool> = HashMap::new();
    let n_line = rng.poisson(rates.line_changes_per_day * days);
    let n_bus = rng.poisson(rates.bus_ops_per_day * days);
    for _ in 0..n_line {
        if case.branches.is_empty() {
            break;
        }
        let tick = rng.below(horizon);
        let id = case.branches[rng.below(case.branches.len())].id;
        events.push((tick, id, true));
    }
    for _ in 0..n_bus {
        if case.switches.is_empty() {
            break;
        }
        let tick = rng.below(horizon);
        let id = case.switches[rng.below(case.switches.len())].id;
        events.push((tick, id, false));
    }
    events.sort_by_key(|e| e.0);
    let mut merged: HashMap<SwitchId, bool> = HashMap::new();
    events
        .into_iter()
        .map(|(tick, id, is_line)| {
            let kind = if is_line {
                let open = line_open.entry(id).or_insert(false);
                *open = !*open;
                if *open { EventKind::LineOpen } else { EventKind::LineClose }
            } else {
                let m = merged.entry(id).or_insert(false);
                *m = !*m;
                if *m { EventKind::BusMerge } else { EventKind::BusSplit }
            };
            TopologyEvent::new(tick, kind, id, EventLabel::Known)
        })
        .collect()
}

/// Every island is servable and only one carries injections.
pub fn is_operable(case: &GridCase) -> bool {
    let report = connectivity_check(case);
    report.unservable().count() == 0 && report.islands.iter().filter(|i| i.is_energized()).count() == 1
}

/// Power flow at the case's own loads with proportional dispatch.
pub fn base_solution(case: &GridCase, loss_fraction: f64) -> Option<PfSolution> {
    let mut c = case.clone();
    let pg = generation_dispatch(&c, c.total_load(), loss_fraction).ok()?;
    for (g, p) in c.generators.iter_mut().zip(pg) {
        g.pg = p;
    }
    let sol = solve_pf(&c, &PfStart::Flat, &PfOptions::default()).ok()?;
    sol.converged.then_some(sol)
}

pub(crate) struct ScheduleParams {
    pub segments: usize,
    pub segment_ticks: usize,
    pub min_distance: f64,
    pub loss_fraction: f64,
    pub anomalies_per_segment: usize,
    pub anomaly_duration: usize,
    pub anomaly_min_offset: usize,
}

fn candidate_events(state: &GridCase, tick: usize, bus_op: bool, reopened: &[BranchId]) -> Vec<TopologyEvent> {
    let known = |kind, id| TopologyEvent::new(tick, kind, id, EventLabel::Known);
    if bus_op {
        let mut c: Vec<_> = state.switches.iter().map(|s| known(EventKind::BusMerge, s.id)).collect();
        c.extend(state.merges.iter().map(|m| known(EventKind::BusSplit, m.switch.id)));
        c
    } else {
        let mut c: Vec<_> = state.branches.iter().filter(|b| b.is_closed()).map(|b| known(EventKind::LineOpen, b.id)).collect();
        c.extend(reopened.iter().map(|&id| known(EventKind::LineClose, id)));
        c
    }
}

/// Known topology changes at every segment boundary such that each segment
/// has a distinct, operable, solvable topology at least `min_distance` away
/// from every earlier one. Bus operations are drawn with their share of the
/// observed event rates.
pub(crate) fn generate_known_events(
    case: &GridCase,
    weights: &TopologyWeights,
    p: &ScheduleParams,
    rng: &mut SimRng,
) -> Result<Vec<TopologyEvent>> {
    let rates = event_rates(case);
    let p_bus = if case.switches.is_empty() {
        0.0
    } else {
        rates.bus_ops_per_day / (rates.bus_ops_per_day + rates.line_changes_per_day)
    };
    let mut state = case.clone();
    let mut seen = vec![TopologySignature::of(case)];
    let mut opened: Vec<BranchId> = Vec::new();
    let mut events = Vec::new();
    for s in 1..p.segments {
        let tick = s * p.segment_ticks;
        let bus_first = rng.uniform() < p_bus;
        let mut chosen = None;
        for bus_op in [bus_first, !bus_first] {
            let mut cands = candidate_events(&state, tick, bus_op, &opened);
            rng.shuffle(&mut cands);
            for ev in cands {
                let Ok(out) = apply_event(&state, &ev) else { continue };
                let sig = TopologySignature::of(&out.case);
                if seen.iter().any(|old| weights.distance(old, &sig) < p.min_distance) {
                    continue;
                }
                if !is_operable(&out.case) || base_solution(&out.case, p.loss_fraction).is_none() {
                    continue;
                }
                chosen = Some((ev, out.case, sig));
                break;
            }
            if chosen.is_some() {
                break;
            }
        }
        let (ev, next, sig) = chosen.ok_or_else(|| {
            ScenarioError::Schedule(format!("no admissible topology change for segment {s}"))
        })?;
        match ev.kind {
            EventKind::LineOpen => opened.push(ev.target),
            EventKind::LineClose => opened.retain(|&b| b != ev.target),
            _ => {}
        }
        log::debug!("segment {s}: {ev}");
        events.push(ev);
        seen.push(sig);
        state = next;
    }
    Ok(events)
}

/// Unannounced line trips inside each segment, reclosed after
/// `anomaly_duration` ticks. Tripped lines carry at least `min_distance` of
/// the reference flow so the trip is physically visible.
pub(crate) fn generate_anomalies(
    case: &GridCase,
    known: &[TopologyEvent],
    weights: &TopologyWeights,
    p: &ScheduleParams,
    rng: &mut SimRng,
) -> Result<Vec<TopologyEvent>> {
    let mut events = Vec::new();
    let mut state = case.clone();
    for s in 0..p.segments {
        let start = s * p.segment_ticks;
        for ev in known.iter().filter(|e| e.tick == start) {
            state = apply_event(&state, ev)?.case;
        }
        let last = p.segment_ticks.saturating_sub(p.anomaly_duration + 2);
        if p.anomalies_per_segment == 0 || last <= p.anomaly_min_offset {
            continue;
        }
        let mut cands: Vec<BranchId> = state
            .branches
            .iter()
            .filter(|b| b.is_closed() && weights.branch.get(&b.id).copied().unwrap_or(0.0) >= p.min_distance)
            .map(|b| b.id)
            .collect();
        rng.shuffle(&mut cands);
        let mut offsets: Vec<usize> = Vec::new();
        for id in cands {
            if offsets.len() == p.anomalies_per_segment {
                break;
            }
            let trip = TopologyEvent::new(0, EventKind::LineOpen, id, EventLabel::Anomaly);
            let Ok(out) = apply_event(&state, &trip) else { continue };
            if !is_operable(&out.case) || base_solution(&out.case, p.loss_fraction).is_none() {
                continue;
            }
            let offset = loop {
                let o = p.anomaly_min_offset + rng.below(last - p.anomaly_min_offset);
                if offsets.iter().all(|&x| x.abs_diff(o) > p.anomaly_duration + 2) {
                    break o;
                }
            };
            offsets.push(offset);
            let tick = start + offset;
            events.push(TopologyEvent::new(tick, EventKind::LineOpen, id, EventLabel::Anomaly));
            events.push(TopologyEvent::new(tick + p.anomaly_duration, EventKind::LineClose, id, EventLabel::Anomaly));
        }
    }
    events.sort_by_key(|e| e.tick);
    Ok(events)
}

use std::collections::{BTreeMap, HashMap};

use log::warn;

use super::{
    BusId, BusKind, BranchEnd, EventKind, GenStatus, GridCase, GridError, MergeRecord, Result,
    SwitchLink, SwitchState, TopologyEvent,
};

/// One connected component over closed branches and closed switches.
#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    pub buses: Vec<BusId>,
    pub has_load: bool,
    pub generator_count: usize,
    pub online_generator_count: usize,
    pub slack_count: usize,
    /// Load present but no online generator or no slack bus to balance it.
    pub unservable: bool,
}

impl Island {
    pub fn is_energized(&self) -> bool {
        self.has_load || self.online_generator_count > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IslandReport {
    pub islands: Vec<Island>,
}

impl IslandReport {
    pub fn unservable(&self) -> impl Iterator<Item = &Island> {
        self.islands.iter().filter(|i| i.unservable)
    }

    pub fn island_of(&self, bus: BusId) -> Option<usize> {
        self.islands.iter().position(|i| i.buses.contains(&bus))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so component labels are order-stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub fn connectivity_check(case: &GridCase) -> IslandReport {
    let idx = case.bus_index();
    let mut uf = UnionFind::new(case.buses.len());
    let closed_branches = case
        .branches
        .iter()
        .filter(|b| b.is_closed())
        .map(|b| (b.from_bus, b.to_bus));
    let closed_switches = case
        .switches
        .iter()
        .filter(|s| s.status == SwitchState::Closed)
        .map(|s| (s.bus_a, s.bus_b));
    for (a, b) in closed_branches.chain(closed_switches) {
        if let (Some(&ia), Some(&ib)) = (idx.get(&a), idx.get(&b)) {
            uf.union(ia, ib);
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..case.buses.len() {
        by_root.entry(uf.find(i)).or_default().push(i);
    }
    let islands = by_root
        .into_values()
        .map(|members| {
            let ids: Vec<BusId> = members.iter().map(|&i| case.buses[i].id).collect();
            let contains = |bus: BusId| ids.contains(&bus);
            let has_load = case.loads.iter().any(|l| contains(l.bus));
            let generator_count = case.generators.iter().filter(|g| contains(g.bus)).count();
            let online_generator_count = case
                .generators
                .iter()
                .filter(|g| g.is_on() && contains(g.bus))
                .count();
            let slack_count = members
                .iter()
                .filter(|&&i| case.buses[i].kind == BusKind::Slack)
                .count();
            let mut buses = ids.clone();
            buses.sort_unstable();
            Island {
                buses,
                has_load,
                generator_count,
                online_generator_count,
                slack_count,
                unservable: has_load && (online_generator_count == 0 || slack_count == 0),
            }
        })
        .collect();
    IslandReport { islands }
}

/// Contract every set of buses joined by closed switches into one bus,
/// producing a bus-branch model. Closed switches and branches internal to a
/// contracted set are removed; open switches are kept (re-homed).
pub fn topology_processor(case: &GridCase, switches: &[SwitchLink]) -> Result<GridCase> {
    let idx = case.bus_index();
    let mut uf = UnionFind::new(case.buses.len());
    for s in switches {
        let (Some(&a), Some(&b)) = (idx.get(&s.bus_a), idx.get(&s.bus_b)) else {
            return Err(GridError::Validation(format!(
                "switch {} references unknown bus",
                s.id
            )));
        };
        if s.status == SwitchState::Closed {
            uf.union(a, b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..case.buses.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut out = case.clone();
    let mut rehome: HashMap<BusId, BusId> = HashMap::new();
    for members in groups.values().filter(|m| m.len() > 1) {
        let slacks: Vec<BusId> = members
            .iter()
            .map(|&i| &case.buses[i])
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        if slacks.len() > 1 {
            return Err(GridError::ConflictingSlack(slacks[0], slacks[1]));
        }
        let survivor = members
            .iter()
            .map(|&i| &case.buses[i])
            .max_by(|a, b| a.kind.rank().cmp(&b.kind.rank()).then(b.id.cmp(&a.id)))
            .map(|b| b.id)
            .expect("non-empty group");
        for &i in members {
            let absorbed = case.buses[i].id;
            if absorbed != survivor {
                contract(&mut out, survivor, absorbed);
                rehome.insert(absorbed, survivor);
            }
        }
    }
    let contracted = |s: &SwitchLink| s.status == SwitchState::Closed;
    let closed: Vec<u32> = switches.iter().filter(|s| contracted(s)).map(|s| s.id).collect();
    out.switches.retain(|s| !closed.contains(&s.id));
    for s in &mut out.switches {
        s.bus_a = rehome.get(&s.bus_a).copied().unwrap_or(s.bus_a);
        s.bus_b = rehome.get(&s.bus_b).copied().unwrap_or(s.bus_b);
    }
    out.switches.retain(|s| s.bus_a != s.bus_b);
    Ok(out)
}

/// Merge `absorbed` into `survivor`, returning the undo record. The switch
/// fields are placeholders for callers to fill in.
fn contract(case: &mut GridCase, survivor: BusId, absorbed: BusId) -> MergeRecord {
    let absorbed_index = case.buses.iter().position(|b| b.id == absorbed).expect("absorbed bus exists");
    let absorbed_bus = case.buses.remove(absorbed_index);
    let surv = case.buses.iter_mut().find(|b| b.id == survivor).expect("survivor bus exists");
    let survivor_snapshot = surv.clone();
    surv.gs += absorbed_bus.gs;
    surv.bs += absorbed_bus.bs;
    if absorbed_bus.kind.rank() > surv.kind.rank() {
        surv.kind = absorbed_bus.kind;
    }

    let mut internal = Vec::new();
    let mut branch_ends = Vec::new();
    let mut kept = Vec::with_capacity(case.branches.len());
    for (pos, mut br) in std::mem::take(&mut case.branches).into_iter().enumerate() {
        let ends = (br.from_bus, br.to_bus);
        if ends == (absorbed, survivor) || ends == (survivor, absorbed) {
            internal.push((pos, br));
            continue;
        }
        if br.from_bus == absorbed {
            br.from_bus = survivor;
            branch_ends.push((br.id, BranchEnd::From));
        }
        if br.to_bus == absorbed {
            br.to_bus = survivor;
            branch_ends.push((br.id, BranchEnd::To));
        }
        kept.push(br);
    }
    case.branches = kept;

    let mut generators = Vec::new();
    for g in case.generators.iter_mut().filter(|g| g.bus == absorbed) {
        g.bus = survivor;
        generators.push(g.id);
    }
    let mut loads = Vec::new();
    for l in case.loads.iter_mut().filter(|l| l.bus == absorbed) {
        l.bus = survivor;
        loads.push(l.id);
    }
    let record = MergeRecord {
        switch: SwitchLink {
            id: 0,
            bus_a: survivor,
            bus_b: absorbed,
            status: SwitchState::Closed,
        },
        switch_index: 0,
        survivor: survivor_snapshot,
        absorbed: absorbed_bus,
        absorbed_index,
        branch_ends,
        generators,
        loads,
        internal_branches: internal,
    };
    record
}

/// Result of applying an event: the new case and a warning for no-op events.
#[derive(Debug, Clone)]
pub struct EventOutcome {
    pub case: GridCase,
    pub warning: Option<String>,
}

pub fn apply_event(case: &GridCase, event: &TopologyEvent) -> Result<EventOutcome> {
    let err = |reason: String| GridError::Event { tick: event.tick, reason };
    let mut out = case.clone();
    let mut warning = None;
    match event.kind {
        EventKind::LineOpen | EventKind::LineClose => {
            let want = if event.kind == EventKind::LineOpen {
                SwitchState::Open
            } else {
                SwitchState::Closed
            };
            let br = out
                .branches
                .iter_mut()
                .find(|b| b.id == event.target)
                .ok_or_else(|| err(format!("unknown branch {}", event.target)))?;
            if br.status == want {
                warning = Some(format!("{event}: branch already in requested state"));
            }
            br.status = want;
        }
        EventKind::GenOn | EventKind::GenOff => {
            let want = if event.kind == EventKind::GenOn { GenStatus::On } else { GenStatus::Off };
            let g = out
                .generators
                .iter_mut()
                .find(|g| g.id == event.target)
                .ok_or_else(|| err(format!("unknown generator {}", event.target)))?;
            if g.status == want {
                warning = Some(format!("{event}: generator already in requested state"));
            }
            g.status = want;
        }
        EventKind::BusMerge => {
            if out.merges.iter().any(|m| m.switch.id == event.target) {
                warning = Some(format!("{event}: switch already merged"));
            } else {
                out = merge(&out, event.target).map_err(|e| match e {
                    GridError::Validation(reason) => err(reason),
                    other => other,
                })?;
            }
        }
        EventKind::BusSplit => {
            out = split(&out, event.target).map_err(|e| match e {
                GridError::Validation(reason) => err(reason),
                other => other,
            })?;
        }
    }
    if let Some(w) = &warning {
        warn!("{w}");
    }
    Ok(EventOutcome { case: out, warning })
}

fn merge(case: &GridCase, switch_id: u32) -> Result<GridCase> {
    let switch_index = case
        .switches
        .iter()
        .position(|s| s.id == switch_id)
        .ok_or_else(|| GridError::Validation(format!("unknown switch {switch_id}")))?;
    let switch = case.switches[switch_index].clone();
    let a = case
        .resolve_bus(switch.bus_a)
        .ok_or_else(|| GridError::Validation(format!("switch {switch_id}: bus {} missing", switch.bus_a)))?;
    let b = case
        .resolve_bus(switch.bus_b)
        .ok_or_else(|| GridError::Validation(format!("switch {switch_id}: bus {} missing", switch.bus_b)))?;
    if a == b {
        return Err(GridError::Validation(format!(
            "switch {switch_id}: buses already share a node"
        )));
    }
    let (ba, bb) = (case.bus(a).expect("resolved"), case.bus(b).expect("resolved"));
    if ba.kind == BusKind::Slack && bb.kind == BusKind::Slack {
        return Err(GridError::ConflictingSlack(a, b));
    }
    let (survivor, absorbed) = if bb.kind.rank() > ba.kind.rank() { (b, a) } else { (a, b) };
    let orders = ElementOrders::of(case);
    let mut out = case.clone();
    out.switches.remove(switch_index);
    let mut record = contract(&mut out, survivor, absorbed);
    record.switch = SwitchLink {
        status: SwitchState::Open,
        ..switch
    };
    // Store positions in the fully split order so splits may come in any order.
    record.switch_index = orders.switches.rank(switch_id);
    record.absorbed_index = orders.buses.rank(absorbed);
    for (pos, br) in &mut record.internal_branches {
        *pos = orders.branches.rank(br.id);
    }
    out.merges.push(record);
    Ok(out)
}

fn split(case: &GridCase, switch_id: u32) -> Result<GridCase> {
    let pos = case
        .merges
        .iter()
        .rposition(|m| m.switch.id == switch_id)
        .ok_or_else(|| GridError::Validation(format!("switch {switch_id} was never merged")))?;
    let record = &case.merges[pos];
    let survivor = record.survivor.id;
    if case.merges[pos + 1..]
        .iter()
        .any(|m| m.survivor.id == survivor || m.absorbed.id == survivor)
    {
        return Err(GridError::Validation(format!(
            "switch {switch_id}: a later merge involves bus {survivor}; split that first"
        )));
    }
    let orders = ElementOrders::of(case);
    let mut out = case.clone();
    let record = out.merges.remove(pos);
    let absorbed = record.absorbed.id;
    if let Some(b) = out.buses.iter_mut().find(|b| b.id == survivor) {
        *b = record.survivor.clone();
    }
    let at = orders.buses.position(out.buses.iter().map(|b| b.id), absorbed);
    out.buses.insert(at, record.absorbed.clone());
    for (id, end) in &record.branch_ends {
        if let Some(br) = out.branches.iter_mut().find(|b| b.id == *id) {
            match end {
                BranchEnd::From => br.from_bus = absorbed,
                BranchEnd::To => br.to_bus = absorbed,
            }
        }
    }
    for (_, br) in &record.internal_branches {
        let at = orders.branches.position(out.branches.iter().map(|b| b.id), br.id);
        out.branches.insert(at, br.clone());
    }
    for g in out.generators.iter_mut().filter(|g| record.generators.contains(&g.id)) {
        g.bus = absorbed;
    }
    for l in out.loads.iter_mut().filter(|l| record.loads.contains(&l.id)) {
        l.bus = absorbed;
    }
    let at = orders.switches.position(out.switches.iter().map(|s| s.id), record.switch.id);
    out.switches.insert(at, record.switch);
    Ok(out)
}

/// Element ids in the order they would have with every recorded merge undone.
struct FullOrder(HashMap<u32, usize>);

impl FullOrder {
    fn new(mut ids: Vec<u32>, mut removed: Vec<(usize, u32)>) -> Self {
        removed.sort_unstable();
        for (pos, id) in removed {
            ids.insert(pos.min(ids.len()), id);
        }
        Self(ids.into_iter().enumerate().map(|(i, id)| (id, i)).collect())
    }

    fn rank(&self, id: u32) -> usize {
        self.0[&id]
    }

    /// Where `target` goes so that `current` stays ordered by rank.
    fn position(&self, current: impl Iterator<Item = u32>, target: u32) -> usize {
        let t = self.rank(target);
        current.filter(|id| self.0.get(id).is_some_and(|&r| r < t)).count()
    }
}

struct ElementOrders {
    buses: FullOrder,
    branches: FullOrder,
    switches: FullOrder,
}

impl ElementOrders {
    fn of(case: &GridCase) -> Self {
        let m = &case.merges;
        Self {
            buses: FullOrder::new(
                case.buses.iter().map(|b| b.id).collect(),
                m.iter().map(|r| (r.absorbed_index, r.absorbed.id)).collect(),
            ),
            branches: FullOrder::new(
                case.branches.iter().map(|b| b.id).collect(),
                m.iter().flat_map(|r| r.internal_branches.iter().map(|(p, b)| (*p, b.id))).collect(),
            ),
            switches: FullOrder::new(
                case.switches.iter().map(|s| s.id).collect(),
                m.iter().map(|r| (r.switch_index, r.switch.id)).collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{bundled_case, load_case, EventLabel};
    use crate::powerflow::build_ybus;
    use crate::testutil::TWO_BUS;
    use proptest::prelude::*;

    fn ev(kind: EventKind, target: u32) -> TopologyEvent {
        TopologyEvent::new(0, kind, target, EventLabel::Known)
    }

    #[test]
    fn line_open_toggles_status() {
        let case = bundled_case("case30").unwrap();
        let out = apply_event(&case, &ev(EventKind::LineOpen, 7)).unwrap();
        assert_eq!(out.case.branch(7).unwrap().status, SwitchState::Open);
        assert!(out.warning.is_none());
        let again = apply_event(&out.case, &ev(EventKind::LineOpen, 7)).unwrap();
        assert!(again.warning.is_some());
        assert_eq!(again.case, out.case);
    }

    #[test]
    fn merge_then_split_restores_case() {
        let case = bundled_case("case30").unwrap();
        for sw in [1, 2, 3, 4] {
            let merged = apply_event(&case, &ev(EventKind::BusMerge, sw)).unwrap().case;
            assert_eq!(merged.buses.len(), 29);
            let split = apply_event(&merged, &ev(EventKind::BusSplit, sw)).unwrap().case;
            assert_eq!(split, case);
            assert_eq!(build_ybus(&split), build_ybus(&case));
        }
    }

    #[test]
    fn nested_merges_unwind() {
        let case = bundled_case("case30").unwrap();
        let mut cur = case.clone();
        for sw in [1, 4, 2] {
            cur = apply_event(&cur, &ev(EventKind::BusMerge, sw)).unwrap().case;
        }
        // Switch 1 joins 3-4 and switch 4 joins 6-8; neither involves the other.
        cur = apply_event(&cur, &ev(EventKind::BusSplit, 1)).unwrap().case;
        cur = apply_event(&cur, &ev(EventKind::BusSplit, 2)).unwrap().case;
        cur = apply_event(&cur, &ev(EventKind::BusSplit, 4)).unwrap().case;
        assert_eq!(build_ybus(&cur), build_ybus(&case));
        assert_eq!(cur.buses, case.buses);
    }

    #[test]
    fn split_without_merge_is_an_error() {
        let case = bundled_case("case30").unwrap();
        let err = apply_event(&case, &ev(EventKind::BusSplit, 2)).unwrap_err();
        assert!(err.to_string().contains("never merged"), "{err}");
    }

    #[test]
    fn gen_off_strands_island() {
        let case = load_case(TWO_BUS).unwrap();
        assert_eq!(connectivity_check(&case).unservable().count(), 0);
        let out = apply_event(&case, &ev(EventKind::GenOff, 1)).unwrap().case;
        let report = connectivity_check(&out);
        assert_eq!(report.unservable().count(), 1);
    }

    #[test]
    fn open_single_branch_gives_two_islands() {
        let case = load_case(TWO_BUS).unwrap();
        let out = apply_event(&case, &ev(EventKind::LineOpen, 1)).unwrap().case;
        let report = connectivity_check(&out);
        assert_eq!(report.islands.len(), 2);
        let flagged: Vec<_> = report.unservable().collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].buses, vec![2]);
    }

    #[test]
    fn case30_single_island() {
        let report = connectivity_check(&bundled_case("case30").unwrap());
        assert_eq!(report.islands.len(), 1);
        assert_eq!(report.unservable().count(), 0);
    }

    #[test]
    fn processor_identity_when_all_open() {
        let case = bundled_case("case30").unwrap();
        let out = topology_processor(&case, &case.switches).unwrap();
        assert_eq!(out, case);
    }

    #[test]
    fn processor_single_contraction() {
        let mut case = bundled_case("case30").unwrap();
        case.switches[0].status = SwitchState::Closed; // joins 3 and 4
        let sw = case.switches.clone();
        let out = topology_processor(&case, &sw).unwrap();
        assert_eq!(out.buses.len(), 29);
        assert!(out.bus(4).is_none() ^ out.bus(3).is_none());
        let kept = if out.bus(3).is_some() { 3 } else { 4 };
        // Loads of both buses now sit on the survivor.
        let on_kept = out.loads.iter().filter(|l| l.bus == kept).count();
        assert_eq!(on_kept, 2);
        assert!(out.branches.iter().all(|b| b.id != 4), "internal branch 3-4 removed");
        assert_eq!(out.switches.len(), 3);
    }

    #[test]
    fn processor_conflicting_slack() {
        let mut case = load_case(TWO_BUS).unwrap();
        case.buses[1].kind = BusKind::Slack;
        let sw = vec![SwitchLink { id: 1, bus_a: 1, bus_b: 2, status: SwitchState::Closed }];
        let err = topology_processor(&case, &sw).unwrap_err();
        assert!(err.to_string().contains("conflicting slack"));
    }

    #[test]
    fn merge_conflicting_slack() {
        let mut case = load_case(TWO_BUS).unwrap();
        case.buses[1].kind = BusKind::Slack;
        case.switches.push(SwitchLink { id: 9, bus_a: 1, bus_b: 2, status: SwitchState::Open });
        let err = apply_event(&case, &ev(EventKind::BusMerge, 9)).unwrap_err();
        assert!(matches!(err, GridError::ConflictingSlack(_, _)));
    }

    /// Random chain/star cases for union-find and BFS oracles.
    fn chain_case(n: usize) -> GridCase {
        let mut text = String::from("base_mva = 100.0\nbus = [\n");
        for i in 1..=n {
            let kind = if i == 1 { "slack" } else { "pq" };
            text += &format!(
                "{{ id = {i}, kind = \"{kind}\", vm = 1.0, va = 0.0, v_min = 0.9, v_max = 1.1, gs = 0.0, bs = 0.0 }},\n"
            );
        }
        text += "]\n";
        load_case(&text).unwrap()
    }

    fn bfs_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![];
            let mut queue = std::collections::VecDeque::from([s]);
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort();
        comps
    }

    #[test]
    fn processor_chain_matches_union_find_oracle() {
        let mut case = chain_case(5);
        let sw: Vec<SwitchLink> = [(1, 2), (2, 3)]
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| SwitchLink { id: i as u32 + 1, bus_a: a, bus_b: b, status: SwitchState::Closed })
            .collect();
        case.switches = sw.clone();
        let out = topology_processor(&case, &sw).unwrap();
        let comps = bfs_components(5, &[(0, 1), (1, 2)]);
        assert_eq!(out.buses.len(), comps.len());
        assert_eq!(out.buses.iter().map(|b| b.id).collect::<Vec<_>>(), vec![1, 4, 5]);
        assert!(out.switches.is_empty());
    }

    proptest! {
        #[test]
        fn processor_is_idempotent(closed in proptest::collection::vec(any::<bool>(), 6), pairs in proptest::collection::vec((1u32..9, 1u32..9), 6)) {
            let mut case = chain_case(8);
            case.switches = pairs.iter().zip(&closed).enumerate()
                .filter(|(_, ((a, b), _))| a != b)
                .map(|(i, ((a, b), &c))| SwitchLink {
                    id: i as u32 + 1, bus_a: *a, bus_b: *b,
                    status: if c { SwitchState::Closed } else { SwitchState::Open },
                })
                .collect();
            let sw = case.switches.clone();
            let once = topology_processor(&case, &sw).unwrap();
            let twice = topology_processor(&once, &once.switches.clone()).unwrap();
            prop_assert_eq!(&once, &twice);
            // Component count matches the union-find oracle over closed switches.
            let edges: Vec<(usize, usize)> = sw.iter().filter(|s| s.status == SwitchState::Closed)
                .map(|s| (s.bus_a as usize - 1, s.bus_b as usize - 1)).collect();
            prop_assert_eq!(once.buses.len(), bfs_components(8, &edges).len());
        }

        #[test]
        fn islands_match_bfs(seed in 0u64..100) {
            let mut rng = crate::rng::SimRng::new(seed);
            let n = 12;
            let mut text = String::from("base_mva = 100.0\nbus = [\n");
            for i in 1..=n {
                text += &format!("{{ id = {i}, kind = \"pq\", vm = 1.0, va = 0.0, v_min = 0.9, v_max = 1.1, gs = 0.0, bs = 0.0 }},\n");
            }
            text += "]\nbranch = [\n";
            let mut edges = Vec::new();
            for id in 1..=20u32 {
                let a = rng.below(n) + 1;
                let mut b = rng.below(n) + 1;
                if b == a { b = a % n + 1; }
                let open = id <= 3;
                if !open { edges.push((a - 1, b - 1)); }
                text += &format!(
                    "{{ id = {id}, from_bus = {a}, to_bus = {b}, r = 0.01, x = 0.1, b = 0.0, tap = 1.0, shift = 0.0, rate_a = 0.0, status = \"{}\" }},\n",
                    if open { "open" } else { "closed" });
            }
            text += "]\n";
            let case = load_case(&text).unwrap();
            let mut got: Vec<Vec<usize>> = connectivity_check(&case).islands.iter()
                .map(|i| i.buses.iter().map(|&b| b as usize - 1).collect()).collect();
            got.sort();
            prop_assert_eq!(got, bfs_components(n, &edges));
        }
    }
}

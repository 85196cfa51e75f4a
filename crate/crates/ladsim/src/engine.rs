//! Synchronous Communicate-Compute-Move executor.
//!
//! Every round the engine groups robots by node, hands each group a snapshot
//! of the pre-round configuration, collects one decision per robot and then
//! applies all moves at once. Policies never see node indices: a snapshot
//! exposes the node color, its degree and, per robot, the port it arrived
//! through in the previous round.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{feasible, Color, NodeIx, Port, PortLabeledGraph, RobotId, RobotSpec};

/// Instance-wide parameters that memory accounting may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub k: usize,
    pub max_degree: usize,
    pub t: u32,
    pub max_id: RobotId,
}

impl Dims {
    pub fn of(g: &PortLabeledGraph, robots: &[RobotSpec]) -> Dims {
        Dims {
            n: g.node_count(),
            k: robots.len(),
            max_degree: g.max_degree(),
            t: g.palette(),
            max_id: robots.iter().map(|r| r.id).max().unwrap_or(1),
        }
    }

    /// Bits for one port value, including a "none" sentinel.
    pub fn port_bits(&self) -> u64 {
        width(self.max_degree as u64 + 1)
    }

    pub fn id_bits(&self) -> u64 {
        width(self.max_id as u64 + 1)
    }

    pub fn color_bits(&self) -> u64 {
        width(self.t as u64 + 1)
    }

    pub fn count_bits(&self, max: u64) -> u64 {
        width(max + 1)
    }
}

/// Bits needed to distinguish `values` distinct values: ceil(log2(values)).
pub fn width(values: u64) -> u64 {
    if values <= 1 {
        0
    } else {
        64 - (values - 1).leading_zeros() as u64
    }
}

/// Persistent robot memory as seen by the engine.
pub trait Memory: Clone + fmt::Debug + Send + Sync {
    /// Declared persistent size in bits.
    fn bits(&self, dims: &Dims) -> u64;

    /// Short state label. A change of label is traced as `state_change`,
    /// or `settled` when the new label is `"settled"`.
    fn tag(&self) -> &'static str;

    /// The robot will never act again.
    fn is_final(&self) -> bool;

    fn phase(&self) -> &'static str {
        "main"
    }
}

pub fn memory_bits<M: Memory>(m: &M, dims: &Dims) -> u64 {
    m.bits(dims)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeView {
    pub color: Color,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct Resident<'a, M> {
    pub spec: RobotSpec,
    pub mem: &'a M,
    /// Port this robot came in through last round, `None` if it stayed.
    pub entry: Option<Port>,
}

/// What a node group is allowed to observe in one round.
pub struct Snapshot<'a, M> {
    pub view: NodeView,
    residents: Vec<Resident<'a, M>>,
    illegal: RefCell<Vec<RobotId>>,
}

impl<'a, M> Snapshot<'a, M> {
    pub fn new(view: NodeView, residents: Vec<Resident<'a, M>>) -> Self {
        Snapshot { view, residents, illegal: RefCell::new(Vec::new()) }
    }

    /// Collocated robots in ascending id order.
    pub fn residents(&self) -> &[Resident<'a, M>] {
        &self.residents
    }

    pub fn len(&self) -> usize {
        self.residents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residents.is_empty()
    }

    /// Reads a robot by id. Asking for a robot that is not here is recorded
    /// and turned into a `PolicyViolation` once the compute step returns.
    pub fn lookup(&self, id: RobotId) -> Option<&Resident<'a, M>> {
        let found = self.residents.iter().find(|r| r.spec.id == id);
        if found.is_none() {
            self.illegal.borrow_mut().push(id);
        }
        found
    }

    fn take_illegal(&self) -> Vec<RobotId> {
        std::mem::take(&mut self.illegal.borrow_mut())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Stay,
    Exit(Port),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Moved,
    Settled,
    StateChange,
    Merged,
    DetectedDone,
    Error,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Moved => "moved",
            EventKind::Settled => "settled",
            EventKind::StateChange => "state_change",
            EventKind::Merged => "merged",
            EventKind::DetectedDone => "detected_done",
            EventKind::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        Some(match s {
            "moved" => EventKind::Moved,
            "settled" => EventKind::Settled,
            "state_change" => EventKind::StateChange,
            "merged" => EventKind::Merged,
            "detected_done" => EventKind::DetectedDone,
            "error" => EventKind::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Decision<M> {
    pub mem: M,
    pub action: Action,
    pub events: Vec<(EventKind, String)>,
}

impl<M> Decision<M> {
    pub fn stay(mem: M) -> Self {
        Decision { mem, action: Action::Stay, events: Vec::new() }
    }

    pub fn exit(mem: M, port: Port) -> Self {
        Decision { mem, action: Action::Exit(port), events: Vec::new() }
    }

    pub fn with_event(mut self, kind: EventKind, detail: impl Into<String>) -> Self {
        self.events.push((kind, detail.into()));
        self
    }
}

/// Protocol-level inconsistency reported by a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub kind: String,
    pub detail: String,
}

impl Fault {
    pub fn new(kind: &str, detail: impl Into<String>) -> Self {
        Fault { kind: kind.to_string(), detail: detail.into() }
    }
}

pub trait Policy: Sync {
    type Mem: Memory;

    fn name(&self) -> &'static str;

    fn init(&self, spec: &RobotSpec) -> Self::Mem;

    /// One decision per resident, in the snapshot's order.
    fn compute(&self, snap: &Snapshot<'_, Self::Mem>) -> Result<Vec<Decision<Self::Mem>>, Fault>;

    /// Label for the round about to be executed.
    fn round_phase(&self, config: &Configuration<Self::Mem>) -> &'static str {
        config.states.iter().find(|m| !m.is_final()).or(config.states.first()).map(|m| m.phase()).unwrap_or("main")
    }

    fn terminated(&self, config: &Configuration<Self::Mem>) -> bool {
        config.states.iter().all(|m| m.is_final())
    }
}

#[derive(Debug, Clone)]
pub struct Configuration<M> {
    pub round: u64,
    /// Sorted by ascending id.
    pub robots: Vec<RobotSpec>,
    pub placement: Vec<NodeIx>,
    pub states: Vec<M>,
    pub entry: Vec<Option<Port>>,
}

impl<M> Configuration<M> {
    pub fn node_of(&self, id: RobotId) -> Option<NodeIx> {
        self.index_of(id).map(|i| self.placement[i])
    }

    pub fn state_of(&self, id: RobotId) -> Option<&M> {
        self.index_of(id).map(|i| &self.states[i])
    }

    pub fn index_of(&self, id: RobotId) -> Option<usize> {
        self.robots.binary_search_by_key(&id, |r| r.id).ok()
    }

    pub fn placement_map(&self) -> BTreeMap<RobotId, NodeIx> {
        self.robots.iter().map(|r| r.id).zip(self.placement.iter().copied()).collect()
    }

    /// Robot indices grouped by node; each group in ascending id order.
    pub fn by_node(&self) -> BTreeMap<NodeIx, Vec<usize>> {
        let mut out: BTreeMap<NodeIx, Vec<usize>> = BTreeMap::new();
        for (i, &v) in self.placement.iter().enumerate() {
            out.entry(v).or_default().push(i);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub round: u64,
    pub robot: RobotId,
    pub node: NodeIx,
    pub kind: EventKind,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.round, self.robot, self.node, self.kind.as_str())?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            let _ = writeln!(s, "{e}");
        }
        s
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.events {
            h.update(e.to_string().as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub rounds: u64,
    pub peak_bits: BTreeMap<RobotId, u64>,
    pub solved: bool,
    /// Rounds per phase label, in order of first appearance.
    pub phases: Vec<(String, u64)>,
    pub moves: u64,
}

impl RoundStats {
    pub fn max_bits(&self) -> u64 {
        self.peak_bits.values().copied().max().unwrap_or(0)
    }

    pub fn phase_rounds(&self, label: &str) -> u64 {
        self.phases.iter().find(|(l, _)| l == label).map(|p| p.1).unwrap_or(0)
    }

    fn bump_phase(&mut self, label: &str) {
        match self.phases.iter_mut().find(|(l, _)| l == label) {
            Some(p) => p.1 += 1,
            None => self.phases.push((label.to_string(), 1)),
        }
    }

    pub fn summary_line(&self) -> String {
        let phases: Vec<String> = self.phases.iter().map(|(l, r)| format!("{l}:{r}")).collect();
        format!(
            "rounds={} solved={} max_bits={} moves={} phases={}",
            self.rounds,
            self.solved,
            self.max_bits(),
            self.moves,
            if phases.is_empty() { "-".to_string() } else { phases.join(",") }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("round limit must be positive")]
    ZeroRoundLimit,
    #[error("round limit {limit} exceeded")]
    RoundLimitExceeded { limit: u64, trace: Trace, stats: RoundStats },
    #[error("policy violation by robot {robot} in round {round}: {detail}")]
    PolicyViolation { round: u64, robot: RobotId, detail: String },
    #[error("instance is infeasible: {0}")]
    InfeasibleInstance(String),
    #[error("bad initial placement: {0}")]
    BadPlacement(String),
    #[error("{kind} in round {round}: {detail}")]
    Fault { round: u64, kind: String, detail: String },
}

#[derive(Debug, Clone)]
pub struct RunOutcome<M> {
    pub config: Configuration<M>,
    pub trace: Trace,
    pub stats: RoundStats,
}

/// Runs `policy` until it reports termination or `round_limit` rounds pass.
pub fn run<P: Policy>(
    policy: &P,
    g: &PortLabeledGraph,
    initial: &BTreeMap<RobotId, NodeIx>,
    robots: &[RobotSpec],
    round_limit: u64,
) -> Result<RunOutcome<P::Mem>, EngineError> {
    run_observed(policy, g, initial, robots, round_limit, &mut |_| {})
}

/// Like [`run`], calling `observe` on the initial configuration and after
/// every round.
pub fn run_observed<P: Policy>(
    policy: &P,
    g: &PortLabeledGraph,
    initial: &BTreeMap<RobotId, NodeIx>,
    robots: &[RobotSpec],
    round_limit: u64,
    observe: &mut dyn FnMut(&Configuration<P::Mem>),
) -> Result<RunOutcome<P::Mem>, EngineError> {
    let mut config = start(policy, g, initial, robots, round_limit)?;
    let dims = Dims::of(g, robots);
    let mut trace = Trace::default();
    let mut stats = RoundStats::default();
    for (r, m) in config.robots.iter().zip(&config.states) {
        stats.peak_bits.insert(r.id, m.bits(&dims));
    }
    observe(&config);
    while !policy.terminated(&config) {
        if config.round >= round_limit {
            stats.rounds = config.round;
            stats.solved = solved(g, &config);
            return Err(EngineError::RoundLimitExceeded { limit: round_limit, trace, stats });
        }
        let label = policy.round_phase(&config);
        step(policy, g, &mut config, &mut trace, &mut stats)?;
        stats.bump_phase(label);
        for (r, m) in config.robots.iter().zip(&config.states) {
            let b = m.bits(&dims);
            let peak = stats.peak_bits.entry(r.id).or_insert(0);
            *peak = (*peak).max(b);
        }
        observe(&config);
    }
    stats.rounds = config.round;
    stats.solved = solved(g, &config);
    Ok(RunOutcome { config, trace, stats })
}

fn start<P: Policy>(
    policy: &P,
    g: &PortLabeledGraph,
    initial: &BTreeMap<RobotId, NodeIx>,
    robots: &[RobotSpec],
    round_limit: u64,
) -> Result<Configuration<P::Mem>, EngineError> {
    if round_limit == 0 {
        return Err(EngineError::ZeroRoundLimit);
    }
    match feasible(g, robots) {
        Ok(true) => {}
        Ok(false) => return Err(EngineError::InfeasibleInstance("some color has more robots than nodes".into())),
        Err(e) => return Err(EngineError::InfeasibleInstance(e.to_string())),
    }
    let mut sorted = robots.to_vec();
    sorted.sort_by_key(|r| r.id);
    if sorted.windows(2).any(|w| w[0].id == w[1].id) || sorted.first().is_some_and(|r| r.id == 0) {
        return Err(EngineError::BadPlacement("robot ids must be distinct and positive".into()));
    }
    let mut placement = Vec::with_capacity(sorted.len());
    for r in &sorted {
        match initial.get(&r.id) {
            Some(&v) if v < g.node_count() => placement.push(v),
            Some(&v) => return Err(EngineError::BadPlacement(format!("robot {} on missing node {v}", r.id))),
            None => return Err(EngineError::BadPlacement(format!("robot {} has no start node", r.id))),
        }
    }
    if initial.len() != sorted.len() {
        return Err(EngineError::BadPlacement("placement names unknown robots".into()));
    }
    let states = sorted.iter().map(|r| policy.init(r)).collect();
    let k = sorted.len();
    Ok(Configuration { round: 0, robots: sorted, placement, states, entry: vec![None; k] })
}

fn solved<M>(g: &PortLabeledGraph, config: &Configuration<M>) -> bool {
    crate::verify::check_lad(g, &config.robots, &config.placement_map()).is_solved()
}

/// Executes exactly one round in place.
pub fn step<P: Policy>(
    policy: &P,
    g: &PortLabeledGraph,
    config: &mut Configuration<P::Mem>,
    trace: &mut Trace,
    stats: &mut RoundStats,
) -> Result<(), EngineError> {
    let round = config.round + 1;
    let groups = config.by_node();
    let k = config.robots.len();
    let mut new_states: Vec<Option<P::Mem>> = vec![None; k];
    let mut actions = vec![Action::Stay; k];
    let mut events: Vec<(usize, EventKind, String)> = Vec::new();
    for (&v, idx) in &groups {
        let residents: Vec<Resident<'_, P::Mem>> = idx
            .iter()
            .map(|&i| Resident { spec: config.robots[i], mem: &config.states[i], entry: config.entry[i] })
            .collect();
        let snap = Snapshot::new(NodeView { color: g.color(v), degree: g.degree(v) }, residents);
        let decisions =
            policy.compute(&snap).map_err(|f| EngineError::Fault { round, kind: f.kind, detail: f.detail })?;
        if let Some(&bad) = snap.take_illegal().first() {
            return Err(EngineError::PolicyViolation {
                round,
                robot: config.robots[idx[0]].id,
                detail: format!("read robot {bad}, which is not collocated"),
            });
        }
        if decisions.len() != idx.len() {
            return Err(EngineError::PolicyViolation {
                round,
                robot: config.robots[idx[0]].id,
                detail: format!("{} decisions for {} robots", decisions.len(), idx.len()),
            });
        }
        for (d, &i) in decisions.into_iter().zip(idx) {
            if let Action::Exit(p) = d.action {
                if p >= g.degree(v) {
                    return Err(EngineError::PolicyViolation {
                        round,
                        robot: config.robots[i].id,
                        detail: format!("exit through port {p} at a node of degree {}", g.degree(v)),
                    });
                }
            }
            let old = config.states[i].tag();
            let new = d.mem.tag();
            if old != new {
                if new == "settled" {
                    events.push((i, EventKind::Settled, String::new()));
                } else {
                    events.push((i, EventKind::StateChange, format!("{old}->{new}")));
                }
            }
            for (kind, detail) in d.events {
                events.push((i, kind, detail));
            }
            actions[i] = d.action;
            new_states[i] = Some(d.mem);
        }
    }
    // Events are reported at the node where the decision was taken.
    for (i, kind, detail) in events {
        trace.events.push(TraceEvent { round, robot: config.robots[i].id, node: config.placement[i], kind, detail });
    }
    for i in 0..k {
        config.states[i] = new_states[i].take().expect("every robot decided");
        match actions[i] {
            Action::Stay => config.entry[i] = None,
            Action::Exit(p) => {
                let from = config.placement[i];
                let link = g.link(from, p);
                trace.events.push(TraceEvent {
                    round,
                    robot: config.robots[i].id,
                    node: from,
                    kind: EventKind::Moved,
                    detail: format!("port={p} to={}", link.node),
                });
                config.placement[i] = link.node;
                config.entry[i] = Some(link.back);
                stats.moves += 1;
            }
        }
    }
    config.round = round;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Probe {
        port: Option<Port>,
        tag2: u8,
    }

    impl Memory for Probe {
        fn bits(&self, d: &Dims) -> u64 {
            self.port.map_or(0, |_| d.port_bits()) + 2
        }
        fn tag(&self) -> &'static str {
            "probe"
        }
        fn is_final(&self) -> bool {
            false
        }
    }

    #[test]
    fn widths() {
        assert_eq!(width(0), 0);
        assert_eq!(width(1), 0);
        assert_eq!(width(2), 1);
        assert_eq!(width(8), 3);
        assert_eq!(width(9), 4);
        // A port in 0..7 plus a 2-bit tag.
        assert_eq!(width(8) + width(4), 5);
    }

    #[test]
    fn port_and_tag_cost_five_bits() {
        #[derive(Debug, Clone)]
        struct PortTag;
        impl Memory for PortTag {
            fn bits(&self, _: &Dims) -> u64 {
                width(8) + width(4)
            }
            fn tag(&self) -> &'static str {
                "x"
            }
            fn is_final(&self) -> bool {
                true
            }
        }
        let d = Dims { n: 8, k: 1, max_degree: 7, t: 1, max_id: 1 };
        assert_eq!(memory_bits(&PortTag, &d), 5);
        let p = Probe { port: None, tag2: 0 };
        assert_eq!(memory_bits(&p, &d) - 2, 0);
    }

    struct Stubborn;
    impl Policy for Stubborn {
        type Mem = Probe;
        fn name(&self) -> &'static str {
            "stubborn"
        }
        fn init(&self, _: &RobotSpec) -> Probe {
            Probe { port: None, tag2: 0 }
        }
        fn compute(&self, snap: &Snapshot<'_, Probe>) -> Result<Vec<Decision<Probe>>, Fault> {
            Ok(snap.residents().iter().map(|r| Decision::stay(r.mem.clone())).collect())
        }
    }

    fn p3() -> PortLabeledGraph {
        PortLabeledGraph::build_from_edge_list(3, &[(0, 1), (1, 2)], &[1, 1, 1]).unwrap()
    }

    #[test]
    fn zero_round_limit_is_rejected() {
        let g = p3();
        let robots = [RobotSpec::new(1, 1)];
        let init = BTreeMap::from([(1, 0)]);
        assert_eq!(run(&Stubborn, &g, &init, &robots, 0).unwrap_err(), EngineError::ZeroRoundLimit);
    }

    #[test]
    fn limit_exceeded_keeps_partial_trace() {
        let g = p3();
        let robots = [RobotSpec::new(1, 1)];
        let init = BTreeMap::from([(1, 0)]);
        match run(&Stubborn, &g, &init, &robots, 5).unwrap_err() {
            EngineError::RoundLimitExceeded { limit, stats, .. } => {
                assert_eq!(limit, 5);
                assert_eq!(stats.rounds, 5);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn infeasible_is_rejected() {
        let g = p3();
        let robots = [RobotSpec::new(1, 2)];
        let init = BTreeMap::from([(1, 0)]);
        assert!(matches!(run(&Stubborn, &g, &init, &robots, 5), Err(EngineError::InfeasibleInstance(_))));
    }

    /// Tries to read robot 2 from wherever robot 1 stands.
    struct Snoop;
    impl Policy for Snoop {
        type Mem = Probe;
        fn name(&self) -> &'static str {
            "snoop"
        }
        fn init(&self, _: &RobotSpec) -> Probe {
            Probe { port: None, tag2: 0 }
        }
        fn compute(&self, snap: &Snapshot<'_, Probe>) -> Result<Vec<Decision<Probe>>, Fault> {
            let _ = snap.lookup(2);
            Ok(snap.residents().iter().map(|r| Decision::stay(r.mem.clone())).collect())
        }
    }

    #[test]
    fn reading_a_remote_robot_is_a_violation() {
        let g = p3();
        let robots = [RobotSpec::new(1, 1), RobotSpec::new(2, 1)];
        let init = BTreeMap::from([(1, 0), (2, 2)]);
        assert!(matches!(run(&Snoop, &g, &init, &robots, 5), Err(EngineError::PolicyViolation { round: 1, .. })));
        // Collocated, the same read is fine.
        let init = BTreeMap::from([(1, 1), (2, 1)]);
        assert!(matches!(run(&Snoop, &g, &init, &robots, 3), Err(EngineError::RoundLimitExceeded { .. })));
    }

    struct BadPort;
    impl Policy for BadPort {
        type Mem = Probe;
        fn name(&self) -> &'static str {
            "bad_port"
        }
        fn init(&self, _: &RobotSpec) -> Probe {
            Probe { port: None, tag2: 0 }
        }
        fn compute(&self, snap: &Snapshot<'_, Probe>) -> Result<Vec<Decision<Probe>>, Fault> {
            Ok(snap.residents().iter().map(|r| Decision::exit(r.mem.clone(), snap.view.degree)).collect())
        }
    }

    #[test]
    fn exiting_through_a_missing_port_is_a_violation() {
        let g = p3();
        let robots = [RobotSpec::new(1, 1)];
        let init = BTreeMap::from([(1, 0)]);
        assert!(matches!(run(&BadPort, &g, &init, &robots, 5), Err(EngineError::PolicyViolation { .. })));
    }

    /// Each robot walks back and forth over port 0 and remembers the largest
    /// group it has seen. On P2 two robots starting on different ends swap
    /// every round and must never see each other.
    struct Swap;
    impl Policy for Swap {
        type Mem = Probe;
        fn name(&self) -> &'static str {
            "swap"
        }
        fn init(&self, _: &RobotSpec) -> Probe {
            Probe { port: None, tag2: 0 }
        }
        fn compute(&self, snap: &Snapshot<'_, Probe>) -> Result<Vec<Decision<Probe>>, Fault> {
            let seen = snap.len() as u8;
            Ok(snap
                .residents()
                .iter()
                .map(|r| {
                    let mut m = r.mem.clone();
                    m.tag2 = m.tag2.max(seen);
                    m.port = r.entry;
                    Decision::exit(m, 0)
                })
                .collect())
        }
    }

    #[test]
    fn crossing_robots_do_not_meet() {
        let g = PortLabeledGraph::build_from_edge_list(2, &[(0, 1)], &[1, 1]).unwrap();
        let robots = [RobotSpec::new(1, 1), RobotSpec::new(2, 1)];
        let init = BTreeMap::from([(1, 0), (2, 1)]);
        let mut max_seen = 0;
        let _ = run_observed(&Swap, &g, &init, &robots, 10, &mut |c| {
            max_seen = max_seen.max(c.states.iter().map(|m| m.tag2).max().unwrap());
            assert_ne!(c.placement[0], c.placement[1]);
        });
        assert_eq!(max_seen, 1);
    }

    #[test]
    fn entry_port_is_reported_after_a_move() {
        let g = p3();
        let robots = [RobotSpec::new(1, 1)];
        let init = BTreeMap::from([(1, 1)]);
        let mut ports = Vec::new();
        let _ = run_observed(&Swap, &g, &init, &robots, 3, &mut |c| ports.push(c.entry[0]));
        // 1 -> 0 (enters through port 0), 0 -> 1 (port 0 at node 1).
        assert_eq!(ports, vec![None, Some(0), Some(0), Some(0)]);
    }

    #[test]
    fn same_inputs_give_same_digest() {
        let g = p3();
        let robots = [RobotSpec::new(1, 1), RobotSpec::new(2, 1)];
        let init = BTreeMap::from([(1, 0), (2, 2)]);
        let digest = |_: ()| match run(&Swap, &g, &init, &robots, 7) {
            Err(EngineError::RoundLimitExceeded { trace, .. }) => trace.digest(),
            other => panic!("{other:?}"),
        };
        assert_eq!(digest(()), digest(()));
        assert_eq!(digest(()).len(), 64);
    }
}

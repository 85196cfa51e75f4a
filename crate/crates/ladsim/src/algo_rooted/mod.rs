//! Dispersion from a single source node.
//!
//! Robots split into a pack that runs a depth-first traversal and guards
//! that each keep a small tree of nodes and sweep it once per cycle, so the
//! pack learns whether a node was seen before. The guards are then collected
//! at the source, the union of their records gives the whole graph, and the
//! robots are sent out to their assigned nodes.

pub mod audit;
pub mod phase1;
pub mod phase2;
pub mod phase3;
pub mod records;

use std::collections::VecDeque;
use std::sync::Arc;

use crate::engine::{width, Action, Decision, Dims, EventKind, Fault, Memory, Policy, Snapshot};
use crate::graph::{Color, Port, RobotId, RobotSpec};

use records::{Group, GroupNum, Key};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum State {
    Active,
    Leader,
    Oscillating,
    Passive,
    OsciHead,
    Settled,
}

impl State {
    pub fn as_str(self) -> &'static str {
        match self {
            State::Active => "active",
            State::Leader => "leader",
            State::Oscillating => "oscillating",
            State::Passive => "passive",
            State::OsciHead => "osci_head",
            State::Settled => "settled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Forward,
    Backtrack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Explore,
    Gather,
    Disperse,
}

/// Where the leader expects the pack at the next decision round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Own(Key),
    Ext(Key, Port),
    /// Through the group's uplink, just outside the group.
    Up,
}

/// Traversal state shared by all pack members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pack {
    pub dir: Dir,
    pub pext: Option<Port>,
    pub gr_num: GroupNum,
    pub discovered: u64,
    pub has_leader: bool,
    /// Set when the next move leaves a group source through its uplink;
    /// carries that group's number and whether it is still led.
    pub up_edge: Option<(GroupNum, bool)>,
    pub abort: bool,
    pub dfs_done: bool,
}

impl Default for Pack {
    fn default() -> Self {
        Pack {
            dir: Dir::Forward,
            pext: None,
            gr_num: 0,
            discovered: 0,
            has_leader: false,
            up_edge: None,
            abort: false,
            dfs_done: false,
        }
    }
}

/// One step of a planned walk: port to take and the key reached, if the
/// node belongs to the walker's own group.
pub type Step = (Port, Option<Key>);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Guard {
    pub group: Option<Arc<Group>>,
    pub at: Option<Key>,
    pub step: u32,
    pub paused: bool,
    pub route: VecDeque<Step>,
    pub track: Option<Track>,
    pub level: u32,
    pub parent_gr: Option<GroupNum>,
    /// Link in the parent group through which this group is entered.
    pub parent_link: Option<(Key, Option<Port>)>,
    pub gather: bool,
}

impl Guard {
    pub fn group(&self) -> &Group {
        self.group.as_deref().expect("guard holds a group")
    }

    pub fn group_mut(&mut self) -> &mut Group {
        Arc::make_mut(self.group.as_mut().expect("guard holds a group"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedMem {
    pub id: RobotId,
    pub color: Color,
    pub state: State,
    pub stage: Stage,
    pub k: u32,
    pub c: u32,
    /// Rounds since the current attempt started.
    pub round: u64,
    pub started: bool,
    pub unknown_n: bool,
    pub pent: Option<Port>,
    pub iteration: u32,
    pub pack: Pack,
    pub guard: Guard,
    pub head: Option<Box<phase2::Head>>,
    pub p3: Option<Box<phase3::Plan>>,
}

impl RootedMem {
    pub fn new(spec: &RobotSpec) -> Self {
        RootedMem {
            id: spec.id,
            color: spec.color,
            state: State::Active,
            stage: Stage::Explore,
            k: 0,
            c: 1,
            round: 0,
            started: false,
            unknown_n: false,
            pent: None,
            iteration: 1,
            pack: Pack::default(),
            guard: Guard::default(),
            head: None,
            p3: None,
        }
    }

    pub fn cycle(&self) -> u64 {
        24 * self.c as u64 + 2
    }

    /// Position inside the current cycle; 0 is the move round.
    pub fn pos(&self) -> u64 {
        (self.round - 1) % self.cycle()
    }

    pub fn decision_pos(&self) -> u64 {
        12 * self.c as u64 + 1
    }

    pub fn is_guard(&self) -> bool {
        matches!(self.state, State::Leader | State::Oscillating) && !self.guard.gather
    }
}

impl Memory for RootedMem {
    fn bits(&self, d: &Dims) -> u64 {
        let port = d.port_bits();
        let mut b = 3 + d.id_bits() + d.color_bits() + 2 * width(d.k as u64 + 1);
        b += width(self.round + 1) + port + 4;
        b += 2 * port + width(d.k as u64 + 1) + width(self.pack.discovered + 1) + 4;
        if let Some(g) = &self.guard.group {
            b += g.bits(d);
            b += width(g.next_key as u64 + 1) * 2 + width(12 * self.c as u64 + 1) + 2;
        }
        b += self.guard.route.len() as u64 * port;
        if let Some(h) = &self.head {
            b += h.bits(d);
        }
        if let Some(p) = &self.p3 {
            b += p.bits(d);
        }
        b
    }

    fn tag(&self) -> &'static str {
        self.state.as_str()
    }

    fn is_final(&self) -> bool {
        self.state == State::Settled
    }

    fn phase(&self) -> &'static str {
        match self.stage {
            Stage::Explore => "phase1",
            Stage::Gather => "phase2",
            Stage::Disperse => "phase3",
        }
    }
}

/// Output of one robot for one round, before it is wrapped in a decision.
pub(crate) struct Out {
    pub action: Action,
    pub events: Vec<(EventKind, String)>,
}

impl Out {
    pub fn stay() -> Self {
        Out { action: Action::Stay, events: Vec::new() }
    }

    pub fn exit(p: Port) -> Self {
        Out { action: Action::Exit(p), events: Vec::new() }
    }
}

/// Rooted dispersion. With `n` set the robots know the node count; without
/// it they start from the guess `n = k` and double it after each failure.
#[derive(Debug, Clone, Copy)]
pub struct RootedPolicy {
    pub n: Option<usize>,
}

impl RootedPolicy {
    pub fn known(n: usize) -> Self {
        RootedPolicy { n: Some(n) }
    }

    pub fn unknown() -> Self {
        RootedPolicy { n: None }
    }
}

impl Policy for RootedPolicy {
    type Mem = RootedMem;

    fn name(&self) -> &'static str {
        match self.n {
            Some(_) => "rooted_known",
            None => "rooted_unknown",
        }
    }

    fn init(&self, spec: &RobotSpec) -> RootedMem {
        RootedMem::new(spec)
    }

    fn compute(&self, snap: &Snapshot<'_, RootedMem>) -> Result<Vec<Decision<RootedMem>>, Fault> {
        let mut ms: Vec<RootedMem> = snap
            .residents()
            .iter()
            .map(|r| {
                let mut m = r.mem.clone();
                m.round += 1;
                if r.entry.is_some() {
                    m.pent = r.entry;
                }
                m
            })
            .collect();
        let outs = step_node(&mut ms, &snap.view, self.n)?;
        Ok(ms
            .into_iter()
            .zip(outs)
            .map(|(mem, out)| Decision { mem, action: out.action, events: out.events })
            .collect())
    }
}

/// One round for all robots at a node.
pub(crate) fn step_node(
    ms: &mut [RootedMem],
    view: &crate::engine::NodeView,
    n: Option<usize>,
) -> Result<Vec<Out>, Fault> {
    if ms.iter().any(|m| m.stage != Stage::Disperse && !m.started) {
        return Ok(phase1::bootstrap(ms, view, n));
    }
    if let Some(h) = ms.iter().position(|m| m.state == State::OsciHead && m.head.as_ref().is_some_and(|h| h.done)) {
        if ms[h].pack.abort {
            return Ok(restart(ms));
        }
        phase3::start(ms, view)?;
    }
    if ms.iter().any(|m| m.stage == Stage::Disperse) {
        return phase3::step(ms, view);
    }
    phase1::step(ms, view)
}

/// Everyone is back at the source after a failed attempt: double the guess.
fn restart(ms: &mut [RootedMem]) -> Vec<Out> {
    let mut outs = Vec::new();
    for m in ms.iter_mut() {
        let mut fresh = RootedMem::new(&RobotSpec::new(m.id, m.color));
        fresh.iteration = m.iteration + 1;
        fresh.c = m.c * 2;
        fresh.unknown_n = true;
        fresh.round = 0;
        *m = fresh;
        outs.push(Out {
            action: Action::Stay,
            events: vec![(EventKind::StateChange, format!("restart iteration={}", m.iteration))],
        });
    }
    outs
}

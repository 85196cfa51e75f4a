//! Two simple strategies: the port-rotation walk for trees, paths and rings,
//! and the collective DFS for rooted instances with one robot per node.

use crate::engine::{Decision, Dims, Fault, Memory, Policy, Snapshot};
use crate::graph::{Port, RobotSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Walk {
    Explore,
    Settled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Forward,
    Backtrack,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicRobotMemory {
    pub state: Walk,
    pub phase: Phase,
    /// Port of entry into the current node; `None` before the first move.
    pub pent: Option<Port>,
    pub color: u32,
    pub id: u32,
    /// Settled DFS robots only.
    pub parent: Option<Port>,
    pub child: Vec<bool>,
    dfs: bool,
}

impl BasicRobotMemory {
    fn new(spec: &RobotSpec, dfs: bool) -> Self {
        BasicRobotMemory {
            state: Walk::Explore,
            phase: Phase::Forward,
            pent: None,
            color: spec.color,
            id: spec.id,
            parent: None,
            child: Vec::new(),
            dfs,
        }
    }

    fn next_port(&self, degree: usize) -> Port {
        self.pent.map_or(0, |p| (p + 1) % degree)
    }
}

impl Memory for BasicRobotMemory {
    fn bits(&self, d: &Dims) -> u64 {
        let mut b = 1 + d.port_bits() + d.color_bits() + d.id_bits();
        if self.dfs {
            b += 1;
            if self.state == Walk::Settled {
                b += d.port_bits() + self.child.len() as u64;
            }
        }
        b
    }

    fn tag(&self) -> &'static str {
        match self.state {
            Walk::Explore => "explore",
            Walk::Settled => "settled",
        }
    }

    fn is_final(&self) -> bool {
        self.state == Walk::Settled
    }
}

/// Minimum-id exploring robot matching the node color, if the node is free.
fn settler(snap: &Snapshot<'_, BasicRobotMemory>) -> Option<u32> {
    let occupied = snap.residents().iter().any(|r| r.mem.state == Walk::Settled);
    if occupied {
        return None;
    }
    snap.residents().iter().find(|r| r.mem.state == Walk::Explore && r.spec.color == snap.view.color).map(|r| r.spec.id)
}

/// One round of the port-rotation walk at a node.
pub fn tpr_step(snap: &Snapshot<'_, BasicRobotMemory>) -> Vec<Decision<BasicRobotMemory>> {
    let winner = settler(snap);
    snap.residents()
        .iter()
        .map(|r| {
            let mut m = r.mem.clone();
            if r.entry.is_some() {
                m.pent = r.entry;
            }
            match m.state {
                Walk::Settled => Decision::stay(m),
                Walk::Explore if Some(r.spec.id) == winner => {
                    m.state = Walk::Settled;
                    Decision::stay(m)
                }
                Walk::Explore => {
                    let p = m.next_port(snap.view.degree);
                    Decision::exit(m, p)
                }
            }
        })
        .collect()
}

/// One round of the collective DFS (every node receives exactly one robot).
pub fn rooted_full_step(snap: &Snapshot<'_, BasicRobotMemory>) -> Vec<Decision<BasicRobotMemory>> {
    let deg = snap.view.degree;
    let host = snap.residents().iter().find(|r| r.mem.state == Walk::Settled);
    let winner = settler(snap);
    let parent_here = match (host, winner) {
        (Some(h), _) => h.mem.parent,
        // The node is being settled this round: its parent is where the
        // group came from.
        (None, Some(w)) => snap.residents().iter().find(|r| r.spec.id == w).and_then(|r| r.entry),
        (None, None) => None,
    };
    let mut forward_ports = Vec::new();
    let mut out: Vec<Decision<BasicRobotMemory>> = snap
        .residents()
        .iter()
        .map(|r| {
            let mut m = r.mem.clone();
            if r.entry.is_some() {
                m.pent = r.entry;
            }
            if m.state == Walk::Settled {
                return Decision::stay(m);
            }
            if m.phase == Phase::Forward {
                if Some(r.spec.id) == winner {
                    m.state = Walk::Settled;
                    m.parent = m.pent;
                    m.child = vec![false; deg];
                    return Decision::stay(m);
                }
                if host.is_some() {
                    m.phase = Phase::Backtrack;
                    let back = m.pent.expect("a visited node is only reached by moving");
                    return Decision::exit(m, back);
                }
            }
            // Leaving through the parent port is always a retreat; this also
            // covers a group that has just settled a leaf.
            let p = m.next_port(deg);
            m.phase = if Some(p) == parent_here { Phase::Backtrack } else { Phase::Forward };
            if m.phase == Phase::Forward {
                forward_ports.push(p);
            }
            Decision::exit(m, p)
        })
        .collect();
    // The node's settled robot keeps the set of ports the group left through.
    for d in out.iter_mut() {
        if d.mem.state == Walk::Settled && d.mem.child.len() == deg {
            for &p in &forward_ports {
                if Some(p) != d.mem.parent {
                    d.mem.child[p] = true;
                }
            }
        }
    }
    out
}

/// Port-rotation walk; valid on trees, paths and rings from any start.
pub struct TprPolicy;

impl Policy for TprPolicy {
    type Mem = BasicRobotMemory;

    fn name(&self) -> &'static str {
        "tpr"
    }

    fn init(&self, spec: &RobotSpec) -> BasicRobotMemory {
        BasicRobotMemory::new(spec, false)
    }

    fn compute(&self, snap: &Snapshot<'_, BasicRobotMemory>) -> Result<Vec<Decision<BasicRobotMemory>>, Fault> {
        Ok(tpr_step(snap))
    }
}

/// Collective DFS for rooted instances with `k = n`.
pub struct RootedFullPolicy;

impl Policy for RootedFullPolicy {
    type Mem = BasicRobotMemory;

    fn name(&self) -> &'static str {
        "rooted_full"
    }

    fn init(&self, spec: &RobotSpec) -> BasicRobotMemory {
        BasicRobotMemory::new(spec, true)
    }

    fn compute(&self, snap: &Snapshot<'_, BasicRobotMemory>) -> Result<Vec<Decision<BasicRobotMemory>>, Fault> {
        Ok(rooted_full_step(snap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, EventKind};
    use crate::graph::{complete, star, PortLabeledGraph};
    use std::collections::BTreeMap;

    fn rooted(robots: &[RobotSpec], at: usize) -> BTreeMap<u32, usize> {
        robots.iter().map(|r| (r.id, at)).collect()
    }

    fn settle_round(trace: &crate::engine::Trace, id: u32) -> Option<(u64, usize)> {
        trace.events.iter().find(|e| e.robot == id && e.kind == EventKind::Settled).map(|e| (e.round, e.node))
    }

    #[test]
    fn p3_two_robots() {
        let g = PortLabeledGraph::build_from_edge_list(3, &[(0, 1), (1, 2)], &[1, 1, 1]).unwrap();
        let robots = [RobotSpec::new(1, 1), RobotSpec::new(2, 1)];
        let out = run(&TprPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        assert_eq!(settle_round(&out.trace, 1), Some((1, 0)));
        assert_eq!(settle_round(&out.trace, 2), Some((2, 1)));
        assert!(out.stats.solved);
    }

    #[test]
    fn alternating_ring() {
        let g = PortLabeledGraph::build_from_edge_list(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], &[1, 2, 1, 2]).unwrap();
        let robots = [RobotSpec::new(1, 1), RobotSpec::new(2, 2)];
        let out = run(&TprPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        assert_eq!(out.config.placement, vec![0, 1]);
        assert_eq!(out.stats.rounds, 2);
    }

    #[test]
    fn matching_single_robot_settles_at_once() {
        let g = PortLabeledGraph::build_from_edge_list(2, &[(0, 1)], &[1, 1]).unwrap();
        let robots = [RobotSpec::new(7, 1)];
        let out = run(&TprPolicy, &g, &rooted(&robots, 1), &robots, 10).unwrap();
        assert_eq!(out.stats.rounds, 1);
        assert_eq!(out.config.placement, vec![1]);
    }

    #[test]
    fn star_from_center() {
        let g = star(3, 1);
        let robots: Vec<_> = (1..=4).map(|i| RobotSpec::new(i, 1)).collect();
        let out = run(&TprPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        assert!(out.stats.solved);
        assert!(out.stats.rounds <= 2 * 4);
    }

    #[test]
    fn p2_dfs_picks_matching_robot() {
        let g = PortLabeledGraph::build_from_edge_list(2, &[(0, 1)], &[1, 2]).unwrap();
        let robots = [RobotSpec::new(1, 2), RobotSpec::new(2, 1)];
        let out = run(&RootedFullPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        assert_eq!(out.config.placement, vec![1, 0]);
    }

    #[test]
    fn c4_dfs_within_four_m() {
        let g = PortLabeledGraph::build_from_edge_list(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], &[1, 2, 1, 2]).unwrap();
        let robots: Vec<_> = [1, 2, 1, 2].iter().enumerate().map(|(i, &c)| RobotSpec::new(i as u32 + 1, c)).collect();
        let out = run(&RootedFullPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        assert!(out.stats.solved);
        assert!(out.stats.rounds <= 16);
    }

    #[test]
    fn k4_dfs() {
        let g = complete(4, 1);
        let robots: Vec<_> = (1..=4).map(|i| RobotSpec::new(i, 1)).collect();
        let out = run(&RootedFullPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        assert!(out.stats.solved);
        assert!(out.stats.rounds <= 4 * 6);
    }

    #[test]
    fn settled_dfs_robot_records_parent_and_children() {
        let g = PortLabeledGraph::build_from_edge_list(3, &[(0, 1), (1, 2)], &[1, 1, 1]).unwrap();
        let robots: Vec<_> = (1..=3).map(|i| RobotSpec::new(i, 1)).collect();
        let out = run(&RootedFullPolicy, &g, &rooted(&robots, 0), &robots, 100).unwrap();
        let middle = out.config.state_of(2).unwrap();
        assert_eq!(middle.parent, Some(0));
        assert_eq!(middle.child, vec![false, true]);
        let root = out.config.state_of(1).unwrap();
        assert_eq!(root.parent, None);
        assert_eq!(root.child, vec![true]);
    }
}

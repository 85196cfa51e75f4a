//! Dispersion when every node starts with exactly one robot (`k = n`).
//!
//! All robots run the meeting protocol through port 0. Each robot's port-0
//! neighbour is occupied, so every robot ends up sharing a node with at
//! least one other; the general policy then takes over from there.

use std::collections::BTreeMap;

use super::general::{GenMem, GeneralPolicy};
use super::meeting::{meet_node, meeting_rounds, MeetMem};
use crate::engine::{Decision, Dims, Fault, Memory, Policy, Resident, Snapshot};
use crate::graph::{NodeIx, PortLabeledGraph, RobotId, RobotSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DispMem {
    Meet(MeetMem),
    General(GenMem),
}

impl Memory for DispMem {
    fn bits(&self, d: &Dims) -> u64 {
        match self {
            DispMem::Meet(m) => m.bits(d),
            DispMem::General(m) => m.bits(d),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            DispMem::Meet(m) => m.tag(),
            DispMem::General(m) => m.tag(),
        }
    }

    fn is_final(&self) -> bool {
        matches!(self, DispMem::General(m) if m.is_final())
    }

    fn phase(&self) -> &'static str {
        match self {
            DispMem::Meet(m) if m.done() => "phase1",
            DispMem::Meet(m) => m.phase(),
            DispMem::General(m) => m.phase(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum DispersedError {
    #[error("needs one robot per node, got {k} robots on {n} nodes")]
    NotOnePerNode { n: usize, k: usize },
    #[error("robot {0} exceeds the id bound")]
    IdOutOfRange(RobotId),
}

#[derive(Debug, Clone, Copy)]
pub struct DispersedPolicy {
    pub general: GeneralPolicy,
    pub max_id: RobotId,
}

impl DispersedPolicy {
    /// Checks that the start really is one robot per node.
    pub fn new(
        g: &PortLabeledGraph,
        robots: &[RobotSpec],
        start: &BTreeMap<RobotId, NodeIx>,
        max_id: RobotId,
    ) -> Result<Self, DispersedError> {
        let (n, k) = (g.node_count(), robots.len());
        let mut used = vec![false; n];
        for v in start.values() {
            if *v >= n || std::mem::replace(&mut used[*v], true) {
                return Err(DispersedError::NotOnePerNode { n, k });
            }
        }
        if k != n || start.len() != k {
            return Err(DispersedError::NotOnePerNode { n, k });
        }
        if let Some(r) = robots.iter().find(|r| r.id == 0 || r.id > max_id) {
            return Err(DispersedError::IdOutOfRange(r.id));
        }
        Ok(DispersedPolicy { general: GeneralPolicy { n, k }, max_id })
    }

    pub fn round_limit(&self, m: usize) -> u64 {
        meeting_rounds(self.max_id) + self.general.round_limit(m, self.max_id)
    }
}

impl Policy for DispersedPolicy {
    type Mem = DispMem;

    fn name(&self) -> &'static str {
        "dispersed_kn"
    }

    fn init(&self, spec: &RobotSpec) -> DispMem {
        DispMem::Meet(MeetMem::new(spec, self.max_id).expect("ids checked in new"))
    }

    fn compute(&self, snap: &Snapshot<'_, DispMem>) -> Result<Vec<Decision<DispMem>>, Fault> {
        let meeting: Vec<MeetMem> = snap
            .residents()
            .iter()
            .filter_map(|r| match r.mem {
                DispMem::Meet(m) if !m.done() => Some(m.clone()),
                _ => None,
            })
            .collect();
        if !meeting.is_empty() {
            if meeting.len() != snap.len() {
                return Err(Fault::new("DesyncDetected", "meeting robots share a node with later ones"));
            }
            let mut ms = meeting;
            let entries: Vec<_> = snap.residents().iter().map(|r| r.entry).collect();
            let outs = meet_node(&mut ms, &entries, |_| 0)?;
            return Ok(ms
                .into_iter()
                .zip(outs)
                .map(|(m, (action, events))| Decision { mem: DispMem::Meet(m), action, events })
                .collect());
        }
        let gens: Vec<GenMem> = snap
            .residents()
            .iter()
            .map(|r| match r.mem {
                DispMem::Meet(m) => GenMem::new(&RobotSpec::new(m.id, m.color)),
                DispMem::General(g) => g.clone(),
            })
            .collect();
        let residents: Vec<Resident<'_, GenMem>> = snap
            .residents()
            .iter()
            .zip(&gens)
            .map(|(r, m)| Resident { spec: r.spec, mem: m, entry: r.entry })
            .collect();
        let inner = Snapshot::new(snap.view, residents);
        let ds = self.general.compute(&inner)?;
        Ok(ds
            .into_iter()
            .map(|d| Decision { mem: DispMem::General(d.mem), action: d.action, events: d.events })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::graph::{generate, GenKind, GenParams};

    fn dispersed(g: &PortLabeledGraph, seed: u64) -> (Vec<RobotSpec>, BTreeMap<RobotId, NodeIx>) {
        let robots = RobotSpec::sample_feasible(g, g.node_count(), seed);
        // k = n, so robot i can start on node i-1.
        let start = robots.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        (robots, start)
    }

    #[test]
    fn refuses_shared_start() {
        let g = generate(GenKind::Path, &GenParams::n(3), 1).unwrap();
        let robots: Vec<RobotSpec> = (1..=3).map(|i| RobotSpec::new(i, g.color(0))).collect();
        let start = BTreeMap::from([(1, 0), (2, 0), (3, 1)]);
        assert!(matches!(DispersedPolicy::new(&g, &robots, &start, 3), Err(DispersedError::NotOnePerNode { .. })));
    }

    #[test]
    fn ring_and_random_graphs_solve() {
        for (seed, kind) in [(1, GenKind::Ring), (2, GenKind::RandomConnected), (3, GenKind::Tree), (4, GenKind::Path)]
        {
            let g = generate(kind, &GenParams::n(10).colors(3).edges(15), seed).unwrap();
            let (robots, start) = dispersed(&g, seed);
            let p = DispersedPolicy::new(&g, &robots, &start, 10).unwrap();
            let out = run(&p, &g, &start, &robots, p.round_limit(g.edge_count())).unwrap();
            assert!(out.stats.solved, "{kind:?}");
            assert_eq!(out.stats.phase_rounds("meeting"), meeting_rounds(10));
        }
    }

    #[test]
    fn c4_and_p2() {
        for (n, edges) in [(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]), (2, vec![(0, 1)])] {
            let g = PortLabeledGraph::build_from_edge_list(n, &edges, &vec![1; n]).unwrap();
            let robots: Vec<RobotSpec> = (1..=n as RobotId).map(|i| RobotSpec::new(i, 1)).collect();
            let start = robots.iter().map(|r| (r.id, r.id as usize - 1)).collect();
            let p = DispersedPolicy::new(&g, &robots, &start, n as RobotId).unwrap();
            let out = run(&p, &g, &start, &robots, p.round_limit(g.edge_count())).unwrap();
            assert!(out.stats.solved);
            assert!(out.stats.phase_rounds("meeting") <= meeting_rounds(n as RobotId));
            assert!(out.trace.count(crate::engine::EventKind::Merged) > 0);
        }
    }

    #[test]
    #[ignore]
    fn stress() {
        let count: u64 = std::env::var("COUNT").ok().and_then(|s| s.parse().ok()).unwrap_or(100);
        for seed in 0..count {
            let n = 3 + (seed as usize * 7) % 38;
            let kind = [GenKind::RandomConnected, GenKind::Tree, GenKind::Ring, GenKind::Path][seed as usize % 4];
            let g = generate(
                kind,
                &GenParams::n(n).colors(1 + (seed % 3) as u32).edges((2 * n).min(n * (n - 1) / 2)),
                seed,
            )
            .unwrap();
            let (robots, start) = dispersed(&g, seed);
            let p = DispersedPolicy::new(&g, &robots, &start, n as RobotId).unwrap();
            let out = run(&p, &g, &start, &robots, p.round_limit(g.edge_count()))
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(out.stats.solved, "seed {seed}");
        }
    }
}

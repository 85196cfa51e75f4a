//! Dispersion from a general configuration with known `n` and `k`.
//!
//! A node that starts with two or more robots runs the rooted exploration
//! and gathering with just those robots; once they are back home they hold
//! a map of the whole graph. A traversal with a map walks it again and
//! again, pausing at home between walks for a time that grows with its
//! label, so any two of them eventually find one waiting for the other.
//! Every lone robot and every waiting traversal that a walk runs into joins
//! it. The traversal that ends up with all `k` robots sends each to its node.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use super::map::{moves, Hop, Map};
use super::{subsume, TraversalIdentity};
use crate::algo_rooted::phase3::gathered_tree;
use crate::algo_rooted::{step_node, RootedMem, State};
use crate::engine::{width, Action, Decision, Dims, EventKind, Fault, Memory, NodeView, Policy, Snapshot};
use crate::graph::{Color, Port, RobotId, RobotSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roam {
    pub ident: TraversalIdentity,
    pub map: Arc<Map>,
    pub tour: Arc<Vec<Hop>>,
    /// Current map entry.
    pub at: usize,
    /// Next hop of the tour; `tour.len()` while at home.
    pub pos: usize,
    /// Rounds still to wait at home before the next tour.
    pub wait: u64,
}

impl Roam {
    fn touring(&self) -> bool {
        self.pos < self.tour.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    /// Before the first round.
    Start,
    /// Alone at the start; waits to be collected.
    Wait,
    Explore {
        label: RobotId,
        inner: Box<RootedMem>,
    },
    Roam(Box<Roam>),
    Walk(VecDeque<Port>),
    Settled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenMem {
    pub id: RobotId,
    pub color: Color,
    pub body: Body,
}

impl GenMem {
    pub fn new(spec: &RobotSpec) -> Self {
        GenMem { id: spec.id, color: spec.color, body: Body::Start }
    }
}

impl Memory for GenMem {
    fn bits(&self, d: &Dims) -> u64 {
        let base = d.id_bits() + d.color_bits() + 3;
        base + match &self.body {
            Body::Start | Body::Wait | Body::Settled => 0,
            Body::Explore { inner, .. } => d.id_bits() + inner.bits(d),
            Body::Roam(r) => {
                let ix = width(r.map.len() as u64 + 1);
                r.map.bits(d)
                    + r.tour.len() as u64 * (d.port_bits() + ix)
                    + d.id_bits()
                    + width(d.k as u64 + 1)
                    + 2 * ix
                    + width(r.wait + 1)
            }
            Body::Walk(route) => route.len() as u64 * d.port_bits(),
        }
    }

    fn tag(&self) -> &'static str {
        match &self.body {
            Body::Start => "start",
            Body::Wait => "wait",
            Body::Explore { inner, .. } => inner.tag(),
            Body::Roam(_) => "roam",
            Body::Walk(_) => "walk",
            Body::Settled => "settled",
        }
    }

    fn is_final(&self) -> bool {
        self.body == Body::Settled
    }

    fn phase(&self) -> &'static str {
        match &self.body {
            Body::Start | Body::Wait => "wait",
            Body::Explore { inner, .. } => inner.phase(),
            Body::Roam(_) => "collect",
            Body::Walk(_) | Body::Settled => "disperse",
        }
    }
}

/// General-configuration dispersion; robots know `n` and `k`.
#[derive(Debug, Clone, Copy)]
pub struct GeneralPolicy {
    pub n: usize,
    pub k: usize,
}

impl GeneralPolicy {
    /// Upper bound on the moves of one tour: a map has at most `3n` entries.
    pub fn tour_bound(&self) -> u64 {
        6 * self.n as u64
    }

    /// Pause at home after each tour; labels differ, so pauses differ by at
    /// least two whole tours.
    pub fn pause(&self, label: RobotId) -> u64 {
        (label as u64 + 1) * 2 * self.tour_bound()
    }

    /// Default round budget: exploration by the smallest possible traversal
    /// (two robots), then one full cycle of the slowest schedule per merge.
    pub fn round_limit(&self, m: usize, max_id: RobotId) -> u64 {
        let c = self.n.div_ceil(2).max(1) as u64;
        let explore = 64 * (24 * c + 2) * m.max(1) as u64;
        let collect = self.k as u64 * (self.pause(max_id) + 2 * self.tour_bound());
        explore + collect
    }
}

type Out = (Action, Vec<(EventKind, String)>);

impl Policy for GeneralPolicy {
    type Mem = GenMem;

    fn name(&self) -> &'static str {
        "general"
    }

    fn init(&self, spec: &RobotSpec) -> GenMem {
        GenMem::new(spec)
    }

    fn compute(&self, snap: &Snapshot<'_, GenMem>) -> Result<Vec<Decision<GenMem>>, Fault> {
        let mut ms: Vec<GenMem> = snap.residents().iter().map(|r| r.mem.clone()).collect();
        let entries: Vec<Option<Port>> = snap.residents().iter().map(|r| r.entry).collect();
        let mut outs: Vec<Option<Out>> = vec![None; ms.len()];

        if ms.iter().any(|m| m.body == Body::Start) {
            let label = ms.iter().map(|m| m.id).min().expect("robots present");
            let alone = ms.len() == 1;
            for m in ms.iter_mut() {
                m.body = if alone {
                    Body::Wait
                } else {
                    Body::Explore { label, inner: Box::new(RootedMem::new(&RobotSpec::new(m.id, m.color))) }
                };
            }
        }

        let labels: BTreeSet<RobotId> = ms
            .iter()
            .filter_map(|m| match &m.body {
                Body::Explore { label, .. } => Some(*label),
                _ => None,
            })
            .collect();
        for label in labels {
            let idx: Vec<usize> = (0..ms.len())
                .filter(|&i| matches!(&ms[i].body, Body::Explore { label: l, .. } if *l == label))
                .collect();
            self.explore(&mut ms, &entries, &idx, label, &snap.view, &mut outs)?;
        }

        let gather: Vec<usize> =
            (0..ms.len()).filter(|&i| matches!(ms[i].body, Body::Roam(_) | Body::Wait) && outs[i].is_none()).collect();
        if gather.iter().any(|&i| matches!(ms[i].body, Body::Roam(_))) {
            self.roam(&mut ms, &gather, &mut outs)?;
        }

        for i in 0..ms.len() {
            if outs[i].is_some() {
                continue;
            }
            outs[i] = Some(match &mut ms[i].body {
                Body::Walk(route) => match route.pop_front() {
                    Some(p) => (Action::Exit(p), Vec::new()),
                    None => {
                        ms[i].body = Body::Settled;
                        (Action::Stay, Vec::new())
                    }
                },
                _ => (Action::Stay, Vec::new()),
            });
        }
        Ok(ms
            .into_iter()
            .zip(outs)
            .map(|(mem, o)| {
                let (action, events) = o.expect("every robot decided");
                Decision { mem, action, events }
            })
            .collect())
    }
}

impl GeneralPolicy {
    /// One rooted round for the robots of one traversal; hands over to the
    /// map walk once they are all home again.
    fn explore(
        &self,
        ms: &mut [GenMem],
        entries: &[Option<Port>],
        idx: &[usize],
        label: RobotId,
        view: &NodeView,
        outs: &mut [Option<Out>],
    ) -> Result<(), Fault> {
        let mut inner: Vec<RootedMem> = idx
            .iter()
            .map(|&i| {
                let Body::Explore { inner, .. } = &ms[i].body else { unreachable!("filtered by label") };
                let mut m = (**inner).clone();
                m.round += 1;
                if entries[i].is_some() {
                    m.pent = entries[i];
                }
                m
            })
            .collect();
        let home = inner.iter().any(|m| m.state == State::OsciHead && m.head.as_ref().is_some_and(|h| h.done));
        if home {
            let tree = gathered_tree(&inner)?;
            let map = Map::from_tree(&tree);
            let tour = map.tour();
            if moves(&tour) as u64 > self.tour_bound() {
                return Err(Fault::new("DesyncDetected", format!("tour of {} moves", moves(&tour))));
            }
            let roam = Roam {
                ident: TraversalIdentity { treelabel: label, count: idx.len() as u32 },
                map: Arc::new(map),
                tour: Arc::new(tour),
                at: 0,
                pos: 0,
                wait: 0,
            };
            for &i in idx {
                ms[i].body = Body::Roam(Box::new(roam.clone()));
            }
            return Ok(());
        }
        let res = step_node(&mut inner, view, Some(self.n))?;
        for ((&i, m), o) in idx.iter().zip(inner).zip(res) {
            ms[i].body = Body::Explore { label, inner: Box::new(m) };
            outs[i] = Some((o.action, o.events));
        }
        Ok(())
    }

    /// Merges every walking traversal and lone robot here, then moves on.
    fn roam(&self, ms: &mut [GenMem], idx: &[usize], outs: &mut [Option<Out>]) -> Result<(), Fault> {
        let mut groups: BTreeMap<RobotId, Roam> = BTreeMap::new();
        let mut lone = Vec::new();
        for &i in idx {
            match &ms[i].body {
                Body::Roam(r) => {
                    groups.entry(r.ident.treelabel).or_insert_with(|| (**r).clone());
                }
                _ => lone.push(ms[i].id),
            }
        }
        // A walking traversal keeps its place in its walk; among several,
        // the one that wins the merge does.
        let walking: Vec<&Roam> = groups.values().filter(|r| r.touring()).collect();
        let pick = if walking.is_empty() { groups.values().collect::<Vec<_>>() } else { walking };
        let base_label = pick.iter().map(|r| r.ident).reduce(subsume).expect("a walker is here").treelabel;
        let mut base = groups[&base_label].clone();
        let mut ident = groups.values().map(|r| r.ident).reduce(subsume).expect("a walker is here");
        for &id in &lone {
            ident = subsume(ident, TraversalIdentity { treelabel: id, count: 1 });
        }
        ident.count = groups.values().map(|r| r.ident.count).sum::<u32>() + lone.len() as u32;
        let merged = groups.len() > 1 || !lone.is_empty();
        base.ident = ident;

        let (action, next) = if ident.count as usize == self.k {
            (None, self.disperse(ms, idx, &base)?)
        } else {
            (Some(self.walk(&mut base)), Vec::new())
        };
        let mut next = next.into_iter();
        for &i in idx {
            let mut ev = Vec::new();
            if merged {
                ev.push((EventKind::Merged, format!("label={} count={}", ident.treelabel, ident.count)));
            }
            match action {
                Some(a) => {
                    ms[i].body = Body::Roam(Box::new(base.clone()));
                    outs[i] = Some((a, ev));
                }
                None => {
                    let (body, a) = next.next().expect("one route per robot");
                    ms[i].body = body;
                    outs[i] = Some((a, ev));
                }
            }
        }
        Ok(())
    }

    /// Next move of a traversal's schedule.
    fn walk(&self, r: &mut Roam) -> Action {
        if !r.touring() {
            if r.wait > 0 {
                r.wait -= 1;
                return Action::Stay;
            }
            r.pos = 0;
        }
        while r.pos < r.tour.len() {
            let (port, to) = r.tour[r.pos];
            r.at = to;
            r.pos += 1;
            if r.pos == r.tour.len() {
                r.wait = self.pause(r.ident.treelabel);
            }
            if let Some(p) = port {
                return Action::Exit(p);
            }
        }
        Action::Stay
    }

    /// Every robot is here: give each the first free node of its color.
    fn disperse(&self, ms: &[GenMem], idx: &[usize], r: &Roam) -> Result<Vec<(Body, Action)>, Fault> {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by_key(|&i| ms[i].id);
        let mut taken = vec![false; r.map.len()];
        let mut plan: BTreeMap<usize, (Body, Action)> = BTreeMap::new();
        for i in order {
            let dest = (0..r.map.len())
                .find(|&e| !taken[e] && r.map.entries[e].required && r.map.entries[e].color == ms[i].color)
                .ok_or_else(|| {
                    Fault::new(
                        "InfeasibleAssignment",
                        format!("no free node of color {} for {}", ms[i].color, ms[i].id),
                    )
                })?;
            taken[dest] = true;
            let mut route: VecDeque<Port> = r.map.route(r.at, dest).into_iter().filter_map(|h| h.0).collect();
            plan.insert(
                i,
                match route.pop_front() {
                    Some(p) => (Body::Walk(route), Action::Exit(p)),
                    None => (Body::Settled, Action::Stay),
                },
            );
        }
        Ok(idx.iter().map(|i| plan.remove(i).expect("planned")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::graph::{generate, GenKind, GenParams, PortLabeledGraph};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(n: usize, colors: &[Color]) -> PortLabeledGraph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        PortLabeledGraph::build_from_edge_list(n, &edges, colors).unwrap()
    }

    fn solve(
        g: &PortLabeledGraph,
        robots: &[RobotSpec],
        start: &BTreeMap<RobotId, usize>,
    ) -> crate::engine::RunOutcome<GenMem> {
        let p = GeneralPolicy { n: g.node_count(), k: robots.len() };
        let out = run(&p, g, start, robots, 50_000_000).unwrap_or_else(|e| panic!("{e}"));
        assert!(out.stats.solved);
        out
    }

    #[test]
    fn two_sources_end_as_one_traversal() {
        let g = ring(8, &[1; 8]);
        let robots: Vec<RobotSpec> = (1..=5).map(|i| RobotSpec::new(i, 1)).collect();
        let start = BTreeMap::from([(1, 0), (2, 0), (3, 0), (4, 4), (5, 4)]);
        let out = solve(&g, &robots, &start);
        let labels: BTreeSet<&str> = out
            .trace
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Merged)
            .filter_map(|e| e.detail.split_whitespace().next())
            .collect();
        assert_eq!(labels.into_iter().next_back(), Some("label=1"));
    }

    #[test]
    fn all_nodes_covered_from_two_sources() {
        let g = ring(6, &[1, 2, 3, 1, 2, 3]);
        let robots: Vec<RobotSpec> =
            [1, 2, 3, 1, 2, 3].iter().enumerate().map(|(i, &c)| RobotSpec::new(i as u32 + 1, c)).collect();
        let start = BTreeMap::from([(1, 0), (2, 0), (3, 0), (4, 3), (5, 3), (6, 3)]);
        solve(&g, &robots, &start);
    }

    #[test]
    fn two_pairs_and_lone_robots() {
        let g = generate(GenKind::RandomConnected, &GenParams::n(12).colors(2).edges(18), 4).unwrap();
        let robots = RobotSpec::sample_feasible(&g, 6, 4);
        let start = BTreeMap::from([(1, 0), (2, 0), (3, 7), (4, 7), (5, 3), (6, 10)]);
        solve(&g, &robots, &start);
    }

    #[test]
    fn random_general_configurations() {
        for seed in 0..16u64 {
            let n = 6 + seed as usize % 12;
            let g = generate(GenKind::RandomConnected, &GenParams::n(n).colors(2).edges(n + 4), seed).unwrap();
            let k = 3 + seed as usize % (n - 2);
            let robots = RobotSpec::sample_feasible(&g, k, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut start: BTreeMap<RobotId, usize> = robots.iter().map(|r| (r.id, rng.gen_range(0..n))).collect();
            let first = start[&1];
            start.insert(2, first);
            solve(&g, &robots, &start);
        }
    }

    /// Random configuration with at least one node holding two robots.
    pub(crate) fn general_case(seed: u64) -> (PortLabeledGraph, Vec<RobotSpec>, BTreeMap<RobotId, usize>) {
        let n = 4 + (seed as usize * 7) % 40;
        let k = if seed.is_multiple_of(3) { n } else { 2 + (seed as usize * 5) % (n - 1) };
        let kind = [GenKind::RandomConnected, GenKind::Tree, GenKind::Ring, GenKind::Path][seed as usize % 4];
        let g =
            generate(kind, &GenParams::n(n).colors(1 + (seed % 3) as u32).edges((2 * n).min(n * (n - 1) / 2)), seed)
                .unwrap();
        let robots = RobotSpec::sample_feasible(&g, k, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let spots = 1 + rng.gen_range(0..k);
        let mut start: BTreeMap<RobotId, usize> =
            robots.iter().map(|r| (r.id, rng.gen_range(0..n.min(spots * 2)))).collect();
        let first = start[&robots[0].id];
        start.insert(robots[1].id, first);
        (g, robots, start)
    }

    #[test]
    #[ignore]
    fn stress() {
        let count: u64 = std::env::var("COUNT").ok().and_then(|s| s.parse().ok()).unwrap_or(200);
        let mut fails = 0;
        let mut worst = 0f64;
        for seed in 0..count {
            let (g, robots, start) = general_case(seed);
            let p = GeneralPolicy { n: g.node_count(), k: robots.len() };
            match run(&p, &g, &start, &robots, 200_000_000) {
                Ok(o) if o.stats.solved => {
                    let m = g.edge_count() as f64;
                    let per = o.stats.rounds as f64 / ((g.node_count() as f64 / robots.len() as f64).ceil() * m);
                    worst = worst.max(per);
                }
                Ok(_) => {
                    fails += 1;
                    eprintln!("seed {seed}: unsolved");
                }
                Err(e) => {
                    fails += 1;
                    let s = e.to_string();
                    eprintln!("seed {seed}: {}", &s[..s.len().min(200)]);
                }
            }
        }
        eprintln!("worst rounds / (ceil(n/k) m) = {worst:.1}");
        assert_eq!(fails, 0);
    }
}

//! Omniscient checks over a rooted run. The auditor sees real node indices,
//! which robots never do, and uses them to map every group's keys onto the
//! graph.

use std::collections::{BTreeMap, BTreeSet};

use super::phase3::Plan;
use super::records::{Group, GroupNum, Key, Uplink};
use super::{RootedMem, Stage, State};
use crate::engine::Configuration;
use crate::graph::{NodeIx, PortLabeledGraph, RobotId};

/// Checks that must never fail.
pub const HARD: [&str; 10] = [
    "group_tree",
    "group_size",
    "tour_length",
    "source_count",
    "partition",
    "supertree",
    "source_robots",
    "assignment",
    "stage1_occupancy",
    "exact_placement",
];

#[derive(Debug, Clone, Default)]
pub struct CheckTally {
    pub checked: u64,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub checks: BTreeMap<&'static str, CheckTally>,
    /// Completed groups whose required count left `[2c, 4c]`.
    pub size_outliers: Vec<String>,
    /// Group count at the end of exploration against `k / 2`.
    pub group_counts: Vec<(usize, usize)>,
}

impl AuditReport {
    pub fn hard_violations(&self) -> usize {
        self.checks.values().map(|t| t.violations.len()).sum()
    }

    pub fn checked(&self, name: &str) -> u64 {
        self.checks.get(name).map_or(0, |t| t.checked)
    }

    fn pass(&mut self, name: &'static str) {
        self.checks.entry(name).or_default().checked += 1;
    }

    fn fail(&mut self, name: &'static str, round: u64, what: String) {
        let t = self.checks.entry(name).or_default();
        t.checked += 1;
        if t.violations.len() < 16 {
            t.violations.push(format!("round {round}: {what}"));
        }
    }

    fn check(&mut self, name: &'static str, round: u64, ok: bool, what: impl FnOnce() -> String) {
        if ok {
            self.pass(name);
        } else {
            self.fail(name, round, what());
        }
    }
}

pub struct RootedAuditor<'a> {
    g: &'a PortLabeledGraph,
    k: usize,
    pub report: AuditReport,
    /// Real node of every required or helper key at the end of exploration.
    nodes: BTreeMap<(GroupNum, Key), NodeIx>,
    roots: BTreeMap<GroupNum, NodeIx>,
    seen_head: bool,
    seen_plan: bool,
    seen_t1: bool,
}

impl<'a> RootedAuditor<'a> {
    pub fn new(g: &'a PortLabeledGraph, k: usize) -> Self {
        RootedAuditor {
            g,
            k,
            report: AuditReport::default(),
            nodes: BTreeMap::new(),
            roots: BTreeMap::new(),
            seen_head: false,
            seen_plan: false,
            seen_t1: false,
        }
    }

    pub fn observe(&mut self, c: &Configuration<RootedMem>) {
        if c.states.iter().any(|m| m.iteration > 1 && m.round == 0) {
            // A restart wipes every attempt-level observation.
            self.seen_head = false;
            self.seen_plan = false;
            self.seen_t1 = false;
        }
        for (i, m) in c.states.iter().enumerate() {
            if m.stage == Stage::Explore && matches!(m.state, State::Leader | State::Oscillating) {
                self.group_shape(c, i, m);
            }
        }
        if !self.seen_head {
            if let Some(h) = c.states.iter().position(|m| m.state == State::OsciHead) {
                self.seen_head = true;
                self.exploration_end(c, h);
            }
        }
        let done = c.states.iter().position(|m| m.head.as_ref().is_some_and(|h| h.done) && !m.pack.abort);
        if let Some(h) = done {
            self.gathered(c, h);
        }
        if !self.seen_plan && c.states.iter().any(|m| m.p3.is_some()) {
            self.seen_plan = true;
            self.assignment(c);
        }
        if !self.seen_t1 {
            if let Some(p) = c.states.iter().find_map(|m| m.p3.as_deref()) {
                if p.round == p.t1 {
                    self.seen_t1 = true;
                    self.stage1(c);
                }
            }
        }
    }

    /// Call once the run has ended.
    pub fn finish(&mut self, c: &Configuration<RootedMem>) {
        if !self.seen_plan {
            return;
        }
        let round = c.round;
        for (i, m) in c.states.iter().enumerate() {
            let Some(p) = m.p3.as_deref() else { continue };
            let want = self.nodes.get(&(p.core.dsg_gr, p.core.dsg_key)).copied();
            let at = c.placement[i];
            self.report.check("exact_placement", round, want == Some(at), || {
                format!("robot {} at node {at}, assigned {want:?}", m.id)
            });
        }
    }

    fn group_shape(&mut self, c: &Configuration<RootedMem>, i: usize, m: &RootedMem) {
        let Some(g) = m.guard.group.as_deref() else { return };
        let round = c.round;
        let cc = m.c as usize;
        let (req, help) = (g.required_count(), g.helper_count());
        self.report.check("group_size", round, g.len() <= 6 * cc && help < 2 * cc.max(1) + 1 && req <= 6 * cc, || {
            format!("group {} of robot {}: {} records, {req} required, {help} helpers, c={cc}", g.gr_num, m.id, g.len())
        });
        self.report.check("tour_length", round, g.euler_tour().len() <= 12 * cc, || {
            format!("group {} tour of {} steps", g.gr_num, g.euler_tour().len())
        });
        if m.state == State::Oscillating && m.stage == Stage::Explore && !(2 * cc..=4 * cc).contains(&req) {
            let note = format!("robot {} group {} required {req} c={cc}", m.id, g.gr_num);
            if self.report.size_outliers.last() != Some(&note) && self.report.size_outliers.len() < 64 {
                self.report.size_outliers.push(note);
            }
        }
        let (Some(k), true) = (m.guard.at, m.guard.route.is_empty()) else { return };
        if !g.records.contains_key(&k) {
            self.report.fail("group_tree", round, format!("robot {} stands on missing key {k}", m.id));
            return;
        }
        // Climb to the root through recorded parent ports, then check the
        // whole recorded tree against the graph.
        let mut node = c.placement[i];
        let mut key = k;
        while key != g.root {
            let Some(port) = g.get(key).parent else {
                self.report.fail("group_tree", round, format!("key {key} of group {} has no parent port", g.gr_num));
                return;
            };
            if port >= self.g.degree(node) {
                self.report.fail("group_tree", round, format!("parent port {port} invalid at node {node}"));
                return;
            }
            node = self.g.neighbor(node, port);
            key = g.parent_key(key).expect("non-root");
        }
        match map_group(self.g, g, node) {
            Ok(_) => self.report.pass("group_tree"),
            Err(e) => self.report.fail("group_tree", round, format!("group {} of robot {}: {e}", g.gr_num, m.id)),
        }
    }

    fn exploration_end(&mut self, c: &Configuration<RootedMem>, h: usize) {
        let round = c.round;
        let m = &c.states[h];
        if m.pack.abort {
            return;
        }
        let s = c.placement[h];
        let here = c.placement.iter().filter(|&&v| v == s).count();
        self.report.check("source_robots", round, here >= 2, || format!("{here} robots at the source"));
        if let Some(g) = m.guard.group.as_deref() {
            let src = g.records.values().find(|r| r.source);
            self.report.check("source_count", round, src.is_some_and(|r| r.count as usize >= self.g.degree(s)), || {
                format!("source count {:?} of degree {}", src.map(|r| r.count), self.g.degree(s))
            });
        }
    }

    fn gathered(&mut self, c: &Configuration<RootedMem>, h: usize) {
        if !self.nodes.is_empty() {
            return;
        }
        let round = c.round;
        let s = c.placement[h];
        let groups: BTreeMap<GroupNum, &Group> =
            c.states.iter().filter_map(|m| m.guard.group.as_deref()).map(|g| (g.gr_num, g)).collect();
        let top = groups.values().find(|g| g.uplink == Uplink::Top).map(|g| g.gr_num);
        let Some(top) = top else {
            self.report.fail("supertree", round, "no top group".into());
            return;
        };
        self.report.group_counts.push((groups.len(), self.k));
        let mut stack = vec![(top, s)];
        let mut reached: BTreeSet<GroupNum> = BTreeSet::new();
        let mut owner: BTreeMap<NodeIx, GroupNum> = BTreeMap::new();
        let mut ok = true;
        while let Some((gr, root)) = stack.pop() {
            if !reached.insert(gr) {
                self.report.fail("supertree", round, format!("group {gr} reached twice"));
                ok = false;
                continue;
            }
            let Some(g) = groups.get(&gr) else {
                self.report.fail("supertree", round, format!("link to unknown group {gr}"));
                ok = false;
                continue;
            };
            let map = match map_group(self.g, g, root) {
                Ok(m) => m,
                Err(e) => {
                    self.report.fail("supertree", round, format!("group {gr}: {e}"));
                    ok = false;
                    continue;
                }
            };
            self.roots.insert(gr, root);
            for (&key, &v) in &map {
                self.nodes.insert((gr, key), v);
                if g.get(key).required {
                    if let Some(prev) = owner.insert(v, gr) {
                        self.report.fail("partition", round, format!("node {v} required by groups {prev} and {gr}"));
                        ok = false;
                    }
                }
            }
            for (key, link) in g.links() {
                let at = map[&key];
                let child_root = match link.port {
                    Some(p) if p < self.g.degree(at) => self.g.neighbor(at, p),
                    Some(p) => {
                        self.report.fail("supertree", round, format!("link port {p} invalid at node {at}"));
                        ok = false;
                        continue;
                    }
                    None => at,
                };
                if let (Some(p), Some(ch)) = (link.port, groups.get(&link.gr)) {
                    let back = self.g.link(at, p).back;
                    if ch.uplink != Uplink::Port(back) {
                        self.report.fail(
                            "supertree",
                            round,
                            format!("group {} uplink {:?} but entered via {back}", link.gr, ch.uplink),
                        );
                        ok = false;
                    }
                }
                stack.push((link.gr, child_root));
            }
        }
        if reached.len() != groups.len() {
            self.report.fail("supertree", round, format!("{} of {} groups reachable", reached.len(), groups.len()));
            ok = false;
        }
        if ok {
            self.report.pass("supertree");
        }
        let covered = owner.len();
        self.report.check("partition", round, covered == self.g.node_count(), || {
            format!("required sets cover {covered} of {} nodes", self.g.node_count())
        });
    }

    fn assignment(&mut self, c: &Configuration<RootedMem>) {
        let round = c.round;
        let mut used: BTreeMap<NodeIx, RobotId> = BTreeMap::new();
        for m in &c.states {
            let p = m.p3.as_deref().expect("plans are made together");
            let node = self.nodes.get(&(p.core.dsg_gr, p.core.dsg_key)).copied();
            let Some(v) = node else {
                self.report.fail("assignment", round, format!("robot {} assigned an unmapped key", m.id));
                continue;
            };
            if let Some(other) = used.insert(v, m.id) {
                self.report.fail("assignment", round, format!("robots {other} and {} share node {v}", m.id));
                continue;
            }
            let col = self.g.color(v);
            self.report.check("assignment", round, col == m.color, || {
                format!("robot {} of color {} assigned node {v} of color {col}", m.id, m.color)
            });
        }
    }

    fn stage1(&mut self, c: &Configuration<RootedMem>) {
        let round = c.round;
        let plans: Vec<&Plan> = c.states.iter().filter_map(|m| m.p3.as_deref()).collect();
        let top = plans[0].top.gr_num;
        // Parent of each group, recovered from the mapped roots.
        let parent: BTreeMap<GroupNum, GroupNum> =
            plans.iter().filter_map(|p| Some((p.core.stmp_gr.or(p.core.tmp_gr)?, p.parent_gr?))).collect();
        let dests: BTreeSet<GroupNum> = plans.iter().map(|p| p.core.dsg_gr).collect();
        let mut path: BTreeSet<GroupNum> = BTreeSet::new();
        for &d in &dests {
            let mut g = d;
            while g != top {
                path.insert(g);
                match parent.get(&g) {
                    Some(&p) => g = p,
                    None => {
                        self.report.fail("stage1_occupancy", round, format!("group {g} has no known parent"));
                        break;
                    }
                }
            }
        }
        for &w in &path {
            let Some(&root) = self.roots.get(&w) else { continue };
            let here: Vec<&Plan> = c
                .states
                .iter()
                .enumerate()
                .filter(|&(i, _)| c.placement[i] == root)
                .filter_map(|(_, m)| m.p3.as_deref())
                .filter(|p| p.core.stmp_gr == Some(w) || p.core.tmp_gr == Some(w))
                .collect();
            self.report.check("stage1_occupancy", round, !here.is_empty(), || format!("path group {w} is empty"));
            if dests.contains(&w) {
                let stmp = here.iter().filter(|p| p.core.stmp_gr == Some(w)).count();
                self.report.check("stage1_occupancy", round, stmp == 1, || {
                    format!("destination group {w} holds {stmp} staying robots")
                });
            }
        }
    }
}

/// Maps every key of `g` to a real node, given the node of its root, and
/// checks ports, colors and degrees on the way.
pub fn map_group(graph: &PortLabeledGraph, g: &Group, root: NodeIx) -> Result<BTreeMap<Key, NodeIx>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![(g.root, root)];
    let mut used = BTreeSet::new();
    while let Some((key, v)) = stack.pop() {
        let rec = g.records.get(&key).ok_or_else(|| format!("missing key {key}"))?;
        if rec.color != graph.color(v) || rec.degree as usize != graph.degree(v) {
            return Err(format!("key {key} at node {v}: recorded color/degree differ"));
        }
        if !used.insert(v) {
            return Err(format!("node {v} appears twice"));
        }
        out.insert(key, v);
        for &(p, ch) in &rec.children {
            if p >= graph.degree(v) {
                return Err(format!("child port {p} invalid at node {v}"));
            }
            let l = graph.link(v, p);
            if g.records.get(&ch).and_then(|r| r.parent) != Some(l.back) {
                return Err(format!("key {ch} parent port does not lead back to key {key}"));
            }
            stack.push((ch, l.node));
        }
    }
    if out.len() != g.len() {
        return Err(format!("{} of {} keys reachable from the root", out.len(), g.len()));
    }
    Ok(out)
}

/// Runs the rooted protocol from `source` under the auditor.
pub fn run_audited(
    policy: &super::RootedPolicy,
    g: &PortLabeledGraph,
    robots: &[crate::graph::RobotSpec],
    source: NodeIx,
    round_limit: u64,
) -> Result<(crate::engine::RunOutcome<RootedMem>, AuditReport), crate::engine::EngineError> {
    let initial: BTreeMap<RobotId, NodeIx> = robots.iter().map(|r| (r.id, source)).collect();
    let mut auditor = RootedAuditor::new(g, robots.len());
    let out = crate::engine::run_observed(policy, g, &initial, robots, round_limit, &mut |c| auditor.observe(c))?;
    auditor.finish(&out.config);
    Ok((out, auditor.report))
}

//! Dispersion predicate, brute-force placement oracle and bound checks.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::RoundStats;
use crate::graph::{Color, NodeIx, PortLabeledGraph, RobotId, RobotSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LadViolation {
    Collision { node: NodeIx, robots: Vec<RobotId> },
    ColorMismatch { robot: RobotId, node: NodeIx, robot_color: Color, node_color: Color },
    Unplaced { robot: RobotId },
    OffGraph { robot: RobotId, node: NodeIx },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub violations: Vec<LadViolation>,
}

impl Verdict {
    pub fn is_solved(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_solved() {
            return f.write_str("solved");
        }
        write!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            match v {
                LadViolation::Collision { node, robots } => write!(f, " collision@{node}{robots:?}")?,
                LadViolation::ColorMismatch { robot, node, .. } => write!(f, " color_mismatch r{robot}@{node}")?,
                LadViolation::Unplaced { robot } => write!(f, " unplaced r{robot}")?,
                LadViolation::OffGraph { robot, node } => write!(f, " off_graph r{robot}@{node}")?,
            }
        }
        Ok(())
    }
}

pub fn check_lad(g: &PortLabeledGraph, robots: &[RobotSpec], placement: &BTreeMap<RobotId, NodeIx>) -> Verdict {
    let mut violations = Vec::new();
    let mut at: BTreeMap<NodeIx, Vec<RobotId>> = BTreeMap::new();
    for r in robots {
        let Some(&v) = placement.get(&r.id) else {
            violations.push(LadViolation::Unplaced { robot: r.id });
            continue;
        };
        if v >= g.node_count() {
            violations.push(LadViolation::OffGraph { robot: r.id, node: v });
            continue;
        }
        if g.color(v) != r.color {
            violations.push(LadViolation::ColorMismatch {
                robot: r.id,
                node: v,
                robot_color: r.color,
                node_color: g.color(v),
            });
        }
        at.entry(v).or_default().push(r.id);
    }
    for (node, mut ids) in at {
        if ids.len() > 1 {
            ids.sort_unstable();
            violations.push(LadViolation::Collision { node, robots: ids });
        }
    }
    Verdict { violations }
}

/// Largest instance searched exhaustively by [`oracle_assignment`].
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// A placement solving the instance, if one exists. Up to
/// [`EXHAUSTIVE_LIMIT`] nodes this is a backtracking search that returns the
/// lexicographically first witness (robots by ascending id, nodes by
/// ascending index); beyond that robots take the lowest free node of their
/// color, which is exact because same-colored nodes are interchangeable.
pub fn oracle_assignment(g: &PortLabeledGraph, robots: &[RobotSpec]) -> Option<BTreeMap<RobotId, NodeIx>> {
    let mut sorted = robots.to_vec();
    sorted.sort_by_key(|r| r.id);
    if sorted.len() > g.node_count() {
        return None;
    }
    if g.node_count() <= EXHAUSTIVE_LIMIT {
        let mut used = vec![false; g.node_count()];
        let mut out = Vec::new();
        return search(g, &sorted, &mut used, &mut out).then(|| sorted.iter().map(|r| r.id).zip(out).collect());
    }
    let mut used = vec![false; g.node_count()];
    let mut out = BTreeMap::new();
    for r in &sorted {
        let v = (0..g.node_count()).find(|&v| !used[v] && g.color(v) == r.color)?;
        used[v] = true;
        out.insert(r.id, v);
    }
    Some(out)
}

fn search(g: &PortLabeledGraph, robots: &[RobotSpec], used: &mut [bool], out: &mut Vec<NodeIx>) -> bool {
    let Some(r) = robots.get(out.len()) else {
        return true;
    };
    for v in 0..g.node_count() {
        if used[v] || g.color(v) != r.color {
            continue;
        }
        used[v] = true;
        out.push(v);
        if search(g, robots, used, out) {
            return true;
        }
        out.pop();
        used[v] = false;
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundFamily {
    Tpr,
    RootedKn,
    RootedKnown,
    RootedUnknown,
    General,
    DispersedKn,
}

impl BoundFamily {
    pub const ALL: [BoundFamily; 6] = [
        BoundFamily::Tpr,
        BoundFamily::RootedKn,
        BoundFamily::RootedKnown,
        BoundFamily::RootedUnknown,
        BoundFamily::General,
        BoundFamily::DispersedKn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundFamily::Tpr => "tpr",
            BoundFamily::RootedKn => "rooted_kn",
            BoundFamily::RootedKnown => "rooted_known",
            BoundFamily::RootedUnknown => "rooted_unknown",
            BoundFamily::General => "general",
            BoundFamily::DispersedKn => "dispersed_kn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        BoundFamily::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Protocols that move the exploring group once per synchronization
    /// cycle of `24c+2` rounds.
    pub fn is_cycled(self) -> bool {
        !matches!(self, BoundFamily::Tpr | BoundFamily::RootedKn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub max_degree: usize,
}

impl BoundParams {
    pub fn of(g: &PortLabeledGraph, k: usize) -> Self {
        BoundParams { n: g.node_count(), k, m: g.edge_count(), max_degree: g.max_degree() }
    }

    /// ceil(n/k), at least 1.
    pub fn groups(&self) -> f64 {
        self.n.div_ceil(self.k.max(1)).max(1) as f64
    }

    pub fn log_k_delta(&self) -> f64 {
        log2g((self.k + self.max_degree) as f64)
    }
}

/// log2 guarded from below by 1.
pub fn log2g(x: f64) -> f64 {
    x.max(2.0).log2().max(1.0)
}

pub fn round_formula(family: BoundFamily, p: &BoundParams) -> f64 {
    let m = p.m.max(1) as f64;
    let c = p.groups();
    match family {
        BoundFamily::Tpr => p.n.max(1) as f64,
        BoundFamily::RootedKn => m,
        BoundFamily::RootedKnown | BoundFamily::General => c * m,
        BoundFamily::RootedUnknown => log2g(p.n as f64 / p.k.max(1) as f64 + 1.0) * c * m,
        BoundFamily::DispersedKn => log2g(p.k as f64) + c * m,
    }
}

pub fn memory_formula(family: BoundFamily, p: &BoundParams) -> f64 {
    match family {
        BoundFamily::Tpr | BoundFamily::RootedKn => p.log_k_delta(),
        _ => p.groups() * p.log_k_delta(),
    }
}

/// Default engine round limit: 64 times the round formula. Cycled protocols
/// pay up to `24c+2` rounds per move of the exploring group, so their
/// formula is scaled by 26 first.
pub fn default_round_limit(family: BoundFamily, p: &BoundParams) -> u64 {
    let scale = if family.is_cycled() { 26.0 } else { 1.0 };
    (64.0 * scale * round_formula(family, p)).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub family: BoundFamily,
    pub round_ratio: f64,
    pub bits_ratio: f64,
    pub budget: f64,
    pub pass: bool,
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bound={} round_ratio={:.3} bits_ratio={:.3} budget={} {}",
            self.family.name(),
            self.round_ratio,
            self.bits_ratio,
            self.budget,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

pub fn check_bound(stats: &RoundStats, family: BoundFamily, p: &BoundParams, budget: f64) -> BoundCheck {
    let round_ratio = stats.rounds as f64 / round_formula(family, p);
    let bits_ratio = stats.max_bits() as f64 / memory_formula(family, p);
    BoundCheck { family, round_ratio, bits_ratio, budget, pass: round_ratio <= budget && bits_ratio <= budget }
}

/// Measured constants `(rounds / round formula, bits / memory formula)`:
/// the worst case over the acceptance runs and the `bound_constants`
/// example grids, rounded up.
pub const BASELINES: [(BoundFamily, f64, f64); 6] = [
    (BoundFamily::Tpr, 1.6, 3.5),
    (BoundFamily::RootedKn, 2.8, 4.9),
    (BoundFamily::RootedKnown, 91.0, 110.0),
    (BoundFamily::RootedUnknown, 70.0, 150.0),
    (BoundFamily::General, 140.0, 90.0),
    (BoundFamily::DispersedKn, 470.0, 250.0),
];

/// Allowed growth of a measured constant over its baseline.
pub const REGRESSION_SLACK: f64 = 1.25;

pub fn baseline(family: BoundFamily) -> (f64, f64) {
    let b = BASELINES.iter().find(|b| b.0 == family).expect("every family has a baseline");
    (b.1, b.2)
}

/// `Err` names the constant that grew beyond the allowed slack.
pub fn check_regression(family: BoundFamily, round_c: f64, bits_c: f64) -> Result<(), String> {
    let (br, bb) = baseline(family);
    if round_c > br * REGRESSION_SLACK {
        return Err(format!("{}: round constant {round_c:.3} > {:.3}", family.name(), br * REGRESSION_SLACK));
    }
    if bits_c > bb * REGRESSION_SLACK {
        return Err(format!("{}: bits constant {bits_c:.3} > {:.3}", family.name(), bb * REGRESSION_SLACK));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, lower_bound, GenKind, GenParams};

    fn g112() -> PortLabeledGraph {
        PortLabeledGraph::build_from_edge_list(3, &[(0, 1), (1, 2)], &[1, 1, 2]).unwrap()
    }

    #[test]
    fn red_robot_on_red_node() {
        let g = lower_bound(10, 5).unwrap();
        let r = [RobotSpec::new(1, 2)];
        assert!(check_lad(&g, &r, &BTreeMap::from([(1, 9)])).is_solved());
    }

    #[test]
    fn collision_and_mismatch() {
        let g = g112();
        let r = [RobotSpec::new(1, 1), RobotSpec::new(2, 1)];
        let v = check_lad(&g, &r, &BTreeMap::from([(1, 0), (2, 0)]));
        assert_eq!(v.violations, vec![LadViolation::Collision { node: 0, robots: vec![1, 2] }]);
        let v = check_lad(&g, &r[..1], &BTreeMap::from([(1, 2)]));
        assert!(matches!(v.violations[..], [LadViolation::ColorMismatch { robot: 1, node: 2, .. }]));
    }

    #[test]
    fn witness_for_small_instance() {
        let r = [RobotSpec::new(1, 1), RobotSpec::new(2, 2)];
        assert_eq!(oracle_assignment(&g112(), &r), Some(BTreeMap::from([(1, 0), (2, 2)])));
        let single = PortLabeledGraph::build_from_edge_list(1, &[], &[1]).unwrap();
        assert_eq!(oracle_assignment(&single, &[RobotSpec::new(1, 2)]), None);
    }

    #[test]
    fn tpr_ratio_on_p50() {
        let g = generate(GenKind::Path, &GenParams::n(50), 0).unwrap();
        let stats = RoundStats { rounds: 70, ..Default::default() };
        let c = check_bound(&stats, BoundFamily::Tpr, &BoundParams::of(&g, 10), 4.0);
        assert!((c.round_ratio - 1.4).abs() < 1e-12);
        assert!(c.pass);
    }

    #[test]
    fn rooted_known_over_budget() {
        let p = BoundParams { n: 20, k: 5, m: 30, max_degree: 4 };
        let stats = RoundStats { rounds: 10 * 4 * 30, ..Default::default() };
        let c = check_bound(&stats, BoundFamily::RootedKnown, &p, 8.0);
        assert!((c.round_ratio - 10.0).abs() < 1e-12);
        assert!(!c.pass);
    }

    #[test]
    fn guards_keep_formulas_positive() {
        let p = BoundParams { n: 1, k: 1, m: 0, max_degree: 0 };
        for f in BoundFamily::ALL {
            assert!(round_formula(f, &p) >= 1.0, "{f:?}");
            assert!(memory_formula(f, &p) >= 1.0, "{f:?}");
        }
    }

    #[test]
    fn regression_slack() {
        let (r, b) = baseline(BoundFamily::Tpr);
        assert!(check_regression(BoundFamily::Tpr, r * 1.2, b).is_ok());
        assert!(check_regression(BoundFamily::Tpr, r * 1.3, b).is_err());
    }
}

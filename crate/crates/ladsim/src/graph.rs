//! Anonymous port-labeled colored graphs.
//!
//! Ports are 0-based: a node of degree `d` exposes ports `0..d`. Nodes are
//! indexed `0..n` internally, but robots never see those indices; they only
//! observe color, degree and the port they entered through.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Color = u32;
pub type Port = usize;
pub type NodeIx = usize;
pub type RobotId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph is disconnected: node {node} unreachable from node 0")]
    DisconnectedGraph { node: NodeIx },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: NodeIx, v: NodeIx },
    #[error("self-loop at node {node}")]
    SelfLoop { node: NodeIx },
    #[error("node {node} has color {color}, outside 1..={max}")]
    BadColorIndex { node: NodeIx, color: Color, max: u32 },
    #[error("node index {node} out of range for n = {n}")]
    NodeOutOfRange { node: NodeIx, n: usize },
    #[error("expected {expected} colors, got {got}")]
    ColorCount { expected: usize, got: usize },
    #[error("bad generator parameters: {0}")]
    BadParams(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{k} robots cannot fit on {n} nodes")]
    TooManyRobots { k: usize, n: usize },
}

/// One adjacency entry: the neighbor and the port number at the neighbor
/// that leads back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub node: NodeIx,
    pub back: Port,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortLabeledGraph {
    colors: Vec<Color>,
    adj: Vec<Vec<Link>>,
    palette: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PortAsymmetry { node: NodeIx, port: Port },
    DanglingPort { node: NodeIx, port: Port },
    SelfLoop { node: NodeIx, port: Port },
    ParallelEdge { node: NodeIx, port: Port },
    BadColorIndex { node: NodeIx, color: Color },
    Disconnected { node: NodeIx },
    Empty,
}

impl PortLabeledGraph {
    /// Builds a graph from an edge list. Ports at each node are handed out in
    /// the order the edges are listed.
    pub fn build_from_edge_list(n: usize, edges: &[(NodeIx, NodeIx)], colors: &[Color]) -> Result<Self, GraphError> {
        if colors.len() != n {
            return Err(GraphError::ColorCount { expected: n, got: colors.len() });
        }
        let palette = colors.iter().copied().max().unwrap_or(0);
        check_colors(colors, palette.min(n as u32).max(1))?;
        let mut adj: Vec<Vec<Link>> = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::NodeOutOfRange { node: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { node: u });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge { u, v });
            }
            let pu = adj[u].len();
            let pv = adj[v].len();
            adj[u].push(Link { node: v, back: pv });
            adj[v].push(Link { node: u, back: pu });
        }
        let g = PortLabeledGraph { colors: colors.to_vec(), adj, palette };
        if let Some(node) = g.first_unreachable() {
            return Err(GraphError::DisconnectedGraph { node });
        }
        Ok(g)
    }

    /// Raw constructor used by the parser and by tests that need broken
    /// graphs. No invariant is checked; call [`validate`](Self::validate).
    pub fn from_parts(colors: Vec<Color>, adj: Vec<Vec<Link>>, palette: u32) -> Self {
        PortLabeledGraph { colors, adj, palette }
    }

    pub fn node_count(&self) -> usize {
        self.colors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Number of colors `t` in the palette.
    pub fn palette(&self) -> u32 {
        self.palette
    }

    pub fn color(&self, v: NodeIx) -> Color {
        self.colors[v]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn degree(&self, v: NodeIx) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn link(&self, v: NodeIx, p: Port) -> Link {
        self.adj[v][p]
    }

    pub fn neighbor(&self, v: NodeIx, p: Port) -> NodeIx {
        self.adj[v][p].node
    }

    pub fn ports(&self, v: NodeIx) -> &[Link] {
        &self.adj[v]
    }

    /// Port at `u` leading to `v`, if adjacent.
    pub fn port_to(&self, u: NodeIx, v: NodeIx) -> Option<Port> {
        self.adj[u].iter().position(|l| l.node == v)
    }

    pub fn with_colors(&self, colors: &[Color]) -> Result<Self, GraphError> {
        if colors.len() != self.node_count() {
            return Err(GraphError::ColorCount { expected: self.node_count(), got: colors.len() });
        }
        let palette = colors.iter().copied().max().unwrap_or(1);
        check_colors(colors, palette.min(self.node_count() as u32).max(1))?;
        Ok(PortLabeledGraph { colors: colors.to_vec(), adj: self.adj.clone(), palette })
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.node_count()
    }

    pub fn is_ring(&self) -> bool {
        self.node_count() >= 3 && self.adj.iter().all(|a| a.len() == 2)
    }

    /// BFS distances from `src` over the underlying undirected graph.
    pub fn distances(&self, src: NodeIx) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut q = VecDeque::new();
        dist[src] = 0;
        q.push_back(src);
        while let Some(u) = q.pop_front() {
            for l in &self.adj[u] {
                if dist[l.node] == usize::MAX {
                    dist[l.node] = dist[u] + 1;
                    q.push_back(l.node);
                }
            }
        }
        dist
    }

    fn first_unreachable(&self) -> Option<NodeIx> {
        if self.node_count() == 0 {
            return None;
        }
        self.distances(0).iter().position(|&d| d == usize::MAX)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let n = self.node_count();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Violation::Empty);
            return out;
        }
        let max = self.palette.min(n as u32);
        for (v, &c) in self.colors.iter().enumerate() {
            if c == 0 || c > max {
                out.push(Violation::BadColorIndex { node: v, color: c });
            }
        }
        for v in 0..n {
            let mut targets = BTreeSet::new();
            for (p, l) in self.adj[v].iter().enumerate() {
                if l.node >= n {
                    out.push(Violation::DanglingPort { node: v, port: p });
                    continue;
                }
                if l.node == v {
                    out.push(Violation::SelfLoop { node: v, port: p });
                }
                if !targets.insert(l.node) {
                    out.push(Violation::ParallelEdge { node: v, port: p });
                }
                let back = self.adj[l.node].get(l.back);
                if back != Some(&Link { node: v, back: p }) {
                    out.push(Violation::PortAsymmetry { node: v, port: p });
                }
            }
        }
        if out.iter().all(|x| !matches!(x, Violation::DanglingPort { .. })) {
            if let Some(node) = self.first_unreachable() {
                out.push(Violation::Disconnected { node });
            }
        }
        out
    }

    /// Text form: header `n m t`, then `color v c` lines, then one
    /// `edge u pu v pv` line per edge with `u < v`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.node_count(), self.edge_count(), self.palette);
        for (v, c) in self.colors.iter().enumerate() {
            let _ = writeln!(s, "color {v} {c}");
        }
        for (u, links) in self.adj.iter().enumerate() {
            for (pu, l) in links.iter().enumerate() {
                if u < l.node {
                    let _ = writeln!(s, "edge {u} {pu} {} {}", l.node, l.back);
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let perr = |line: usize, msg: &str| GraphError::Parse { line, msg: msg.to_string() };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| perr(hl, "header must be `n m t`"))?;
        if h.len() != 3 {
            return Err(perr(hl, "header must be `n m t`"));
        }
        let (n, m, t) = (h[0], h[1], h[2] as u32);
        if n == 0 || t == 0 || t as usize > n {
            return Err(perr(hl, "need n >= 1 and 1 <= t <= n"));
        }
        let mut colors: Vec<Option<Color>> = vec![None; n];
        let mut slots: Vec<Vec<Option<Link>>> = vec![Vec::new(); n];
        let mut edges = 0usize;
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let nums: Vec<usize> = f[1..]
                .iter()
                .map(|x| x.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| perr(ln, "non-numeric field"))?;
            match (f[0], nums.len()) {
                ("color", 2) => {
                    let (v, c) = (nums[0], nums[1] as u32);
                    if v >= n {
                        return Err(perr(ln, "node out of range"));
                    }
                    if c == 0 || c > t {
                        return Err(perr(ln, "color outside 1..=t"));
                    }
                    if colors[v].replace(c).is_some() {
                        return Err(perr(ln, "color given twice"));
                    }
                }
                ("edge", 4) => {
                    let (u, pu, v, pv) = (nums[0], nums[1], nums[2], nums[3]);
                    if u >= n || v >= n {
                        return Err(perr(ln, "node out of range"));
                    }
                    if u == v {
                        return Err(perr(ln, "self-loop"));
                    }
                    for (x, px, y, py) in [(u, pu, v, pv), (v, pv, u, pu)] {
                        let s = &mut slots[x];
                        if s.len() <= px {
                            s.resize(px + 1, None);
                        }
                        if s[px].is_some() {
                            return Err(perr(ln, "port used twice"));
                        }
                        s[px] = Some(Link { node: y, back: py });
                    }
                    edges += 1;
                }
                _ => return Err(perr(ln, "expected `color v c` or `edge u pu v pv`")),
            }
        }
        if edges != m {
            return Err(perr(hl, "edge count does not match header"));
        }
        let colors: Vec<Color> = colors
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| perr(hl, &format!("node {v} has no color"))))
            .collect::<Result<_, _>>()?;
        let mut adj = Vec::with_capacity(n);
        for (v, s) in slots.into_iter().enumerate() {
            let links: Option<Vec<Link>> = s.into_iter().collect();
            adj.push(links.ok_or_else(|| perr(hl, &format!("node {v} has a port gap")))?);
        }
        let g = PortLabeledGraph { colors, adj, palette: t };
        match g.validate().into_iter().next() {
            None => Ok(g),
            Some(v) => Err(perr(hl, &format!("invalid graph: {v:?}"))),
        }
    }
}

impl fmt::Display for PortLabeledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn check_colors(colors: &[Color], max: u32) -> Result<(), GraphError> {
    for (node, &color) in colors.iter().enumerate() {
        if color == 0 || color > max {
            return Err(GraphError::BadColorIndex { node, color, max });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RobotSpec {
    pub id: RobotId,
    pub color: Color,
}

impl RobotSpec {
    pub fn new(id: RobotId, color: Color) -> Self {
        RobotSpec { id, color }
    }

    /// `k` robots with ids `1..=k` whose colors copy those of `k` distinct
    /// nodes picked by `seed`, so the instance is always feasible.
    pub fn sample_feasible(g: &PortLabeledGraph, k: usize, seed: u64) -> Vec<RobotSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes: Vec<NodeIx> = (0..g.node_count()).collect();
        nodes.shuffle(&mut rng);
        nodes.iter().take(k).enumerate().map(|(i, &v)| RobotSpec::new(i as RobotId + 1, g.color(v))).collect()
    }
}

/// Per-color robot counts fit within per-color node counts.
pub fn feasible(g: &PortLabeledGraph, robots: &[RobotSpec]) -> Result<bool, GraphError> {
    let n = g.node_count();
    if robots.len() > n {
        return Err(GraphError::TooManyRobots { k: robots.len(), n });
    }
    let top = robots.iter().map(|r| r.color).chain(g.colors().iter().copied()).max().unwrap_or(0) as usize;
    let mut have = vec![0usize; top + 1];
    for &c in g.colors() {
        have[c as usize] += 1;
    }
    let mut need = vec![0usize; top + 1];
    for r in robots {
        need[r.color as usize] += 1;
    }
    Ok(need.iter().zip(&have).all(|(a, b)| a <= b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Path,
    Ring,
    Tree,
    RandomConnected,
    LowerBound,
}

impl GenKind {
    pub fn parse(s: &str) -> Option<GenKind> {
        Some(match s {
            "path" => GenKind::Path,
            "ring" => GenKind::Ring,
            "tree" => GenKind::Tree,
            "random_connected" => GenKind::RandomConnected,
            "lower_bound" => GenKind::LowerBound,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            GenKind::Path => "path",
            GenKind::Ring => "ring",
            GenKind::Tree => "tree",
            GenKind::RandomConnected => "random_connected",
            GenKind::LowerBound => "lower_bound",
        }
    }
}

/// Generator parameters. `m` is only read by `random_connected`, `k` only by
/// `lower_bound`. Colors are drawn uniformly from `1..=t` using the seed;
/// `lower_bound` ignores `t` and uses its fixed two-color scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub t: u32,
}

impl GenParams {
    pub fn n(n: usize) -> Self {
        GenParams { n, m: None, k: None, t: 1 }
    }

    pub fn colors(mut self, t: u32) -> Self {
        self.t = t;
        self
    }

    pub fn edges(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn group(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }
}

/// Port order: every generator lists its edges deterministically and ports
/// follow list order. Path and ring list `(i, i+1)` ascending (the ring then
/// closes with `(n-1, 0)`); trees attach node `i` to its parent for
/// ascending `i`; `random_connected` lists the tree edges first, then the
/// extra edges in draw order.
pub fn generate(kind: GenKind, params: &GenParams, seed: u64) -> Result<PortLabeledGraph, GraphError> {
    let n = params.n;
    if n == 0 {
        return Err(GraphError::BadParams("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = match kind {
        GenKind::Path => (1..n).map(|i| (i - 1, i)).collect::<Vec<_>>(),
        GenKind::Ring => {
            if n < 3 {
                return Err(GraphError::BadParams("ring needs n >= 3".into()));
            }
            let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            e.push((n - 1, 0));
            e
        }
        GenKind::Tree => random_tree(n, &mut rng),
        GenKind::RandomConnected => {
            let max = n * (n - 1) / 2;
            let m = params.m.unwrap_or(n - 1);
            if m + 1 < n || m > max {
                return Err(GraphError::BadParams(format!("m = {m} outside [{}, {max}]", n - 1)));
            }
            let mut e = random_tree(n, &mut rng);
            let mut present: BTreeSet<(usize, usize)> = e.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            let mut missing: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|p| !present.contains(p)).collect();
            missing.shuffle(&mut rng);
            for p in missing.into_iter().take(m - (n - 1)) {
                present.insert(p);
                e.push(p);
            }
            e
        }
        GenKind::LowerBound => {
            let k = params.k.ok_or_else(|| GraphError::BadParams("lower_bound needs k".into()))?;
            return lower_bound(n, k);
        }
    };
    let t = params.t.clamp(1, n as u32);
    let colors: Vec<Color> = (0..n).map(|_| rng.gen_range(1..=t)).collect();
    PortLabeledGraph::build_from_edge_list(n, &edges, &colors)
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    (1..n).map(|i| (rng.gen_range(0..i), i)).collect()
}

/// `n/k` groups of `k` nodes, each a clique minus two edges, chained by two
/// bridges. Every node is color 1 except the last, which is color 2.
pub fn lower_bound(n: usize, k: usize) -> Result<PortLabeledGraph, GraphError> {
    if k < 5 {
        return Err(GraphError::BadParams(format!("lower_bound needs k >= 5, got {k}")));
    }
    if n == 0 || !n.is_multiple_of(k) {
        return Err(GraphError::BadParams(format!("n = {n} is not a positive multiple of k = {k}")));
    }
    let groups = n / k;
    let mut edges = Vec::new();
    for l in 0..groups {
        let base = l * k;
        // 0-indexed: group nodes base..base+k; drop (first, last) and (second, second-to-last).
        let skip = [(base, base + k - 1), (base + 1, base + k - 2)];
        for a in base..base + k {
            for b in a + 1..base + k {
                if !skip.contains(&(a, b)) {
                    edges.push((a, b));
                }
            }
        }
        if l + 1 < groups {
            edges.push((base + k - 1, base + k));
            edges.push((base + k - 2, base + k + 1));
        }
    }
    let mut colors = vec![1; n];
    colors[n - 1] = 2;
    PortLabeledGraph::build_from_edge_list(n, &edges, &colors)
}

pub fn star(leaves: usize, color: Color) -> PortLabeledGraph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    PortLabeledGraph::build_from_edge_list(leaves + 1, &edges, &vec![color; leaves + 1]).expect("star is valid")
}

pub fn complete(n: usize, color: Color) -> PortLabeledGraph {
    let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    PortLabeledGraph::build_from_edge_list(n, &edges, &vec![color; n]).expect("clique is valid")
}

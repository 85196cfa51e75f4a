//! Flat `key = value` experiment configs.
//!
//! Unknown keys are errors. `echo` writes every key with its resolved
//! value, and parsing the echo gives back the same config.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Color, GenKind, NodeIx};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("key {key}: {msg}")]
    Value { key: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSource {
    Gen(GenKind),
    File(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RobotColors {
    /// A feasible random draw from the graph's colors.
    Sample,
    List(Vec<Color>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Start {
    Rooted(NodeIx),
    /// Robot `i` (ascending ids) on node `i`.
    Dispersed,
    /// One node per robot, ascending ids.
    Nodes(Vec<NodeIx>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Tpr,
    RootedKn,
    Rooted,
    General,
    DispersedKn,
    Gather,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Tpr,
        Algorithm::RootedKn,
        Algorithm::Rooted,
        Algorithm::General,
        Algorithm::DispersedKn,
        Algorithm::Gather,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tpr => "tpr",
            Algorithm::RootedKn => "rooted_kn",
            Algorithm::Rooted => "rooted",
            Algorithm::General => "general",
            Algorithm::DispersedKn => "dispersed_kn",
            Algorithm::Gather => "gather",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Limit {
    Auto,
    Rounds(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub graph: GraphSource,
    pub n: usize,
    /// Edge count for `random_connected`; `None` means a tree.
    pub m: Option<usize>,
    pub colors: u32,
    pub k: usize,
    pub robot_colors: RobotColors,
    pub start: Start,
    pub algorithm: Algorithm,
    pub n_known: bool,
    pub k_known: bool,
    pub round_limit: Limit,
    /// Rounds the gathering helper may use.
    pub gather_budget: Limit,
    /// Move script for the gathering helper; the median helper when unset.
    pub gather_script: Option<String>,
    /// Bound-check constant; the stored baseline plus slack when unset.
    pub budget: Option<f64>,
    pub seed: u64,
    pub trace_out: Option<String>,
    pub summary_out: Option<String>,
    /// Grid axes for sweep mode, by key name.
    pub sweep: BTreeMap<String, Vec<String>>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            graph: GraphSource::Gen(GenKind::Ring),
            n: 8,
            m: None,
            colors: 1,
            k: 4,
            robot_colors: RobotColors::Sample,
            start: Start::Rooted(0),
            algorithm: Algorithm::Rooted,
            n_known: true,
            k_known: true,
            round_limit: Limit::Auto,
            gather_budget: Limit::Auto,
            gather_script: None,
            budget: None,
            seed: 0,
            trace_out: None,
            summary_out: None,
            sweep: BTreeMap::new(),
        }
    }
}

/// Keys that sweep axes may vary.
pub const SWEEP_KEYS: [&str; 6] = ["n", "k", "m", "colors", "seed", "algorithm"];

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), i + 1).is_some() {
                return Err(ConfigError::Parse { line: i + 1, msg: format!("duplicate key {key}") });
            }
            c.set(key, value).map_err(|e| match e {
                ConfigError::Value { key, msg } => ConfigError::Parse { line: i + 1, msg: format!("{key}: {msg}") },
                e => e,
            })?;
        }
        Ok(c)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |msg: &str| ConfigError::Value { key: key.to_string(), msg: format!("{msg}, got {value:?}") };
        let opt = |v: &str| (v != "none" && !v.is_empty()).then(|| v.to_string());
        let limit = |v: &str| -> Result<Limit, ConfigError> {
            if v == "auto" {
                Ok(Limit::Auto)
            } else {
                v.parse().map(Limit::Rounds).map_err(|_| bad("expected `auto` or a round count"))
            }
        };
        let flag = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(bad("expected true or false")),
        };
        if let Some(axis) = key.strip_prefix("sweep.") {
            if !SWEEP_KEYS.contains(&axis) {
                return Err(bad(&format!("sweep axis must be one of {SWEEP_KEYS:?}")));
            }
            let values: Vec<String> =
                value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if values.is_empty() {
                return Err(bad("empty sweep axis"));
            }
            let mut probe = self.clone();
            for v in &values {
                probe.set(axis, v)?;
            }
            self.sweep.insert(axis.to_string(), values);
            return Ok(());
        }
        match key {
            "graph" => {
                self.graph = match value.strip_prefix("file:") {
                    Some(path) => GraphSource::File(path.to_string()),
                    None => GraphSource::Gen(GenKind::parse(value).ok_or_else(|| bad("unknown graph generator"))?),
                }
            }
            "n" => self.n = value.parse().map_err(|_| bad("expected a node count"))?,
            "m" => {
                self.m = match value {
                    "none" => None,
                    v => Some(v.parse().map_err(|_| bad("expected an edge count or none"))?),
                }
            }
            "colors" => self.colors = value.parse().map_err(|_| bad("expected a palette size"))?,
            "k" => self.k = value.parse().map_err(|_| bad("expected a robot count"))?,
            "robot_colors" => {
                self.robot_colors = match value {
                    "sample" => RobotColors::Sample,
                    v => RobotColors::List(parse_list(v).ok_or_else(|| bad("expected `sample` or a color list"))?),
                }
            }
            "start" => {
                self.start = if value == "dispersed" {
                    Start::Dispersed
                } else if let Some(v) = value.strip_prefix("rooted:") {
                    Start::Rooted(v.parse().map_err(|_| bad("expected rooted:<node>"))?)
                } else if let Some(v) = value.strip_prefix("nodes:") {
                    Start::Nodes(parse_list(v).ok_or_else(|| bad("expected nodes:<list>"))?)
                } else {
                    return Err(bad("expected rooted:<node>, dispersed or nodes:<list>"));
                }
            }
            "algorithm" => self.algorithm = Algorithm::parse(value).ok_or_else(|| bad("unknown algorithm"))?,
            "n_known" => self.n_known = flag(value)?,
            "k_known" => self.k_known = flag(value)?,
            "round_limit" => self.round_limit = limit(value)?,
            "gather_budget" => self.gather_budget = limit(value)?,
            "gather_script" => self.gather_script = opt(value),
            "budget" => {
                self.budget = match value {
                    "baseline" => None,
                    v => Some(
                        v.parse().ok().filter(|b: &f64| *b > 0.0).ok_or_else(|| bad("expected a positive number"))?,
                    ),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer seed"))?,
            "trace_out" => self.trace_out = opt(value),
            "summary_out" => self.summary_out = opt(value),
            _ => return Err(ConfigError::Value { key: key.to_string(), msg: "unknown key".into() }),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let limit = |l: &Limit| match l {
            Limit::Auto => "auto".to_string(),
            Limit::Rounds(r) => r.to_string(),
        };
        let opt = |o: &Option<String>| o.clone().unwrap_or_else(|| "none".into());
        let graph = match &self.graph {
            GraphSource::Gen(k) => k.name().to_string(),
            GraphSource::File(p) => format!("file:{p}"),
        };
        let colors = match &self.robot_colors {
            RobotColors::Sample => "sample".to_string(),
            RobotColors::List(l) => join(l),
        };
        let start = match &self.start {
            Start::Rooted(v) => format!("rooted:{v}"),
            Start::Dispersed => "dispersed".into(),
            Start::Nodes(l) => format!("nodes:{}", join(l)),
        };
        let _ = writeln!(s, "graph = {graph}");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "m = {}", self.m.map_or("none".to_string(), |m| m.to_string()));
        let _ = writeln!(s, "colors = {}", self.colors);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "robot_colors = {colors}");
        let _ = writeln!(s, "start = {start}");
        let _ = writeln!(s, "algorithm = {}", self.algorithm.name());
        let _ = writeln!(s, "n_known = {}", self.n_known);
        let _ = writeln!(s, "k_known = {}", self.k_known);
        let _ = writeln!(s, "round_limit = {}", limit(&self.round_limit));
        let _ = writeln!(s, "gather_budget = {}", limit(&self.gather_budget));
        let _ = writeln!(s, "gather_script = {}", opt(&self.gather_script));
        let _ = writeln!(s, "budget = {}", self.budget.map_or("baseline".to_string(), |b| format!("{b:?}")));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trace_out = {}", opt(&self.trace_out));
        let _ = writeln!(s, "summary_out = {}", opt(&self.summary_out));
        for (axis, values) in &self.sweep {
            let _ = writeln!(s, "sweep.{axis} = {}", values.join(","));
        }
        s
    }

    /// One config per cell of the sweep grid, axes varied in key order with
    /// the last axis fastest. Without axes, just this config.
    pub fn expand(&self) -> Vec<(Vec<(String, String)>, Config)> {
        let mut cells: Vec<(Vec<(String, String)>, Config)> = vec![(Vec::new(), self.clone())];
        for (axis, values) in &self.sweep {
            let mut next = Vec::new();
            for (coords, cfg) in &cells {
                for v in values {
                    let mut c = cfg.clone();
                    c.set(axis, v).expect("axis values were checked when parsed");
                    let mut co = coords.clone();
                    co.push((axis.clone(), v.clone()));
                    next.push((co, c));
                }
            }
            cells = next;
        }
        for (_, c) in &mut cells {
            c.sweep.clear();
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_rejects() {
        let c = Config::parse("graph = ring\nn = 8 # ring size\nk=4\nalgorithm = tpr\nstart = rooted:0\n").unwrap();
        assert_eq!(c.algorithm, Algorithm::Tpr);
        assert_eq!(c.n, 8);
        assert!(matches!(Config::parse("n = 8\nfoo = 1\n"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(Config::parse("n = 8\nn = 9\n"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(Config::parse("just words\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("sweep.n = 4,x\n"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn sweep_expands_in_grid_order() {
        let c = Config::parse("sweep.n = 8,16\nsweep.k = 2,4,8\n").unwrap();
        let cells = c.expand();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[0].1.k, cells[0].1.n), (2, 8));
        assert_eq!((cells[1].1.k, cells[1].1.n), (2, 16));
        assert_eq!((cells[5].1.k, cells[5].1.n), (8, 16));
        assert!(cells.iter().all(|(_, c)| c.sweep.is_empty()));
    }

    fn arb_config() -> impl Strategy<Value = Config> {
        (
            (0usize..5, 1usize..100, prop::option::of(1usize..300), 1u32..5, 1usize..50),
            (
                prop::option::of(prop::collection::vec(1u32..5, 1..6)),
                0usize..3,
                0usize..6,
                any::<bool>(),
                any::<bool>(),
            ),
            (
                prop::option::of(1u64..10_000),
                prop::option::of(0.5f64..500.0),
                any::<u64>(),
                prop::option::of("[a-z]{1,8}\\.txt"),
            ),
            prop::option::of(prop::collection::vec(1usize..64, 1..4)),
        )
            .prop_map(|((g, n, m, colors, k), (rc, st, alg, nk, kk), (lim, budget, seed, out), axis)| {
                let kinds =
                    [GenKind::Path, GenKind::Ring, GenKind::Tree, GenKind::RandomConnected, GenKind::LowerBound];
                let mut c = Config {
                    graph: GraphSource::Gen(kinds[g]),
                    n,
                    m,
                    colors,
                    k,
                    robot_colors: rc.map_or(RobotColors::Sample, RobotColors::List),
                    start: [Start::Rooted(n / 2), Start::Dispersed, Start::Nodes(vec![0, 1, 1])][st].clone(),
                    algorithm: Algorithm::ALL[alg],
                    n_known: nk,
                    k_known: kk,
                    round_limit: lim.map_or(Limit::Auto, Limit::Rounds),
                    budget,
                    seed,
                    trace_out: out.clone(),
                    gather_script: out,
                    ..Config::default()
                };
                if let Some(a) = axis {
                    c.sweep.insert("n".into(), a.iter().map(|x| x.to_string()).collect());
                }
                c
            })
    }

    proptest! {
        #[test]
        fn echo_parses_back(c in arb_config()) {
            let echo = c.echo();
            prop_assert_eq!(Config::parse(&echo).unwrap(), c);
        }
    }
}

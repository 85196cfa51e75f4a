//! Trace files and their replay.
//!
//! A trace file is a `# ladsim trace` header, the run's config echo as `#`
//! lines, one event per line (`round robot node kind [detail]`) and a closing
//! `end rounds=R solved=B` line. A file without the closing line is treated
//! as truncated.

use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{EventKind, Trace, TraceEvent};

pub const HEADER: &str = "# ladsim trace";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceParse {
    pub line: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    /// Config echo lines, without the leading `# `.
    pub config: Vec<String>,
    pub trace: Trace,
    pub rounds: u64,
    pub solved: bool,
}

impl TraceFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{HEADER}");
        for l in &self.config {
            let _ = writeln!(s, "# {l}");
        }
        s.push_str(&self.trace.to_text());
        let _ = writeln!(s, "end rounds={} solved={}", self.rounds, self.solved);
        s
    }

    pub fn parse(text: &str) -> Result<TraceFile, TraceParse> {
        let lines: Vec<&str> = text.lines().collect();
        let err = |line: usize, msg: &str| TraceParse { line, msg: msg.to_string() };
        if lines.first() != Some(&HEADER) {
            return Err(err(1, "missing trace header"));
        }
        let mut config = Vec::new();
        let mut events = Vec::new();
        let mut end = None;
        for (i, &l) in lines.iter().enumerate().skip(1) {
            let ln = i + 1;
            if end.is_some() {
                return Err(err(ln, "text after the end line"));
            }
            if let Some(c) = l.strip_prefix("# ") {
                config.push(c.to_string());
            } else if let Some(rest) = l.strip_prefix("end ") {
                end = Some(parse_end(rest).ok_or_else(|| err(ln, "malformed end line"))?);
            } else {
                events.push((ln, parse_event(l).ok_or_else(|| err(ln, "malformed event"))?));
            }
        }
        let (rounds, solved) = end.ok_or_else(|| err(lines.len() + 1, "missing end line; trace is truncated"))?;
        if let Some((ln, e)) = events.iter().find(|(_, e)| e.round > rounds || e.round == 0) {
            return Err(err(*ln, &format!("event in round {} outside 1..={rounds}", e.round)));
        }
        let events = events.into_iter().map(|(_, e)| e).collect();
        Ok(TraceFile { config, trace: Trace { events }, rounds, solved })
    }

    /// Round-by-round rendering; robots in each round keep trace order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut current = 0;
        for e in &self.trace.events {
            if e.round != current {
                current = e.round;
                let _ = writeln!(s, "round {current}");
            }
            let what = match e.kind {
                EventKind::Moved => format!("moves {}", e.detail.replace('=', " ")),
                EventKind::Settled => "settles".to_string(),
                EventKind::StateChange => format!("changes state {}", e.detail),
                EventKind::Merged => format!("merges {}", e.detail),
                EventKind::DetectedDone => format!("detects completion {}", e.detail),
                EventKind::Error => format!("reports an error {}", e.detail),
            };
            let _ = writeln!(s, "  robot {} at node {}: {}", e.robot, e.node, what.trim_end());
        }
        if self.solved {
            let _ = writeln!(s, "solved in {} rounds", self.rounds);
        } else {
            let _ = writeln!(s, "not solved after {} rounds", self.rounds);
        }
        s
    }
}

fn parse_end(rest: &str) -> Option<(u64, bool)> {
    let mut rounds = None;
    let mut solved = None;
    for item in rest.split_whitespace() {
        match item.split_once('=')? {
            ("rounds", v) => rounds = Some(v.parse().ok()?),
            ("solved", v) => solved = Some(v.parse().ok()?),
            _ => return None,
        }
    }
    Some((rounds?, solved?))
}

fn parse_event(line: &str) -> Option<TraceEvent> {
    let mut it = line.splitn(5, ' ');
    let round = it.next()?.parse().ok()?;
    let robot = it.next()?.parse().ok()?;
    let node = it.next()?.parse().ok()?;
    let kind = EventKind::parse(it.next()?)?;
    let detail = it.next().unwrap_or("").to_string();
    Some(TraceEvent { round, robot, node, kind, detail })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TraceFile {
        let events = vec![
            TraceEvent { round: 1, robot: 1, node: 0, kind: EventKind::Moved, detail: "port=0 to=1".into() },
            TraceEvent { round: 1, robot: 2, node: 0, kind: EventKind::StateChange, detail: "active->leader".into() },
            TraceEvent { round: 2, robot: 1, node: 1, kind: EventKind::Settled, detail: String::new() },
        ];
        TraceFile { config: vec!["n = 2".into()], trace: Trace { events }, rounds: 2, solved: true }
    }

    #[test]
    fn round_trip_and_render() {
        let t = sample();
        let text = t.to_text();
        let back = TraceFile::parse(&text).unwrap();
        assert_eq!(back, t);
        let r = back.render();
        assert!(r.ends_with("solved in 2 rounds\n"));
        assert!(r.contains("robot 1 at node 0: moves port 0 to 1"));
        assert_eq!(r, TraceFile::parse(&text).unwrap().render());
    }

    #[test]
    fn truncation_is_reported_with_a_line() {
        let text = sample().to_text();
        let lines: Vec<&str> = text.lines().collect();
        let cut = lines[..lines.len() - 1].join("\n");
        assert_eq!(TraceFile::parse(&cut).unwrap_err().line, lines.len());
        let half = &text[..text.find("2 1 1").unwrap() + 3];
        assert_eq!(TraceFile::parse(half).unwrap_err(), TraceParse { line: 5, msg: "malformed event".into() });
        assert_eq!(TraceFile::parse("").unwrap_err().line, 1);
    }
}

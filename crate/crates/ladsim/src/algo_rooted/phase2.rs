//! Gathering: the source's guard walks the tree of groups depth-first,
//! meeting each group's guard once on the way down and collecting it on the
//! way back.

use std::collections::VecDeque;
use std::sync::Arc;

use super::records::{ChildLink, Group, GroupNum, Key, Uplink};
use super::{RootedMem, Stage, State, Step};
use crate::engine::{width, Action, Dims, EventKind, Fault, NodeView};
use crate::graph::Port;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cross {
    Down { key: Key, link: ChildLink },
    Up { port: Option<Port> },
}

/// Where the head goes back to when it leaves the current group upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpInfo {
    pub link: (Key, ChildLink),
    pub parent_gr: GroupNum,
    pub child_gr: GroupNum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wait {
    Down { link: (Key, ChildLink), from_gr: GroupNum },
    Up,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Head {
    /// Records of the group the head is currently in.
    pub cur: Arc<Group>,
    pub at: Option<Key>,
    pub level: u32,
    pub route: VecDeque<Step>,
    pub cross: Option<Cross>,
    pub wait: Option<Wait>,
    pub up: Option<UpInfo>,
    pub finishing: bool,
    pub done: bool,
}

impl Head {
    pub fn waiting(&self) -> bool {
        self.wait.is_some()
    }

    pub fn bits(&self, d: &Dims) -> u64 {
        self.cur.bits(d) + self.route.len() as u64 * d.port_bits() + 3 * d.port_bits() + 4 * width(d.k as u64 + 2) + 6
    }

    /// Plans the walk from the current key to the next link after `after`,
    /// or marks the group as finished.
    fn plan_from(&mut self, after: Option<(Key, ChildLink)>) -> bool {
        let from = self.at.expect("head stands on its group");
        let next = self.cur.links().into_iter().find(|&link| after.is_none_or(|a| link > a));
        match next {
            Some((k, l)) => {
                self.route = self.cur.route(from, k).into_iter().map(|(p, k)| (p, Some(k))).collect();
                self.cross = Some(Cross::Down { key: k, link: l });
                true
            }
            None => {
                self.route = self.cur.route(from, self.cur.root).into_iter().map(|(p, k)| (p, Some(k))).collect();
                false
            }
        }
    }
}

fn uplink_port(g: &Group) -> Option<Port> {
    match g.uplink {
        Uplink::Port(p) => Some(p),
        _ => None,
    }
}

/// The source's guard takes over once the traversal has ended at the source.
pub(crate) fn begin(m: &mut RootedMem, abort: bool) {
    m.state = State::OsciHead;
    m.stage = Stage::Gather;
    m.pack.abort = abort;
    let own = m.guard.group.clone().expect("source owner holds a group");
    let mut h = Head {
        at: Some(own.root),
        cur: own,
        level: 0,
        route: VecDeque::new(),
        cross: None,
        wait: None,
        up: None,
        finishing: false,
        done: false,
    };
    if !h.plan_from(None) {
        h.finishing = true;
        h.done = h.route.is_empty();
    }
    m.head = Some(Box::new(h));
}

pub(crate) fn head_move(m: &mut RootedMem, pos: u64) -> Action {
    let dpos = m.decision_pos();
    let h = m.head.as_mut().expect("head state");
    if h.done {
        return Action::Stay;
    }
    if pos == 0 {
        return match h.cross.take() {
            Some(Cross::Down { key, link }) => {
                h.wait = Some(Wait::Down { link: (key, link), from_gr: h.cur.gr_num });
                h.at = None;
                link.port.map_or(Action::Stay, Action::Exit)
            }
            Some(Cross::Up { port }) => {
                h.wait = Some(Wait::Up);
                h.at = None;
                port.map_or(Action::Stay, Action::Exit)
            }
            None => Action::Stay,
        };
    }
    if pos > dpos {
        if let Some((p, k)) = h.route.pop_front() {
            h.at = k;
            if h.route.is_empty() && h.finishing {
                h.done = true;
            }
            return Action::Exit(p);
        }
    }
    Action::Stay
}

/// Meeting between a waiting head and the guard paused next to it.
pub(crate) fn meet(
    ms: &mut [RootedMem],
    _view: &NodeView,
    events: &mut [Vec<(EventKind, String)>],
) -> Result<(), Fault> {
    let Some(hi) = ms.iter().position(|m| m.state == State::OsciHead && m.head.as_ref().is_some_and(|h| h.waiting()))
    else {
        return Ok(());
    };
    let wait = ms[hi].head.as_ref().and_then(|h| h.wait).expect("waiting head");
    let own_gr = ms[hi].guard.group().gr_num;
    match wait {
        Wait::Down { link, from_gr } => {
            let gi = find_guard(ms, hi, link.1.gr)?;
            let level = ms[hi].head.as_ref().map(|h| h.level).unwrap_or(0) + 1;
            let g = &mut ms[gi];
            g.guard.level = level;
            g.guard.parent_gr = Some(from_gr);
            g.guard.parent_link = Some((link.0, link.1.port));
            let grp = g.guard.group.clone().expect("guard group");
            let (gr, parent_link, uplink) = (grp.gr_num, link, uplink_port(&grp));
            events[gi].push((EventKind::StateChange, format!("met gr={gr} level={level}")));
            let h = ms[hi].head.as_mut().expect("head");
            h.wait = None;
            h.at = Some(grp.root);
            h.cur = grp;
            h.level = level;
            if !h.plan_from(None) {
                h.cross = Some(Cross::Up { port: uplink });
                h.up = Some(UpInfo { link: parent_link, parent_gr: from_gr, child_gr: gr });
                gather(&mut ms[gi], &mut events[gi]);
            }
        }
        Wait::Up => {
            let up = ms[hi].head.as_ref().and_then(|h| h.up).expect("head knows where it came back to");
            let key = up.link.0;
            let gi = if up.parent_gr == own_gr { hi } else { find_guard(ms, hi, up.parent_gr)? };
            let grp = ms[gi].guard.group.clone().expect("guard group");
            let info = (ms[gi].guard.parent_link, ms[gi].guard.parent_gr);
            let h = ms[hi].head.as_mut().expect("head");
            h.wait = None;
            h.at = Some(key);
            h.cur = grp.clone();
            h.level = h.level.saturating_sub(1);
            if !h.plan_from(Some(up.link)) {
                if gi == hi {
                    h.finishing = true;
                    h.done = h.route.is_empty();
                } else {
                    h.cross = Some(Cross::Up { port: uplink_port(&grp) });
                    let (link, parent_gr) = match info {
                        (Some(l), Some(p)) => (l, p),
                        _ => return Err(Fault::new("DesyncDetected", "guard without a parent link")),
                    };
                    let link = (link.0, ChildLink { port: link.1, gr: grp.gr_num });
                    h.up = Some(UpInfo { link, parent_gr, child_gr: grp.gr_num });
                    gather(&mut ms[gi], &mut events[gi]);
                }
            }
        }
    }
    Ok(())
}

fn gather(m: &mut RootedMem, events: &mut Vec<(EventKind, String)>) {
    m.guard.gather = true;
    m.stage = Stage::Gather;
    events.push((EventKind::StateChange, "gather".into()));
}

fn find_guard(ms: &[RootedMem], hi: usize, gr: GroupNum) -> Result<usize, Fault> {
    (0..ms.len())
        .find(|&i| i != hi && ms[i].is_guard() && ms[i].guard.paused && ms[i].guard.group().gr_num == gr)
        .ok_or_else(|| Fault::new("DesyncDetected", format!("head missed the guard of group {gr}")))
}

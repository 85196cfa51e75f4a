//! Exploration: the pack's traversal, the leader growing its group and the
//! guards sweeping theirs.

use std::collections::VecDeque;
use std::sync::Arc;

use super::records::{ChildLink, Group, Key, Uplink};
use super::{phase2, Dir, Out, RootedMem, Stage, State, Step, Track};
use crate::engine::{Action, EventKind, Fault, NodeView};
use crate::graph::Port;

/// Round 1 at the source: the smallest id keeps the first group, the others
/// leave through port 0.
pub(crate) fn bootstrap(ms: &mut [RootedMem], view: &NodeView, n: Option<usize>) -> Vec<Out> {
    let k = ms.len() as u32;
    let leader = ms.iter().map(|m| m.id).min().expect("bootstrap needs robots");
    let mut outs = Vec::new();
    for m in ms.iter_mut() {
        m.started = true;
        m.round = 1;
        m.k = k;
        m.unknown_n = n.is_none();
        if let Some(n) = n {
            m.c = (n as u32).div_ceil(k).max(1);
        }
        m.pack.discovered = 1;
        m.pack.gr_num = 1;
        m.pack.has_leader = true;
        m.pack.dir = Dir::Forward;
        m.pack.pext = Some(0);
        if m.id == leader {
            m.state = State::Leader;
            m.guard.group = Some(Arc::new(Group::new(1, Uplink::Top, view.color, view.degree, true)));
            m.guard.at = Some(0);
            m.guard.track = Some(Track::Ext(0, 0));
            outs.push(Out::stay());
        } else {
            outs.push(Out::exit(0));
        }
    }
    outs
}

pub(crate) fn step(ms: &mut [RootedMem], view: &NodeView) -> Result<Vec<Out>, Fault> {
    let mut events: Vec<Vec<(EventKind, String)>> = vec![Vec::new(); ms.len()];
    let Some(first) = ms.first() else { return Ok(Vec::new()) };
    let pos = first.pos();
    let dpos = first.decision_pos();
    if pos == dpos {
        decide(ms, view, &mut events)?;
        phase2::meet(ms, view, &mut events)?;
    }
    let mut outs: Vec<Out> = Vec::with_capacity(ms.len());
    let pack_here = ms.iter().any(|m| m.state == State::Active && m.stage == Stage::Explore);
    let head_waiting = ms.iter().any(|m| m.state == State::OsciHead && m.head.as_ref().is_some_and(|h| h.waiting()));
    for m in ms.iter_mut() {
        let action = match m.state {
            State::Active if m.stage == Stage::Explore => match m.pack.pext {
                Some(p) if pos == 0 => Action::Exit(p),
                _ => Action::Stay,
            },
            State::Leader | State::Oscillating if !m.guard.gather => guard_move(m, pos, pack_here, head_waiting),
            State::OsciHead => phase2::head_move(m, pos),
            _ => Action::Stay,
        };
        outs.push(Out { action, events: Vec::new() });
    }
    // Collected guards walk with the head.
    if let Some(h) = ms.iter().position(|m| m.state == State::OsciHead) {
        let lead = outs[h].action;
        for (i, m) in ms.iter().enumerate() {
            if m.guard.gather && m.state != State::OsciHead {
                outs[i].action = lead;
            }
        }
    }
    for (o, e) in outs.iter_mut().zip(events) {
        o.events = e;
    }
    Ok(outs)
}

/// Planned sweep for a guard; the leader appends its trip to the pack.
pub(crate) fn sweep_plan(m: &RootedMem) -> Vec<Step> {
    let g = m.guard.group();
    let mut plan: Vec<Step> = g.euler_tour().into_iter().map(|(p, k)| (p, Some(k))).collect();
    if m.state == State::Leader {
        match m.guard.track {
            Some(Track::Ext(x, p)) => {
                plan.extend(g.route(g.root, x).into_iter().map(|(p, k)| (p, Some(k))));
                plan.push((p, None));
            }
            Some(Track::Up) => {
                if let Uplink::Port(p) = g.uplink {
                    plan.push((p, None));
                }
            }
            _ => {}
        }
    }
    plan
}

fn guard_move(m: &mut RootedMem, pos: u64, pack_here: bool, head_waiting: bool) -> Action {
    let dpos = m.decision_pos();
    if pos == 0 {
        m.guard.step = 0;
        m.guard.paused = false;
        return Action::Stay;
    }
    if pos < dpos {
        if m.guard.paused {
            return Action::Stay;
        }
        let plan = sweep_plan(m);
        let own = m.guard.at.is_some_and(|k| m.guard.group().is_required(k));
        let at_target = m.state == State::Leader && m.guard.at.is_none() && m.guard.step as usize == plan.len();
        if (pack_here && (own || at_target)) || (head_waiting && m.guard.at.is_some()) {
            m.guard.paused = true;
            return Action::Stay;
        }
        if let Some(&(p, k)) = plan.get(m.guard.step as usize) {
            m.guard.step += 1;
            m.guard.at = k;
            return Action::Exit(p);
        }
        return Action::Stay;
    }
    if pos == dpos {
        return Action::Stay;
    }
    walk_home(m)
}

/// One step toward the group root: a pending route first, then parent ports.
pub(crate) fn walk_home(m: &mut RootedMem) -> Action {
    if let Some((p, k)) = m.guard.route.pop_front() {
        m.guard.at = k;
        return Action::Exit(p);
    }
    let g = m.guard.group();
    match m.guard.at {
        Some(k) if k != g.root => {
            let port = g.get(k).parent.expect("non-root record has a parent port");
            m.guard.at = g.parent_key(k);
            Action::Exit(port)
        }
        _ => Action::Stay,
    }
}

fn owner_of(m: &RootedMem) -> Option<Key> {
    if !m.is_guard() || !m.guard.paused {
        return None;
    }
    m.guard.at.filter(|&k| m.guard.group().is_required(k))
}

fn complete(m: &mut RootedMem, events: &mut Vec<(EventKind, String)>) {
    m.state = State::Oscillating;
    if m.guard.at.is_none() && m.guard.route.is_empty() {
        // Standing just outside the group: step back in.
        let back = match m.guard.track {
            Some(Track::Ext(x, _)) => Some(x),
            Some(Track::Up) => Some(m.guard.group().root),
            _ => None,
        };
        if let (Some(k), Some(p)) = (back, m.pent) {
            m.guard.route = VecDeque::from([(p, Some(k))]);
        }
    }
    events.push((
        EventKind::StateChange,
        format!("complete gr={} size={}", m.guard.group().gr_num, m.guard.group().len()),
    ));
}

/// Route back to the group root for a guard standing at `from` in `tree`,
/// with keys kept only where they exist in its own group.
fn route_home(tree: &Group, from: Key, own: &Group) -> VecDeque<Step> {
    tree.route(from, own.root).into_iter().map(|(p, k)| (p, own.records.contains_key(&k).then_some(k))).collect()
}

/// The collective decision of the pack and the guards standing with it.
fn decide(ms: &mut [RootedMem], view: &NodeView, events: &mut [Vec<(EventKind, String)>]) -> Result<(), Fault> {
    let actives: Vec<usize> =
        (0..ms.len()).filter(|&i| ms[i].state == State::Active && ms[i].stage == Stage::Explore).collect();
    let Some(&a0) = actives.first() else { return Ok(()) };
    let pk = ms[a0].pack.clone();
    let pent = ms[a0].pent.ok_or_else(|| Fault::new("DesyncDetected", "pack has no entry port"))?;
    let deg = view.degree;
    let c = ms[a0].c as usize;
    let leader = (0..ms.len()).find(|&i| ms[i].state == State::Leader && ms[i].guard.paused);
    if pk.has_leader && leader.is_none() {
        return Err(Fault::new("DesyncDetected", "leader missed the pack"));
    }
    let owner = (0..ms.len()).find_map(|i| owner_of(&ms[i]).map(|k| (i, k)));
    let mut new = pk.clone();
    new.up_edge = None;
    // Key of this node in the group of whoever owns it after the decision.
    let mut here: Option<(usize, Key)> = owner;
    let mut leader_prev = leader.map(|l| ms[l].guard.track);

    if let Some((o, kv)) = owner {
        let rec = ms[o].guard.group().get(kv).clone();
        if pk.dir == Dir::Forward {
            new.dir = Dir::Backtrack;
            new.pext = Some(pent);
        } else {
            if let Some((child, from_leader)) = pk.up_edge {
                if from_leader {
                    let l = leader.expect("a led group has its leader along");
                    cross_led(ms, o, kv, pent, l, c, events);
                    leader_prev = None;
                    new.has_leader = false;
                    if ms[l].guard.group.as_ref().is_some_and(|g| g.is_required(kv)) {
                        here = Some((l, kv));
                    }
                } else {
                    ms[o].guard.group_mut().add_link(kv, ChildLink { port: Some(pent), gr: child });
                }
            }
            if pk.abort {
                new.pext = rec.parent;
                if rec.source {
                    new.dfs_done = true;
                }
            } else if rec.source {
                let g = ms[o].guard.group_mut();
                let r = g.get_mut(kv);
                r.count += 1;
                if r.count as usize >= deg {
                    new.dfs_done = true;
                    new.pext = None;
                } else {
                    new.dir = Dir::Forward;
                    new.pext = Some((pent + 1) % deg);
                }
            } else {
                let next = (pent + 1) % deg;
                new.dir = if Some(next) == rec.parent { Dir::Backtrack } else { Dir::Forward };
                new.pext = Some(next);
            }
        }
        if new.has_leader {
            let l = leader.expect("checked above");
            if ms[l].guard.group().required_count() >= 2 * c {
                complete(&mut ms[l], &mut events[l]);
                new.has_leader = false;
            }
        }
    } else {
        new.discovered += 1;
        let over = ms[a0].pack_guess().is_some_and(|g| new.discovered > g);
        let exhausted = !pk.has_leader && actives.len() < 2;
        if exhausted && ms[a0].pack_guess().is_none() {
            return Err(Fault::new("PackExhausted", "no robot left to lead a new group"));
        }
        if over || exhausted {
            new.abort = true;
            new.dir = Dir::Backtrack;
            new.pext = Some(pent);
            events[a0].push((EventKind::StateChange, format!("abort discovered={}", new.discovered)));
        } else if pk.has_leader {
            let l = leader.expect("checked above");
            let Some(Track::Ext(x, p)) = ms[l].guard.track else {
                return Err(Fault::new("DesyncDetected", "leader lost track of a fresh node"));
            };
            let key = ms[l].guard.group_mut().add_fresh(x, p, pent, view.color, deg);
            ms[l].guard.at = Some(key);
            here = Some((l, key));
            if ms[l].guard.group().required_count() >= 4 * c {
                complete(&mut ms[l], &mut events[l]);
                new.has_leader = false;
            }
        } else {
            let l = actives[0];
            new.gr_num += 1;
            let m = &mut ms[l];
            m.state = State::Leader;
            m.guard = super::Guard {
                group: Some(Arc::new(Group::new(new.gr_num, Uplink::Port(pent), view.color, deg, false))),
                at: Some(0),
                paused: true,
                ..Default::default()
            };
            events[l].push((EventKind::StateChange, format!("lead gr={}", new.gr_num)));
            new.has_leader = true;
            here = Some((l, 0));
            leader_prev = None;
        }
        if !new.abort {
            let next = (pent + 1) % deg;
            if next == pent {
                new.dir = Dir::Backtrack;
            } else {
                new.dir = Dir::Forward;
            }
            new.pext = Some(next);
        }
    }

    // Leaving a group source upward is a crossing the next node must hear of.
    if new.dir == Dir::Backtrack && !new.dfs_done {
        if let Some((o, k)) = here {
            let g = ms[o].guard.group();
            if k == g.root && g.uplink == Uplink::Port(new.pext.expect("backtrack has a port")) {
                new.up_edge = Some((g.gr_num, ms[o].state == State::Leader));
            }
        }
    }

    let bounced = pk.dir == Dir::Forward && owner.is_some();
    if new.has_leader {
        let l = (0..ms.len()).find(|&i| ms[i].state == State::Leader).expect("leader present");
        let own_key = here.filter(|&(o, _)| o == l).map(|(_, k)| k);
        let track = match (new.dir, own_key) {
            (Dir::Forward, Some(k)) => Track::Ext(k, new.pext.expect("forward has a port")),
            (Dir::Forward, None) => return Err(Fault::new("DesyncDetected", "pack leaves a foreign node forward")),
            (Dir::Backtrack, Some(_)) if bounced => match leader_prev.flatten() {
                Some(Track::Ext(x, _)) => Track::Own(x),
                _ => return Err(Fault::new("DesyncDetected", "leader cannot follow a retreat")),
            },
            (Dir::Backtrack, Some(k)) => {
                let g = ms[l].guard.group();
                if k == g.root {
                    Track::Up
                } else {
                    Track::Own(g.parent_key(k).expect("non-root"))
                }
            }
            (Dir::Backtrack, None) => match leader_prev.flatten() {
                Some(Track::Ext(x, _)) => Track::Own(x),
                _ => return Err(Fault::new("DesyncDetected", "leader cannot follow a retreat")),
            },
        };
        let m = &mut ms[l];
        if m.guard.at.is_none() && own_key.is_none() {
            // Standing on a foreign node: step back to where the pack came from.
            if let Some(Track::Ext(x, _)) = leader_prev.flatten() {
                let back = m.pent.expect("the leader arrived by moving");
                m.guard.route = VecDeque::from([(back, Some(x))]);
            }
        }
        m.guard.track = Some(track);
    }

    if new.dfs_done {
        let (o, _) = owner.ok_or_else(|| Fault::new("DesyncDetected", "source owner missing"))?;
        for m in ms.iter_mut() {
            if m.state == State::Active {
                m.state = State::Passive;
                m.stage = Stage::Gather;
            }
        }
        for i in 0..ms.len() {
            if i != o && ms[i].state == State::Leader {
                complete(&mut ms[i], &mut events[i]);
            }
        }
        events[o].push((EventKind::DetectedDone, if new.abort { "abort".into() } else { "dfs".into() }));
        phase2::begin(&mut ms[o], new.abort);
    }
    for m in ms.iter_mut() {
        if matches!(m.state, State::Active | State::Passive) && m.guard.group.is_none() {
            m.pack = new.clone();
        }
    }
    Ok(())
}

/// The pack came back out of a group that is still led. A small group is
/// folded into the owner of this node; an oversized result is split and the
/// former leader keeps the split-off part.
fn cross_led(
    ms: &mut [RootedMem],
    o: usize,
    kv: Key,
    pent: Port,
    l: usize,
    c: usize,
    events: &mut [Vec<(EventKind, String)>],
) {
    let lg = ms[l].guard.group.clone().expect("leader has a group");
    if lg.required_count() >= 2 * c {
        ms[o].guard.group_mut().add_link(kv, ChildLink { port: Some(pent), gr: lg.gr_num });
        complete(&mut ms[l], &mut events[l]);
        let back = ms[l].pent.expect("leader arrived by moving");
        let root = lg.root;
        ms[l].guard.route = VecDeque::from([(back, Some(root))]);
        return;
    }
    let og = ms[o].guard.group_mut();
    og.attach(kv, pent, &lg);
    events[o].push((EventKind::Merged, format!("gr={} into={} size={}", lg.gr_num, og.gr_num, og.len())));
    if og.len() > 6 * c {
        let merged = og.clone();
        let g2 = og.split(c, lg.gr_num);
        let own = og.clone();
        events[l].push((EventKind::StateChange, format!("split gr={} size={}", g2.gr_num, g2.len())));
        ms[o].guard.route = route_home(&merged, kv, &own);
        ms[o].guard.at = own.records.contains_key(&kv).then_some(kv);
        ms[l].guard.route = route_home(&merged, kv, &g2);
        ms[l].guard.at = g2.records.contains_key(&kv).then_some(kv);
        ms[l].guard.group = Some(Arc::new(g2));
        ms[l].guard.track = None;
        complete(&mut ms[l], &mut events[l]);
    } else {
        let m = &mut ms[l];
        m.state = State::Active;
        m.guard = super::Guard::default();
        events[l].push((EventKind::StateChange, "rejoin".into()));
    }
}

impl RootedMem {
    /// Node-count guess while the real count is unknown.
    pub(crate) fn pack_guess(&self) -> Option<u64> {
        self.unknown_n.then(|| self.k as u64 * self.c as u64)
    }
}

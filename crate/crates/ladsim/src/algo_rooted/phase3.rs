//! Dispersal. All robots stand at the source holding every group's records.
//! They fix a destination node for each robot, send one resident robot to
//! the source of every group a robot must pass through, and then walk out,
//! asking each resident for the way on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use super::records::{Group, GroupNum, Key, Uplink};
use super::{RootedMem, Stage, State};
use crate::engine::{width, Action, Dims, EventKind, Fault, NodeView};
use crate::graph::{Color, Port, RobotId, RobotSpec};

type Link = (Key, Option<Port>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupInfo {
    pub group: Arc<Group>,
    pub level: u32,
    pub parent: Option<GroupNum>,
    pub link: Option<Link>,
    pub children: Vec<GroupNum>,
}

/// The tree of groups as reassembled at the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperTree {
    pub groups: BTreeMap<GroupNum, GroupInfo>,
    pub top: GroupNum,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignError {
    #[error("no free node of color {color} for robot {robot}")]
    InfeasibleAssignment { robot: RobotId, color: Color },
    #[error("group tree is malformed: {0}")]
    BadTree(String),
    #[error("not enough free robots to hold every path group")]
    PoolExhausted,
}

/// A group with its level, parent group and the link up to the parent.
pub type Placed = (Arc<Group>, u32, Option<GroupNum>, Option<Link>);

impl SuperTree {
    pub fn build(groups: Vec<Placed>) -> Result<SuperTree, AssignError> {
        let mut map = BTreeMap::new();
        let mut top = None;
        for (g, level, parent, link) in groups {
            if g.uplink == Uplink::Top {
                top = Some(g.gr_num);
            }
            let gr = g.gr_num;
            let info = GroupInfo { group: g, level, parent, link, children: Vec::new() };
            if map.insert(gr, info).is_some() {
                return Err(AssignError::BadTree(format!("group {gr} appears twice")));
            }
        }
        let top = top.ok_or_else(|| AssignError::BadTree("no top group".into()))?;
        let pairs: Vec<(GroupNum, GroupNum)> = map.iter().filter_map(|(&g, i)| i.parent.map(|p| (p, g))).collect();
        for (p, g) in pairs {
            map.get_mut(&p)
                .ok_or_else(|| AssignError::BadTree(format!("group {g} has unknown parent {p}")))?
                .children
                .push(g);
        }
        for (&g, i) in &map {
            if g != top && (i.parent.is_none() || i.link.is_none()) {
                return Err(AssignError::BadTree(format!("group {g} was never reached")));
            }
        }
        Ok(SuperTree { groups: map, top })
    }

    pub fn get(&self, gr: GroupNum) -> &GroupInfo {
        &self.groups[&gr]
    }

    /// Groups of the subtree rooted at `gr`.
    pub fn subtree(&self, gr: GroupNum) -> Vec<GroupNum> {
        let mut out = vec![gr];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.groups[&out[i]].children.iter().copied());
            i += 1;
        }
        out
    }

    /// Groups from `gr` up to the top, inclusive.
    pub fn ancestry(&self, gr: GroupNum) -> Vec<GroupNum> {
        let mut out = vec![gr];
        let mut cur = gr;
        while let Some(p) = self.groups[&cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Ports from a group's source back to the source of its parent.
    pub fn up_path(&self, gr: GroupNum) -> Vec<Port> {
        let info = &self.groups[&gr];
        let mut out = Vec::new();
        if let Uplink::Port(p) = info.group.uplink {
            out.push(p);
        }
        if let (Some(p), Some((key, _))) = (info.parent, info.link) {
            let pg = &self.groups[&p].group;
            out.extend(pg.route(key, pg.root).into_iter().map(|(port, _)| port));
        }
        out
    }
}

/// Per-robot outcome of the local computation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Core {
    pub dsg_gr: GroupNum,
    pub dsg_key: Key,
    /// Number of robots sharing this robot's destination group.
    pub d: u32,
    pub level: u32,
    pub stmp_gr: Option<GroupNum>,
    pub tmp_gr: Option<GroupNum>,
    pub ttmp_gr: Option<GroupNum>,
    /// For a resident: robots it must direct before leaving.
    pub ctr: u32,
}

/// Destinations and placements for every robot.
pub fn assign(tree: &SuperTree, robots: &[RobotSpec]) -> Result<BTreeMap<RobotId, Core>, AssignError> {
    let mut out: BTreeMap<RobotId, Core> = BTreeMap::new();
    let mut taken: BTreeSet<(GroupNum, Key)> = BTreeSet::new();
    let mut sorted: Vec<&RobotSpec> = robots.iter().collect();
    sorted.sort_by_key(|r| r.id);
    for r in &sorted {
        let spot = tree.groups.values().find_map(|i| {
            i.group
                .records
                .values()
                .find(|rec| rec.required && rec.color == r.color && !taken.contains(&(i.group.gr_num, rec.key)))
                .map(|rec| (i.group.gr_num, rec.key))
        });
        let (gr, key) = spot.ok_or(AssignError::InfeasibleAssignment { robot: r.id, color: r.color })?;
        taken.insert((gr, key));
        out.insert(r.id, Core { dsg_gr: gr, dsg_key: key, level: tree.get(gr).level, ..Default::default() });
    }
    let mut d: BTreeMap<GroupNum, u32> = BTreeMap::new();
    for c in out.values() {
        *d.entry(c.dsg_gr).or_default() += 1;
    }
    for c in out.values_mut() {
        c.d = d[&c.dsg_gr];
    }

    // Leaves first: each group keeps one robot and passes the rest upward.
    let mut order: Vec<GroupNum> = tree.groups.keys().copied().collect();
    order.sort_by_key(|g| (std::cmp::Reverse(tree.get(*g).level), std::cmp::Reverse(*g)));
    for w in order {
        let children = &tree.get(w).children;
        let from_below: Vec<RobotId> =
            out.iter().filter(|(_, c)| c.ttmp_gr.is_some_and(|t| children.contains(&t))).map(|(&id, _)| id).collect();
        let mine: Vec<RobotId> = out.iter().filter(|(_, c)| c.dsg_gr == w).map(|(&id, _)| id).collect();
        let keeper = if !mine.is_empty() { mine.iter().min().copied() } else { from_below.iter().min().copied() };
        let Some(keeper) = keeper else { continue };
        for id in mine.iter().chain(&from_below) {
            let c = out.get_mut(id).expect("assigned");
            if *id == keeper {
                c.stmp_gr = Some(w);
                c.ttmp_gr = None;
            } else {
                c.ttmp_gr = Some(w);
            }
        }
    }

    // Path groups left without a robot borrow one from the source pool.
    let mut on_path: BTreeSet<GroupNum> = BTreeSet::new();
    for &g in d.keys() {
        on_path.extend(tree.ancestry(g));
    }
    on_path.remove(&tree.top);
    for g in on_path {
        if out.values().any(|c| c.stmp_gr == Some(g)) {
            continue;
        }
        let id = out
            .iter()
            .find(|(_, c)| c.ttmp_gr == Some(tree.top) && c.tmp_gr.is_none())
            .map(|(&id, _)| id)
            .ok_or(AssignError::PoolExhausted)?;
        let c = out.get_mut(&id).expect("pool robot");
        c.tmp_gr = Some(g);
        c.ttmp_gr = None;
    }

    // A resident directs every robot that reaches its group from above.
    for &g in tree.groups.keys() {
        let sub: BTreeSet<GroupNum> = tree.subtree(g).into_iter().collect();
        let arriving = out
            .values()
            .filter(|c| sub.contains(&c.dsg_gr) && !c.stmp_gr.is_some_and(|s| s != tree.top && sub.contains(&s)))
            .count() as u32;
        if let Some(c) = out.values_mut().find(|c| c.stmp_gr == Some(g)) {
            c.ctr = arriving;
        }
    }
    Ok(out)
}

/// One child link of a group with the destinations reachable through it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demand {
    pub key: Key,
    pub port: Option<Port>,
    pub child: GroupNum,
    pub dests: Vec<GroupNum>,
    /// Some resident still has to be brought below this link.
    pub needed: bool,
}

fn demand_of(tree: &SuperTree, gr: GroupNum, cores: &BTreeMap<RobotId, Core>) -> Vec<Demand> {
    let mut out: Vec<Demand> = tree
        .get(gr)
        .children
        .iter()
        .map(|&ch| {
            let (key, port) = tree.get(ch).link.expect("child has a link");
            let sub: BTreeSet<GroupNum> = tree.subtree(ch).into_iter().collect();
            let dests: BTreeSet<GroupNum> = cores.values().map(|c| c.dsg_gr).filter(|g| sub.contains(g)).collect();
            let needed = cores.values().any(|c| resident_of(c, tree.top).is_some_and(|g| sub.contains(&g)));
            Demand { key, port, child: ch, dests: dests.into_iter().collect(), needed }
        })
        .collect();
    out.sort_by_key(|d| (d.key, d.port, d.child));
    out
}

/// Group where a robot waits during the first stage, if away from the top.
fn resident_of(c: &Core, top: GroupNum) -> Option<GroupNum> {
    c.tmp_gr.or(c.stmp_gr.filter(|&s| s != top))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Crowd,
    Resident,
    Climb,
    Pool,
    Travel,
    Settled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Next {
    Settle,
    Ask(GroupNum),
    /// Climbing robot heading to the source of this group.
    Reach(GroupNum),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Enter {
        child: GroupNum,
    },
    /// Back to the source of `gr`, having finished the child behind `came`.
    Return {
        gr: GroupNum,
        came: (Key, Option<Port>, GroupNum),
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crowd {
    pub at_gr: GroupNum,
    pub came: Option<(Key, Option<Port>, GroupNum)>,
    pub target: Option<Target>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub core: Core,
    pub role: Role,
    pub top: Arc<Group>,
    pub top_demand: Arc<Vec<Demand>>,
    /// Records and links of the group this robot stays in.
    pub own: Option<Arc<Group>>,
    pub demand: Vec<Demand>,
    pub up: Vec<Port>,
    pub parent_gr: Option<GroupNum>,
    pub parent_link: Option<Link>,
    /// Temporary residents below this one that climb through it.
    pub below: u32,
    pub arrived: u32,
    pub hold: Option<GroupNum>,
    pub t1: u64,
    pub t2: u64,
    pub round: u64,
    pub route: VecDeque<Port>,
    pub next: Option<Next>,
    pub crowd: Option<Crowd>,
}

impl Plan {
    pub fn bits(&self, d: &Dims) -> u64 {
        let grb = width(d.k as u64 + 2);
        let port = d.port_bits();
        let mut b = 5 * grb + 3 * width(d.k as u64 + 1) + 3 * width(self.t2 + 2) + 8;
        b += self.top.bits(d);
        b += self.top_demand.iter().map(|x| 2 * grb + port + x.dests.len() as u64 * grb).sum::<u64>();
        if let Some(g) = &self.own {
            b += g.bits(d);
        }
        b += self.demand.iter().map(|x| 2 * grb + port + x.dests.len() as u64 * grb).sum::<u64>();
        b += (self.up.len() + self.route.len()) as u64 * port;
        b
    }

    fn is_tmp(&self) -> bool {
        self.core.tmp_gr.is_some()
    }

    fn resident_gr(&self) -> Option<GroupNum> {
        resident_of(&self.core, self.top.gr_num)
    }
}

/// Local computation at the source; everyone is here.
/// The group tree held by robots gathered at the source.
pub(crate) fn gathered_tree(ms: &[RootedMem]) -> Result<SuperTree, Fault> {
    let groups: Vec<Placed> = ms
        .iter()
        .filter_map(|m| m.guard.group.clone().map(|g| (g, m.guard.level, m.guard.parent_gr, m.guard.parent_link)))
        .collect();
    SuperTree::build(groups).map_err(|e| Fault::new("DesyncDetected", e.to_string()))
}

pub(crate) fn start(ms: &mut [RootedMem], _view: &NodeView) -> Result<(), Fault> {
    let tree = gathered_tree(ms)?;
    let specs: Vec<RobotSpec> = ms.iter().map(|m| RobotSpec::new(m.id, m.color)).collect();
    let cores = assign(&tree, &specs).map_err(|e| Fault::new("InfeasibleAssignment", e.to_string()))?;
    let top = tree.get(tree.top).group.clone();
    let top_demand = Arc::new(demand_of(&tree, tree.top, &cores));

    // Upper bounds on the two first stages, known to everyone.
    let residents: Vec<GroupNum> = cores.values().filter_map(|c| resident_of(c, tree.top)).collect();
    let mut needed: BTreeSet<GroupNum> = BTreeSet::new();
    for &g in &residents {
        needed.extend(tree.ancestry(g));
    }
    needed.remove(&tree.top);
    let t1: u64 = needed
        .iter()
        .map(|&g| 2 * (tree.get(tree.get(g).parent.expect("non-top")).group.len() as u64 + 1))
        .sum::<u64>()
        + 2;
    let climb: u64 = cores
        .values()
        .filter_map(|c| c.tmp_gr)
        .map(|g| {
            tree.ancestry(g).iter().filter(|&&a| a != tree.top).map(|&a| tree.up_path(a).len() as u64 + 1).sum::<u64>()
        })
        .max()
        .unwrap_or(0);
    let t2 = t1 + climb + 2;

    for m in ms.iter_mut() {
        let core = cores[&m.id].clone();
        let res = resident_of(&core, tree.top);
        let (own, demand, up, parent_gr, parent_link, below) = match res {
            Some(g) => {
                let info = tree.get(g);
                let below =
                    tree.subtree(g).iter().filter(|&&x| x != g && cores.values().any(|c| c.tmp_gr == Some(x))).count()
                        as u32;
                (Some(info.group.clone()), demand_of(&tree, g, &cores), tree.up_path(g), info.parent, info.link, below)
            }
            None => (None, Vec::new(), Vec::new(), None, None, 0),
        };
        let role = if res.is_some() { Role::Crowd } else { Role::Pool };
        m.p3 = Some(Box::new(Plan {
            core,
            role,
            top: top.clone(),
            top_demand: top_demand.clone(),
            own,
            demand,
            up,
            parent_gr,
            parent_link,
            below,
            arrived: 0,
            hold: None,
            t1,
            t2,
            round: 0,
            route: VecDeque::new(),
            next: None,
            crowd: (role == Role::Crowd).then_some(Crowd { at_gr: tree.top, came: None, target: None }),
        }));
        m.stage = Stage::Disperse;
        m.state = State::Passive;
        m.guard = super::Guard::default();
        m.head = None;
    }
    Ok(())
}

fn plan(m: &RootedMem) -> &Plan {
    m.p3.as_deref().expect("dispersal plan")
}

fn plan_mut(m: &mut RootedMem) -> &mut Plan {
    m.p3.as_deref_mut().expect("dispersal plan")
}

/// Route from the root of `g` toward a destination, using `demand` for the
/// child links. Returns the ports and what to do on arrival.
fn direct(g: &Group, demand: &[Demand], core: &Core) -> Result<(VecDeque<Port>, Next), Fault> {
    if core.dsg_gr == g.gr_num {
        let ports = g.route(g.root, core.dsg_key).into_iter().map(|(p, _)| p).collect();
        return Ok((ports, Next::Settle));
    }
    let d = demand
        .iter()
        .find(|d| d.dests.contains(&core.dsg_gr))
        .ok_or_else(|| Fault::new("DemandMismatch", format!("no way from group {} to {}", g.gr_num, core.dsg_gr)))?;
    let mut ports: VecDeque<Port> = g.route(g.root, d.key).into_iter().map(|(p, _)| p).collect();
    ports.extend(d.port);
    Ok((ports, Next::Ask(d.child)))
}

pub(crate) fn step(ms: &mut [RootedMem], _view: &NodeView) -> Result<Vec<crate::algo_rooted::Out>, Fault> {
    if let Some(m) = ms.iter().find(|m| m.p3.is_none()) {
        return Err(Fault::new(
            "DesyncDetected",
            format!("robot {} meets dispersal in state {}", m.id, m.state.as_str()),
        ));
    }
    let mut events: Vec<Vec<(EventKind, String)>> = vec![Vec::new(); ms.len()];
    for m in ms.iter_mut() {
        plan_mut(m).round += 1;
    }
    let round = plan(&ms[0]).round;
    let (t1, t2) = (plan(&ms[0]).t1, plan(&ms[0]).t2);
    let mut actions: Vec<Action> = vec![Action::Stay; ms.len()];

    crowd_step(ms, &mut actions, &mut events)?;

    if round > t1 {
        climb_step(ms, &mut actions, &mut events)?;
    }

    if round >= t2 {
        // Robots at the source head out.
        for m in ms.iter_mut() {
            let p = plan_mut(m);
            if p.role == Role::Pool && round == t2 {
                let (route, next) = direct(&p.top, &p.top_demand, &p.core)?;
                p.route = route;
                p.next = Some(next);
                p.role = Role::Travel;
            }
        }
        serve(ms, &mut events)?;
    }

    for (i, m) in ms.iter_mut().enumerate() {
        if m.state == State::Settled {
            continue;
        }
        let p = plan_mut(m);
        if matches!(p.role, Role::Travel | Role::Climb) && p.hold.is_none() && actions[i] == Action::Stay {
            if let Some(port) = p.route.pop_front() {
                actions[i] = Action::Exit(port);
            } else if p.role == Role::Travel && p.next == Some(Next::Settle) {
                p.role = Role::Settled;
                m.state = State::Settled;
            }
        }
    }
    Ok(actions.into_iter().zip(events).map(|(action, events)| crate::algo_rooted::Out { action, events }).collect())
}

/// The first stage: the crowd of future residents walks the tree of groups,
/// dropping each resident at the source of its group.
fn crowd_step(
    ms: &mut [RootedMem],
    actions: &mut [Action],
    events: &mut [Vec<(EventKind, String)>],
) -> Result<(), Fault> {
    let members: Vec<usize> = (0..ms.len()).filter(|&i| plan(&ms[i]).role == Role::Crowd).collect();
    let Some(&lead) = members.first() else { return Ok(()) };
    let top_gr = plan(&ms[lead]).top.gr_num;
    let mut crowd = plan(&ms[lead]).crowd.clone().expect("crowd state");
    let mut route = plan(&ms[lead]).route.clone();
    let mut left: Vec<usize> = members.clone();
    let mut guard = 0;
    let port = loop {
        guard += 1;
        if guard > 4 * ms.len() + 16 {
            return Err(Fault::new("DesyncDetected", "crowd makes no progress"));
        }
        if let Some(p) = route.pop_front() {
            break Some(p);
        }
        match crowd.target.take() {
            Some(Target::Enter { child }) => {
                crowd.at_gr = child;
                crowd.came = None;
                if let Some(pos) = left.iter().position(|&i| plan(&ms[i]).resident_gr() == Some(child)) {
                    let i = left.remove(pos);
                    let p = plan_mut(&mut ms[i]);
                    p.role = Role::Resident;
                    p.crowd = None;
                    events[i].push((EventKind::StateChange, format!("resident gr={child}")));
                }
                if left.is_empty() {
                    break None;
                }
            }
            Some(Target::Return { gr, came }) => {
                crowd.at_gr = gr;
                crowd.came = Some(came);
            }
            None => {}
        }
        let (g, demand, up, parent) = if crowd.at_gr == top_gr {
            let p = plan(&ms[lead]);
            (p.top.clone(), (*p.top_demand).clone(), Vec::new(), None)
        } else {
            let r = ms
                .iter()
                .find(|m| {
                    let p = plan(m);
                    p.role == Role::Resident && p.resident_gr() == Some(crowd.at_gr)
                })
                .ok_or_else(|| Fault::new("DesyncDetected", format!("no resident for group {}", crowd.at_gr)))?;
            let p = plan(r);
            (p.own.clone().expect("resident records"), p.demand.clone(), p.up.clone(), p.parent_gr.zip(p.parent_link))
        };
        let next = demand.iter().find(|d| d.needed && crowd.came.is_none_or(|c| (d.key, d.port, d.child) > c));
        match next {
            Some(d) => {
                route = g.route(g.root, d.key).into_iter().map(|(p, _)| p).collect();
                route.extend(d.port);
                crowd.target = Some(Target::Enter { child: d.child });
            }
            None => {
                let Some((gr, link)) = parent else {
                    let stranded: Vec<Option<GroupNum>> = left.iter().map(|&i| plan(&ms[i]).resident_gr()).collect();
                    return Err(Fault::new(
                        "DesyncDetected",
                        format!("crowd finished with residents left for {stranded:?}"),
                    ));
                };
                route = up.into_iter().collect();
                crowd.target = Some(Target::Return { gr, came: (link.0, link.1, crowd.at_gr) });
            }
        }
    };
    for &i in &left {
        let p = plan_mut(&mut ms[i]);
        p.crowd = Some(crowd.clone());
        p.route = route.clone();
        if let Some(port) = port {
            actions[i] = Action::Exit(port);
        }
    }
    Ok(())
}

/// Temporary residents return to the source, deepest first.
fn climb_step(
    ms: &mut [RootedMem],
    actions: &mut [Action],
    events: &mut [Vec<(EventKind, String)>],
) -> Result<(), Fault> {
    // Arrivals first: they pick up the next leg from the local resident.
    let arrivals: Vec<usize> = (0..ms.len())
        .filter(|&i| {
            let p = plan(&ms[i]);
            p.role == Role::Climb && p.route.is_empty() && p.hold.is_none()
        })
        .collect();
    for i in arrivals {
        let Some(Next::Reach(target)) = plan(&ms[i]).next else { continue };
        if target == plan(&ms[i]).top.gr_num {
            let p = plan_mut(&mut ms[i]);
            p.role = Role::Pool;
            p.next = None;
            continue;
        }
        let r = (0..ms.len())
            .find(|&j| plan(&ms[j]).role == Role::Resident && plan(&ms[j]).resident_gr() == Some(target))
            .ok_or_else(|| Fault::new("DesyncDetected", format!("climber found no resident of group {target}")))?;
        let (up, parent, tmp) = {
            let q = plan(&ms[r]);
            (q.up.clone(), q.parent_gr, q.is_tmp())
        };
        if tmp {
            plan_mut(&mut ms[r]).arrived += 1;
        }
        let p = plan_mut(&mut ms[i]);
        p.route = up.into_iter().collect();
        p.next = parent.map(Next::Reach);
        p.hold = tmp.then_some(target);
    }
    // Temporary residents leave once everything below has reached them.
    for i in 0..ms.len() {
        let p = plan(&ms[i]);
        if p.role == Role::Resident && p.is_tmp() && p.arrived >= p.below {
            let gr = p.resident_gr().expect("resident");
            let p = plan_mut(&mut ms[i]);
            p.role = Role::Climb;
            p.route = p.up.iter().copied().collect();
            p.next = p.parent_gr.map(Next::Reach);
            events[i].push((EventKind::StateChange, format!("climb from={gr}")));
            for m in ms.iter_mut() {
                let q = plan_mut(m);
                if q.hold == Some(gr) {
                    q.hold = None;
                }
            }
        }
    }
    let _ = actions;
    Ok(())
}

/// Residents direct robots waiting at their group's source, then leave.
fn serve(ms: &mut [RootedMem], events: &mut [Vec<(EventKind, String)>]) -> Result<(), Fault> {
    for r in 0..ms.len() {
        let (gr, own, demand) = {
            let p = plan(&ms[r]);
            if p.role != Role::Resident || p.is_tmp() {
                continue;
            }
            (p.resident_gr().expect("resident"), p.own.clone().expect("records"), p.demand.clone())
        };
        for i in 0..ms.len() {
            let ask = {
                let p = plan(&ms[i]);
                p.role == Role::Travel && p.route.is_empty() && p.next == Some(Next::Ask(gr))
            };
            if ask {
                let core = plan(&ms[i]).core.clone();
                let (route, next) = direct(&own, &demand, &core)?;
                let p = plan_mut(&mut ms[i]);
                p.route = route;
                p.next = Some(next);
                let q = plan_mut(&mut ms[r]);
                q.core.ctr =
                    q.core.ctr.checked_sub(1).ok_or_else(|| Fault::new("DemandMismatch", "resident over-served"))?;
            }
        }
        if plan(&ms[r]).core.ctr == 0 {
            let core = plan(&ms[r]).core.clone();
            let (route, next) = direct(&own, &demand, &core)?;
            let p = plan_mut(&mut ms[r]);
            p.route = route;
            p.next = Some(next);
            p.role = Role::Travel;
            events[r].push((EventKind::StateChange, format!("leave gr={gr}")));
        }
    }
    Ok(())
}

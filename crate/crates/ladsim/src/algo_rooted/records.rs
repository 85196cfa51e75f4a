//! Group records kept by guard robots.
//!
//! A group is a tree of node records rooted at its source node. Keys are
//! local to the group and never name a real node; a guard reaches a record
//! by replaying ports from the root.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::{width, Dims};
use crate::graph::{Color, Port};

pub type Key = u32;
pub type GroupNum = u32;

/// An edge from a node of this group to the source of a child group. `port`
/// is `None` when the child group is rooted at this very node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChildLink {
    pub port: Option<Port>,
    pub gr: GroupNum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub key: Key,
    /// Port toward the tree parent. At the group root this is the port that
    /// leaves the group (or `None` at the global source).
    pub parent: Option<Port>,
    /// Tree children as `(port here, child key)`, ascending by port.
    pub children: Vec<(Port, Key)>,
    pub required: bool,
    pub helper: bool,
    /// The global source node.
    pub source: bool,
    /// Backtrack arrivals seen at the global source.
    pub count: u32,
    pub dist: u32,
    pub degree: u32,
    pub color: Color,
    pub gr_child: Vec<ChildLink>,
}

impl Record {
    /// Defaults for a freshly created record.
    pub fn blank(key: Key) -> Self {
        Record {
            key,
            parent: None,
            children: Vec::new(),
            required: false,
            helper: false,
            source: false,
            count: 0,
            dist: 0,
            degree: 0,
            color: 0,
            gr_child: Vec::new(),
        }
    }
}

/// Field updates applied by [`Group::save`]; `None` leaves a field alone.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordUpdate {
    pub parent: Option<Option<Port>>,
    pub add_child: Option<(Port, Key)>,
    pub required: Option<bool>,
    pub helper: Option<bool>,
    pub source: Option<bool>,
    pub dist: Option<u32>,
    pub degree: Option<u32>,
    pub color: Option<Color>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("record {0} would be both required and helper")]
    RequiredAndHelper(Key),
}

/// How a group hangs below its parent group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uplink {
    /// The group containing the global source.
    Top,
    /// Leave the root through this port.
    Port(Port),
    /// The parent group shares the root node.
    SameNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub gr_num: GroupNum,
    pub root: Key,
    pub uplink: Uplink,
    pub records: BTreeMap<Key, Record>,
    pub next_key: Key,
}

impl Group {
    pub fn new(gr_num: GroupNum, uplink: Uplink, color: Color, degree: usize, is_source: bool) -> Self {
        let mut root = Record::blank(0);
        root.required = true;
        root.source = is_source;
        root.color = color;
        root.degree = degree as u32;
        root.parent = match uplink {
            Uplink::Port(p) => Some(p),
            _ => None,
        };
        Group { gr_num, root: 0, uplink, records: BTreeMap::from([(0, root)]), next_key: 1 }
    }

    /// Creates the record if missing, then applies `upd`.
    pub fn save(&mut self, key: Key, upd: &RecordUpdate) -> Result<(), RecordError> {
        let mut rec = self.records.get(&key).cloned().unwrap_or_else(|| Record::blank(key));
        if let Some(p) = upd.parent {
            rec.parent = p;
        }
        if let Some(ch) = upd.add_child {
            if !rec.children.contains(&ch) {
                rec.children.push(ch);
                rec.children.sort_unstable();
            }
        }
        if let Some(v) = upd.required {
            rec.required = v;
        }
        if let Some(v) = upd.helper {
            rec.helper = v;
        }
        if let Some(v) = upd.source {
            rec.source = v;
        }
        if let Some(v) = upd.dist {
            rec.dist = v;
        }
        if let Some(v) = upd.degree {
            rec.degree = v;
        }
        if let Some(v) = upd.color {
            rec.color = v;
        }
        if rec.required && rec.helper {
            return Err(RecordError::RequiredAndHelper(key));
        }
        self.next_key = self.next_key.max(key + 1);
        self.records.insert(key, rec);
        Ok(())
    }

    /// Adds a freshly discovered required node below `parent_key`.
    pub fn add_fresh(&mut self, parent_key: Key, port: Port, back: Port, color: Color, degree: usize) -> Key {
        let key = self.next_key;
        let dist = self.records[&parent_key].dist + 1;
        let upd = RecordUpdate {
            parent: Some(Some(back)),
            required: Some(true),
            dist: Some(dist),
            degree: Some(degree as u32),
            color: Some(color),
            ..Default::default()
        };
        self.save(key, &upd).expect("fresh record is only required");
        self.save(parent_key, &RecordUpdate { add_child: Some((port, key)), ..Default::default() })
            .expect("adding a child keeps flags");
        key
    }

    pub fn get(&self, key: Key) -> &Record {
        &self.records[&key]
    }

    pub fn get_mut(&mut self, key: Key) -> &mut Record {
        self.records.get_mut(&key).expect("known key")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn required_count(&self) -> usize {
        self.records.values().filter(|r| r.required).count()
    }

    pub fn helper_count(&self) -> usize {
        self.records.values().filter(|r| r.helper).count()
    }

    pub fn is_required(&self, key: Key) -> bool {
        self.records.get(&key).is_some_and(|r| r.required)
    }

    /// Key of the tree parent of `key`.
    pub fn parent_key(&self, key: Key) -> Option<Key> {
        if key == self.root {
            return None;
        }
        self.records.values().find(|r| r.children.iter().any(|&(_, k)| k == key)).map(|r| r.key)
    }

    /// Depth-first walk from the root that returns to it: `(port, key after)`.
    pub fn euler_tour(&self) -> Vec<(Port, Key)> {
        let mut out = Vec::new();
        self.tour_from(self.root, &mut out);
        out
    }

    fn tour_from(&self, key: Key, out: &mut Vec<(Port, Key)>) {
        let rec = &self.records[&key];
        for &(p, child) in &rec.children {
            out.push((p, child));
            self.tour_from(child, out);
            let back = self.records[&child].parent.expect("non-root records have a parent port");
            out.push((back, key));
        }
    }

    /// Keys from the root down to `key`, inclusive.
    pub fn chain(&self, key: Key) -> Vec<Key> {
        let mut chain = vec![key];
        let mut cur = key;
        while let Some(p) = self.parent_key(cur) {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    /// Moves `(port, key after)` along the tree from `from` to `to`.
    pub fn route(&self, from: Key, to: Key) -> Vec<(Port, Key)> {
        let a = self.chain(from);
        let b = self.chain(to);
        let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
        let mut out = Vec::new();
        for i in (common..a.len()).rev() {
            let port = self.records[&a[i]].parent.expect("non-root records have a parent port");
            out.push((port, a[i - 1]));
        }
        for w in b[common - 1..].windows(2) {
            let port = self.records[&w[0]]
                .children
                .iter()
                .find(|&&(_, k)| k == w[1])
                .map(|&(p, _)| p)
                .expect("chain follows child links");
            out.push((port, w[1]));
        }
        out
    }

    /// Keys in the subtree rooted at `key`.
    pub fn subtree(&self, key: Key) -> Vec<Key> {
        let mut out = vec![key];
        let mut i = 0;
        while i < out.len() {
            for &(_, c) in &self.records[&out[i]].children {
                out.push(c);
            }
            i += 1;
        }
        out
    }

    fn required_in(&self, keys: &[Key]) -> usize {
        keys.iter().filter(|k| self.records[k].required).count()
    }

    fn recompute_dist(&mut self) {
        let order = self.subtree(self.root);
        self.get_mut(self.root).dist = 0;
        for k in order {
            let d = self.records[&k].dist;
            let kids: Vec<Key> = self.records[&k].children.iter().map(|&(_, c)| c).collect();
            for c in kids {
                self.get_mut(c).dist = d + 1;
            }
        }
    }

    /// Grafts `other` below record `at`, reached from there through `port`.
    /// Returns the keys `other`'s records received.
    pub fn attach(&mut self, at: Key, port: Port, other: &Group) -> BTreeMap<Key, Key> {
        let mut map = BTreeMap::new();
        for &k in other.records.keys() {
            map.insert(k, self.next_key);
            self.next_key += 1;
        }
        for (k, rec) in &other.records {
            let mut r = rec.clone();
            r.key = map[k];
            r.children = r.children.iter().map(|&(p, c)| (p, map[&c])).collect();
            self.records.insert(r.key, r);
        }
        self.save(at, &RecordUpdate { add_child: Some((port, map[&other.root])), ..Default::default() })
            .expect("adding a child keeps flags");
        self.recompute_dist();
        map
    }

    /// Splits off a group holding at least `2c` required nodes. The new
    /// group is rooted at the deepest node whose subtree still holds `2c`
    /// required nodes and takes whole child subtrees of it in port order.
    /// That node stays behind as a helper when this group still needs it.
    pub fn split(&mut self, c: usize, gr_num: GroupNum) -> Group {
        let need = 2 * c;
        let req_sub = |g: &Group, k: Key| g.required_in(&g.subtree(k));
        let mut x = self.root;
        loop {
            let heavy = self.records[&x].children.iter().map(|&(_, ch)| ch).find(|&ch| req_sub(self, ch) >= need);
            match heavy {
                Some(ch) => x = ch,
                None => break,
            }
        }
        let x_is_root = x == self.root;
        let x_required = self.records[&x].required;
        let mut taken: Vec<(Port, Key)> = Vec::new();
        let mut got = if x_required && !x_is_root { 1 } else { 0 };
        for &(p, ch) in &self.records[&x].children {
            if got >= need {
                break;
            }
            got += req_sub(self, ch);
            taken.push((p, ch));
        }

        let uplink = if x_is_root {
            Uplink::SameNode
        } else {
            Uplink::Port(self.records[&x].parent.expect("non-root records have a parent port"))
        };
        let mut root = self.records[&x].clone();
        root.children = taken.clone();
        root.source = root.source && !x_is_root;
        if x_is_root {
            root.gr_child.clear();
        }
        if x_is_root || !x_required {
            root.required = false;
            root.helper = true;
        }
        let mut g2 = Group { gr_num, root: x, uplink, records: BTreeMap::new(), next_key: self.next_key };
        g2.records.insert(x, root);
        for &(_, ch) in &taken {
            for k in self.subtree(ch) {
                let r = self.records.remove(&k).expect("subtree key exists");
                g2.records.insert(k, r);
            }
        }
        g2.recompute_dist();

        let rest: Vec<(Port, Key)> = self.records[&x].children.iter().copied().filter(|c| !taken.contains(c)).collect();
        if x_is_root {
            let rec = self.get_mut(x);
            rec.children = rest;
            rec.gr_child.push(ChildLink { port: None, gr: gr_num });
        } else {
            let parent = self.parent_key(x).expect("non-root has a parent");
            let port_to_x = self.records[&parent].children.iter().find(|&&(_, k)| k == x).map(|&(p, _)| p);
            if rest.is_empty() {
                self.records.remove(&x);
                self.get_mut(parent).children.retain(|&(_, k)| k != x);
            } else {
                let rec = self.get_mut(x);
                rec.children = rest;
                rec.gr_child.clear();
                if x_required {
                    rec.required = false;
                    rec.helper = true;
                }
            }
            self.get_mut(parent).gr_child.push(ChildLink { port: port_to_x, gr: gr_num });
        }
        self.prune_helpers();
        self.recompute_dist();
        g2
    }

    /// Drops helper leaves that no longer connect anything.
    pub fn prune_helpers(&mut self) {
        loop {
            let dead: Vec<Key> = self
                .records
                .values()
                .filter(|r| r.helper && r.children.is_empty() && r.key != self.root && r.gr_child.is_empty())
                .map(|r| r.key)
                .collect();
            if dead.is_empty() {
                return;
            }
            for k in dead {
                if let Some(p) = self.parent_key(k) {
                    self.get_mut(p).children.retain(|&(_, c)| c != k);
                }
                self.records.remove(&k);
            }
        }
    }

    /// Adds a link at `key` unless that child group is already linked.
    pub fn add_link(&mut self, key: Key, link: ChildLink) {
        if !self.records.values().any(|r| r.gr_child.iter().any(|l| l.gr == link.gr)) {
            self.get_mut(key).gr_child.push(link);
        }
    }

    /// All inter-group links in traversal order: ascending key, port, group.
    pub fn links(&self) -> Vec<(Key, ChildLink)> {
        let mut out: Vec<(Key, ChildLink)> =
            self.records.values().flat_map(|r| r.gr_child.iter().map(move |l| (r.key, *l))).collect();
        out.sort();
        out
    }

    pub fn bits(&self, dims: &Dims) -> u64 {
        let key_bits = width(self.next_key as u64 + 1);
        let port = dims.port_bits();
        let grb = width(dims.k as u64 + 2);
        let mut b = grb + key_bits + 2;
        for r in self.records.values() {
            b += key_bits + port + 3 + width(self.records.len() as u64 + 1) + dims.color_bits() + port;
            b += r.children.len() as u64 * (port + key_bits);
            b += r.gr_child.len() as u64 * (port + 1 + grb);
            if r.source {
                b += dims.port_bits();
            }
        }
        b
    }
}

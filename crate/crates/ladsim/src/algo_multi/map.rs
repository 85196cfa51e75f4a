//! A whole-graph map flattened out of a gathered group tree.
//!
//! Entries are `(group, record)` pairs, so a node kept as a helper in one
//! group and as a required node in another shows up twice; only required
//! entries are real destinations. Edges of the entry tree may be same-node
//! hops (a child group rooted where its parent link sits).

use crate::algo_rooted::phase3::SuperTree;
use crate::algo_rooted::records::{GroupNum, Key, Uplink};
use crate::engine::{width, Dims};
use crate::graph::{Color, Port};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub color: Color,
    pub required: bool,
    pub parent: Option<usize>,
    /// Port from this entry to its parent; `None` for a same-node hop.
    pub up: Option<Port>,
    /// Port from the parent down to this entry; `None` for a same-node hop.
    pub down: Option<Port>,
    pub children: Vec<usize>,
}

/// Entry 0 is the node the map was gathered at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Map {
    pub entries: Vec<Entry>,
}

/// One step of a walk: the port to take (`None` = stay on the node) and the
/// entry reached.
pub type Hop = (Option<Port>, usize);

impl Map {
    pub fn from_tree(tree: &SuperTree) -> Map {
        let mut map = Map { entries: Vec::new() };
        map.add_group(tree, tree.top, None, None);
        map
    }

    fn add_group(&mut self, tree: &SuperTree, gr: GroupNum, parent: Option<usize>, down: Option<Port>) {
        let info = tree.get(gr);
        let g = &info.group;
        let up = match g.uplink {
            Uplink::Port(p) => Some(p),
            Uplink::SameNode | Uplink::Top => None,
        };
        let mut at: Vec<(Key, usize)> = Vec::new();
        let root = self.push(g.get(g.root).color, g.get(g.root).required, parent, up, down);
        at.push((g.root, root));
        let mut i = 0;
        while i < at.len() {
            let (key, ix) = at[i];
            for &(port, child) in &g.get(key).children {
                let rec = g.get(child);
                let c = self.push(rec.color, rec.required, Some(ix), rec.parent, Some(port));
                at.push((child, c));
            }
            i += 1;
        }
        for &cg in &info.children {
            let (key, port) = tree.get(cg).link.expect("child groups hang off a link");
            let ix = at.iter().find(|&&(k, _)| k == key).expect("link key is a record").1;
            self.add_group(tree, cg, Some(ix), port);
        }
    }

    fn push(
        &mut self,
        color: Color,
        required: bool,
        parent: Option<usize>,
        up: Option<Port>,
        down: Option<Port>,
    ) -> usize {
        let ix = self.entries.len();
        self.entries.push(Entry { color, required, parent, up, down, children: Vec::new() });
        if let Some(p) = parent {
            self.entries[p].children.push(ix);
        }
        ix
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn chain(&self, mut ix: usize) -> Vec<usize> {
        let mut out = vec![ix];
        while let Some(p) = self.entries[ix].parent {
            out.push(p);
            ix = p;
        }
        out.reverse();
        out
    }

    /// Tree walk from `from` to `to`.
    pub fn route(&self, from: usize, to: usize) -> Vec<Hop> {
        let a = self.chain(from);
        let b = self.chain(to);
        let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
        let mut out = Vec::new();
        for i in (common..a.len()).rev() {
            out.push((self.entries[a[i]].up, a[i - 1]));
        }
        for &e in &b[common..] {
            out.push((self.entries[e].down, e));
        }
        out
    }

    /// Depth-first walk through every entry, back to entry 0.
    pub fn tour(&self) -> Vec<Hop> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((ix, next)) = stack.pop() {
            match self.entries[ix].children.get(next) {
                Some(&c) => {
                    stack.push((ix, next + 1));
                    out.push((self.entries[c].down, c));
                    stack.push((c, 0));
                }
                None => {
                    if let Some(p) = self.entries[ix].parent {
                        out.push((self.entries[ix].up, p));
                    }
                }
            }
        }
        out
    }

    pub fn bits(&self, d: &Dims) -> u64 {
        let ix = width(self.entries.len() as u64 + 1);
        self.entries.len() as u64 * (d.color_bits() + 1 + ix + 2 * d.port_bits())
    }
}

/// Number of real moves in a walk.
pub fn moves(hops: &[Hop]) -> usize {
    hops.iter().filter(|h| h.0.is_some()).count()
}

//! Dispersion from arbitrary starting configurations.
//!
//! Every node that starts with two or more robots launches its own
//! traversal; lone robots wait to be collected. Traversals that run into each
//! other merge, and the one left holding all robots disperses them.

pub mod dispersed;
pub mod gather;
pub mod general;
pub mod map;
pub mod meeting;

use crate::graph::RobotId;

/// Who a traversal is: the smallest id it started with and how many robots
/// it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraversalIdentity {
    pub treelabel: RobotId,
    pub count: u32,
}

impl TraversalIdentity {
    /// Total order used for merging: more robots first, then smaller label.
    fn rank(&self) -> (u32, std::cmp::Reverse<RobotId>) {
        (self.count, std::cmp::Reverse(self.treelabel))
    }
}

/// The identity that survives when two traversals meet.
pub fn subsume(a: TraversalIdentity, b: TraversalIdentity) -> TraversalIdentity {
    if b.rank() > a.rank() {
        b
    } else {
        a
    }
}

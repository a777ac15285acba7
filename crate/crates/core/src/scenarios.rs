//! Reference instances used by tests, the CLI and the Python bindings.

use std::collections::BTreeMap;

use crate::graph::{AgentId, Topology};

/// Three agents on a triangle with inputs (4, 7, 3), `q = 10`, `p = 30`.
pub struct Triangle;

impl Triangle {
    pub const INPUTS: [u64; 3] = [4, 7, 3];
    pub const Q: u64 = 10;
    pub const P: u64 = 30;
    /// `(from, to, r_from,to)`.
    pub const SHARES: [(AgentId, AgentId, u64); 6] =
        [(1, 2, 14), (2, 1, 11), (2, 3, 17), (3, 2, 5), (3, 1, 3), (1, 3, 8)];

    pub fn topology() -> Topology {
        Topology::complete(3)
    }

    pub fn shares() -> BTreeMap<(AgentId, AgentId), u64> {
        Self::SHARES.iter().map(|&(i, j, r)| ((i, j), r)).collect()
    }
}

/// Ten agents in which `{3, 5, 10}` separates `{1, 2}`, `{4}` and `{6, 7, 8, 9}`.
pub fn cut_topology() -> Topology {
    Topology::new(
        10,
        [
            (1, 2),
            (1, 3),
            (2, 5),
            (3, 4),
            (3, 6),
            (4, 5),
            (4, 10),
            (5, 7),
            (5, 10),
            (6, 7),
            (6, 8),
            (7, 9),
            (8, 9),
            (8, 10),
            (9, 10),
        ],
    )
    .expect("static edge list is simple")
}

pub const CUT_ADVERSARY: [AgentId; 3] = [3, 5, 10];

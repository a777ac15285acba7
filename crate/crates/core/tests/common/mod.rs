#![allow(dead_code)]

use privavg_core::{SeededRng, Topology};

/// Random spanning tree on `n` agents plus each remaining edge with probability 1/3.
pub fn random_connected(rng: &mut SeededRng, n: usize) -> Topology {
    let mut edges = Vec::new();
    for v in 2..=n {
        let u = 1 + rng.below(v as u64 - 1) as usize;
        edges.push((u, v));
    }
    for i in 1..=n {
        for j in i + 1..=n {
            if !edges.contains(&(i, j)) && rng.below(3) == 0 {
                edges.push((i, j));
            }
        }
    }
    Topology::new(n, edges).unwrap()
}

/// Every labelled graph on `n` vertices.
pub fn all_graphs(n: usize) -> Vec<Topology> {
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let edges = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e);
            Topology::new(n, edges).unwrap()
        })
        .collect()
}

/// Component count by union-find, independent of the library's traversal.
pub fn component_count(t: &Topology) -> usize {
    let mut parent: Vec<usize> = (0..=t.n()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for &(i, j) in t.edges() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a] = b;
    }
    (1..=t.n()).filter(|&v| find(&mut parent, v) == v).count()
}

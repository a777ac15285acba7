//! Undirected simple graphs over agents `1..=n`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::residue::Modulus;

/// 1-based agent identifier.
pub type AgentId = usize;

/// Largest graph accepted by [`Topology::vertex_connectivity`]; the search
/// enumerates vertex subsets and is exponential in `n`.
pub const MAX_CONNECTIVITY_N: usize = 20;

/// An undirected simple graph on vertices `1..=n`.
///
/// Edges are stored as `(i, j)` with `i < j` in lexicographic order, which is
/// also the canonical column order of the incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Topology {
    n: usize,
    edges: Vec<(AgentId, AgentId)>,
    adjacency: Vec<BTreeSet<AgentId>>,
}

impl Topology {
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (AgentId, AgentId)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidEdge(i, j, "self-loop"));
            }
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::InvalidEdge(i, j, "endpoint out of range"));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidEdge(i, j, "duplicate edge"));
            }
        }
        let mut adjacency = vec![BTreeSet::new(); n + 1];
        for &(i, j) in &set {
            adjacency[i].insert(j);
            adjacency[j].insert(i);
        }
        Ok(Topology { n, edges: set.into_iter().collect(), adjacency })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j)));
        Topology::new(n, edges).expect("complete graph is simple")
    }

    pub fn path(n: usize) -> Self {
        Topology::new(n, (1..n).map(|i| (i, i + 1))).expect("path is simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        Topology::new(n, (1..n).map(|i| (i, i + 1)).chain([(1, n)])).expect("cycle is simple")
    }

    pub fn star(n: usize) -> Self {
        Topology::new(n, (2..=n).map(|j| (1, j))).expect("star is simple")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> impl Iterator<Item = AgentId> + '_ {
        1..=self.n
    }

    /// Edges `(i, j)`, `i < j`, in canonical (lexicographic) order.
    pub fn edges(&self) -> &[(AgentId, AgentId)] {
        &self.edges
    }

    pub fn edge_index(&self, i: AgentId, j: AgentId) -> Option<usize> {
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    pub fn has_edge(&self, i: AgentId, j: AgentId) -> bool {
        self.edge_index(i, j).is_some()
    }

    pub fn contains(&self, i: AgentId) -> bool {
        (1..=self.n).contains(&i)
    }

    pub fn neighbors(&self, i: AgentId) -> Result<&BTreeSet<AgentId>> {
        if self.contains(i) {
            Ok(&self.adjacency[i])
        } else {
            Err(Error::UnknownAgent(i))
        }
    }

    pub fn degree(&self, i: AgentId) -> usize {
        self.adjacency.get(i).map_or(0, BTreeSet::len)
    }

    fn check_subset(&self, set: &BTreeSet<AgentId>) -> Result<()> {
        match set.iter().find(|&&v| !self.contains(v)) {
            Some(&v) => Err(Error::UnknownAgent(v)),
            None => Ok(()),
        }
    }

    /// Connected components of the subgraph induced by `subset`, each sorted,
    /// ordered by smallest member.
    pub fn connected_components(&self, subset: &BTreeSet<AgentId>) -> Result<Partition> {
        self.check_subset(subset)?;
        let mut seen = BTreeSet::new();
        let mut parts = Vec::new();
        for &start in subset {
            if seen.contains(&start) {
                continue;
            }
            let mut part = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(v) = queue.pop_front() {
                part.insert(v);
                for &w in &self.adjacency[v] {
                    if subset.contains(&w) && seen.insert(w) {
                        queue.push_back(w);
                    }
                }
            }
            parts.push(part);
        }
        Ok(Partition(parts))
    }

    pub fn all_vertices(&self) -> BTreeSet<AgentId> {
        self.vertices().collect()
    }

    /// Components of the whole graph.
    pub fn components(&self) -> Partition {
        self.connected_components(&self.all_vertices()).expect("all vertices are valid")
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Components left after deleting `removed` and its incident edges.
    pub fn components_without(&self, removed: &BTreeSet<AgentId>) -> Result<Partition> {
        self.check_subset(removed)?;
        let rest: BTreeSet<AgentId> = self.vertices().filter(|v| !removed.contains(v)).collect();
        self.connected_components(&rest)
    }

    /// Whether removing `cut` (a proper subset of the vertices) disconnects the rest.
    pub fn is_vertex_cut(&self, cut: &BTreeSet<AgentId>) -> Result<bool> {
        self.check_subset(cut)?;
        if cut.len() >= self.n {
            return Err(Error::NotProperSubset);
        }
        Ok(self.components_without(cut)?.len() > 1)
    }

    /// Size of the smallest vertex cut; `n - 1` for complete graphs and 0 for
    /// disconnected ones. Brute force over subsets in increasing size, so
    /// restricted to `2 <= n <= 20`.
    pub fn vertex_connectivity(&self) -> Result<usize> {
        if self.n < 2 || self.n > MAX_CONNECTIVITY_N {
            return Err(Error::ConnectivityOutOfRange(self.n));
        }
        if !self.is_connected() {
            return Ok(0);
        }
        for k in 1..self.n.saturating_sub(1) {
            let mut found = false;
            for_each_subset(self.n, k, &mut |subset| {
                if !found && self.components_without(subset).expect("valid subset").len() > 1 {
                    found = true;
                }
            });
            if found {
                return Ok(k);
            }
        }
        Ok(self.n - 1)
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut entries = vec![vec![0i8; self.edges.len()]; self.n];
        for (col, &(i, j)) in self.edges.iter().enumerate() {
            entries[i - 1][col] = 1;
            entries[j - 1][col] = -1;
        }
        IncidenceMatrix { entries, cols: self.edges.len() }
    }

    /// Serialize in the line format read by [`FromStr`].
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(i, j) in &self.edges {
            out.push_str(&format!("e {i} {j}\n"));
        }
        out
    }
}

/// Visit every `k`-subset of `1..=n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&BTreeSet<AgentId>)) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut BTreeSet<AgentId>, f: &mut dyn FnMut(&BTreeSet<AgentId>)) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for v in start..=n {
            if n - v + 1 < k - cur.len() {
                break;
            }
            cur.insert(v);
            rec(v + 1, n, k, cur, f);
            cur.remove(&v);
        }
    }
    rec(1, n, k, &mut BTreeSet::new(), f);
}

/// Text format: a line `n <count>` followed by `e <i> <j>` lines. Blank lines
/// and lines starting with `#` are ignored.
impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut edges: Vec<(AgentId, AgentId)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::TopologyParse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("not an integer: {s:?}")));
            match fields.as_slice() {
                ["n", count] => {
                    if n.is_some() {
                        return Err(err("repeated `n` line".into()));
                    }
                    n = Some(num(count)?);
                }
                ["e", i, j] => {
                    let Some(count) = n else {
                        return Err(err("edge before `n` line".into()));
                    };
                    let (i, j) = (num(i)?, num(j)?);
                    if i == j {
                        return Err(err(format!("self-loop on {i}")));
                    }
                    if i == 0 || j == 0 || i > count || j > count {
                        return Err(err(format!("edge {{{i}, {j}}} outside 1..={count}")));
                    }
                    if !seen.insert((i.min(j), i.max(j))) {
                        return Err(err(format!("duplicate edge {{{i}, {j}}}")));
                    }
                    edges.push((i, j));
                }
                _ => return Err(err(format!("unrecognized line {line:?}"))),
            }
        }
        let n = n.ok_or(Error::TopologyParse { line: 0, msg: "missing `n` line".into() })?;
        Topology::new(n, edges)
    }
}

/// Disjoint vertex sets, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition(pub Vec<BTreeSet<AgentId>>);

impl Partition {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parts(&self) -> &[BTreeSet<AgentId>] {
        &self.0
    }

    /// The part containing `v`, if any.
    pub fn part_of(&self, v: AgentId) -> Option<&BTreeSet<AgentId>> {
        self.0.iter().find(|p| p.contains(&v))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|p| {
                let ids: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Node-by-edge incidence matrix: column `e = {i, j}`, `i < j`, has `+1` in
/// row `i` and `-1` in row `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    entries: Vec<Vec<i8>>,
    cols: usize,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at 0-based row `i` and column `e`.
    pub fn get(&self, i: usize, e: usize) -> i8 {
        self.entries[i][e]
    }

    pub fn column(&self, e: usize) -> Vec<i8> {
        self.entries.iter().map(|row| row[e]).collect()
    }

    pub fn column_sums(&self) -> Vec<i64> {
        (0..self.cols).map(|e| self.entries.iter().map(|r| r[e] as i64).sum()).collect()
    }

    /// `∇ · b mod p`.
    pub fn apply_mod(&self, b: &[u64], p: Modulus) -> Vec<u64> {
        assert_eq!(b.len(), self.cols);
        let m = p.get() as i128;
        self.entries
            .iter()
            .map(|row| {
                let acc: i128 = row.iter().zip(b).map(|(&c, &x)| c as i128 * x as i128).sum();
                acc.rem_euclid(m) as u64
            })
            .collect()
    }

    /// Rank over the field Z_p by Gaussian elimination. `p` must be prime.
    pub fn rank_mod_p(&self, p: Modulus) -> Result<usize> {
        if !p.is_prime() {
            return Err(Error::NonPrimeModulus(p.get()));
        }
        let m = p.get() as u128;
        let mut a: Vec<Vec<u128>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|&c| (c as i128).rem_euclid(m as i128) as u128).collect())
            .collect();
        let rows = a.len();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows).find(|&r| a[r][col] != 0) else {
                continue;
            };
            a.swap(rank, pivot);
            let inv = mod_pow(a[rank][col], m - 2, m);
            for x in &mut a[rank][col..] {
                *x = *x * inv % m;
            }
            let pivot_row = a[rank].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != rank && row[col] != 0 {
                    let factor = row[col];
                    for (x, &y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x = (*x + m - factor * y % m) % m;
                    }
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        Ok(rank)
    }
}

fn mod_pow(mut base: u128, mut exp: u128, m: u128) -> u128 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// Rank of the incidence matrix over Z_p (p prime).
pub fn incidence_rank_mod_p(m: &IncidenceMatrix, p: Modulus) -> Result<usize> {
    m.rank_mod_p(p)
}

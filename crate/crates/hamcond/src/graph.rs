//! Graph representations shared by the sampler, the Hamilton-cycle engine
//! and the oracles: raw edge sequences, simple digraphs, the bipartite
//! image of a digraph, cycle covers, core peeling and cycle verification.
//!
//! Vertices are dense integers `0..n`.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {edge} is a loop")]
    LoopPresent { edge: usize },
    #[error("edge {edge} is parallel to an earlier edge")]
    ParallelPresent { edge: usize },
    #[error("vertex id {vertex} out of range for n={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A raw pairing `x` of 2m vertex ids: slot 2j holds the tail of edge j and
/// slot 2j+1 its head (0-based storage of the paper-style odd/even slots).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSequence {
    pub n: usize,
    pub slots: Vec<u32>,
}

/// Defect report for an edge sequence: indices of loop edges and of edges
/// that share their ordered pair with another edge.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Defects {
    pub loops: Vec<usize>,
    pub multis: Vec<usize>,
}

impl EdgeSequence {
    pub fn new(n: usize, slots: Vec<u32>) -> Self {
        debug_assert!(slots.len() % 2 == 0);
        debug_assert!(slots.iter().all(|&v| (v as usize) < n));
        EdgeSequence { n, slots }
    }

    pub fn m(&self) -> usize {
        self.slots.len() / 2
    }

    pub fn tail(&self, j: usize) -> u32 {
        self.slots[2 * j]
    }

    pub fn head(&self, j: usize) -> u32 {
        self.slots[2 * j + 1]
    }

    pub fn edge(&self, j: usize) -> (u32, u32) {
        (self.tail(j), self.head(j))
    }

    pub fn out_degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for j in 0..self.m() {
            d[self.tail(j) as usize] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for j in 0..self.m() {
            d[self.head(j) as usize] += 1;
        }
        d
    }

    /// L = positions with equal tail and head; M = positions whose ordered
    /// pair occurs at some other position as well.
    pub fn detect_defects(&self) -> Defects {
        let m = self.m();
        let mut loops = Vec::new();
        let mut keyed: Vec<(u64, u32)> = Vec::with_capacity(m);
        for j in 0..m {
            let (u, v) = self.edge(j);
            if u == v {
                loops.push(j);
            } else {
                keyed.push((((u as u64) << 32) | v as u64, j as u32));
            }
        }
        keyed.sort_unstable();
        let mut multis = Vec::new();
        let mut i = 0;
        while i < keyed.len() {
            let mut k = i + 1;
            while k < keyed.len() && keyed[k].0 == keyed[i].0 {
                k += 1;
            }
            if k - i > 1 {
                multis.extend(keyed[i..k].iter().map(|&(_, j)| j as usize));
            }
            i = k;
        }
        multis.sort_unstable();
        Defects { loops, multis }
    }

    pub fn is_simple(&self) -> bool {
        let d = self.detect_defects();
        d.loops.is_empty() && d.multis.is_empty()
    }
}

/// A simple directed graph with adjacency lists and stored degree tallies.
#[derive(Debug, Clone)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub out_adj: Vec<Vec<u32>>,
    pub in_adj: Vec<Vec<u32>>,
    pub out_deg: Vec<u32>,
    pub in_deg: Vec<u32>,
}

impl Digraph {
    /// Build from an explicit simple edge list; sorts adjacency for
    /// deterministic iteration order.
    pub fn from_edges(n: usize, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        let mut keyed: Vec<(u64, u32)> = Vec::with_capacity(edges.len());
        for (j, &(u, v)) in edges.iter().enumerate() {
            if u as usize >= n {
                return Err(GraphError::VertexOutOfRange { vertex: u as usize, n });
            }
            if v as usize >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v as usize, n });
            }
            if u == v {
                return Err(GraphError::LoopPresent { edge: j });
            }
            keyed.push((((u as u64) << 32) | v as u64, j as u32));
        }
        keyed.sort_unstable();
        // report the earliest index that duplicates an earlier position,
        // matching incremental insertion semantics
        let mut dup: Option<usize> = None;
        for w in keyed.windows(2) {
            if w[0].0 == w[1].0 {
                let j = w[1].1 as usize;
                if dup.map_or(true, |d| j < d) {
                    dup = Some(j);
                }
            }
        }
        if let Some(edge) = dup {
            return Err(GraphError::ParallelPresent { edge });
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut out_deg = vec![0u32; n];
        let mut in_deg = vec![0u32; n];
        for &(u, v) in &edges {
            out_deg[u as usize] += 1;
            in_deg[v as usize] += 1;
        }
        for v in 0..n {
            out_adj[v].reserve_exact(out_deg[v] as usize);
            in_adj[v].reserve_exact(in_deg[v] as usize);
        }
        // keyed is sorted by (tail, head): filling out_adj in that order
        // leaves each list sorted
        for &(key, _) in &keyed {
            let (u, v) = ((key >> 32) as u32, key as u32);
            out_adj[u as usize].push(v);
            in_adj[v as usize].push(u);
        }
        for a in in_adj.iter_mut() {
            a.sort_unstable();
        }
        Ok(Digraph { n, edges, out_adj, in_adj, out_deg, in_deg })
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.out_adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn min_in_degree(&self) -> u32 {
        self.in_deg.iter().copied().min().unwrap_or(0)
    }

    pub fn min_out_degree(&self) -> u32 {
        self.out_deg.iter().copied().min().unwrap_or(0)
    }

    #[cfg(debug_assertions)]
    pub fn validate_tallies(&self) {
        for v in 0..self.n {
            assert_eq!(self.out_adj[v].len() as u32, self.out_deg[v]);
            assert_eq!(self.in_adj[v].len() as u32, self.in_deg[v]);
        }
        assert_eq!(
            self.out_deg.iter().map(|&d| d as usize).sum::<usize>(),
            self.edges.len()
        );
    }
}

/// `LoopPresent`/`ParallelPresent` if the sequence carries defects; callers
/// sanitize first.
pub fn build_digraph(seq: &EdgeSequence) -> Result<Digraph, GraphError> {
    let edges: Vec<(u32, u32)> = (0..seq.m()).map(|j| seq.edge(j)).collect();
    Digraph::from_edges(seq.n, edges)
}

/// Bipartite graph on sides A, B of equal size n (side indices `0..n`).
/// Stored as adjacency of A-vertices into B.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    pub n: usize,
    pub adj_a: Vec<Vec<u32>>,
}

impl BipartiteGraph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut adj_a = vec![Vec::new(); n];
        for (a, b) in edges {
            adj_a[a as usize].push(b);
        }
        for a in adj_a.iter_mut() {
            a.sort_unstable();
        }
        BipartiteGraph { n, adj_a }
    }

    pub fn edge_count(&self) -> usize {
        self.adj_a.iter().map(Vec::len).sum()
    }

    pub fn adj_b(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for (a, bs) in self.adj_a.iter().enumerate() {
            for &b in bs {
                adj[b as usize].push(a as u32);
            }
        }
        adj
    }
}

/// The natural bijection: digraph edge (i, j) becomes bipartite edge
/// {a_i, b_j}.
pub fn to_bipartite(d: &Digraph) -> BipartiteGraph {
    BipartiteGraph::from_edges(d.n, d.edges.iter().copied())
}

/// Core membership of a bipartite graph: per-side kept flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteCore {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

impl BipartiteCore {
    pub fn kept_count(&self) -> usize {
        self.a.iter().chain(self.b.iter()).filter(|&&k| k).count()
    }
}

/// Maximal vertex set inducing a subgraph of minimum degree >= `d_min`,
/// by queue-based peeling. The result is order-independent.
pub fn peel_core(g: &BipartiteGraph, d_min: usize) -> BipartiteCore {
    assert!(d_min >= 1);
    let n = g.n;
    let adj_b = g.adj_b();
    let mut deg_a: Vec<usize> = g.adj_a.iter().map(Vec::len).collect();
    let mut deg_b: Vec<usize> = adj_b.iter().map(Vec::len).collect();
    let mut a = vec![true; n];
    let mut b = vec![true; n];
    // queue entries: (side, vertex); side 0 = A
    let mut queue: Vec<(u8, u32)> = Vec::new();
    for v in 0..n {
        if deg_a[v] < d_min {
            a[v] = false;
            queue.push((0, v as u32));
        }
        if deg_b[v] < d_min {
            b[v] = false;
            queue.push((1, v as u32));
        }
    }
    while let Some((side, v)) = queue.pop() {
        let neighbors = if side == 0 { &g.adj_a[v as usize] } else { &adj_b[v as usize] };
        for &w in neighbors {
            let w = w as usize;
            if side == 0 {
                if b[w] {
                    deg_b[w] -= 1;
                    if deg_b[w] < d_min {
                        b[w] = false;
                        queue.push((1, w as u32));
                    }
                }
            } else if a[w] {
                deg_a[w] -= 1;
                if deg_a[w] < d_min {
                    a[w] = false;
                    queue.push((0, w as u32));
                }
            }
        }
    }
    BipartiteCore { a, b }
}

/// A permutation digraph: vertex-disjoint directed cycles covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleCover {
    pub n: usize,
    pub cycles: Vec<Vec<u32>>,
}

impl CycleCover {
    /// Build from a successor permutation (`succ[v]` is the out-neighbor
    /// of v).
    pub fn from_successor(succ: &[u32]) -> Self {
        let n = succ.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut v = start as u32;
            while !seen[v as usize] {
                seen[v as usize] = true;
                cyc.push(v);
                v = succ[v as usize];
            }
            cycles.push(cyc);
        }
        CycleCover { n, cycles }
    }

    pub fn successor(&self) -> Vec<u32> {
        let mut succ = vec![u32::MAX; self.n];
        for cyc in &self.cycles {
            for (i, &v) in cyc.iter().enumerate() {
                succ[v as usize] = cyc[(i + 1) % cyc.len()];
            }
        }
        succ
    }

    pub fn is_valid_cover(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut count = 0usize;
        for cyc in &self.cycles {
            if cyc.is_empty() {
                return false;
            }
            for &v in cyc {
                if v as usize >= self.n || seen[v as usize] {
                    return false;
                }
                seen[v as usize] = true;
                count += 1;
            }
        }
        count == self.n
    }

    /// True if every consecutive (and wrap-around) pair of every cycle is an
    /// edge of `d`.
    pub fn uses_edges_of(&self, d: &Digraph) -> bool {
        self.cycles.iter().all(|cyc| {
            cyc.iter()
                .enumerate()
                .all(|(i, &v)| d.has_edge(v, cyc[(i + 1) % cyc.len()]))
        })
    }

    pub fn smallest_cycle_len(&self) -> usize {
        self.cycles.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// True iff `cycle` visits every vertex exactly once and each consecutive
/// (and wrap-around) pair is a directed edge of `d`.
pub fn verify_hamilton_cycle(d: &Digraph, cycle: &[u32]) -> bool {
    if cycle.len() != d.n || d.n == 0 {
        return false;
    }
    let mut seen = vec![false; d.n];
    for &v in cycle {
        if v as usize >= d.n || seen[v as usize] {
            return false;
        }
        seen[v as usize] = true;
    }
    cycle
        .iter()
        .enumerate()
        .all(|(i, &v)| d.has_edge(v, cycle[(i + 1) % cycle.len()]))
}

/// Edge-list text format: header `n m`, then m lines `u v` (0-indexed).
pub fn write_edge_list(d: &Digraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", d.n, d.m());
    for &(u, v) in &d.edges {
        let _ = writeln!(s, "{} {}", u, v);
    }
    s
}

/// Parse the edge-list format, rejecting loops and duplicates with
/// line-numbered errors.
pub fn parse_edge_list(text: &str) -> Result<Digraph, GraphError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(GraphError::Parse {
        line: 1,
        message: "missing header line `n m`".into(),
    })?;
    let parse_pair = |line_no: usize, s: &str| -> Result<(usize, usize), GraphError> {
        let mut it = s.split_whitespace();
        let err = |msg: &str| GraphError::Parse { line: line_no + 1, message: msg.into() };
        let a = it
            .next()
            .ok_or_else(|| err("expected two integers"))?
            .parse::<usize>()
            .map_err(|_| err("invalid integer"))?;
        let b = it
            .next()
            .ok_or_else(|| err("expected two integers"))?
            .parse::<usize>()
            .map_err(|_| err("invalid integer"))?;
        if it.next().is_some() {
            return Err(err("trailing tokens"));
        }
        Ok((a, b))
    };
    let (n, m) = parse_pair(0, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (u, v) = parse_pair(line_no, line)?;
        if u >= n || v >= n {
            return Err(GraphError::Parse {
                line: line_no + 1,
                message: format!("vertex id out of range for n={}", n),
            });
        }
        if u == v {
            return Err(GraphError::Parse {
                line: line_no + 1,
                message: "loop edge rejected".into(),
            });
        }
        edges.push((u as u32, v as u32));
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: 1,
            message: format!("header promises {} edges, found {}", m, edges.len()),
        });
    }
    Digraph::from_edges(n, edges).map_err(|e| match e {
        GraphError::ParallelPresent { edge } => GraphError::Parse {
            line: edge + 2,
            message: "duplicate edge rejected".into(),
        },
        other => other,
    })
}

//! The three-phase Hamilton cycle construction.
//!
//! Phase 0 partitions the edge sequence into E1 (a prefix plus low-count
//! backfill), E2 and E3 (fair coin per remaining edge), and peels the d_min
//! cores K2, K3 of the bipartite images of E2, E3. Phase 1 turns a perfect
//! matching of E1's bipartite image into a cycle cover via the permutation
//! trick. Phase 2 eliminates cycles shorter than n0 with rotation trees of
//! near-permutation digraphs over E(K2) (an Out-Phase extending the path
//! head, then In-Phases extending the tail, closing with a single edge).
//! Phase 3 patches the remaining long cycles pairwise using E(K3) edges.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    peel_core, BipartiteGraph, CycleCover, Digraph, EdgeSequence,
};
use crate::oracle;
use crate::params::Parameters;
use crate::treap::{TreapForest, NIL};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("edge partition degenerate: |E2|={e2}, |E3|={e3} (need >= n={n})")]
    PartitionDegenerate { e2: usize, e3: usize, n: usize },
    #[error("E1's bipartite image has no perfect matching (max matching {matched} < {n})")]
    NoPerfectMatching { matched: usize, n: usize },
    #[error("phase 2 failed to eliminate a cycle of length {cycle_len}")]
    Phase2Failure { cycle_len: usize },
    #[error("phase 3 found no patching pair between two cycles")]
    Phase3Failure,
}

/// Output of Phase 0: index sets into the host edge list, plus the cores.
#[derive(Debug, Clone)]
pub struct EdgePartition {
    pub e1: Vec<usize>,
    pub e2: Vec<usize>,
    pub e3: Vec<usize>,
    /// K2 membership: (tail side, head side) kept flags
    pub k2_a: Vec<bool>,
    pub k2_b: Vec<bool>,
    pub k3_a: Vec<bool>,
    pub k3_b: Vec<bool>,
}

/// E1 = the first j1 edges plus every later edge whose tail (head) appeared
/// fewer than d_min times among the first j1 tails (heads); the rest is
/// split into E2, E3 by fair coins. K_i = peel_core of G_i at d_min.
pub fn phase0_partition<R: Rng + ?Sized>(
    seq: &EdgeSequence,
    params: &Parameters,
    rng: &mut R,
) -> Result<EdgePartition, EngineError> {
    let n = seq.n;
    let m = seq.m();
    let j1 = params.j1.min(m);
    let mut tail_count = vec![0u32; n];
    let mut head_count = vec![0u32; n];
    for j in 0..j1 {
        tail_count[seq.tail(j) as usize] += 1;
        head_count[seq.head(j) as usize] += 1;
    }
    let d_min = params.d_min as u32;
    let mut e1 = Vec::with_capacity(j1);
    let mut e2 = Vec::new();
    let mut e3 = Vec::new();
    // the paper splits the non-prefix edges into disjoint E2/E3 halves (the
    // proof needs independent phases); at desk sizes those halves leave the
    // rotation/patching cores too thin to branch, so the desk profile hands
    // the full edge set to both phases — validity is unaffected, since every
    // rotation and patch still only uses edges of the host digraph
    let share = params.profile == crate::params::Profile::Desk;
    for j in 0..m {
        if j < j1
            || tail_count[seq.tail(j) as usize] < d_min
            || head_count[seq.head(j) as usize] < d_min
        {
            e1.push(j);
        } else if !share {
            if rng.gen_bool(0.5) {
                e2.push(j);
            } else {
                e3.push(j);
            }
        }
    }
    if share {
        e2 = (0..m).collect();
        e3 = e2.clone();
    }
    if e2.len() < n || e3.len() < n {
        return Err(EngineError::PartitionDegenerate { e2: e2.len(), e3: e3.len(), n });
    }
    let core_of = |idx: &[usize]| {
        let g = BipartiteGraph::from_edges(n, idx.iter().map(|&j| seq.edge(j)));
        let core = peel_core(&g, params.core_depth);
        (core.a, core.b)
    };
    let (k2_a, k2_b) = core_of(&e2);
    let (k3_a, k3_b) = core_of(&e3);
    Ok(EdgePartition { e1, e2, e3, k2_a, k2_b, k3_a, k3_b })
}

/// Hopcroft-Karp maximum bipartite matching; deterministic given adjacency
/// order. Returns match_a (A index -> B index or NIL).
pub fn max_bipartite_matching(g: &BipartiteGraph) -> Vec<u32> {
    let n = g.n;
    let mut match_a = vec![NIL; n];
    let mut match_b = vec![NIL; n];
    let mut dist = vec![u32::MAX; n];
    let mut queue = Vec::with_capacity(n);

    loop {
        // BFS layering from free A vertices
        queue.clear();
        for a in 0..n {
            if match_a[a] == NIL {
                dist[a] = 0;
                queue.push(a as u32);
            } else {
                dist[a] = u32::MAX;
            }
        }
        let mut found_free_b = false;
        let mut qi = 0;
        while qi < queue.len() {
            let a = queue[qi] as usize;
            qi += 1;
            for &b in &g.adj_a[a] {
                let a2 = match_b[b as usize];
                if a2 == NIL {
                    found_free_b = true;
                } else if dist[a2 as usize] == u32::MAX {
                    dist[a2 as usize] = dist[a] + 1;
                    queue.push(a2);
                }
            }
        }
        if !found_free_b {
            break;
        }
        // layered DFS augmentation
        fn try_augment(
            a: usize,
            g: &BipartiteGraph,
            match_a: &mut [u32],
            match_b: &mut [u32],
            dist: &mut [u32],
        ) -> bool {
            for i in 0..g.adj_a[a].len() {
                let b = g.adj_a[a][i] as usize;
                let a2 = match_b[b];
                if a2 == NIL
                    || (dist[a2 as usize] == dist[a] + 1
                        && try_augment(a2 as usize, g, match_a, match_b, dist))
                {
                    match_a[a] = b as u32;
                    match_b[b] = a as u32;
                    return true;
                }
            }
            dist[a] = u32::MAX;
            false
        }
        for a in 0..n {
            if match_a[a] == NIL {
                try_augment(a, g, &mut match_a, &mut match_b, &mut dist);
            }
        }
    }
    match_a
}

/// Permutation trick: relabel the B side by a uniform permutation pi, take a
/// maximum matching of the relabeled graph, and map back; a perfect matching
/// then behaves like a uniform permutation, so its cycle cover has few and
/// mostly long cycles.
pub fn phase1_cycle_cover<R: Rng + ?Sized>(
    n: usize,
    e1_edges: &[(u32, u32)],
    rng: &mut R,
) -> Result<CycleCover, EngineError> {
    let mut pi: Vec<u32> = (0..n as u32).collect();
    pi.shuffle(rng);
    let relabeled = BipartiteGraph::from_edges(n, e1_edges.iter().map(|&(u, v)| (u, pi[v as usize])));
    let match_a = max_bipartite_matching(&relabeled);
    let matched = match_a.iter().filter(|&&b| b != NIL).count();
    if matched < n {
        return Err(EngineError::NoPerfectMatching { matched, n });
    }
    let mut inv = vec![0u32; n];
    for (v, &pv) in pi.iter().enumerate() {
        inv[pv as usize] = v as u32;
    }
    let succ: Vec<u32> = match_a.iter().map(|&b| inv[b as usize]).collect();
    Ok(CycleCover::from_successor(&succ))
}

/// Per-call statistics from Phase 2.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Phase2Stats {
    pub eliminations: usize,
    pub broken_edge_retries: usize,
    pub tree_nodes: usize,
    pub premature_closures: usize,
}

const MAX_BREAK_EDGES: usize = 8;
const ELIMINATION_NODE_BUDGET: usize = 400_000;

struct Phase2Ctx<'a> {
    forest: TreapForest,
    out2: &'a [Vec<u32>],
    in2: &'a [Vec<u32>],
    k2_set: &'a HashSet<(u32, u32)>,
    n0: u32,
    nu: usize,
    i0: usize,
    w_cap: usize,
    /// paper profile: every examined endpoint enters the used-set W and
    /// rotations avoid W (condition C(ii), the proof's independence
    /// device); the desk profile skips W entirely — at desk sizes the
    /// rotation trees need a constant fraction of all vertices, so C(ii)
    /// starves them (depth caps and node budgets bound the work instead)
    mark_examined: bool,
    used: Vec<bool>,
    used_count: usize,
    nodes_spent: usize,
    stats: Phase2Stats,
}

impl Phase2Ctx<'_> {
    fn mark_used(&mut self, v: u32) {
        if !self.used[v as usize] {
            self.used[v as usize] = true;
            self.used_count += 1;
        }
    }

    /// Out-rotation at the path head: add (v, w), delete w's in-edge.
    /// Returns the new path root (the path always survives).
    fn apply_out(&mut self, path_root: u32, w: u32) -> u32 {
        let r = self.forest.root_of(w);
        if r == path_root {
            // Case 2: split off the suffix starting at w; it becomes a cycle
            let p = self.forest.rank(w);
            let (pre, suf) = self.forest.split(path_root, p);
            debug_assert!(pre != NIL && suf != NIL);
            pre
        } else {
            // Case 1: absorb the cycle, entering at w
            let k = self.forest.rank(w);
            let cyc = self.forest.rotate_to_front(r, k);
            self.forest.merge(path_root, cyc)
        }
    }

    /// In-rotation at the path tail u: add (w, u), delete (w, succ(w)).
    fn apply_in(&mut self, path_root: u32, w: u32) -> u32 {
        let r = self.forest.root_of(w);
        if r == path_root {
            // prefix u..w becomes a cycle; the suffix is the new path
            let p = self.forest.rank(w);
            let (pre, suf) = self.forest.split(path_root, p + 1);
            debug_assert!(pre != NIL && suf != NIL);
            suf
        } else {
            // splice the cycle in front, starting at succ(w), ending at w
            let len = self.forest.len_of_root(r);
            let pos = self.forest.rank(w);
            let cyc = self.forest.rotate_to_front(r, (pos + 1) % len);
            self.forest.merge(cyc, path_root)
        }
    }
}

#[derive(Clone)]
struct OutNode {
    chain: Vec<u32>,
    end: u32,
    path_len: u32,
}

/// While a cycle shorter than n0 exists, break one of its edges and grow
/// rotation trees over E(K2) until an edge closes some rotated path into a
/// cycle of length >= n0. Small cycles may only disappear (by absorption or
/// closure); every new cycle respects n0 (condition C(i)), and rotations
/// avoid vertices already used in this elimination (condition C(ii)).
pub fn phase2_eliminate_small(
    cover: &CycleCover,
    k2_edges: &[(u32, u32)],
    params: &Parameters,
    seed: u64,
) -> Result<(CycleCover, Phase2Stats), EngineError> {
    let n = cover.n;
    let n0 = params.n0 as u32;
    let mut out2 = vec![Vec::new(); n];
    let mut in2 = vec![Vec::new(); n];
    let mut k2_set = HashSet::with_capacity(k2_edges.len());
    for &(u, v) in k2_edges {
        if k2_set.insert((u, v)) {
            out2[u as usize].push(v);
            in2[v as usize].push(u);
        }
    }
    let mut forest = TreapForest::new(n, seed);
    for cyc in &cover.cycles {
        forest.build(cyc);
    }
    let mut ctx = Phase2Ctx {
        forest,
        out2: &out2,
        in2: &in2,
        k2_set: &k2_set,
        n0,
        nu: params.nu,
        i0: params.i0,
        w_cap: params.w_cap,
        mark_examined: params.profile == crate::params::Profile::Paper,
        used: vec![false; n],
        used_count: 0,
        nodes_spent: 0,
        stats: Phase2Stats::default(),
    };

    loop {
        // survey the current cycle roots
        let mut root_len: Vec<(u32, u32)> = Vec::new();
        {
            let mut seen_roots: HashSet<u32> = HashSet::new();
            for v in 0..n as u32 {
                let r = ctx.forest.root_of(v);
                if seen_roots.insert(r) {
                    root_len.push((r, ctx.forest.len_of_root(r)));
                }
            }
        }
        let small = root_len
            .iter()
            .filter(|&&(_, len)| len < n0)
            .min_by_key(|&&(r, len)| (len, r));
        let (small_root, small_len) = match small {
            None => break,
            Some(&(r, len)) => (r, len),
        };

        let cycle_vertices = ctx.forest.to_vec(small_root);
        let attempts = (small_len as usize).min(MAX_BREAK_EDGES).max(1);
        let stride = cycle_vertices.len() / attempts;
        let mut eliminated = false;
        for a in 0..attempts {
            let break_pos = a * stride.max(1) % cycle_vertices.len();
            if a > 0 {
                ctx.stats.broken_edge_retries += 1;
            }
            if eliminate_one(&mut ctx, small_root, break_pos as u32) {
                eliminated = true;
                break;
            }
        }
        if !eliminated {
            return Err(EngineError::Phase2Failure { cycle_len: small_len as usize });
        }
        ctx.stats.eliminations += 1;
    }

    // materialize the final PD
    let mut cycles: Vec<Vec<u32>> = Vec::new();
    let mut seen_roots: HashSet<u32> = HashSet::new();
    for v in 0..n as u32 {
        let r = ctx.forest.root_of(v);
        if seen_roots.insert(r) {
            cycles.push(ctx.forest.to_vec(r));
        }
    }
    Ok((CycleCover { n, cycles }, ctx.stats))
}

/// One elimination attempt for a fixed broken edge; true on success, in
/// which case the forest mutations are committed. On failure every
/// mutation is rolled back.
fn eliminate_one(ctx: &mut Phase2Ctx, small_root: u32, break_pos: u32) -> bool {
    ctx.used.iter_mut().for_each(|u| *u = false);
    ctx.used_count = 0;
    ctx.nodes_spent = 0;
    let base = ctx.forest.checkpoint();
    // break (v0, u0): the path runs from u0 (pos break_pos+1) to v0
    let len = ctx.forest.len_of_root(small_root);
    let path_root = ctx.forest.rotate_to_front(small_root, (break_pos + 1) % len);
    let u0 = ctx.forest.first(path_root);
    let v0 = ctx.forest.last(path_root);

    // ---- Out-Phase: BFS over rotation chains ----
    let mut level: Vec<OutNode> = vec![OutNode { chain: Vec::new(), end: v0, path_len: len }];
    let mut leaves: Vec<OutNode> = level.clone();
    for _depth in 0..ctx.i0 {
        let mut next: Vec<OutNode> = Vec::new();
        for node in &level {
            if ctx.nodes_spent > ELIMINATION_NODE_BUDGET {
                break;
            }
            ctx.nodes_spent += 1;
            ctx.stats.tree_nodes += 1;
            let cp = ctx.forest.checkpoint();
            let mut pr = path_root;
            for &w in &node.chain {
                pr = ctx.apply_out(pr, w);
            }
            let out_edges: Vec<u32> = ctx.out2[node.end as usize].clone();
            for w in out_edges {
                if ctx.used_count >= ctx.w_cap {
                    break;
                }
                let w_was_used = ctx.mark_examined && ctx.used[w as usize];
                if ctx.mark_examined {
                    // examining (end, w) marks both used
                    ctx.mark_used(node.end);
                    ctx.mark_used(w);
                }
                if w == u0 {
                    // premature closure: the whole path becomes a cycle
                    if node.path_len >= ctx.n0 {
                        ctx.stats.premature_closures += 1;
                        ctx.forest.commit();
                        return true;
                    }
                    continue;
                }
                if w_was_used {
                    continue;
                }
                let r = ctx.forest.root_of(w);
                if r == pr {
                    // Case 2: new cycle = suffix from w, new path = prefix
                    let p = ctx.forest.rank(w);
                    let cycle_part = node.path_len - p;
                    if cycle_part < ctx.n0 || p < ctx.n0 {
                        continue;
                    }
                    let x = ctx.forest.kth(pr, p - 1);
                    if ctx.mark_examined && ctx.used[x as usize] {
                        continue;
                    }
                    let mut chain = node.chain.clone();
                    chain.push(w);
                    next.push(OutNode { chain, end: x, path_len: p });
                } else {
                    // Case 1: absorb w's cycle
                    let clen = ctx.forest.len_of_root(r);
                    let new_len = node.path_len + clen;
                    if new_len < ctx.n0 {
                        continue;
                    }
                    let pos = ctx.forest.rank(w);
                    let x = ctx.forest.kth(r, (pos + clen - 1) % clen);
                    if ctx.mark_examined && ctx.used[x as usize] {
                        continue;
                    }
                    let mut chain = node.chain.clone();
                    chain.push(w);
                    next.push(OutNode { chain, end: x, path_len: new_len });
                }
                if next.len() >= 3 * ctx.nu {
                    break;
                }
            }
            ctx.forest.rollback(cp);
            if next.len() >= 3 * ctx.nu {
                break;
            }
        }
        if next.is_empty() || ctx.nodes_spent > ELIMINATION_NODE_BUDGET {
            break;
        }
        leaves = next.clone();
        level = next;
        if level.len() >= ctx.nu {
            break;
        }
    }

    // keep only leaves with long paths (C(i) guarantees this for expanded
    // nodes; the root may be short)
    leaves.retain(|l| l.path_len >= ctx.n0);

    // ---- In-Phase: DFS with undo from each Out-Phase leaf ----
    for leaf in &leaves {
        if ctx.nodes_spent > ELIMINATION_NODE_BUDGET {
            break;
        }
        let cp = ctx.forest.checkpoint();
        let mut pr = path_root;
        for &w in &leaf.chain {
            pr = ctx.apply_out(pr, w);
        }
        let v_i = leaf.end;
        debug_assert_eq!(ctx.forest.last(pr), v_i);
        let mut tree_leaves = 0usize;
        if in_phase_dfs(ctx, pr, v_i, leaf.path_len, 0, &mut tree_leaves) {
            ctx.forest.commit();
            return true;
        }
        ctx.forest.rollback(cp);
    }

    ctx.forest.rollback(base);
    false
}

/// Grow the In-Phase tree below the current path (ending at v_i) depth-first,
/// closing with an E(K2) edge (v_i, start) as soon as one is acceptable.
fn in_phase_dfs(
    ctx: &mut Phase2Ctx,
    path_root: u32,
    v_i: u32,
    path_len: u32,
    depth: usize,
    tree_leaves: &mut usize,
) -> bool {
    ctx.nodes_spent += 1;
    ctx.stats.tree_nodes += 1;
    let u = ctx.forest.first(path_root);
    // closing edge check
    if path_len >= ctx.n0 && ctx.k2_set.contains(&(v_i, u)) {
        return true;
    }
    if depth >= ctx.i0 || *tree_leaves >= ctx.nu || ctx.nodes_spent > ELIMINATION_NODE_BUDGET {
        *tree_leaves += 1;
        return false;
    }
    if ctx.used_count >= ctx.w_cap {
        return false;
    }
    let in_edges: Vec<u32> = ctx.in2[u as usize].clone();
    let mut expanded = false;
    for w in in_edges {
        if *tree_leaves >= ctx.nu || ctx.nodes_spent > ELIMINATION_NODE_BUDGET {
            break;
        }
        let w_was_used = ctx.mark_examined && ctx.used[w as usize];
        if ctx.mark_examined {
            ctx.mark_used(u);
            ctx.mark_used(w);
        }
        if w_was_used || w == v_i {
            continue;
        }
        let r = ctx.forest.root_of(w);
        let (x, cycle_ok, new_len) = if r == path_root {
            // prefix u..w closes into a cycle; suffix is the new path
            let p = ctx.forest.rank(w);
            let cyc_len = p + 1;
            let rest = path_len - cyc_len;
            if cyc_len < ctx.n0 || rest < ctx.n0 {
                (NIL, false, 0)
            } else {
                (ctx.forest.kth(path_root, p + 1), true, rest)
            }
        } else {
            let clen = ctx.forest.len_of_root(r);
            let pos = ctx.forest.rank(w);
            (ctx.forest.kth(r, (pos + 1) % clen), true, path_len + clen)
        };
        if !cycle_ok || (ctx.mark_examined && ctx.used[x as usize]) {
            continue;
        }
        expanded = true;
        let cp = ctx.forest.checkpoint();
        let new_root = ctx.apply_in(path_root, w);
        if in_phase_dfs(ctx, new_root, v_i, new_len, depth + 1, tree_leaves) {
            return true;
        }
        ctx.forest.rollback(cp);
    }
    if !expanded {
        *tree_leaves += 1;
    }
    false
}

/// Patch the cycles of `cover` (all of length >= n0) into one Hamilton
/// cycle: repeatedly merge the two largest cycles L1, L2 by finding
/// (i,j) in L1, (k,l) in L2 with (i,l) and (k,j) both available in the K3
/// edge set, replacing (i,j), (k,l) by (i,l), (k,j).
pub fn phase3_patch(
    cover: &CycleCover,
    k3_edges: &[(u32, u32)],
) -> Result<Vec<u32>, EngineError> {
    let n = cover.n;
    let mut k3_set: HashSet<(u32, u32)> = HashSet::with_capacity(k3_edges.len());
    let mut out3 = vec![Vec::new(); n];
    for &(u, v) in k3_edges {
        if k3_set.insert((u, v)) {
            out3[u as usize].push(v);
        }
    }
    let mut cycles: Vec<Vec<u32>> = cover.cycles.clone();
    while cycles.len() > 1 {
        cycles.sort_by_key(|c| std::cmp::Reverse(c.len()));
        // prefer merging the two largest, but fall back to any mergeable pair
        let mut merged_pair: Option<(usize, usize, Vec<u32>)> = None;
        'pairs: for bi in (1..cycles.len()).rev() {
            for ai in 0..bi {
                if let Some(cyc) = try_merge(&cycles[ai], &cycles[bi], n, &out3, &k3_set) {
                    merged_pair = Some((ai, bi, cyc));
                    break 'pairs;
                }
            }
        }
        match merged_pair {
            Some((ai, bi, cyc)) => {
                cycles.remove(bi);
                cycles.remove(ai);
                cycles.push(cyc);
            }
            None => return Err(EngineError::Phase3Failure),
        }
    }
    Ok(cycles.pop().unwrap_or_default())
}

/// Try to splice cycle `l2` into `l1` with a pair of available edges.
fn try_merge(
    l1: &[u32],
    l2: &[u32],
    n: usize,
    out3: &[Vec<u32>],
    k3_set: &HashSet<(u32, u32)>,
) -> Option<Vec<u32>> {
    {
        // position of each l2 vertex for O(1) lookups
        let mut pos2 = vec![usize::MAX; n];
        for (p, &v) in l2.iter().enumerate() {
            pos2[v as usize] = p;
        }
        let mut merged: Option<Vec<u32>> = None;
        'search: for a in 0..l1.len() {
            let i = l1[a];
            let j = l1[(a + 1) % l1.len()];
            for &l in &out3[i as usize] {
                let pl = pos2[l as usize];
                if pl == usize::MAX {
                    continue;
                }
                let k = l2[(pl + l2.len() - 1) % l2.len()];
                if !k3_set.contains(&(k, j)) {
                    continue;
                }
                // splice: i -> l, walk L2 to k, then k -> j, walk L1 to i
                let mut cyc = Vec::with_capacity(l1.len() + l2.len());
                cyc.push(i);
                let mut p = pl;
                loop {
                    cyc.push(l2[p]);
                    if l2[p] == k {
                        break;
                    }
                    p = (p + 1) % l2.len();
                }
                let mut q = (a + 1) % l1.len();
                loop {
                    cyc.push(l1[q]);
                    if l1[q] == i {
                        cyc.pop();
                        break;
                    }
                    q = (q + 1) % l1.len();
                }
                merged = Some(cyc);
                break 'search;
            }
        }
        merged
    }
}

/// Orchestration policy for [`find_hamilton`].
#[derive(Debug, Clone)]
pub struct FindPolicy {
    pub max_restarts: u32,
    pub exact_fallback: bool,
    pub exact_limit: usize,
    pub oracle_budget: u64,
}

impl Default for FindPolicy {
    fn default() -> Self {
        FindPolicy {
            max_restarts: 3,
            exact_fallback: false,
            exact_limit: 150,
            oracle_budget: oracle::DEFAULT_BACKTRACK_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trace {
    pub restarts: u32,
    pub phase1_cycles: Option<usize>,
    pub phase2: Option<Phase2Stats>,
    pub phase3_merges: Option<usize>,
    pub failures: Vec<String>,
    pub oracle_used: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FindResult {
    pub found: bool,
    pub cycle: Option<Vec<u32>>,
    /// true when non-Hamiltonicity is certified (obstruction or exact oracle)
    pub certified_non_hamiltonian: bool,
    pub trace: Trace,
}

/// Run phases 0-3 with restarts; optionally fall back to the exact oracle.
pub fn find_hamilton<R: Rng + ?Sized>(
    d: &Digraph,
    params: &Parameters,
    rng: &mut R,
    policy: &FindPolicy,
) -> FindResult {
    let mut trace = Trace::default();
    if oracle::detect_obstruction(d) > 0 {
        trace.failures.push("obstruction_found".into());
        return FindResult { found: false, cycle: None, certified_non_hamiltonian: true, trace };
    }
    for restart in 0..=policy.max_restarts {
        trace.restarts = restart;
        match run_phases(d, params, rng, &mut trace) {
            Ok(cycle) => {
                debug_assert!(crate::graph::verify_hamilton_cycle(d, &cycle));
                return FindResult {
                    found: true,
                    cycle: Some(cycle),
                    certified_non_hamiltonian: false,
                    trace,
                };
            }
            Err(e) => trace.failures.push(e.to_string()),
        }
    }
    if policy.exact_fallback && d.n <= policy.exact_limit {
        trace.oracle_used = true;
        match oracle::exact_hamiltonicity_budgeted(d, policy.oracle_budget) {
            Ok(true) => {
                return FindResult {
                    found: true,
                    cycle: None,
                    certified_non_hamiltonian: false,
                    trace,
                }
            }
            Ok(false) => {
                return FindResult {
                    found: false,
                    cycle: None,
                    certified_non_hamiltonian: true,
                    trace,
                }
            }
            Err(e) => trace.failures.push(e.to_string()),
        }
    }
    FindResult { found: false, cycle: None, certified_non_hamiltonian: false, trace }
}

/// One full pass through phases 0-3 with a fresh random edge order.
fn run_phases<R: Rng + ?Sized>(
    d: &Digraph,
    params: &Parameters,
    rng: &mut R,
    trace: &mut Trace,
) -> Result<Vec<u32>, EngineError> {
    let n = d.n;
    // fresh partition: treat the edges as a random sequence
    let mut edges = d.edges.clone();
    edges.shuffle(rng);
    let mut slots = Vec::with_capacity(2 * edges.len());
    for &(u, v) in &edges {
        slots.push(u);
        slots.push(v);
    }
    let seq = EdgeSequence::new(n, slots);
    let part = match phase0_partition(&seq, params, rng) {
        Ok(p) => p,
        Err(e @ EngineError::PartitionDegenerate { .. }) => {
            // too few edges to split three ways (sparse instances): reuse
            // the full edge set for every class
            trace.failures.push(e.to_string());
            let all: Vec<usize> = (0..seq.m()).collect();
            let g = BipartiteGraph::from_edges(n, (0..seq.m()).map(|j| seq.edge(j)));
            let core = peel_core(&g, params.core_depth);
            EdgePartition {
                e1: all.clone(),
                e2: all.clone(),
                e3: all,
                k2_a: core.a.clone(),
                k2_b: core.b.clone(),
                k3_a: core.a,
                k3_b: core.b,
            }
        }
        Err(e) => return Err(e),
    };

    let e1_edges: Vec<(u32, u32)> = part.e1.iter().map(|&j| seq.edge(j)).collect();
    let cover = phase1_cycle_cover(n, &e1_edges, rng)?;
    trace.phase1_cycles = Some(cover.cycles.len());
    debug_assert!(cover.is_valid_cover());

    let k2_edges: Vec<(u32, u32)> = part
        .e2
        .iter()
        .map(|&j| seq.edge(j))
        .filter(|&(u, v)| part.k2_a[u as usize] && part.k2_b[v as usize])
        .collect();
    let (cover, p2stats) = phase2_eliminate_small(&cover, &k2_edges, params, rng.gen())?;
    trace.phase2 = Some(p2stats);
    debug_assert!(cover.is_valid_cover());
    debug_assert!(cover.smallest_cycle_len() >= params.n0.min(n));

    let k3_edges: Vec<(u32, u32)> = part
        .e3
        .iter()
        .map(|&j| seq.edge(j))
        .filter(|&(u, v)| part.k3_a[u as usize] && part.k3_b[v as usize])
        .collect();
    trace.phase3_merges = Some(cover.cycles.len().saturating_sub(1));
    let cycle = phase3_patch(&cover, &k3_edges)?;
    if crate::graph::verify_hamilton_cycle(d, &cycle) {
        Ok(cycle)
    } else {
        // defensive: never return an unverified cycle
        Err(EngineError::Phase3Failure)
    }
}

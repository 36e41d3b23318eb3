//! Implicit (position-indexed) treaps over the vertex set, with a mutation
//! journal supporting checkpoint/rollback.
//!
//! Phase 2 of the Hamilton engine keeps the working path and every cycle of
//! the cover as one treap each, so a rotation (split a sequence, splice the
//! pieces) costs O(log n) instead of O(n). The rotation-tree search is a
//! DFS that tentatively applies rotations and must restore the parent
//! configuration on backtrack; the journal records every pointer write so a
//! subtree exploration can be undone exactly.
//!
//! Node ids are vertex ids: every vertex belongs to exactly one sequence
//! (the path or one cycle), so the forest needs no allocation per rotation.

pub const NIL: u32 = u32::MAX;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Copy)]
enum Field {
    Left,
    Right,
    Parent,
    Size,
}

#[derive(Debug, Clone, Copy)]
struct JournalEntry {
    field: Field,
    node: u32,
    old: u32,
}

#[derive(Debug)]
pub struct TreapForest {
    pri: Vec<u64>,
    left: Vec<u32>,
    right: Vec<u32>,
    parent: Vec<u32>,
    size: Vec<u32>,
    journal: Vec<JournalEntry>,
}

impl TreapForest {
    /// A forest of n singleton nodes with deterministic pseudo-random
    /// priorities derived from `seed`.
    pub fn new(n: usize, seed: u64) -> Self {
        TreapForest {
            pri: (0..n as u64).map(|v| splitmix64(v ^ seed)).collect(),
            left: vec![NIL; n],
            right: vec![NIL; n],
            parent: vec![NIL; n],
            size: vec![1; n],
            journal: Vec::new(),
        }
    }

    fn set(&mut self, field: Field, node: u32, val: u32) {
        let slot = match field {
            Field::Left => &mut self.left[node as usize],
            Field::Right => &mut self.right[node as usize],
            Field::Parent => &mut self.parent[node as usize],
            Field::Size => &mut self.size[node as usize],
        };
        let old = *slot;
        if old != val {
            *slot = val;
            self.journal.push(JournalEntry { field, node, old });
        }
    }

    /// Journal position for a later [`rollback`](Self::rollback).
    pub fn checkpoint(&self) -> usize {
        self.journal.len()
    }

    /// Undo every mutation recorded after `cp`, in reverse order.
    pub fn rollback(&mut self, cp: usize) {
        while self.journal.len() > cp {
            let e = self.journal.pop().unwrap();
            match e.field {
                Field::Left => self.left[e.node as usize] = e.old,
                Field::Right => self.right[e.node as usize] = e.old,
                Field::Parent => self.parent[e.node as usize] = e.old,
                Field::Size => self.size[e.node as usize] = e.old,
            }
        }
    }

    /// Drop journal history (keeps the current state; call between
    /// independent searches to bound memory).
    pub fn commit(&mut self) {
        self.journal.clear();
    }

    fn size_of(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.size[t as usize]
        }
    }

    fn pull(&mut self, t: u32) {
        let s = 1 + self.size_of(self.left[t as usize]) + self.size_of(self.right[t as usize]);
        self.set(Field::Size, t, s);
    }

    /// Concatenate the sequences rooted at a and b (either may be NIL);
    /// returns the new root, whose parent is set to NIL.
    pub fn merge(&mut self, a: u32, b: u32) -> u32 {
        let root = self.merge_rec(a, b);
        if root != NIL {
            self.set(Field::Parent, root, NIL);
        }
        root
    }

    fn merge_rec(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.pri[a as usize] > self.pri[b as usize] {
            let r = self.merge_rec(self.right[a as usize], b);
            self.set(Field::Right, a, r);
            self.set(Field::Parent, r, a);
            self.pull(a);
            a
        } else {
            let l = self.merge_rec(a, self.left[b as usize]);
            self.set(Field::Left, b, l);
            self.set(Field::Parent, l, b);
            self.pull(b);
            b
        }
    }

    /// Split the sequence rooted at t so the first k elements form the
    /// left result; both result roots get parent NIL.
    pub fn split(&mut self, t: u32, k: u32) -> (u32, u32) {
        let (a, b) = self.split_rec(t, k);
        if a != NIL {
            self.set(Field::Parent, a, NIL);
        }
        if b != NIL {
            self.set(Field::Parent, b, NIL);
        }
        (a, b)
    }

    fn split_rec(&mut self, t: u32, k: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let lsz = self.size_of(self.left[t as usize]);
        if k <= lsz {
            let (a, b) = self.split_rec(self.left[t as usize], k);
            self.set(Field::Left, t, b);
            if b != NIL {
                self.set(Field::Parent, b, t);
            }
            self.pull(t);
            (a, t)
        } else {
            let (a, b) = self.split_rec(self.right[t as usize], k - lsz - 1);
            self.set(Field::Right, t, a);
            if a != NIL {
                self.set(Field::Parent, a, t);
            }
            self.pull(t);
            (t, b)
        }
    }

    /// Build a sequence from `order`; nodes must currently be singletons.
    pub fn build(&mut self, order: &[u32]) -> u32 {
        let mut root = NIL;
        for &v in order {
            debug_assert_eq!(self.size[v as usize], 1);
            root = self.merge(root, v);
        }
        root
    }

    /// Root of the treap containing v (O(depth)).
    pub fn root_of(&self, v: u32) -> u32 {
        let mut t = v;
        while self.parent[t as usize] != NIL {
            t = self.parent[t as usize];
        }
        t
    }

    /// Zero-based position of v within its sequence.
    pub fn rank(&self, v: u32) -> u32 {
        let mut r = self.size_of(self.left[v as usize]);
        let mut t = v;
        while self.parent[t as usize] != NIL {
            let p = self.parent[t as usize];
            if self.right[p as usize] == t {
                r += 1 + self.size_of(self.left[p as usize]);
            }
            t = p;
        }
        r
    }

    pub fn len_of_root(&self, root: u32) -> u32 {
        self.size_of(root)
    }

    /// Node at zero-based position k under `root`.
    pub fn kth(&self, root: u32, mut k: u32) -> u32 {
        let mut t = root;
        loop {
            let lsz = self.size_of(self.left[t as usize]);
            if k < lsz {
                t = self.left[t as usize];
            } else if k == lsz {
                return t;
            } else {
                k -= lsz + 1;
                t = self.right[t as usize];
            }
        }
    }

    pub fn first(&self, root: u32) -> u32 {
        self.kth(root, 0)
    }

    pub fn last(&self, root: u32) -> u32 {
        self.kth(root, self.size_of(root) - 1)
    }

    /// In-order contents (O(len)); used only when materializing results.
    pub fn to_vec(&self, root: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.size_of(root) as usize);
        let mut stack = Vec::new();
        let mut t = root;
        while t != NIL || !stack.is_empty() {
            while t != NIL {
                stack.push(t);
                t = self.left[t as usize];
            }
            t = stack.pop().unwrap();
            out.push(t);
            t = self.right[t as usize];
        }
        out
    }

    /// Rotate the sequence so the element at position k comes first
    /// (split + swap-merge); returns the new root.
    pub fn rotate_to_front(&mut self, root: u32, k: u32) -> u32 {
        let (a, b) = self.split(root, k);
        self.merge(b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn build_and_read_back() {
        let mut f = TreapForest::new(10, 1);
        let order = [3u32, 1, 4, 0, 9, 2];
        let root = f.build(&order);
        assert_eq!(f.to_vec(root), order);
        assert_eq!(f.len_of_root(root), 6);
        assert_eq!(f.first(root), 3);
        assert_eq!(f.last(root), 2);
        for (i, &v) in order.iter().enumerate() {
            assert_eq!(f.rank(v), i as u32);
            assert_eq!(f.kth(root, i as u32), v);
            assert_eq!(f.root_of(v), root);
        }
        // untouched singletons form their own roots
        assert_eq!(f.root_of(5), 5);
    }

    #[test]
    fn split_merge_round_trip() {
        let mut f = TreapForest::new(8, 7);
        let order: Vec<u32> = (0..8).collect();
        let root = f.build(&order);
        let (a, b) = f.split(root, 3);
        assert_eq!(f.to_vec(a), vec![0, 1, 2]);
        assert_eq!(f.to_vec(b), vec![3, 4, 5, 6, 7]);
        assert_eq!(f.root_of(1), a);
        assert_eq!(f.root_of(6), b);
        let root = f.merge(a, b);
        assert_eq!(f.to_vec(root), order);
    }

    #[test]
    fn rotate_to_front_works() {
        let mut f = TreapForest::new(6, 11);
        let root = f.build(&[0, 1, 2, 3, 4, 5]);
        let root = f.rotate_to_front(root, 4);
        assert_eq!(f.to_vec(root), vec![4, 5, 0, 1, 2, 3]);
    }

    #[test]
    fn rollback_restores_exact_state() {
        let mut f = TreapForest::new(12, 13);
        let r1 = f.build(&[0, 1, 2, 3, 4, 5]);
        let r2 = f.build(&[6, 7, 8, 9, 10, 11]);
        f.commit();
        let snapshot = |f: &TreapForest, r1: u32, r2: u32| {
            (f.to_vec(r1), f.to_vec(r2), f.left.clone(), f.right.clone(), f.parent.clone(), f.size.clone())
        };
        let before = snapshot(&f, r1, r2);
        let cp = f.checkpoint();
        // splice: cut r1, interleave with r2, merge everything
        let (a, b) = f.split(r1, 2);
        let (c, d) = f.split(r2, 3);
        let x = f.merge(a, c);
        let y = f.merge(d, b);
        let z = f.merge(x, y);
        assert_eq!(f.len_of_root(z), 12);
        f.rollback(cp);
        assert_eq!(snapshot(&f, r1, r2), before);
    }

    /// Model-based fuzz: random split/merge/rotate interleaved with
    /// checkpoints and rollbacks, mirrored against Vec<Vec<u32>>.
    #[test]
    fn model_based_fuzz() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..30 {
            let n = rng.gen_range(2..30usize);
            let mut f = TreapForest::new(n, trial);
            // start with one sequence holding everything
            let mut model: Vec<Vec<u32>> = vec![(0..n as u32).collect()];
            let mut roots = vec![f.build(&model[0])];
            let mut saved: Vec<(usize, Vec<Vec<u32>>, Vec<u32>)> = Vec::new();
            for _ in 0..200 {
                match rng.gen_range(0..5) {
                    0 => {
                        // split a random sequence
                        let i = rng.gen_range(0..roots.len());
                        let len = model[i].len();
                        let k = rng.gen_range(0..=len);
                        let (a, b) = f.split(roots[i], k as u32);
                        let tail = model[i].split_off(k);
                        let head = std::mem::take(&mut model[i]);
                        model.remove(i);
                        roots.remove(i);
                        if !head.is_empty() {
                            model.push(head);
                            roots.push(a);
                        }
                        if !tail.is_empty() {
                            model.push(tail);
                            roots.push(b);
                        }
                        if roots.is_empty() {
                            // resurrect a singleton to keep going
                            model.push(vec![0]);
                            roots.push(0);
                        }
                    }
                    1 if roots.len() >= 2 => {
                        let i = rng.gen_range(0..roots.len());
                        let mut j = rng.gen_range(0..roots.len());
                        if i == j {
                            j = (j + 1) % roots.len();
                        }
                        let r = f.merge(roots[i], roots[j]);
                        let mut merged = model[i].clone();
                        merged.extend(&model[j]);
                        let (lo, hi) = (i.min(j), i.max(j));
                        model.remove(hi);
                        model.remove(lo);
                        roots.remove(hi);
                        roots.remove(lo);
                        model.push(merged);
                        roots.push(r);
                    }
                    2 => {
                        let i = rng.gen_range(0..roots.len());
                        let k = rng.gen_range(0..model[i].len());
                        roots[i] = f.rotate_to_front(roots[i], k as u32);
                        model[i].rotate_left(k);
                    }
                    3 => {
                        saved.push((f.checkpoint(), model.clone(), roots.clone()));
                    }
                    _ => {
                        if let Some((cp, m, r)) = saved.pop() {
                            f.rollback(cp);
                            model = m;
                            roots = r;
                        }
                    }
                }
                // invariants after every step
                for (i, root) in roots.iter().enumerate() {
                    assert_eq!(f.to_vec(*root), model[i]);
                    assert_eq!(f.len_of_root(*root) as usize, model[i].len());
                    for (pos, &v) in model[i].iter().enumerate() {
                        assert_eq!(f.root_of(v), *root);
                        assert_eq!(f.rank(v) as usize, pos);
                    }
                }
            }
        }
    }
}

//! Canonically labelled partitions and a union-find structure.

use std::fmt;

use crate::Elem;

/// An equivalence relation on `{0..n-1}`. Block labels are canonical: blocks
/// are numbered in order of their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Canonicalizes an arbitrary labelling (equal labels = same block).
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(raw: &[L]) -> Self {
        let mut seen = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &l in raw {
            let next = seen.len();
            labels.push(*seen.entry(l).or_insert(next));
        }
        Partition { labels, blocks: seen.len() }
    }

    /// The equality relation 0.
    pub fn discrete(n: usize) -> Self {
        Partition { labels: (0..n).collect(), blocks: n }
    }

    /// The full relation 1.
    pub fn full(n: usize) -> Self {
        Partition { labels: vec![0; n], blocks: usize::from(n > 0) }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<Elem>]) -> Self {
        let mut uf = UnionFind::new(n);
        for b in blocks {
            for w in b.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        uf.partition()
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: Elem) -> usize {
        self.labels[x]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    #[inline]
    pub fn related(&self, x: Elem, y: Elem) -> bool {
        self.labels[x] == self.labels[y]
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks == self.labels.len()
    }

    pub fn is_full(&self) -> bool {
        self.blocks <= 1
    }

    /// Blocks in canonical order, each sorted.
    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (x, &l) in self.labels.iter().enumerate() {
            out[l].push(x);
        }
        out
    }

    /// Block containing `x`.
    pub fn block_of(&self, x: Elem) -> Vec<Elem> {
        let l = self.labels[x];
        (0..self.size()).filter(|&y| self.labels[y] == l).collect()
    }

    /// Smallest element of each block, in block order.
    pub fn representatives(&self) -> Vec<Elem> {
        let mut reps = Vec::with_capacity(self.blocks);
        for (x, &l) in self.labels.iter().enumerate() {
            if l == reps.len() {
                reps.push(x);
            }
        }
        reps
    }

    /// Number of related ordered pairs.
    pub fn num_pairs(&self) -> usize {
        let mut counts = vec![0usize; self.blocks];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts.iter().map(|c| c * c).sum()
    }

    /// Related pairs `(x, y)` with `x < y`.
    pub fn nontrivial_pairs(&self) -> Vec<(Elem, Elem)> {
        let mut out = Vec::new();
        for b in self.blocks() {
            for i in 0..b.len() {
                for j in i + 1..b.len() {
                    out.push((b[i], b[j]));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Containment `self ⊆ other`.
    pub fn leq(&self, other: &Partition) -> bool {
        if self.size() != other.size() {
            return false;
        }
        let mut image = vec![usize::MAX; self.blocks];
        for (x, &l) in self.labels.iter().enumerate() {
            let o = other.labels[x];
            if image[l] == usize::MAX {
                image[l] = o;
            } else if image[l] != o {
                return false;
            }
        }
        true
    }

    pub fn meet(&self, other: &Partition) -> Partition {
        let pairs: Vec<(usize, usize)> = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| (a, b))
            .collect();
        Partition::from_labels(&pairs)
    }

    /// Join as equivalence relations (transitive closure of the union).
    pub fn join(&self, other: &Partition) -> Partition {
        let mut uf = UnionFind::new(self.size());
        for p in [self, other] {
            let reps = p.representatives();
            for (x, &l) in p.labels.iter().enumerate() {
                uf.union(reps[l], x);
            }
        }
        uf.partition()
    }

    /// Restriction to a subset, re-indexed by position in `subset`.
    pub fn restrict(&self, subset: &[Elem]) -> Partition {
        let raw: Vec<usize> = subset.iter().map(|&x| self.labels[x]).collect();
        Partition::from_labels(&raw)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks().iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            for (j, x) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
        }
        Ok(())
    }
}

/// Union-find with path compression and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the classes of `a` and `b`; returns true if they were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }

    pub fn partition(&mut self) -> Partition {
        let roots: Vec<usize> = (0..self.parent.len()).map(|x| self.find(x)).collect();
        Partition::from_labels(&roots)
    }
}

/// All partitions of `{0..n-1}` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if i == cur.len() {
            out.push(Partition { labels: cur.clone(), blocks: max });
            return;
        }
        for l in 0..=max {
            cur[i] = l;
            rec(i + 1, max.max(l + 1), cur, out);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Partition { labels: vec![], blocks: 0 });
        return out;
    }
    let mut cur = vec![0; n];
    rec(1, 1, &mut cur, &mut out);
    out
}

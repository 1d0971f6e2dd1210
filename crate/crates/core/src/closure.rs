//! Fixed-point closure: subuniverses of powers, clones and congruences.

use std::collections::VecDeque;
use std::hash::BuildHasher;

use hashbrown::HashTable;
use rustc_hash::FxBuildHasher;

use crate::algebra::{checked_pow, decode_index, expand_with_constants, pow_u128, FiniteAlgebra, FiniteMap, Limits};
use crate::error::{Error, Result};
use crate::partition::{Partition, UnionFind};
use crate::term::{NodeId, TermArena};
use crate::Elem;

const MAX_CELLS: usize = 1 << 27;

/// Deduplicated tuples of a fixed length stored back to back.
#[derive(Clone)]
pub(crate) struct TupleStore {
    width: usize,
    data: Vec<u32>,
    table: HashTable<u32>,
    hasher: FxBuildHasher,
}

impl TupleStore {
    pub(crate) fn new(width: usize) -> Self {
        TupleStore { width, data: Vec::new(), table: HashTable::new(), hasher: FxBuildHasher }
    }

    pub(crate) fn len(&self) -> usize {
        if self.width == 0 {
            self.table.len()
        } else {
            self.data.len() / self.width
        }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> &[u32] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub(crate) fn find(&self, key: &[u32]) -> Option<usize> {
        let h = self.hasher.hash_one(key);
        let w = self.width;
        self.table
            .find(h, |&i| &self.data[i as usize * w..(i as usize + 1) * w] == key)
            .map(|&i| i as usize)
    }

    /// Inserts `key`; returns its index and whether it was new.
    pub(crate) fn insert(&mut self, key: &[u32]) -> (usize, bool) {
        if let Some(i) = self.find(key) {
            return (i, false);
        }
        let idx = self.len();
        let h = self.hasher.hash_one(key);
        self.data.extend_from_slice(key);
        let (data, w, hasher) = (&self.data, self.width, &self.hasher);
        self.table.insert_unique(h, idx as u32, |&i| {
            hasher.hash_one(&data[i as usize * w..(i as usize + 1) * w])
        });
        (idx, true)
    }
}

/// How an element entered a closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Origin {
    Seed(usize),
    App(usize, Vec<usize>),
}

pub(crate) struct ClosureRun {
    pub store: TupleStore,
    pub origins: Vec<Origin>,
    /// Index of the element on which the stop predicate fired.
    pub stopped: Option<usize>,
}

impl ClosureRun {
    /// Term nodes for every element; seed `i` becomes variable `i`.
    pub(crate) fn nodes(&self, arena: &mut TermArena) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.origins.len());
        for o in &self.origins {
            let id = match o {
                Origin::Seed(i) => arena.var(*i),
                Origin::App(op, args) => arena.app(*op, args.iter().map(|&a| out[a]).collect()),
            };
            out.push(id);
        }
        out
    }

    /// Term node of a single element, without materializing unrelated ones.
    pub(crate) fn node_of(&self, idx: usize, arena: &mut TermArena) -> NodeId {
        let mut memo: rustc_hash::FxHashMap<usize, NodeId> = Default::default();
        let mut stack = vec![(idx, false)];
        while let Some((i, expanded)) = stack.pop() {
            if memo.contains_key(&i) {
                continue;
            }
            match &self.origins[i] {
                Origin::Seed(s) => {
                    let v = arena.var(*s);
                    memo.insert(i, v);
                }
                Origin::App(op, args) => {
                    if expanded {
                        let kids = args.iter().map(|a| memo[a]).collect();
                        let n = arena.app(*op, kids);
                        memo.insert(i, n);
                    } else {
                        stack.push((i, true));
                        stack.extend(args.iter().map(|&a| (a, false)));
                    }
                }
            }
        }
        memo[&idx]
    }
}

/// Closes `seeds` (tuples of length `width` over `alg`) under the
/// coordinatewise operations of `alg`. Nullary operations contribute
/// constant tuples. `stop` is consulted on every new element.
pub(crate) fn run_closure(
    alg: &FiniteAlgebra,
    width: usize,
    seeds: &[Vec<Elem>],
    track: bool,
    cap: usize,
    stop: &mut dyn FnMut(&[u32]) -> bool,
) -> Result<ClosureRun> {
    let n = alg.size();
    let mut store = TupleStore::new(width);
    let mut origins = Vec::new();
    let check_cap = |len: usize| -> Result<()> {
        if len > cap || len.saturating_mul(width.max(1)) > MAX_CELLS {
            Err(Error::cap("closure elements", len as u128, cap.min(MAX_CELLS / width.max(1))))
        } else {
            Ok(())
        }
    };
    let mut buf = vec![0u32; width];
    let mut initial: Vec<(Vec<u32>, Origin)> = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        debug_assert_eq!(s.len(), width);
        initial.push((s.iter().map(|&v| v as u32).collect(), Origin::Seed(i)));
    }
    for op in 0..alg.signature().len() {
        if alg.arity(op) == 0 {
            initial.push((vec![alg.table(op)[0] as u32; width], Origin::App(op, Vec::new())));
        }
    }
    for (t, o) in initial {
        let (idx, new) = store.insert(&t);
        if new {
            if track {
                origins.push(o);
            }
            check_cap(store.len())?;
            if stop(&t) {
                return Ok(ClosureRun { store, origins, stopped: Some(idx) });
            }
        }
    }
    let ops: Vec<(usize, usize, Vec<u32>)> = (0..alg.signature().len())
        .filter(|&op| alg.arity(op) > 0)
        .map(|op| {
            let k = alg.arity(op);
            let strides = (0..k).map(|j| checked_pow(n, k - 1 - j).unwrap() as u32).collect();
            (op, k, strides)
        })
        .collect();
    let mut idx = Vec::new();
    let mut done = 0;
    while done < store.len() {
        let i = done;
        for (op, k, strides) in &ops {
            let (op, k) = (*op, *k);
            let table = alg.table(op);
            for j in 0..k {
                if j > 0 && i == 0 {
                    continue;
                }
                idx.clear();
                idx.resize(k, 0);
                idx[j] = i;
                loop {
                    for (c, slot) in buf.iter_mut().enumerate() {
                        let mut pos = 0u32;
                        for (a, &s) in idx.iter().zip(strides) {
                            pos += store.data[a * width + c] * s;
                        }
                        *slot = table[pos as usize] as u32;
                    }
                    let (new_idx, new) = store.insert(&buf);
                    if new {
                        if track {
                            origins.push(Origin::App(op, idx.clone()));
                        }
                        check_cap(store.len())?;
                        if stop(&buf) {
                            return Ok(ClosureRun { store, origins, stopped: Some(new_idx) });
                        }
                    }
                    // advance every position except j; before j stays < i, after j stays <= i
                    let mut p = k;
                    let mut advanced = false;
                    while p > 0 {
                        p -= 1;
                        if p == j {
                            continue;
                        }
                        let bound = if p < j { i } else { i + 1 };
                        idx[p] += 1;
                        if idx[p] < bound {
                            advanced = true;
                            break;
                        }
                        idx[p] = 0;
                    }
                    if !advanced {
                        break;
                    }
                }
            }
        }
        done += 1;
    }
    Ok(ClosureRun { store, origins, stopped: None })
}

/// Smallest subuniverse containing `seed`, sorted.
pub fn generate_subuniverse(alg: &FiniteAlgebra, seed: &[Elem]) -> Vec<Elem> {
    let seeds: Vec<Vec<Elem>> = seed.iter().map(|&x| vec![x]).collect();
    let run = run_closure(alg, 1, &seeds, false, usize::MAX, &mut |_| false)
        .expect("a subuniverse never exceeds the universe");
    let mut out: Vec<Elem> = (0..run.store.len()).map(|i| run.store.get(i)[0] as Elem).collect();
    out.sort_unstable();
    out
}

/// All points of `domain^arity` in mixed-radix order.
pub(crate) fn grid(domain: &[Elem], arity: usize) -> Vec<Vec<Elem>> {
    let d = domain.len();
    let total = checked_pow(d, arity).unwrap_or(0);
    let mut pos = vec![0; arity];
    (0..total)
        .map(|idx| {
            decode_index(idx, d, arity, &mut pos);
            pos.iter().map(|&p| domain[p]).collect()
        })
        .collect()
}

/// A deduplicated set of maps sorted lexicographically by image arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapSet {
    domain: usize,
    codomain: usize,
    maps: Vec<FiniteMap>,
}

impl MapSet {
    pub fn new(domain: usize, codomain: usize, mut maps: Vec<FiniteMap>) -> Self {
        maps.sort();
        maps.dedup();
        MapSet { domain, codomain, maps }
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[FiniteMap] {
        &self.maps
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FiniteMap> {
        self.maps.iter()
    }

    pub fn contains(&self, m: &FiniteMap) -> bool {
        self.maps.binary_search(m).is_ok()
    }

    pub fn position(&self, m: &FiniteMap) -> Option<usize> {
        self.maps.binary_search(m).ok()
    }
}

impl<'a> IntoIterator for &'a MapSet {
    type Item = &'a FiniteMap;
    type IntoIter = std::slice::Iter<'a, FiniteMap>;
    fn into_iter(self) -> Self::IntoIter {
        self.maps.iter()
    }
}

/// Closure computing restrictions of `arity`-ary operations to
/// `domain^arity`; elements are value arrays over the grid.
pub(crate) fn clone_run(
    alg: &FiniteAlgebra,
    arity: usize,
    domain: &[Elem],
    track: bool,
    limits: &Limits,
    stop: &mut dyn FnMut(&[u32]) -> bool,
) -> Result<ClosureRun> {
    if domain.is_empty() {
        return Err(Error::Precondition("clone domain must be nonempty".into()));
    }
    if let Some(&bad) = domain.iter().find(|&&x| x >= alg.size()) {
        return Err(Error::OutOfRange { value: bad, size: alg.size() });
    }
    let width = pow_u128(domain.len(), arity);
    if width > limits.max_universe as u128 {
        return Err(Error::cap("clone domain points", width, limits.max_universe));
    }
    let points = grid(domain, arity);
    let seeds: Vec<Vec<Elem>> = (0..arity).map(|i| points.iter().map(|p| p[i]).collect()).collect();
    run_closure(alg, points.len(), &seeds, track, limits.max_closure, stop)
}

fn run_to_mapset(run: &ClosureRun, codomain: usize) -> MapSet {
    let maps = (0..run.store.len())
        .map(|i| FiniteMap::new_unchecked(codomain, run.store.get(i).iter().map(|&v| v as Elem).collect()))
        .collect::<Vec<_>>();
    MapSet::new(run.store.width, codomain, maps)
}

/// Restrictions to `domain^n` of the n-ary term (or polynomial) operations.
pub fn restricted_clone(alg: &FiniteAlgebra, n: usize, domain: &[Elem], with_constants: bool) -> Result<MapSet> {
    restricted_clone_with(alg, n, domain, with_constants, &Limits::default())
}

pub fn restricted_clone_with(
    alg: &FiniteAlgebra,
    n: usize,
    domain: &[Elem],
    with_constants: bool,
    limits: &Limits,
) -> Result<MapSet> {
    let star;
    let target = if with_constants {
        star = expand_with_constants(alg);
        &star
    } else {
        alg
    };
    let run = clone_run(target, n, domain, false, limits, &mut |_| false)?;
    Ok(run_to_mapset(&run, alg.size()))
}

/// All n-ary term operations (polynomial operations with constants), as
/// maps with domain `A^n`.
pub fn clo_n(alg: &FiniteAlgebra, n: usize, with_constants: bool) -> Result<MapSet> {
    let all: Vec<Elem> = (0..alg.size()).collect();
    restricted_clone(alg, n, &all, with_constants)
}

/// Unary polynomial operations of `alg`.
pub fn unary_polynomials(alg: &FiniteAlgebra) -> Result<MapSet> {
    clo_n(alg, 1, true)
}

/// Parent of an edge in a congruence derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    /// The edge is the generating pair with this index.
    Generator(usize),
    /// The edge is the image of `edge` under the translation
    /// `x ↦ op(args[0], .., x, .., args[k-1])` with `x` at `pos`.
    Translation { edge: usize, op: usize, pos: usize, args: Vec<Elem> },
}

/// One union performed while generating a congruence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEdge {
    pub u: Elem,
    pub v: Elem,
    pub parent: Derivation,
}

/// Derivation log: a spanning forest of the congruence classes whose edges
/// are images of generating pairs under unary translations.
#[derive(Clone, Debug, Default)]
pub struct CongruenceLog {
    pub pairs: Vec<(Elem, Elem)>,
    pub edges: Vec<LogEdge>,
}

impl CongruenceLog {
    /// Edges from `c` to `d` as `(edge, forward)` where forward means the
    /// step goes from `u` to `v`.
    pub fn path(&self, c: Elem, d: Elem) -> Option<Vec<(usize, bool)>> {
        if c == d {
            return Some(Vec::new());
        }
        let mut adj: std::collections::HashMap<Elem, Vec<(Elem, usize, bool)>> = Default::default();
        for (i, e) in self.edges.iter().enumerate() {
            adj.entry(e.u).or_default().push((e.v, i, true));
            adj.entry(e.v).or_default().push((e.u, i, false));
        }
        let mut prev: std::collections::HashMap<Elem, (Elem, usize, bool)> = Default::default();
        let mut queue = VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            if x == d {
                break;
            }
            for &(y, e, fwd) in adj.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                if y != c && !prev.contains_key(&y) {
                    prev.insert(y, (x, e, fwd));
                    queue.push_back(y);
                }
            }
        }
        let mut steps = Vec::new();
        let mut cur = d;
        while cur != c {
            let &(p, e, fwd) = prev.get(&cur)?;
            steps.push((e, fwd));
            cur = p;
        }
        steps.reverse();
        Some(steps)
    }

    /// Generating pair index and the chain of translations (innermost first)
    /// mapping that pair onto `edge`.
    pub fn translations(&self, edge: usize) -> (usize, Vec<(usize, usize, Vec<Elem>)>) {
        let mut chain = Vec::new();
        let mut e = edge;
        loop {
            match &self.edges[e].parent {
                Derivation::Generator(g) => {
                    chain.reverse();
                    return (*g, chain);
                }
                Derivation::Translation { edge, op, pos, args } => {
                    chain.push((*op, *pos, args.clone()));
                    e = *edge;
                }
            }
        }
    }

    /// The unary polynomial `f` with `f(a) = u`, `f(b) = v` where `(a, b)` is
    /// the generating pair behind `edge`.
    pub fn edge_map(&self, alg: &FiniteAlgebra, edge: usize) -> FiniteMap {
        let (_, chain) = self.translations(edge);
        let mut images: Vec<Elem> = (0..alg.size()).collect();
        let mut args = Vec::new();
        for (op, pos, fixed) in chain {
            for x in images.iter_mut() {
                args.clear();
                args.extend_from_slice(&fixed);
                args[pos] = *x;
                *x = alg.apply(op, &args);
            }
        }
        FiniteMap::new_unchecked(alg.size(), images)
    }
}

/// Smallest congruence containing `pairs`.
pub fn generate_congruence(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Partition {
    congruence_impl(alg, pairs, None)
}

/// Like [`generate_congruence`], also returning the derivation log.
pub fn generate_congruence_logged(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> (Partition, CongruenceLog) {
    let mut log = CongruenceLog { pairs: pairs.to_vec(), edges: Vec::new() };
    let p = congruence_impl(alg, pairs, Some(&mut log));
    (p, log)
}

pub fn principal_congruence(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Partition {
    generate_congruence(alg, &[(a, b)])
}

fn congruence_impl(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)], mut log: Option<&mut CongruenceLog>) -> Partition {
    let n = alg.size();
    let mut uf = UnionFind::new(n);
    let mut queue: VecDeque<(Elem, Elem, usize)> = VecDeque::new();
    let mut edge_count = 0;
    for (g, &(a, b)) in pairs.iter().enumerate() {
        if uf.union(a, b) {
            if let Some(l) = log.as_deref_mut() {
                l.edges.push(LogEdge { u: a, v: b, parent: Derivation::Generator(g) });
            }
            queue.push_back((a, b, edge_count));
            edge_count += 1;
        }
    }
    let unary_ops: Vec<usize> = (0..alg.signature().len()).filter(|&op| alg.arity(op) > 0).collect();
    let mut args = vec![0; alg.max_arity()];
    while let Some((u, v, e)) = queue.pop_front() {
        for &op in &unary_ops {
            let k = alg.arity(op);
            let others = checked_pow(n, k - 1).unwrap();
            for pos in 0..k {
                for idx in 0..others {
                    // fill the k-1 fixed arguments around position `pos`
                    let mut rest = idx;
                    for p in (0..k).rev() {
                        if p == pos {
                            continue;
                        }
                        args[p] = rest % n;
                        rest /= n;
                    }
                    args[pos] = u;
                    let x = alg.apply(op, &args[..k]);
                    args[pos] = v;
                    let y = alg.apply(op, &args[..k]);
                    if uf.union(x, y) {
                        if let Some(l) = log.as_deref_mut() {
                            l.edges.push(LogEdge {
                                u: x,
                                v: y,
                                parent: Derivation::Translation { edge: e, op, pos, args: args[..k].to_vec() },
                            });
                        }
                        queue.push_back((x, y, edge_count));
                        edge_count += 1;
                    }
                }
            }
        }
    }
    uf.partition()
}

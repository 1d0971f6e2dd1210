//! Minimal sets, traces, induced algebras, types of covers and the
//! pseudo-operations of minimal sets, all computed over polynomial clones.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{expand_with_constants, pow_u128, quotient, table_index, FiniteAlgebra, FiniteMap, Limits, Signature};
use crate::closure::{clone_run, grid};
use crate::error::{Error, Result};
use crate::lattice::is_cover;
use crate::partition::Partition;
use crate::term::{NodeId, TermArena};
use crate::Elem;

/// Types of minimal algebras; `Unknown345` marks a two-element trace whose
/// clone inspection found neither a meet-like nor a join-like operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeLabel {
    One,
    Two,
    Three,
    Four,
    Five,
    Unknown345,
}

impl TypeLabel {
    pub fn is_one(self) -> bool {
        self == TypeLabel::One
    }
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeLabel::One => "1",
            TypeLabel::Two => "2",
            TypeLabel::Three => "3",
            TypeLabel::Four => "4",
            TypeLabel::Five => "5",
            TypeLabel::Unknown345 => "3/4/5",
        };
        f.write_str(s)
    }
}

/// A polynomial operation: its values on `domain^arity` (mixed radix over
/// positions in `domain`) and a term over the constants expansion.
#[derive(Clone, Debug)]
pub struct Polynomial {
    pub arity: usize,
    pub domain: Vec<Elem>,
    pub values: Vec<Elem>,
    arena: Arc<TermArena>,
    root: NodeId,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.domain == other.domain && self.values == other.values
    }
}

impl Polynomial {
    fn position(&self, x: Elem) -> usize {
        self.domain.binary_search(&x).expect("argument inside the polynomial's domain")
    }

    pub fn apply(&self, args: &[Elem]) -> Elem {
        let pos: Vec<usize> = args.iter().map(|&a| self.position(a)).collect();
        self.values[table_index(&pos, self.domain.len())]
    }

    /// Image of the whole domain, sorted.
    pub fn image(&self) -> Vec<Elem> {
        let mut v = self.values.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// A unary polynomial on the full universe as a map.
    pub fn to_map(&self, codomain: usize) -> FiniteMap {
        FiniteMap::new_unchecked(codomain, self.values.clone())
    }

    /// Values of the term in `x` (same signature as the constants expansion).
    pub fn eval_on(&self, x: &FiniteAlgebra, points: &[Vec<Elem>]) -> Vec<Elem> {
        self.arena.eval_points(self.root, x, points)
    }

    pub fn render(&self, sig: &Signature) -> String {
        self.arena.render(self.root, sig, 400)
    }

    /// Same term, values recomputed on a smaller domain.
    pub fn restrict(&self, domain: &[Elem]) -> Polynomial {
        let values = grid(domain, self.arity).iter().map(|p| self.apply(p)).collect();
        Polynomial { arity: self.arity, domain: domain.to_vec(), values, arena: Arc::clone(&self.arena), root: self.root }
    }

    /// `self(inner(x))` for unary polynomials on the full universe.
    pub fn compose_unary(&self, inner: &Polynomial) -> Polynomial {
        let mut arena = TermArena::new();
        let i = arena.import(&inner.arena, inner.root);
        let o = arena.import(&self.arena, self.root);
        let root = arena.substitute(o, &[i]);
        let values = inner.values.iter().map(|&v| self.values[v]).collect();
        Polynomial { arity: 1, domain: inner.domain.clone(), values, arena: Arc::new(arena), root }
    }

    /// `self(args[0](x0,..), .., args[k-1](x0,..))`, evaluated on `domain`.
    pub(crate) fn substitute(&self, args: &[&Polynomial], arity: usize, domain: &[Elem]) -> Polynomial {
        let mut arena = TermArena::new();
        let subs: Vec<NodeId> = args.iter().map(|a| arena.import(&a.arena, a.root)).collect();
        let o = arena.import(&self.arena, self.root);
        let root = arena.substitute(o, &subs);
        let values = grid(domain, arity)
            .iter()
            .map(|p| {
                let inner: Vec<Elem> = args.iter().map(|a| a.apply(p)).collect();
                self.apply(&inner)
            })
            .collect();
        Polynomial { arity, domain: domain.to_vec(), values, arena: Arc::new(arena), root }
    }

    pub(crate) fn projection(i: usize, arity: usize, domain: &[Elem]) -> Polynomial {
        let mut arena = TermArena::new();
        let root = arena.var(i);
        let values = grid(domain, arity).iter().map(|p| p[i]).collect();
        Polynomial { arity, domain: domain.to_vec(), values, arena: Arc::new(arena), root }
    }

    /// The constant polynomial `v` of the given arity on `domain`, in a
    /// constant-complete algebra.
    pub(crate) fn constant(star: &FiniteAlgebra, v: Elem, arity: usize, domain: &[Elem]) -> Polynomial {
        let mut arena = TermArena::new();
        let root = arena.app(constant_symbol(star, v), Vec::new());
        let cells = if arity == 0 { 1 } else { domain.len().pow(arity as u32) };
        Polynomial { arity, domain: domain.to_vec(), values: vec![v; cells], arena: Arc::new(arena), root }
    }

    /// Composite of translations `x -> op(args with x at pos)`, innermost
    /// first, as a unary polynomial on the full universe.
    pub(crate) fn from_translations(star: &FiniteAlgebra, chain: &[(usize, usize, Vec<Elem>)]) -> Polynomial {
        let mut arena = TermArena::new();
        let mut cur = arena.var(0);
        let mut values: Vec<Elem> = (0..star.size()).collect();
        let mut args = Vec::new();
        for (op, pos, fixed) in chain {
            let nodes: Vec<NodeId> = fixed
                .iter()
                .enumerate()
                .map(|(j, &v)| if j == *pos { cur } else { arena.app(constant_symbol(star, v), Vec::new()) })
                .collect();
            cur = arena.app(*op, nodes);
            for x in values.iter_mut() {
                args.clear();
                args.extend_from_slice(fixed);
                args[*pos] = *x;
                *x = star.apply(*op, &args);
            }
        }
        Polynomial { arity: 1, domain: (0..star.size()).collect(), values, arena: Arc::new(arena), root: cur }
    }
}

fn constant_symbol(star: &FiniteAlgebra, v: Elem) -> usize {
    (0..star.signature().len())
        .find(|&op| star.arity(op) == 0 && star.table(op)[0] == v)
        .expect("constant-complete algebra")
}

/// The algebra itself when every element is named by a constant, else its
/// constants expansion.
pub(crate) fn star_of(alg: &FiniteAlgebra) -> FiniteAlgebra {
    if alg.is_constant_complete() {
        alg.clone()
    } else {
        expand_with_constants(alg)
    }
}

/// Polynomial clone access for one algebra.
pub(crate) struct PolyContext {
    pub star: FiniteAlgebra,
    /// Unary polynomials sorted by value arrays.
    unary: Vec<Polynomial>,
}

impl PolyContext {
    pub(crate) fn new(alg: &FiniteAlgebra) -> Result<Self> {
        let star = star_of(alg);
        let all: Vec<Elem> = (0..star.size()).collect();
        let run = clone_run(&star, 1, &all, true, &Limits::default(), &mut |_| false)?;
        let mut arena = TermArena::new();
        let nodes = run.nodes(&mut arena);
        let arena = Arc::new(arena);
        let mut unary: Vec<Polynomial> = (0..run.store.len())
            .map(|i| Polynomial {
                arity: 1,
                domain: all.clone(),
                values: run.store.get(i).iter().map(|&v| v as Elem).collect(),
                arena: Arc::clone(&arena),
                root: nodes[i],
            })
            .collect();
        unary.sort_by(|a, b| a.values.cmp(&b.values));
        Ok(PolyContext { star, unary })
    }

    pub(crate) fn unary(&self) -> &[Polynomial] {
        &self.unary
    }

    /// First polynomial (in generation order) of the given arity whose
    /// values on `domain^arity` satisfy `pred`.
    pub(crate) fn search(
        &self,
        arity: usize,
        domain: &[Elem],
        pred: &mut dyn FnMut(&[u32]) -> bool,
    ) -> Result<Option<Polynomial>> {
        let run = clone_run(&self.star, arity, domain, true, &Limits::default(), pred)?;
        Ok(run.stopped.map(|idx| {
            let mut arena = TermArena::new();
            let root = run.node_of(idx, &mut arena);
            Polynomial {
                arity,
                domain: domain.to_vec(),
                values: run.store.get(idx).iter().map(|&v| v as Elem).collect(),
                arena: Arc::new(arena),
                root,
            }
        }))
    }

    /// Value arrays of all polynomials of the given arity on `domain`.
    pub(crate) fn collect(&self, arity: usize, domain: &[Elem]) -> Result<Vec<Vec<Elem>>> {
        let run = clone_run(&self.star, arity, domain, false, &Limits::default(), &mut |_| false)?;
        Ok((0..run.store.len()).map(|i| run.store.get(i).iter().map(|&v| v as Elem).collect()).collect())
    }

    fn separates(p: &Polynomial, gamma: &Partition, delta: &Partition) -> bool {
        delta.nontrivial_pairs().iter().any(|&(x, y)| !gamma.related(p.values[x], p.values[y]))
    }

    /// `(γ, δ)`-minimal sets without checking that `(γ, δ)` is a cover.
    pub(crate) fn minimal_sets(&self, gamma: &Partition, delta: &Partition) -> Result<Vec<MinimalSetData>> {
        let mut images: Vec<Vec<Elem>> = self
            .unary
            .iter()
            .filter(|p| Self::separates(p, gamma, delta))
            .map(|p| p.image())
            .collect();
        images.sort();
        images.dedup();
        let subset = |a: &[Elem], b: &[Elem]| a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok());
        let minimal: Vec<Vec<Elem>> =
            images.iter().filter(|u| !images.iter().any(|v| subset(v, u))).cloned().collect();
        let mut out = Vec::new();
        for u in minimal {
            let witness_p = self
                .unary
                .iter()
                .find(|p| p.image() == u && Self::separates(p, gamma, delta))
                .expect("image came from a separating polynomial")
                .clone();
            let idempotent_e = self
                .unary
                .iter()
                .find(|p| p.image() == u && u.iter().all(|&x| p.values[x] == x))
                .cloned()
                .ok_or_else(|| Error::SearchExhausted(format!("no idempotent polynomial onto {u:?}")))?;
            let mut traces = Vec::new();
            for class in delta.blocks() {
                let n: Vec<Elem> = class.iter().copied().filter(|x| u.binary_search(x).is_ok()).collect();
                if n.iter().any(|&x| n.iter().any(|&y| !gamma.related(x, y))) {
                    traces.push(n);
                }
            }
            traces.sort();
            let mut body: Vec<Elem> = traces.iter().flatten().copied().collect();
            body.sort_unstable();
            let tail = u.iter().copied().filter(|x| body.binary_search(x).is_err()).collect();
            out.push(MinimalSetData {
                cover: (gamma.clone(), delta.clone()),
                u,
                witness_p,
                traces,
                body,
                tail,
                idempotent_e,
            });
        }
        Ok(out)
    }

    /// First unary polynomial with image `u` separating `a` and `b`.
    pub(crate) fn separating(&self, u: &[Elem], a: Elem, b: Elem) -> Result<Polynomial> {
        self.unary
            .iter()
            .find(|p| p.values[a] != p.values[b] && p.image() == u)
            .cloned()
            .ok_or_else(|| Error::SearchExhausted(format!("no polynomial onto {u:?} separating {a} and {b}")))
    }

    /// Type of the minimal algebra induced on the trace `n`.
    pub(crate) fn trace_type(&self, n: &[Elem]) -> Result<TypeLabel> {
        let m = n.len();
        let mut member = vec![false; self.star.size()];
        n.iter().for_each(|&x| member[x] = true);
        let inside = |vals: &[u32]| vals.iter().all(|&v| member[v as usize]);
        let snag = self.search(2, n, &mut |v| {
            inside(v)
                && (0..m).any(|i| {
                    (0..m).any(|j| {
                        i != j
                            && v[i * m + j] as Elem == n[i]
                            && v[j * m + i] as Elem == n[i]
                            && v[j * m + j] as Elem == n[j]
                    })
                })
        })?;
        if snag.is_none() {
            return Ok(TypeLabel::One);
        }
        if m == 2 {
            let (lo, hi) = (n[0], n[1]);
            let binary = self.collect(2, n)?;
            let semilattice_with =
                |bottom: Elem| binary.iter().any(|v| v[0] == lo && v[3] == hi && v[1] == bottom && v[2] == bottom);
            let (meet, join) = (semilattice_with(lo), semilattice_with(hi));
            if meet || join {
                let complement = self.collect(1, n)?.iter().any(|v| v[0] == hi && v[1] == lo);
                return Ok(match (meet, join, complement) {
                    (true, true, true) => TypeLabel::Three,
                    (true, true, false) => TypeLabel::Four,
                    _ => TypeLabel::Five,
                });
            }
        }
        let at = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
        let malcev = self.search(3, n, &mut |v| {
            inside(v)
                && (0..m).all(|i| {
                    (0..m).all(|j| v[at(j, i, i)] as Elem == n[j] && v[at(i, i, j)] as Elem == n[j])
                })
        })?;
        if malcev.is_some() {
            return Ok(TypeLabel::Two);
        }
        if m == 2 {
            return Ok(TypeLabel::Unknown345);
        }
        Err(Error::SearchExhausted(format!("trace {n:?} has {m} elements but no Mal'cev polynomial")))
    }

    /// Type of `(0, α)` for a minimal congruence `α`, read off every trace of
    /// the first minimal set (the traces must agree).
    pub(crate) fn minimal_cover_type(&self, alpha: &Partition) -> Result<(TypeLabel, MinimalSetData)> {
        let zero = Partition::discrete(self.star.size());
        let msd = self
            .minimal_sets(&zero, alpha)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Precondition("no minimal set for a trivial pair".into()))?;
        let mut label = None;
        for n in &msd.traces {
            let t = self.trace_type(n)?;
            if label.is_some_and(|l| l != t) {
                return Err(Error::SearchExhausted(format!("traces of {:?} have different types", msd.u)));
            }
            label = Some(t);
        }
        let label = label.ok_or_else(|| Error::Precondition("minimal set without traces".into()))?;
        Ok((label, msd))
    }

    pub(crate) fn pseudo_operation(&self, msd: &MinimalSetData) -> Result<PseudoOperation> {
        let typ = self.trace_type(&msd.traces[0])?;
        if typ.is_one() {
            return Err(Error::Precondition("pseudo-operations need a cover of type other than 1".into()));
        }
        let (u, b, t) = (&msd.u, &msd.body, &msd.tail);
        let m = u.len();
        let size = self.star.size();
        let mut pos = vec![usize::MAX; size];
        u.iter().enumerate().for_each(|(i, &x)| pos[x] = i);
        let set = |s: &[Elem]| {
            let mut v = vec![false; size];
            s.iter().for_each(|&x| v[x] = true);
            v
        };
        let (in_u, in_b, in_t) = (set(u), set(b), set(t));
        let (bi, ti): (Vec<usize>, Vec<usize>) = (b.iter().map(|&x| pos[x]).collect(), t.iter().map(|&x| pos[x]).collect());
        let result = if typ == TypeLabel::Two {
            let at = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
            let d = self
                .search(3, u, &mut |v| {
                    v.iter().all(|&x| in_u[x as usize])
                        && (0..m).all(|i| v[at(i, i, i)] as Elem == u[i])
                        && bi.iter().all(|&bb| (0..m).all(|i| v[at(bb, bb, i)] as Elem == u[i] && v[at(i, bb, bb)] as Elem == u[i]))
                        && ti.iter().all(|&tt| bi.iter().all(|&bb| in_t[v[at(tt, tt, bb)] as usize]))
                        && bi.iter().all(|&x| bi.iter().all(|&y| bi.iter().all(|&z| in_b[v[at(x, y, z)] as usize])))
                })?
                .ok_or_else(|| Error::SearchExhausted(format!("no ternary polynomial with the body properties on {u:?}")))?;
            let x0 = Polynomial::projection(0, 2, u);
            let x1 = Polynomial::projection(1, 2, u);
            let p0 = d.substitute(&[&x0, &x0, &x1], 2, u);
            let mut p = p0.clone();
            let limit = m * size + 1;
            let mut steps = 0;
            while !u.iter().all(|&x| t.iter().all(|&y| in_t[p.apply(&[x, y])])) {
                steps += 1;
                if steps > limit {
                    return Err(Error::SearchExhausted("tail iteration did not stabilize".into()));
                }
                p = p0.substitute(&[&p, &x1], 2, u);
            }
            PseudoOperation { kind: PseudoKind::MalcevOnBody, body_op: d.restrict(b), tail_p: p }
        } else {
            if b.len() != 2 {
                return Err(Error::SearchExhausted(format!("body {b:?} of a type {typ} minimal set is not two-element")));
            }
            let p = self
                .search(2, u, &mut |v| {
                    v.iter().all(|&x| in_u[x as usize])
                        && [(bi[0], bi[1]), (bi[1], bi[0])].iter().any(|&(zero, one)| {
                            (0..m).all(|i| {
                                let val = |a: usize, c: usize| v[a * m + c] as Elem;
                                let x = u[i];
                                val(i, one) == x
                                    && val(one, i) == x
                                    && val(i, i) == x
                                    && (i == one || (val(i, zero) == x && val(zero, i) == x))
                                    && (0..m).all(|j| {
                                        let pij = pos[val(i, j)];
                                        pij != usize::MAX && val(i, pij) == val(i, j)
                                    })
                            })
                        })
                })?
                .ok_or_else(|| Error::SearchExhausted(format!("no binary polynomial with the tail properties on {u:?}")))?;
            PseudoOperation { kind: PseudoKind::MeetOnBody, body_op: p.restrict(b), tail_p: p }
        };
        let p = &result.tail_p;
        let all = |xs: &[Elem], ys: &[Elem], target: &[bool]| xs.iter().all(|&x| ys.iter().all(|&y| target[p.apply(&[x, y])]));
        if !(all(b, b, &in_b) && all(b, t, &in_t) && all(t, b, &in_t) && all(t, t, &in_t)) {
            return Err(Error::SearchExhausted("pseudo-operation violates the body/tail inclusions".into()));
        }
        Ok(result)
    }
}

/// A `(γ, δ)`-minimal set with its traces, body, tail and witnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimalSetData {
    pub cover: (Partition, Partition),
    pub u: Vec<Elem>,
    /// Unary polynomial with image `u` mapping some δ-pair outside γ.
    pub witness_p: Polynomial,
    pub traces: Vec<Vec<Elem>>,
    pub body: Vec<Elem>,
    pub tail: Vec<Elem>,
    /// Unary polynomial that is the identity on `u` and has image `u`.
    pub idempotent_e: Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PseudoKind {
    MalcevOnBody,
    MeetOnBody,
}

/// Operations on a minimal set of a cover of type other than 1: a Mal'cev or
/// semilattice operation on the body and a binary `p` on the minimal set
/// with `p(B,B) ⊆ B` and `p(B,T), p(T,B), p(T,T) ⊆ T`.
#[derive(Clone, Debug)]
pub struct PseudoOperation {
    pub kind: PseudoKind,
    pub body_op: Polynomial,
    pub tail_p: Polynomial,
}

fn check_cover(alg: &FiniteAlgebra, gamma: &Partition, delta: &Partition) -> Result<()> {
    if !is_cover(alg, gamma, delta)? {
        return Err(Error::Precondition(format!("({gamma}, {delta}) is not a cover")));
    }
    Ok(())
}

/// All `(γ, δ)`-minimal sets, sorted by their element lists.
pub fn minimal_sets(alg: &FiniteAlgebra, gamma: &Partition, delta: &Partition) -> Result<Vec<MinimalSetData>> {
    check_cover(alg, gamma, delta)?;
    PolyContext::new(alg)?.minimal_sets(gamma, delta)
}

/// A unary polynomial with image `u` and `e(a) != e(b)`.
pub fn separating_polynomial(alg: &FiniteAlgebra, u: &[Elem], a: Elem, b: Elem) -> Result<Polynomial> {
    PolyContext::new(alg)?.separating(u, a, b)
}

/// The algebra on `n` whose operations are the polynomials of arity at most
/// `max_arity` preserving `n`, with `n` re-indexed in increasing order.
pub fn induced_algebra(alg: &FiniteAlgebra, n: &[Elem], max_arity: usize) -> Result<FiniteAlgebra> {
    let mut n = n.to_vec();
    n.sort_unstable();
    n.dedup();
    if n.is_empty() {
        return Err(Error::Precondition("induced algebra needs a nonempty set".into()));
    }
    if let Some(&bad) = n.iter().find(|&&x| x >= alg.size()) {
        return Err(Error::OutOfRange { value: bad, size: alg.size() });
    }
    let star = star_of(alg);
    let limits = Limits::default();
    let mut pos = vec![usize::MAX; alg.size()];
    n.iter().enumerate().for_each(|(i, &x)| pos[x] = i);
    let mut ops: Vec<(String, usize, Vec<Elem>)> = n.iter().enumerate().map(|(i, _)| (format!("c{i}"), 0, vec![i])).collect();
    let mut cells: u128 = 0;
    for k in 1..=max_arity {
        let run = clone_run(&star, k, &n, false, &limits, &mut |_| false)?;
        let mut j = 0;
        for i in 0..run.store.len() {
            let vals = run.store.get(i);
            if vals.iter().all(|&v| pos[v as usize] != usize::MAX) {
                cells += pow_u128(n.len(), k);
                if cells > limits.max_table as u128 {
                    return Err(Error::cap("induced algebra tables", cells, limits.max_table));
                }
                ops.push((format!("f{k}_{j}"), k, vals.iter().map(|&v| pos[v as usize]).collect()));
                j += 1;
            }
        }
    }
    FiniteAlgebra::from_ops(&format!("{}|{:?}", alg.name(), n), n.len(), ops)
}

/// Every unary polynomial is a constant or a permutation.
pub fn is_minimal_algebra(alg: &FiniteAlgebra) -> Result<bool> {
    if alg.size() < 2 {
        return Err(Error::Precondition("minimal algebras have at least two elements".into()));
    }
    let ctx = PolyContext::new(alg)?;
    Ok(ctx.unary().iter().all(|p| {
        let img = p.image().len();
        img == 1 || img == alg.size()
    }))
}

/// Type of a minimal algebra: 1 without snags; on two elements 3, 4 or 5
/// when a meet-like or join-like polynomial exists (split by join-like and
/// complement); otherwise 2 when a Mal'cev polynomial exists.
pub fn palfy_type(alg: &FiniteAlgebra) -> Result<TypeLabel> {
    if !is_minimal_algebra(alg)? {
        return Err(Error::Precondition(format!("{} is not a minimal algebra", alg.name())));
    }
    let all: Vec<Elem> = (0..alg.size()).collect();
    PolyContext::new(alg)?.trace_type(&all)
}

/// Type of the cover `(γ, δ)`, computed as the type of `(0, δ/γ)` in the
/// quotient by `γ`.
pub fn cover_type(alg: &FiniteAlgebra, gamma: &Partition, delta: &Partition) -> Result<TypeLabel> {
    check_cover(alg, gamma, delta)?;
    let star = star_of(alg);
    let (q, map) = quotient(&star, gamma)?;
    let mut rep = vec![0; q.size()];
    for x in (0..star.size()).rev() {
        rep[map.apply(x)] = x;
    }
    let labels: Vec<usize> = rep.iter().map(|&x| delta.label(x)).collect();
    let ctx = PolyContext::new(&q)?;
    Ok(ctx.minimal_cover_type(&Partition::from_labels(&labels))?.0)
}

/// Pseudo-operations for a `(0, α)`-minimal set of a type other than 1.
pub fn pseudo_operation(alg: &FiniteAlgebra, msd: &MinimalSetData) -> Result<PseudoOperation> {
    PolyContext::new(alg)?.pseudo_operation(msd)
}

/// Text block describing the minimal sets and types of the covers above 0.
pub fn tct_report(alg: &FiniteAlgebra) -> Result<String> {
    use std::fmt::Write as _;
    let ctx = PolyContext::new(alg)?;
    let mut out = String::new();
    for alpha in crate::lattice::minimal_congruences(alg)? {
        let (typ, _) = ctx.minimal_cover_type(&alpha)?;
        writeln!(out, "cover 0 < {alpha}: type {typ}").unwrap();
        for msd in ctx.minimal_sets(&Partition::discrete(alg.size()), &alpha)? {
            writeln!(
                out,
                "  minimal set {:?} traces {:?} body {:?} tail {:?}",
                msd.u, msd.traces, msd.body, msd.tail
            )
            .unwrap();
        }
    }
    Ok(out)
}

//! Tractable pieces: candidate sets of restricted homomorphisms taken modulo
//! an equivalence, the combinators that build new candidate sets from old
//! ones, and two exact enumeration engines built from them. The chain engine
//! needs a cover chain from 0 to 1 avoiding type 1. The membership engine
//! needs every minimal congruence to be of type other than 1.

use std::collections::HashMap;
use std::hash::Hash;
use std::rc::Rc;

use crate::algebra::{expand_with_constants, is_homomorphism, odometer, quotient, FiniteAlgebra, FiniteMap, Limits};
use crate::closure::{generate_congruence_logged, generate_subuniverse, grid};
use crate::error::{Error, Result};
use crate::homenum::{enumerate_homs, enumerate_special, pin_constants, HomSet};
use crate::lattice::{all_congruences, minimal_congruences};
use crate::partition::Partition;
use crate::tct::{cover_type, MinimalSetData, PolyContext, Polynomial, PseudoKind};
use crate::Elem;

/// A subset `P` of the target with an equivalence on it. Blocks are named by
/// their least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    p: Vec<Elem>,
    rep: Vec<Elem>,
}

impl Piece {
    /// `mu` is a partition of the positions of the sorted set `p`.
    pub fn new(p: &[Elem], mu: &Partition) -> Result<Self> {
        if p.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("piece elements must be strictly increasing".into()));
        }
        if mu.size() != p.len() {
            return Err(Error::Precondition(format!("partition of {} points for a piece of {}", mu.size(), p.len())));
        }
        Ok(Self::by_key(p, |x| mu.label(p.binary_search(&x).unwrap())))
    }

    fn by_key<K: Eq + Hash>(p: &[Elem], key: impl Fn(Elem) -> K) -> Self {
        let mut first: HashMap<K, Elem> = HashMap::new();
        let rep = p.iter().map(|&x| *first.entry(key(x)).or_insert(x)).collect();
        Piece { p: p.to_vec(), rep }
    }

    pub fn discrete(p: &[Elem]) -> Self {
        Piece { p: p.to_vec(), rep: p.to_vec() }
    }

    pub fn full(p: &[Elem]) -> Self {
        Self::by_key(p, |_| ())
    }

    pub fn elements(&self) -> &[Elem] {
        &self.p
    }

    /// Least element of the block of `x`, if `x` lies in the piece.
    pub fn rep(&self, x: Elem) -> Option<Elem> {
        self.p.binary_search(&x).ok().map(|i| self.rep[i])
    }

    pub fn block(&self, r: Elem) -> Vec<Elem> {
        self.p.iter().zip(&self.rep).filter(|&(_, &q)| q == r).map(|(&x, _)| x).collect()
    }

    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        let mut reps = self.rep.clone();
        reps.sort_unstable();
        reps.dedup();
        reps.into_iter().map(|r| self.block(r)).collect()
    }

    /// The equivalence as a partition of positions.
    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.rep)
    }

    pub fn is_discrete(&self) -> bool {
        self.rep == self.p
    }
}

/// Maps `Y -> P/μ` (each entry is a block's least element, aligned with
/// `y`), sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub y: Vec<Elem>,
    pub piece: Piece,
    pub maps: Vec<Vec<Elem>>,
}

impl CandidateSet {
    pub fn new(y: Vec<Elem>, piece: Piece, mut maps: Vec<Vec<Elem>>) -> Self {
        maps.sort();
        maps.dedup();
        CandidateSet { y, piece, maps }
    }

    /// Candidates for `[P, 1_P]`: every `y` goes to the single block.
    pub fn whole(y: &[Elem], p: &[Elem]) -> Self {
        let maps = match p.first() {
            Some(&r) => vec![vec![r; y.len()]],
            None if y.is_empty() => vec![Vec::new()],
            None => Vec::new(),
        };
        CandidateSet { y: y.to_vec(), piece: Piece::full(p), maps }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The block assignment induced by `h` (indexed by source elements) is
    /// present, or `h` leaves `P` somewhere on `Y`.
    pub fn contains_restriction(&self, h: &[Elem]) -> bool {
        let reps: Option<Vec<Elem>> = self.y.iter().map(|&y| self.piece.rep(h[y])).collect();
        reps.is_none_or(|m| self.maps.binary_search(&m).is_ok())
    }
}

/// Candidates for `[Q, μ ∩ Q²]`: drops maps sending some `y` to a block
/// missing `Q`.
pub fn restrict_piece(c: &CandidateSet, q: &[Elem]) -> Result<CandidateSet> {
    if let Some(&bad) = q.iter().find(|&&x| c.piece.rep(x).is_none()) {
        return Err(Error::Precondition(format!("{bad} is outside the piece")));
    }
    let mut q = q.to_vec();
    q.sort_unstable();
    q.dedup();
    let piece = Piece::by_key(&q, |x| c.piece.rep(x));
    let mut moved: HashMap<Elem, Elem> = HashMap::new();
    for &x in &q {
        moved.entry(c.piece.rep(x).unwrap()).or_insert(x);
    }
    let maps = c.maps.iter().filter_map(|g| g.iter().map(|r| moved.get(r).copied()).collect()).collect();
    Ok(CandidateSet::new(c.y.clone(), piece, maps))
}

/// Candidates for `[P, μ ∩ ν]` from candidates for `[P, μ]` and `[P, ν]`.
pub fn intersect_pieces(c1: &CandidateSet, c2: &CandidateSet) -> Result<CandidateSet> {
    if c1.y != c2.y || c1.piece.p != c2.piece.p {
        return Err(Error::Precondition("intersected candidate sets differ in Y or P".into()));
    }
    let piece = Piece::by_key(&c1.piece.p, |x| (c1.piece.rep(x), c2.piece.rep(x)));
    let mut meet: HashMap<(Elem, Elem), Elem> = HashMap::new();
    for &x in &piece.p {
        meet.entry((c1.piece.rep(x).unwrap(), c2.piece.rep(x).unwrap())).or_insert(x);
    }
    let mut maps = Vec::new();
    for f in &c1.maps {
        for g in &c2.maps {
            let m: Option<Vec<Elem>> = f.iter().zip(g).map(|(&a, &b)| meet.get(&(a, b)).copied()).collect();
            maps.extend(m);
        }
    }
    Ok(CandidateSet::new(c1.y.clone(), piece, maps))
}

/// Splits the block named `q_rep` into singletons. `block` supplies
/// candidates for `[Q, 0_Q]` on the preimage `Y'` of that block.
pub fn refine_block(
    c: &CandidateSet,
    q_rep: Elem,
    block: &mut dyn FnMut(&[Elem]) -> Result<Rc<CandidateSet>>,
) -> Result<CandidateSet> {
    let q = c.piece.block(q_rep);
    if q.is_empty() {
        return Err(Error::Precondition(format!("{q_rep} names no block")));
    }
    let piece = Piece::by_key(&c.piece.p, |x| {
        let r = c.piece.rep(x).unwrap();
        if r == q_rep {
            (true, x)
        } else {
            (false, r)
        }
    });
    let mut fetched: HashMap<Vec<usize>, Rc<CandidateSet>> = HashMap::new();
    let mut maps = Vec::new();
    for g in &c.maps {
        let idx: Vec<usize> = (0..g.len()).filter(|&i| g[i] == q_rep).collect();
        if idx.is_empty() {
            maps.push(g.clone());
            continue;
        }
        let inner = match fetched.get(&idx) {
            Some(s) => Rc::clone(s),
            None => {
                let y_block: Vec<Elem> = idx.iter().map(|&i| c.y[i]).collect();
                let s = block(&y_block)?;
                if s.y != y_block || s.piece.p != q || !s.piece.is_discrete() {
                    return Err(Error::Precondition("block candidates do not match [Q, 0_Q] on the preimage".into()));
                }
                fetched.insert(idx.clone(), Rc::clone(&s));
                s
            }
        };
        for f in &inner.maps {
            let mut m = g.clone();
            for (j, &i) in idx.iter().enumerate() {
                m[i] = f[j];
            }
            maps.push(m);
        }
    }
    Ok(CandidateSet::new(c.y.clone(), piece, maps))
}

/// Candidates for `[P, ker e|_P]` from candidates for `[Q, 0_Q]` on
/// `e(Y)`, given `e` on the target (`e_a`) and on the source (`e_x`).
pub fn kernel_pullback(e_a: &[Elem], p: &[Elem], cq: &CandidateSet, y: &[Elem], e_x: &[Elem]) -> Result<CandidateSet> {
    let mut z: Vec<Elem> = y.iter().map(|&v| e_x[v]).collect();
    z.sort_unstable();
    z.dedup();
    if cq.y != z || !cq.piece.is_discrete() {
        return Err(Error::Precondition("pulled-back candidates must be point maps on e(Y)".into()));
    }
    if p.iter().any(|&x| cq.piece.rep(e_a[x]).is_none()) {
        return Err(Error::Precondition("e(P) is not inside Q".into()));
    }
    let piece = Piece::by_key(p, |x| e_a[x]);
    let mut pre: HashMap<Elem, Elem> = HashMap::new();
    for &x in p {
        pre.entry(e_a[x]).or_insert(x);
    }
    let zi: Vec<usize> = y.iter().map(|&v| z.binary_search(&e_x[v]).unwrap()).collect();
    let maps = cq.maps.iter().filter_map(|g| zi.iter().map(|&i| pre.get(&g[i]).copied()).collect()).collect();
    Ok(CandidateSet::new(y.to_vec(), piece, maps))
}

/// Candidates for `[P, 0_P]` from maps whose kernels on `P` meet in `0_P`:
/// each part is `(e on the target, candidates for [Q, 0_Q] on e(Y), e on
/// the source)`.
pub fn separation_combine(p: &[Elem], y: &[Elem], parts: &[(Vec<Elem>, CandidateSet, Vec<Elem>)]) -> Result<CandidateSet> {
    let mut acc = CandidateSet::whole(y, p);
    for (e_a, cq, e_x) in parts {
        acc = intersect_pieces(&acc, &kernel_pullback(e_a, p, cq, y, e_x)?)?;
    }
    if !acc.piece.is_discrete() {
        return Err(Error::Precondition("the maps do not separate the points of P".into()));
    }
    Ok(acc)
}

/// Candidates for `[P, μ]` from `Hom(Sg(Y), target)`, where target
/// element `i` stands for the block named `block_reps[i]`.
pub fn candidates_from_quotient(
    x: &FiniteAlgebra,
    y: &[Elem],
    piece: &Piece,
    target: &FiniteAlgebra,
    block_reps: &[Elem],
    enumerate: &mut dyn FnMut(&FiniteAlgebra, &FiniteAlgebra) -> Result<HomSet>,
) -> Result<CandidateSet> {
    if y.is_empty() {
        return Ok(CandidateSet::new(Vec::new(), piece.clone(), vec![Vec::new()]));
    }
    let z = generate_subuniverse(x, y);
    let (sub, univ) = x.subalgebra(&z)?;
    let pos: Vec<usize> = y.iter().map(|v| univ.binary_search(v).unwrap()).collect();
    let maps = enumerate(&sub, target)?
        .maps()
        .iter()
        .map(|h| pos.iter().map(|&i| block_reps[h.apply(i)]).collect())
        .collect();
    Ok(CandidateSet::new(y.to_vec(), piece.clone(), maps))
}

/// `Sg(seed)` in `x` reinterpreted by polynomial terms, as an algebra with
/// one symbol per definition, with its sorted universe.
fn generated_reduct(x: &FiniteAlgebra, defs: &[(String, Polynomial)], seed: &[Elem]) -> Result<(FiniteAlgebra, Vec<Elem>)> {
    let limits = Limits::default();
    let mut univ: Vec<Elem> = Vec::new();
    let mut seen = vec![false; x.size()];
    let mut push = |v: Elem, univ: &mut Vec<Elem>| {
        if !seen[v] {
            seen[v] = true;
            univ.push(v);
        }
    };
    for &v in seed {
        push(v, &mut univ);
    }
    for (_, p) in defs.iter().filter(|(_, p)| p.arity == 0) {
        push(p.eval_on(x, &[Vec::new()])[0], &mut univ);
    }
    let mut frontier = 0;
    while frontier < univ.len() {
        let len = univ.len();
        for (_, p) in defs.iter().filter(|(_, p)| p.arity > 0) {
            let k = p.arity;
            let cells = crate::algebra::pow_u128(len, k);
            if cells > limits.max_table as u128 {
                return Err(Error::cap("generated reduct tuples", cells, limits.max_table));
            }
            let mut points = Vec::new();
            let mut pos = vec![0; k];
            loop {
                if pos.iter().any(|&i| i >= frontier) {
                    points.push(pos.iter().map(|&i| univ[i]).collect::<Vec<_>>());
                }
                if !odometer(&mut pos, len) {
                    break;
                }
            }
            for v in p.eval_on(x, &points) {
                push(v, &mut univ);
            }
        }
        frontier = len;
    }
    univ.sort_unstable();
    let mut index = vec![usize::MAX; x.size()];
    univ.iter().enumerate().for_each(|(i, &v)| index[v] = i);
    let ops: Vec<(String, usize, Vec<Elem>)> = defs
        .iter()
        .map(|(name, p)| {
            let points = if p.arity == 0 { vec![Vec::new()] } else { grid(&univ, p.arity) };
            (name.clone(), p.arity, p.eval_on(x, &points).into_iter().map(|v| index[v]).collect())
        })
        .collect();
    Ok((FiniteAlgebra::from_ops(&format!("{}~", x.name()), univ.len(), ops)?, univ))
}

/// `Hom(Sg(seed), target)` in `x` reinterpreted by `defs`, each map given
/// by its values on `seed`.
fn reduct_homs(
    x: &FiniteAlgebra,
    defs: &[(String, Polynomial)],
    target: &FiniteAlgebra,
    seed: &[Elem],
    enumerate: &mut dyn FnMut(&FiniteAlgebra) -> Result<Vec<Vec<Elem>>>,
) -> Result<Vec<Vec<Elem>>> {
    let (sub, univ) = generated_reduct(x, defs, seed)?;
    sub.signature().check_same(target.signature())?;
    let pos: Vec<usize> = seed.iter().map(|v| univ.binary_search(v).unwrap()).collect();
    Ok(enumerate(&sub)?.into_iter().map(|h| pos.iter().map(|&i| h[i]).collect()).collect())
}

fn special_maps(z: &FiniteAlgebra, target: &FiniteAlgebra) -> Result<Vec<Vec<Elem>>> {
    Ok(enumerate_special(z, target)?.maps().iter().map(|h| h.images().to_vec()).collect())
}

fn sorted_image(f: &[Elem], of: &[Elem]) -> Vec<Elem> {
    let mut v: Vec<Elem> = of.iter().map(|&x| f[x]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Counters and an optional recursion log.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PieceStats {
    /// Largest candidate set produced.
    pub max_candidates: usize,
    /// Candidate sets produced (memoized sets count once).
    pub candidate_sets: usize,
}

struct Diag<'a> {
    stats: &'a mut PieceStats,
    trace: Option<&'a mut Vec<String>>,
    depth: usize,
    /// All homomorphisms of the current top-level source into the top-level
    /// target, used to check every candidate set against its contract.
    oracle: Option<&'a [Vec<Elem>]>,
    foreign: usize,
}

impl Diag<'_> {
    fn record(&mut self, label: &str, c: &CandidateSet) -> Result<()> {
        self.stats.max_candidates = self.stats.max_candidates.max(c.len());
        self.stats.candidate_sets += 1;
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(format!(
                "{}{label} P={:?} blocks={} |Y|={} candidates={}",
                "  ".repeat(self.depth),
                c.piece.p,
                c.piece.blocks().len(),
                c.y.len(),
                c.len()
            ));
        }
        if let (Some(homs), 0) = (self.oracle, self.foreign) {
            if let Some(h) = homs.iter().find(|h| !c.contains_restriction(h)) {
                return Err(Error::Precondition(format!(
                    "candidate set `{label}` on P={:?} misses the restriction of {h:?}",
                    c.piece.p
                )));
            }
        }
        Ok(())
    }
}

/// A group or two-element semilattice on a trace, given by polynomials.
struct TraceReduct {
    n: Vec<Elem>,
    target: FiniteAlgebra,
    defs: Vec<(String, Polynomial)>,
}

impl TraceReduct {
    fn new(poly: &PolyContext, n: &[Elem]) -> Result<Self> {
        let m = n.len();
        let mut pos = vec![usize::MAX; poly.star.size()];
        n.iter().enumerate().for_each(|(i, &x)| pos[x] = i);
        let inside = |v: &[u32]| v.iter().all(|&x| pos[x as usize] != usize::MAX);
        let to_pos = |p: &Polynomial| p.values.iter().map(|&v| pos[v]).collect::<Vec<_>>();
        if m == 2 {
            let semi = poly.search(2, n, &mut |v| {
                inside(v) && v[0] as Elem == n[0] && v[3] as Elem == n[1] && v[1] == v[2]
            })?;
            if let Some(s) = semi {
                let target = FiniteAlgebra::from_ops("trace", 2, [("s", 2, to_pos(&s))])?;
                return Ok(TraceReduct { n: n.to_vec(), target, defs: vec![("s".into(), s)] });
            }
        }
        let at = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
        let d = poly
            .search(3, n, &mut |v| {
                inside(v)
                    && (0..m).all(|i| (0..m).all(|j| v[at(j, i, i)] as Elem == n[j] && v[at(i, i, j)] as Elem == n[j]))
            })?
            .ok_or_else(|| Error::SearchExhausted(format!("trace {n:?} has neither a semilattice nor a Mal'cev polynomial")))?;
        let c = n[0];
        let x0 = Polynomial::projection(0, 2, n);
        let x1 = Polynomial::projection(1, 2, n);
        let c2 = Polynomial::constant(&poly.star, c, 2, n);
        let mul = d.substitute(&[&x0, &c2, &x1], 2, n);
        let c1 = Polynomial::constant(&poly.star, c, 1, n);
        let y0 = Polynomial::projection(0, 1, n);
        let inv = d.substitute(&[&c1, &y0, &c1], 1, n);
        let one = Polynomial::constant(&poly.star, c, 0, n);
        let target = FiniteAlgebra::from_ops(
            "trace",
            m,
            [("mul", 2, to_pos(&mul)), ("inv", 1, to_pos(&inv)), ("one", 0, vec![0])],
        )?;
        Ok(TraceReduct { n: n.to_vec(), target, defs: vec![("mul".into(), mul), ("inv".into(), inv), ("one".into(), one)] })
    }

    /// Point candidates for `[N, 0_N]` on `z`.
    fn candidates(&self, x: &FiniteAlgebra, z: &[Elem]) -> Result<CandidateSet> {
        let maps = reduct_homs(x, &self.defs, &self.target, z, &mut |sub| special_maps(sub, &self.target))?;
        let maps = maps.into_iter().map(|h| h.into_iter().map(|i| self.n[i]).collect()).collect();
        Ok(CandidateSet::new(z.to_vec(), Piece::discrete(&self.n), maps))
    }
}

/// Chain engine data for a constant-complete target: the first congruence
/// of a cover chain avoiding type 1, the engine for the quotient by it, and
/// the separating polynomials and trace reducts of one minimal set.
struct ChainTarget {
    s: FiniteAlgebra,
    level: Option<ChainLevel>,
}

struct ChainLevel {
    quotient: Box<ChainTarget>,
    qmap: FiniteMap,
    piece: Piece,
    block_rep: Vec<Elem>,
    classes: Vec<Vec<Elem>>,
    seps: HashMap<(Elem, Elem), Polynomial>,
    traces: Vec<TraceReduct>,
    trace_of: Vec<usize>,
}

impl ChainTarget {
    /// `None` when no cover chain from 0 to 1 avoids type 1.
    fn build(s: &FiniteAlgebra) -> Result<Option<ChainTarget>> {
        if s.size() == 1 {
            return Ok(Some(ChainTarget { s: s.clone(), level: None }));
        }
        let lat = all_congruences(s)?;
        let cong = lat.congruences();
        let mut good: Vec<Option<bool>> = vec![None; cong.len()];
        fn reach(
            i: usize,
            s: &FiniteAlgebra,
            lat: &crate::lattice::CongruenceLattice,
            good: &mut Vec<Option<bool>>,
        ) -> Result<bool> {
            if let Some(g) = good[i] {
                return Ok(g);
            }
            let mut ok = i == lat.top();
            for j in lat.upper_covers(i) {
                if ok {
                    break;
                }
                let c = lat.congruences();
                ok = !cover_type(s, &c[i], &c[j])?.is_one() && reach(j, s, lat, good)?;
            }
            good[i] = Some(ok);
            Ok(ok)
        }
        let bottom = lat.bottom();
        let mut alpha = None;
        for j in lat.upper_covers(bottom) {
            if !cover_type(s, &cong[bottom], &cong[j])?.is_one() && reach(j, s, &lat, &mut good)? {
                alpha = Some(cong[j].clone());
                break;
            }
        }
        let Some(alpha) = alpha else { return Ok(None) };
        let poly = PolyContext::new(s)?;
        let (_, msd) = poly.minimal_cover_type(&alpha)?;
        let classes: Vec<Vec<Elem>> = alpha.blocks().into_iter().filter(|b| b.len() > 1).collect();
        let mut seps = HashMap::new();
        for p in &classes {
            for (i, &a) in p.iter().enumerate() {
                for &b in &p[i + 1..] {
                    seps.insert((a, b), poly.separating(&msd.u, a, b)?);
                }
            }
        }
        let mut trace_of = vec![usize::MAX; s.size()];
        let mut traces = Vec::new();
        for (t, n) in msd.traces.iter().enumerate() {
            n.iter().for_each(|&x| trace_of[x] = t);
            traces.push(TraceReduct::new(&poly, n)?);
        }
        let (q, qmap) = quotient(s, &alpha)?;
        let quotient = ChainTarget::build(&q)?
            .ok_or_else(|| Error::SearchExhausted("quotient by the first chain congruence has no chain avoiding type 1".into()))?;
        let mut block_rep = vec![usize::MAX; q.size()];
        for x in (0..s.size()).rev() {
            block_rep[qmap.apply(x)] = x;
        }
        let all: Vec<Elem> = (0..s.size()).collect();
        let piece = Piece::by_key(&all, |x| alpha.label(x));
        Ok(Some(ChainTarget {
            s: s.clone(),
            level: Some(ChainLevel { quotient: Box::new(quotient), qmap, piece, block_rep, classes, seps, traces, trace_of }),
        }))
    }

    /// Exactly `Hom(x, s)` as image vectors.
    fn homs(&self, x: &FiniteAlgebra, diag: &mut Diag) -> Result<Vec<Vec<Elem>>> {
        let Some(level) = &self.level else {
            return Ok(vec![vec![0; x.size()]]);
        };
        diag.foreign += 1;
        diag.depth += 1;
        let qhoms = level.quotient.homs(x, diag);
        diag.depth -= 1;
        diag.foreign -= 1;
        let maps = qhoms?.into_iter().map(|h| h.into_iter().map(|v| level.block_rep[v]).collect()).collect();
        let y: Vec<Elem> = (0..x.size()).collect();
        let mut cands = CandidateSet::new(y, level.piece.clone(), maps);
        diag.record("chain quotient", &cands)?;
        debug_assert!(level.qmap.domain() == self.s.size());
        let mut e_cache: HashMap<(Elem, Elem), Vec<Elem>> = HashMap::new();
        let mut t_memo: HashMap<(usize, Vec<Elem>), Rc<CandidateSet>> = HashMap::new();
        for p in &level.classes {
            cands = refine_block(&cands, p[0], &mut |yp| {
                diag.depth += 1;
                let r = self.class_candidates(level, p, yp, x, &mut e_cache, &mut t_memo, diag);
                diag.depth -= 1;
                r.map(Rc::new)
            })?;
            diag.record("chain refine", &cands)?;
        }
        let mut out = Vec::new();
        for m in cands.maps {
            if is_homomorphism(x, &self.s, &FiniteMap::new_unchecked(self.s.size(), m.clone()))? {
                out.push(m);
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn class_candidates(
        &self,
        level: &ChainLevel,
        p: &[Elem],
        y: &[Elem],
        x: &FiniteAlgebra,
        e_cache: &mut HashMap<(Elem, Elem), Vec<Elem>>,
        t_memo: &mut HashMap<(usize, Vec<Elem>), Rc<CandidateSet>>,
        diag: &mut Diag,
    ) -> Result<CandidateSet> {
        let mut acc = CandidateSet::whole(y, p);
        for (i, &a) in p.iter().enumerate() {
            for &b in &p[i + 1..] {
                if acc.piece.rep(a) != acc.piece.rep(b) {
                    continue;
                }
                let e = &level.seps[&(a, b)];
                let ex = e_cache.entry((a, b)).or_insert_with(|| e.eval_on(x, &grid(&(0..x.size()).collect::<Vec<_>>(), 1)));
                let z = sorted_image(ex, y);
                let t = level.trace_of[e.values[a]];
                let nc = match t_memo.get(&(t, z.clone())) {
                    Some(c) => Rc::clone(c),
                    None => {
                        let c = Rc::new(level.traces[t].candidates(x, &z)?);
                        diag.record("trace", &c)?;
                        t_memo.insert((t, z.clone()), Rc::clone(&c));
                        c
                    }
                };
                let restricted = restrict_piece(&nc, &sorted_image(&e.values, p))?;
                let pulled = kernel_pullback(&e.values, p, &restricted, y, ex)?;
                diag.record("kernel", &pulled)?;
                acc = intersect_pieces(&acc, &pulled)?;
            }
        }
        diag.record("class", &acc)?;
        Ok(acc)
    }
}

enum Body {
    /// Two-element body with a semilattice polynomial.
    Meet { target: FiniteAlgebra, defs: Vec<(String, Polynomial)> },
    /// Body with a Mal'cev polynomial: the algebra on the body with that
    /// operation and all constants, handled by the chain engine.
    Malcev { chain: Box<ChainTarget>, defs: Vec<(String, Polynomial)> },
}

struct MinimalSetEngine {
    msd: MinimalSetData,
    /// Semilattice on `{body, tail}` (0 is the body) and its definition.
    tail_target: FiniteAlgebra,
    tail_defs: Vec<(String, Polynomial)>,
    body: Body,
}

/// Membership engine data: per minimal congruence, its first minimal set
/// with pseudo-operations; per pair, the separating map into a minimal set.
struct MemberTarget {
    s: FiniteAlgebra,
    sets: Vec<MinimalSetEngine>,
    seps: HashMap<(Elem, Elem), (usize, Polynomial)>,
}

impl MemberTarget {
    /// `None` when some minimal congruence has type 1.
    fn build(s: &FiniteAlgebra) -> Result<Option<MemberTarget>> {
        let poly = PolyContext::new(s)?;
        let minimal = minimal_congruences(s)?;
        let mut sets = Vec::new();
        for alpha in &minimal {
            let (typ, msd) = poly.minimal_cover_type(alpha)?;
            if typ.is_one() {
                return Ok(None);
            }
            let pseudo = poly.pseudo_operation(&msd)?;
            let b = &msd.body;
            let tail_target = FiniteAlgebra::from_ops("tail", 2, [("s", 2, vec![0, 1, 1, 1])])?;
            let tail_defs = vec![("s".to_string(), pseudo.tail_p.clone())];
            let body_pos = |v: Elem| b.binary_search(&v).expect("body operation stays in the body");
            let body = match pseudo.kind {
                PseudoKind::MeetOnBody => {
                    let table = pseudo.body_op.values.iter().map(|&v| body_pos(v)).collect();
                    Body::Meet {
                        target: FiniteAlgebra::from_ops("body", b.len(), [("s", 2, table)])?,
                        defs: vec![("s".into(), pseudo.body_op.clone())],
                    }
                }
                PseudoKind::MalcevOnBody => {
                    let mut ops = vec![("d".to_string(), 3, pseudo.body_op.values.iter().map(|&v| body_pos(v)).collect())];
                    let mut defs = vec![("d".to_string(), pseudo.body_op.clone())];
                    for (i, &v) in b.iter().enumerate() {
                        ops.push((format!("c{i}"), 0, vec![i]));
                        defs.push((format!("c{i}"), Polynomial::constant(&poly.star, v, 0, b)));
                    }
                    let rb = FiniteAlgebra::from_ops("body", b.len(), ops)?;
                    let chain = ChainTarget::build(&rb)?
                        .ok_or_else(|| Error::SearchExhausted("Mal'cev body without a chain avoiding type 1".into()))?;
                    Body::Malcev { chain: Box::new(chain), defs }
                }
            };
            sets.push(MinimalSetEngine { msd, tail_target, tail_defs, body });
        }
        let mut seps = HashMap::new();
        for a in 0..s.size() {
            for b in a + 1..s.size() {
                seps.insert((a, b), Self::separating_map(s, &minimal, &sets, a, b)?);
            }
        }
        Ok(Some(MemberTarget { s: s.clone(), sets, seps }))
    }

    /// A unary polynomial into a minimal set separating `a` and `b` whose
    /// image of `{a, b}` meets the body: the idempotent onto the minimal set
    /// composed with the first translation on a derivation path between two
    /// trace elements that moves off the first of them.
    fn separating_map(
        s: &FiniteAlgebra,
        minimal: &[Partition],
        sets: &[MinimalSetEngine],
        a: Elem,
        b: Elem,
    ) -> Result<(usize, Polynomial)> {
        let (cg, log) = generate_congruence_logged(s, &[(a, b)]);
        let k = minimal.iter().position(|m| m.leq(&cg)).expect("a nonzero congruence contains a minimal one");
        let msd = &sets[k].msd;
        let (c, d) = (msd.traces[0][0], msd.traces[0][1]);
        let e = &msd.idempotent_e;
        let path = log.path(c, d).expect("trace pairs lie in the generated congruence");
        for (edge, forward) in path {
            let le = &log.edges[edge];
            let next = if forward { le.v } else { le.u };
            if e.values[next] != c {
                let f = e.compose_unary(&Polynomial::from_translations(s, &log.translations(edge).1));
                debug_assert!(f.values[a] != f.values[b] && (f.values[a] == c || f.values[b] == c));
                return Ok((k, f));
            }
        }
        unreachable!("the path ends at d, which the idempotent fixes")
    }

    fn homs(&self, x: &FiniteAlgebra, diag: &mut Diag) -> Result<Vec<Vec<Elem>>> {
        let mut run = MemberRun { t: self, x, diag, ii: HashMap::new(), i: HashMap::new(), tct: HashMap::new(), body: HashMap::new(), fx: HashMap::new() };
        let all: Vec<Elem> = (0..self.s.size()).collect();
        let y: Vec<Elem> = (0..x.size()).collect();
        let c = run.ii(&all, &y)?;
        let mut out = Vec::new();
        for m in &c.maps {
            if is_homomorphism(x, &self.s, &FiniteMap::new_unchecked(self.s.size(), m.clone()))? {
                out.push(m.clone());
            }
        }
        Ok(out)
    }
}

type Memo<K> = HashMap<K, Rc<CandidateSet>>;

struct MemberRun<'t, 'd, 'e> {
    t: &'t MemberTarget,
    x: &'t FiniteAlgebra,
    diag: &'d mut Diag<'e>,
    ii: Memo<(Vec<Elem>, Vec<Elem>)>,
    i: Memo<(usize, Vec<Elem>, Vec<Elem>)>,
    tct: Memo<(usize, Vec<Elem>)>,
    body: Memo<(usize, Vec<Elem>)>,
    fx: HashMap<(Elem, Elem), Vec<Elem>>,
}

impl MemberRun<'_, '_, '_> {
    fn finish(&mut self, label: &str, c: CandidateSet) -> Result<Rc<CandidateSet>> {
        self.diag.depth -= 1;
        self.diag.record(label, &c)?;
        Ok(Rc::new(c))
    }

    /// `[P, 0_P]` for any `P`: intersect kernel pullbacks of separating
    /// maps into minimal sets.
    fn ii(&mut self, p: &[Elem], y: &[Elem]) -> Result<Rc<CandidateSet>> {
        let key = (p.to_vec(), y.to_vec());
        if let Some(c) = self.ii.get(&key) {
            return Ok(Rc::clone(c));
        }
        self.diag.depth += 1;
        let mut acc = CandidateSet::whole(y, p);
        for (i, &a) in p.iter().enumerate() {
            for &b in &p[i + 1..] {
                if acc.piece.rep(a) != acc.piece.rep(b) {
                    continue;
                }
                let (k, f) = &self.t.seps[&(a, b)];
                let x = self.x;
                let fx = self.fx.entry((a, b)).or_insert_with(|| f.eval_on(x, &grid(&(0..x.size()).collect::<Vec<_>>(), 1))).clone();
                let z = sorted_image(&fx, y);
                let inner = self.i(*k, &sorted_image(&f.values, p), &z)?;
                let pulled = kernel_pullback(&f.values, p, &inner, y, &fx)?;
                acc = intersect_pieces(&acc, &pulled)?;
            }
        }
        let c = self.finish("II", acc)?;
        self.ii.insert(key, Rc::clone(&c));
        Ok(c)
    }

    /// `[P, 0_P]` for `P` inside the minimal set `k`: the body/tail
    /// candidates restricted to `P`, with the tail part refined by `ii`.
    fn i(&mut self, k: usize, p: &[Elem], y: &[Elem]) -> Result<Rc<CandidateSet>> {
        let key = (k, p.to_vec(), y.to_vec());
        if let Some(c) = self.i.get(&key) {
            return Ok(Rc::clone(c));
        }
        self.diag.depth += 1;
        let base = self.tct(k, y)?;
        let mut c = restrict_piece(&base, p)?;
        let tail = &self.t.sets[k].msd.tail;
        let pt: Vec<Elem> = p.iter().copied().filter(|v| tail.binary_search(v).is_ok()).collect();
        if pt.len() > 1 {
            c = refine_block(&c, pt[0], &mut |yp| self.ii(&pt, yp))?;
        }
        let c = self.finish("I", c)?;
        self.i.insert(key, Rc::clone(&c));
        Ok(c)
    }

    /// `[U, 0_B ∪ T²]` for the minimal set `k`.
    fn tct(&mut self, k: usize, y: &[Elem]) -> Result<Rc<CandidateSet>> {
        let key = (k, y.to_vec());
        if let Some(c) = self.tct.get(&key) {
            return Ok(Rc::clone(c));
        }
        self.diag.depth += 1;
        let set = &self.t.sets[k];
        let (u, b, t) = (&set.msd.u, &set.msd.body, &set.msd.tail);
        let start = if t.is_empty() {
            CandidateSet::whole(y, u)
        } else {
            let piece = Piece::by_key(u, |v| t.binary_search(&v).is_ok());
            let reps = [b[0], t[0]];
            let maps = reduct_homs(self.x, &set.tail_defs, &set.tail_target, y, &mut |sub| special_maps(sub, &set.tail_target))?;
            let maps = maps.into_iter().map(|h| h.into_iter().map(|i| reps[i]).collect()).collect();
            CandidateSet::new(y.to_vec(), piece, maps)
        };
        self.diag.record("body/tail", &start)?;
        let c = refine_block(&start, b[0], &mut |yp| self.body(k, yp))?;
        let c = self.finish("U", c)?;
        self.tct.insert(key, Rc::clone(&c));
        Ok(c)
    }

    /// `[B, 0_B]` for the body of the minimal set `k`.
    fn body(&mut self, k: usize, y: &[Elem]) -> Result<Rc<CandidateSet>> {
        let key = (k, y.to_vec());
        if let Some(c) = self.body.get(&key) {
            return Ok(Rc::clone(c));
        }
        self.diag.depth += 1;
        let set = &self.t.sets[k];
        let b = &set.msd.body;
        let maps = match &set.body {
            Body::Meet { target, defs } => reduct_homs(self.x, defs, target, y, &mut |sub| special_maps(sub, target))?,
            Body::Malcev { chain, defs } => {
                let diag = &mut *self.diag;
                diag.foreign += 1;
                let r = reduct_homs(self.x, defs, &chain.s, y, &mut |sub| chain.homs(sub, diag));
                diag.foreign -= 1;
                r?
            }
        };
        let maps = maps.into_iter().map(|h| h.into_iter().map(|i| b[i]).collect()).collect();
        let c = self.finish("B", CandidateSet::new(y.to_vec(), Piece::discrete(b), maps))?;
        self.body.insert(key, Rc::clone(&c));
        Ok(c)
    }
}

enum Engine {
    Chain(ChainTarget),
    Member(MemberTarget),
}

impl Engine {
    fn homs(&self, x: &FiniteAlgebra, diag: &mut Diag) -> Result<Vec<Vec<Elem>>> {
        match self {
            Engine::Chain(c) => c.homs(x, diag),
            Engine::Member(m) => m.homs(x, diag),
        }
    }

    fn target(&self) -> &FiniteAlgebra {
        match self {
            Engine::Chain(c) => &c.s,
            Engine::Member(m) => &m.s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Kind {
    Chain,
    Member,
}

/// Enumeration context for one target algebra `A`. Engines are built per
/// subalgebra on first use and reused.
pub struct PieceContext {
    a: FiniteAlgebra,
    pub stats: PieceStats,
    /// Use the membership recursion even where a chain avoiding type 1
    /// exists.
    pub force_membership: bool,
    /// Check every candidate set against brute-force homomorphisms.
    pub verify: bool,
    trace: Option<Vec<String>>,
    engines: HashMap<(Kind, Vec<Elem>), Option<Rc<Engine>>>,
}

impl PieceContext {
    pub fn new(a: &FiniteAlgebra) -> Result<Self> {
        if a.size() == 0 {
            return Err(Error::Precondition("empty target".into()));
        }
        Ok(PieceContext { a: a.clone(), stats: PieceStats::default(), force_membership: false, verify: false, trace: None, engines: HashMap::new() })
    }

    /// Starts recording the recursion tree.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// The recursion tree recorded so far, one line per candidate set.
    pub fn trace_text(&self) -> String {
        self.trace.as_ref().map(|t| t.iter().map(|l| format!("{l}\n")).collect()).unwrap_or_default()
    }

    fn engine(&mut self, kind: Kind, universe: &[Elem]) -> Result<Option<Rc<Engine>>> {
        let key = (kind, universe.to_vec());
        if let Some(e) = self.engines.get(&key) {
            return Ok(e.clone());
        }
        let (sub, _) = self.a.subalgebra(universe)?;
        let star = expand_with_constants(&sub);
        let engine = match kind {
            Kind::Chain => ChainTarget::build(&star)?.map(Engine::Chain),
            Kind::Member => MemberTarget::build(&star)?.map(Engine::Member),
        }
        .map(Rc::new);
        self.engines.insert(key, engine.clone());
        Ok(engine)
    }

    /// Engine for the constants expansion of the subalgebra on `universe`:
    /// the chain engine when it applies (unless membership is forced), else
    /// the membership engine.
    fn preferred(&mut self, universe: &[Elem]) -> Result<Rc<Engine>> {
        if !self.force_membership {
            if let Some(e) = self.engine(Kind::Chain, universe)? {
                return Ok(e);
            }
        }
        self.engine(Kind::Member, universe)?.ok_or_else(|| {
            Error::NotApplicable(format!("subalgebra {universe:?} has a strongly abelian minimal congruence"))
        })
    }

    fn run(&mut self, engine: &Engine, x: &FiniteAlgebra) -> Result<Vec<Vec<Elem>>> {
        let oracle = if self.verify {
            Some(enumerate_homs(x, engine.target())?.maps().iter().map(|h| h.images().to_vec()).collect::<Vec<_>>())
        } else {
            None
        };
        let mut diag = Diag { stats: &mut self.stats, trace: self.trace.as_mut(), depth: 0, oracle: oracle.as_deref(), foreign: 0 };
        engine.homs(x, &mut diag)
    }

    fn full_target(&mut self, kind: Kind, x: &FiniteAlgebra) -> Result<HomSet> {
        let all: Vec<Elem> = (0..self.a.size()).collect();
        let engine = self.engine(kind, &all)?.ok_or_else(|| {
            Error::NotApplicable(match kind {
                Kind::Chain => "no cover chain from 0 to 1 avoids type 1".to_string(),
                Kind::Member => "some minimal congruence is strongly abelian".to_string(),
            })
        })?;
        x.signature().check_same(engine.target().signature())?;
        let maps = self.run(&engine, x)?;
        let n = self.a.size();
        Ok(HomSet::new(x.size(), n, maps.into_iter().map(|m| FiniteMap::new_unchecked(n, m)).collect(), true))
    }

    /// `Hom(X, A*)` through a cover chain avoiding type 1.
    pub fn enumerate_via_type_chain(&mut self, x: &FiniteAlgebra) -> Result<HomSet> {
        self.full_target(Kind::Chain, x)
    }

    /// `Hom(X, A*)` through the membership recursion.
    pub fn enumerate_membership(&mut self, x: &FiniteAlgebra) -> Result<HomSet> {
        self.full_target(Kind::Member, x)
    }

    /// `Hom(X, A)`: for each subalgebra `B` and each injective choice of
    /// elements of `X` for the constants of `B*`, the homomorphisms onto
    /// `B*` through an engine.
    pub fn enumerate_all(&mut self, x: &FiniteAlgebra) -> Result<HomSet> {
        x.signature().check_same(self.a.signature())?;
        let n = self.a.size();
        let mut subs: Vec<Vec<Elem>> = (1u64..1 << n)
            .map(|mask| generate_subuniverse(&self.a, &(0..n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>()))
            .collect();
        subs.sort();
        subs.dedup();
        let engines = subs.iter().map(|u| self.preferred(u)).collect::<Result<Vec<_>>>()?;
        let limits = Limits::default();
        let base = self.a.signature().len();
        let mut maps = Vec::new();
        for (univ, engine) in subs.iter().zip(engines) {
            let m = univ.len();
            if m > x.size() {
                continue;
            }
            let total = crate::algebra::pow_u128(x.size(), m);
            if total > limits.max_sweep {
                return Err(Error::cap("constant pinning tuples", total, limits.max_sweep as usize));
            }
            let mut pins = vec![0; m];
            loop {
                let mut sorted = pins.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() == m {
                    let xx = pin_constants(x, engine.target(), base, &pins);
                    for h in self.run(&engine, &xx)? {
                        maps.push(FiniteMap::new_unchecked(n, h.into_iter().map(|v| univ[v]).collect()));
                    }
                }
                if !odometer(&mut pins, x.size()) {
                    break;
                }
            }
        }
        Ok(HomSet::new(x.size(), n, maps, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn star(a: &FiniteAlgebra) -> FiniteAlgebra {
        expand_with_constants(a)
    }

    /// Sample sources in the signature of `s`: `s` itself, small subalgebras
    /// of `s²`, and random small tables.
    fn sources(s: &FiniteAlgebra, seed: u64, count: usize) -> Vec<FiniteAlgebra> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![s.clone()];
        let sq = crate::algebra::power(s, 2).unwrap();
        for _ in 0..count {
            let gens: Vec<Elem> = (0..2).map(|_| rng.gen_range(0..sq.size())).collect();
            let u = generate_subuniverse(&sq, &gens);
            if u.len() <= 6 {
                out.push(sq.subalgebra(&u).unwrap().0);
            }
            let size: usize = rng.gen_range(1..=4);
            let tables = (0..s.signature().len())
                .map(|op| {
                    let cells = size.pow(s.arity(op) as u32);
                    (0..cells).map(|_| rng.gen_range(0..size)).collect()
                })
                .collect();
            out.push(FiniteAlgebra::new("rand", size, s.signature().clone(), tables).unwrap());
        }
        out
    }

    fn truth(x: &FiniteAlgebra, s: &FiniteAlgebra) -> Vec<Vec<Elem>> {
        enumerate_homs(x, s).unwrap().maps().iter().map(|h| h.images().to_vec()).collect()
    }

    /// Exactly the restricted homomorphisms for a piece.
    fn exact(homs: &[Vec<Elem>], y: &[Elem], piece: &Piece) -> CandidateSet {
        let maps = homs
            .iter()
            .filter_map(|h| y.iter().map(|&v| piece.rep(h[v])).collect::<Option<Vec<_>>>())
            .collect();
        CandidateSet::new(y.to_vec(), piece.clone(), maps)
    }

    fn superset(c: &CandidateSet, homs: &[Vec<Elem>]) -> bool {
        homs.iter().all(|h| c.contains_restriction(h))
    }

    fn random_piece(rng: &mut ChaCha8Rng, n: usize) -> Piece {
        let p: Vec<Elem> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        let labels: Vec<usize> = p.iter().map(|_| rng.gen_range(0..3)).collect();
        Piece::new(&p, &Partition::from_labels(&labels)).unwrap()
    }

    fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<Elem> {
        (0..n).filter(|_| rng.gen_bool(0.5)).collect()
    }

    #[test]
    fn pieces_and_trivial_candidates() {
        let piece = Piece::new(&[1, 3, 4], &Partition::from_labels(&[0, 1, 0])).unwrap();
        assert_eq!(piece.rep(4), Some(1));
        assert_eq!(piece.rep(0), None);
        assert_eq!(piece.blocks(), vec![vec![1, 4], vec![3]]);
        assert!(Piece::new(&[2, 1], &Partition::discrete(2)).is_err());
        assert_eq!(CandidateSet::whole(&[], &[]).maps, vec![Vec::<Elem>::new()]);
        assert!(CandidateSet::whole(&[0], &[]).is_empty());
        assert_eq!(CandidateSet::whole(&[0, 2], &[5, 7]).maps, vec![vec![5, 5]]);
    }

    #[test]
    fn combinator_examples() {
        let piece = Piece::new(&[0, 1, 2], &Partition::from_labels(&[0, 1, 1])).unwrap();
        let c = CandidateSet::new(vec![0, 1], piece.clone(), vec![vec![0, 1], vec![1, 1], vec![0, 0]]);
        assert_eq!(restrict_piece(&c, &[0, 1, 2]).unwrap(), c);
        let single = restrict_piece(&c, &[1, 2]).unwrap();
        assert_eq!(single.maps, vec![vec![1, 1]]);
        assert_eq!(intersect_pieces(&c, &c).unwrap().maps, c.maps);
        let untouched = refine_block(&c, 0, &mut |yp| Ok(Rc::new(CandidateSet::new(yp.to_vec(), Piece::discrete(&[0]), vec![vec![0; yp.len()]])))).unwrap();
        assert_eq!(untouched.maps, c.maps);
        // injective e gives point maps
        let cq = CandidateSet::new(vec![0, 1], Piece::discrete(&[0, 1, 2]), vec![vec![0, 2]]);
        let pulled = kernel_pullback(&[0, 1, 2], &[0, 1, 2], &cq, &[0, 1], &[0, 1]).unwrap();
        assert!(pulled.piece.is_discrete());
        assert_eq!(pulled.maps, vec![vec![0, 2]]);
        let one = separation_combine(&[3], &[0, 1], &[]).unwrap();
        assert_eq!(one.maps, vec![vec![3, 3]]);
    }

    /// The rock-paper-scissors example: `e = x·1` collapses `{1,2}` and
    /// the semilattice on `{0,1}` yields candidates modulo that kernel.
    #[test]
    fn rock_paper_scissors_kernel() {
        let s = star(&examples::rock_paper_scissors());
        let mul = s.op_index("mul").unwrap();
        let e_a: Vec<Elem> = (0..3).map(|v| s.apply(mul, &[v, 1])).collect();
        assert_eq!(e_a, vec![0, 1, 1]);
        for x in sources(&s, 7, 12) {
            let homs = truth(&x, &s);
            let e_x: Vec<Elem> = (0..x.size()).map(|v| x.apply(mul, &[v, x.table(s.op_index("c1").unwrap())[0]])).collect();
            let y: Vec<Elem> = (0..x.size()).collect();
            let z = sorted_image(&e_x, &y);
            let q = exact(&homs, &z, &Piece::discrete(&[0, 1]));
            let c = kernel_pullback(&e_a, &[0, 1, 2], &q, &y, &e_x).unwrap();
            assert_eq!(c.piece.blocks(), vec![vec![0], vec![1, 2]]);
            assert!(superset(&c, &homs));
        }
    }

    #[test]
    fn combinators_preserve_the_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in [examples::rock_paper_scissors(), examples::unary_quotient(), examples::chain(3), examples::cyclic_group(3)] {
            let s = star(&a);
            let n = s.size();
            let unary = PolyContext::new(&s).unwrap();
            for x in sources(&s, rng.gen(), 6) {
                let homs = truth(&x, &s);
                for _ in 0..6 {
                    let y = random_subset(&mut rng, x.size());
                    let pm = random_piece(&mut rng, n);
                    let p = pm.elements().to_vec();
                    let c = exact(&homs, &y, &pm);
                    // restriction
                    let q: Vec<Elem> = p.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
                    assert!(superset(&restrict_piece(&c, &q).unwrap(), &homs));
                    // intersection
                    let labels: Vec<usize> = p.iter().map(|_| rng.gen_range(0..2)).collect();
                    let other = Piece::new(&p, &Partition::from_labels(&labels)).unwrap();
                    let both = intersect_pieces(&c, &exact(&homs, &y, &other)).unwrap();
                    assert!(superset(&both, &homs));
                    assert_eq!(both.piece.partition(), pm.partition().meet(&other.partition()));
                    // block refinement
                    if let Some(block) = pm.blocks().into_iter().next() {
                        let refined = refine_block(&c, block[0], &mut |yp| Ok(Rc::new(exact(&homs, yp, &Piece::discrete(&block))))).unwrap();
                        assert!(superset(&refined, &homs));
                    }
                    // kernel pullback along a unary polynomial
                    let e = &unary.unary()[rng.gen_range(0..unary.unary().len())];
                    let e_x = e.eval_on(&x, &grid(&(0..x.size()).collect::<Vec<_>>(), 1));
                    let eq = sorted_image(&e.values, &p);
                    let z = sorted_image(&e_x, &y);
                    let pulled = kernel_pullback(&e.values, &p, &exact(&homs, &z, &Piece::discrete(&eq)), &y, &e_x).unwrap();
                    assert!(superset(&pulled, &homs));
                }
            }
        }
    }

    #[test]
    fn separation_combine_keeps_contract() {
        let s = star(&examples::rock_paper_scissors());
        let poly = PolyContext::new(&s).unwrap();
        let p = vec![0, 1, 2];
        for x in sources(&s, 3, 8) {
            let homs = truth(&x, &s);
            let y: Vec<Elem> = (0..x.size()).collect();
            let mut parts = Vec::new();
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let e = poly.unary().iter().find(|e| e.values[a] != e.values[b] && e.image().len() == 2).unwrap();
                let e_x = e.eval_on(&x, &grid(&y, 1));
                let z = sorted_image(&e_x, &y);
                parts.push((e.values.clone(), exact(&homs, &z, &Piece::discrete(&e.image())), e_x));
            }
            let c = separation_combine(&p, &y, &parts).unwrap();
            assert!(c.piece.is_discrete());
            assert!(superset(&c, &homs));
        }
    }

    #[test]
    fn semilattice_example_from_quotient() {
        // candidates on [{0,1}, 0] via the semilattice on that set
        let s = star(&examples::rock_paper_scissors());
        for x in sources(&s, 5, 6) {
            let homs = truth(&x, &s);
            let poly = PolyContext::new(&s).unwrap();
            let tr = TraceReduct::new(&poly, &[0, 1]).unwrap();
            let y: Vec<Elem> = (0..x.size()).collect();
            let c = tr.candidates(&x, &y).unwrap();
            assert!(superset(&c, &homs));
            let (z, _) = generated_reduct(&x, &tr.defs, &y).unwrap();
            assert!(c.len() <= z.size() + 1);
        }
        let piece = Piece::full(&[0, 1]);
        let x = examples::chain(2);
        let c = candidates_from_quotient(&x, &[0, 1], &piece, &examples::bare_set(1).with_name("t"), &[0], &mut |_, _| {
            Ok(HomSet::new(2, 1, vec![FiniteMap::constant(2, 1, 0)], true))
        })
        .unwrap();
        assert_eq!(c.maps, vec![vec![0, 0]]);
    }

    fn check_engine(a: &FiniteAlgebra, kind: Kind, seed: u64) {
        let s = star(a);
        let mut ctx = PieceContext::new(a).unwrap();
        ctx.verify = true;
        for x in sources(&s, seed, 10) {
            let want = enumerate_homs(&x, &s).unwrap();
            let got = match kind {
                Kind::Chain => ctx.enumerate_via_type_chain(&x),
                Kind::Member => ctx.enumerate_membership(&x),
            }
            .unwrap();
            assert_eq!(got.maps(), want.maps(), "{} on {}", a.name(), x.name());
        }
    }

    #[test]
    fn chain_engine_is_exact() {
        for a in [
            examples::semilattice2(),
            examples::cyclic_group(2),
            examples::cyclic_group(3),
            examples::rock_paper_scissors(),
            examples::chain(3),
            examples::simple_with_unary_sub(),
            examples::group_product(2, 2),
        ] {
            check_engine(&a, Kind::Chain, 21);
        }
    }

    #[test]
    fn membership_engine_is_exact() {
        for a in [
            examples::semilattice2(),
            examples::cyclic_group(3),
            examples::rock_paper_scissors(),
            examples::unary_quotient(),
            examples::simple_with_unary_sub(),
            examples::chain(3),
        ] {
            check_engine(&a, Kind::Member, 33);
        }
    }

    #[test]
    fn applicability() {
        let mut ctx = PieceContext::new(&examples::abelian_block()).unwrap();
        let x = star(&examples::abelian_block());
        assert!(matches!(ctx.enumerate_membership(&x), Err(Error::NotApplicable(_))));
        let mut uq = PieceContext::new(&examples::unary_quotient()).unwrap();
        let x = star(&examples::unary_quotient());
        assert!(matches!(uq.enumerate_via_type_chain(&x), Err(Error::NotApplicable(_))));
        assert_eq!(uq.enumerate_membership(&x).unwrap().len(), 1);
        let mut bare = PieceContext::new(&examples::bare_set(2)).unwrap();
        assert!(matches!(bare.enumerate_all(&examples::bare_set(2)), Err(Error::NotApplicable(_))));
        // {0,1} is an essentially unary subalgebra
        let sub = examples::simple_with_unary_sub();
        let mut ctx = PieceContext::new(&sub).unwrap();
        assert!(matches!(ctx.enumerate_all(&sub), Err(Error::NotApplicable(_))));
        assert!(ctx.enumerate_via_type_chain(&star(&sub)).is_ok());
    }

    #[test]
    fn enumerate_all_matches_brute_force() {
        for a in [
            examples::semilattice2(),
            examples::rock_paper_scissors(),
            examples::unary_quotient(),
            examples::chain(3),
            examples::cyclic_group(3),
        ] {
            let mut ctx = PieceContext::new(&a).unwrap();
            let mut forced = PieceContext::new(&a).unwrap();
            forced.force_membership = true;
            for x in sources(&a, 41, 6) {
                let want = enumerate_homs(&x, &a).unwrap();
                assert_eq!(ctx.enumerate_all(&x).unwrap().maps(), want.maps(), "{}", a.name());
                assert_eq!(forced.enumerate_all(&x).unwrap().maps(), want.maps(), "{}", a.name());
            }
        }
        let mut ctx = PieceContext::new(&examples::semilattice2()).unwrap();
        let x = FiniteAlgebra::from_ops("pt", 1, [("meet", 2, vec![0])]).unwrap();
        assert_eq!(ctx.enumerate_all(&x).unwrap().len(), 2);
        let mut trivial = PieceContext::new(&x).unwrap();
        assert_eq!(trivial.enumerate_all(&examples::chain(3)).unwrap().len(), 1);
    }

    #[test]
    fn chain_counts() {
        let a = examples::semilattice2();
        let mut ctx = PieceContext::new(&a).unwrap();
        for n in 1..=6 {
            let x = crate::homenum::Family::Chain.member(&a, n).unwrap();
            assert_eq!(ctx.enumerate_all(&x).unwrap().len(), n + 1);
        }
        assert!(ctx.stats.max_candidates >= 1);
    }

    #[test]
    fn trace_output() {
        let a = examples::rock_paper_scissors();
        let mut ctx = PieceContext::new(&a).unwrap();
        ctx.enable_trace();
        ctx.force_membership = true;
        ctx.enumerate_membership(&star(&a)).unwrap();
        let text = ctx.trace_text();
        assert!(text.lines().any(|l| l.starts_with("II ")));
        assert!(text.lines().any(|l| l.starts_with("  ")));
    }
}

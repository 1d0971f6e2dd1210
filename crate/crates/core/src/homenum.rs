//! Homomorphism enumeration: backtracking, surjective variants, reflection
//! into a variety, and the group and two-element semilattice enumerators.

use std::fmt::Write as _;

use crate::algebra::{
    decode_index, expand_with_constants, is_homomorphism, pow_u128, power, quotient, FiniteAlgebra, FiniteMap,
    Limits, Relation, Signature,
};
use crate::closure::{generate_congruence, generate_subuniverse, run_closure, Origin};
use crate::error::{Error, Result};
use crate::term::IdentitySet;
use crate::Elem;

/// A deduplicated, sorted set of maps `X -> A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomSet {
    pub source: usize,
    pub target: usize,
    maps: Vec<FiniteMap>,
    /// True when every member is known to be a homomorphism.
    pub exact: bool,
}

impl HomSet {
    pub fn new(source: usize, target: usize, mut maps: Vec<FiniteMap>, exact: bool) -> Self {
        maps.sort();
        maps.dedup();
        HomSet { source, target, maps, exact }
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

    pub fn contains(&self, h: &FiniteMap) -> bool {
        self.maps.binary_search(h).is_ok()
    }

    pub fn surjective(&self) -> HomSet {
        HomSet::new(
            self.source,
            self.target,
            self.maps.iter().filter(|m| m.is_surjective()).cloned().collect(),
            self.exact,
        )
    }
}

const NONE: usize = usize::MAX;

#[derive(Clone, Copy)]
enum Occ {
    Op(usize, usize),
    Rel(usize, usize),
}

/// Backtracking search for structure-preserving maps with forward checking.
pub(crate) struct Search<'a> {
    x: &'a FiniteAlgebra,
    a: &'a FiniteAlgebra,
    x_rels: &'a [Relation],
    a_rels: &'a [Relation],
    occ: Vec<Vec<Occ>>,
    h: Vec<usize>,
    trail: Vec<usize>,
    args: Vec<Elem>,
    queue: Vec<Elem>,
}

impl<'a> Search<'a> {
    pub(crate) fn new(
        x: &'a FiniteAlgebra,
        a: &'a FiniteAlgebra,
        x_rels: &'a [Relation],
        a_rels: &'a [Relation],
    ) -> Result<Self> {
        x.signature().check_same(a.signature())?;
        if x_rels.len() != a_rels.len()
            || x_rels.iter().zip(a_rels).any(|(r, s)| r.name != s.name || r.arity != s.arity)
        {
            return Err(Error::SignatureMismatch("relational parts differ".into()));
        }
        let n = x.size();
        let mut cells: u128 = 0;
        for op in 0..x.signature().len() {
            cells += pow_u128(n, x.arity(op)) * x.arity(op) as u128;
        }
        let limits = Limits::default();
        if cells > limits.max_table as u128 {
            return Err(Error::cap("search occurrence lists", cells, limits.max_table));
        }
        let mut occ = vec![Vec::new(); n];
        let mut args = vec![0; x.max_arity().max(1)];
        for op in 0..x.signature().len() {
            let k = x.arity(op);
            if k == 0 {
                continue;
            }
            for t in 0..x.table(op).len() {
                decode_index(t, n, k, &mut args);
                let mut seen: Vec<Elem> = args[..k].to_vec();
                seen.sort_unstable();
                seen.dedup();
                for e in seen {
                    occ[e].push(Occ::Op(op, t));
                }
            }
        }
        for (r, rel) in x_rels.iter().enumerate() {
            for (ti, t) in rel.tuples().iter().enumerate() {
                let mut seen = t.clone();
                seen.sort_unstable();
                seen.dedup();
                for e in seen {
                    occ[e].push(Occ::Rel(r, ti));
                }
            }
        }
        let max_ar = x.max_arity().max(x_rels.iter().map(|r| r.arity).max().unwrap_or(0));
        Ok(Search {
            x,
            a,
            x_rels,
            a_rels,
            occ,
            h: vec![NONE; n],
            trail: Vec::new(),
            args: vec![0; max_ar],
            queue: Vec::new(),
        })
    }

    fn assign(&mut self, e: Elem, v: Elem) -> bool {
        if self.h[e] == NONE {
            self.h[e] = v;
            self.trail.push(e);
            self.queue.push(e);
            true
        } else {
            self.h[e] == v
        }
    }

    fn propagate(&mut self) -> bool {
        let n = self.x.size();
        while let Some(e) = self.queue.pop() {
            for i in 0..self.occ[e].len() {
                match self.occ[e][i] {
                    Occ::Op(op, t) => {
                        let k = self.x.arity(op);
                        decode_index(t, n, k, &mut self.args);
                        let mut ready = true;
                        for slot in self.args[..k].iter_mut() {
                            let v = self.h[*slot];
                            if v == NONE {
                                ready = false;
                                break;
                            }
                            *slot = v;
                        }
                        if !ready {
                            continue;
                        }
                        let val = self.a.apply(op, &self.args[..k]);
                        let out = self.x.table(op)[t];
                        if !self.assign(out, val) {
                            self.queue.clear();
                            return false;
                        }
                    }
                    Occ::Rel(r, ti) => {
                        let tuple = &self.x_rels[r].tuples()[ti];
                        let mut img = Vec::with_capacity(tuple.len());
                        for &y in tuple {
                            let v = self.h[y];
                            if v == NONE {
                                break;
                            }
                            img.push(v);
                        }
                        if img.len() == tuple.len() && !self.a_rels[r].contains(&img) {
                            self.queue.clear();
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let e = self.trail.pop().unwrap();
            self.h[e] = NONE;
        }
    }

    /// Visits every solution; `visit` returns false to stop early.
    pub(crate) fn run(&mut self, visit: &mut dyn FnMut(&[Elem]) -> bool) {
        let x = self.x;
        for op in 0..x.signature().len() {
            if x.arity(op) == 0 && !self.assign(x.table(op)[0], self.a.table(op)[0]) {
                return;
            }
        }
        // zero-arity relations: the empty tuple must match
        for (r, rel) in self.x_rels.iter().enumerate() {
            if rel.arity == 0 && !rel.tuples().is_empty() && !self.a_rels[r].contains(&[]) {
                return;
            }
        }
        if !self.propagate() {
            return;
        }
        self.dfs(0, visit);
    }

    fn dfs(&mut self, from: usize, visit: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        let mut e = from;
        while e < self.h.len() && self.h[e] != NONE {
            e += 1;
        }
        if e == self.h.len() {
            return visit(&self.h);
        }
        for v in 0..self.a.size() {
            let mark = self.trail.len();
            self.assign(e, v);
            if self.propagate() && !self.dfs(e + 1, visit) {
                self.undo(mark);
                return false;
            }
            self.undo(mark);
        }
        true
    }
}

/// Exactly `Hom(X, A)`.
pub fn enumerate_homs(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<HomSet> {
    let mut maps = Vec::new();
    Search::new(x, a, &[], &[])?.run(&mut |h| {
        maps.push(FiniteMap::new_unchecked(a.size(), h.to_vec()));
        true
    });
    Ok(HomSet::new(x.size(), a.size(), maps, true))
}

/// `(|Hom(X, A)|, |surjective members|)` without storing the maps.
pub fn count_homs(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<(u128, u128)> {
    let (mut all, mut surj) = (0u128, 0u128);
    let mut hit = vec![false; a.size()];
    Search::new(x, a, &[], &[])?.run(&mut |h| {
        all += 1;
        hit.iter_mut().for_each(|b| *b = false);
        h.iter().for_each(|&v| hit[v] = true);
        if hit.iter().all(|&b| b) {
            surj += 1;
        }
        true
    });
    Ok((all, surj))
}

pub fn enumerate_surjective_homs(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<HomSet> {
    x.signature().check_same(a.signature())?;
    if x.size() < a.size() {
        return Ok(HomSet::new(x.size(), a.size(), Vec::new(), true));
    }
    Ok(enumerate_homs(x, a)?.surjective())
}

/// Expands `x` with nullary symbols named like the constants of
/// `a_star` beyond `base_len`, interpreted by `pins`.
pub(crate) fn pin_constants(x: &FiniteAlgebra, a_star: &FiniteAlgebra, base_len: usize, pins: &[Elem]) -> FiniteAlgebra {
    let mut sig: Signature = x.signature().clone();
    let mut tables = x.tables().to_vec();
    for (i, sym) in a_star.signature().symbols()[base_len..].iter().enumerate() {
        sig.push(sym.name.clone(), 0).expect("names copied from a valid signature");
        tables.push(vec![pins[i]]);
    }
    FiniteAlgebra::new(x.name(), x.size(), sig, tables).expect("pinned constants are in range")
}

/// Surjective homomorphisms computed through constant pinning: for each
/// injective `x ∈ X^|A|`, homomorphisms from `X` with `c_i ↦ x_i` into the
/// constants expansion of `A`.
pub fn enumerate_surjective_via_constants(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<HomSet> {
    x.signature().check_same(a.signature())?;
    let (n, m) = (x.size(), a.size());
    if n < m {
        return Ok(HomSet::new(n, m, Vec::new(), true));
    }
    let total = pow_u128(n, m);
    let limits = Limits::default();
    if total > limits.max_sweep {
        return Err(Error::cap("constant pinning tuples", total, limits.max_sweep as usize));
    }
    let star = expand_with_constants(a);
    let base = a.signature().len();
    let mut maps = Vec::new();
    let mut pins = vec![0; m];
    for idx in 0..total as usize {
        decode_index(idx, n, m, &mut pins);
        let mut sorted = pins.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != m {
            // h(x_i) = i for all i forces distinct pins
            continue;
        }
        let xx = pin_constants(x, &star, base, &pins);
        maps.extend(enumerate_homs(&xx, &star)?.maps().iter().cloned());
    }
    Ok(HomSet::new(n, m, maps, true))
}

/// Quotient of `X` by the congruence generated by all instances of `sigma`,
/// with the quotient map.
pub fn reflect(x: &FiniteAlgebra, sigma: &IdentitySet) -> Result<(FiniteAlgebra, FiniteMap)> {
    let n = x.size();
    let limits = Limits::default();
    let mut pairs = Vec::new();
    for id in &sigma.identities {
        let l = id.lhs.compile(x.signature())?;
        let r = id.rhs.compile(x.signature())?;
        let total = pow_u128(n, id.vars);
        if total > limits.max_sweep {
            return Err(Error::cap("identity instances", total, limits.max_sweep as usize));
        }
        let mut z = vec![0; id.vars];
        for idx in 0..total as usize {
            decode_index(idx, n, id.vars, &mut z);
            let (s, t) = (l.eval(x, &z), r.eval(x, &z));
            if s != t {
                pairs.push((s, t));
            }
        }
    }
    let alpha = generate_congruence(x, &pairs);
    quotient(x, &alpha)
}

/// Adds elements in order whenever they are outside the subuniverse
/// generated so far.
pub fn greedy_generating_set(x: &FiniteAlgebra) -> Vec<Elem> {
    let mut gens = Vec::new();
    let mut member = vec![false; x.size()];
    for e in generate_subuniverse(x, &[]) {
        member[e] = true;
    }
    for e in 0..x.size() {
        if !member[e] {
            gens.push(e);
            for s in generate_subuniverse(x, &gens) {
                member[s] = true;
            }
        }
    }
    gens
}

/// `Hom(X, A)` for groups: assign the greedy generators, extend along the
/// generation order, keep consistent extensions.
pub fn enumerate_group_homs(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<HomSet> {
    x.signature().check_same(a.signature())?;
    let grp = IdentitySet::group();
    for (name, alg) in [("source", x), ("target", a)] {
        let ok = grp.satisfied_by(alg).map_err(|_| Error::Precondition(format!("{name} is not in the group signature")))?;
        if !ok {
            return Err(Error::Precondition(format!("{name} is not a group")));
        }
    }
    let gens = greedy_generating_set(x);
    let seeds: Vec<Vec<Elem>> = gens.iter().map(|&g| vec![g]).collect();
    let run = run_closure(x, 1, &seeds, true, usize::MAX, &mut |_| false)?;
    let order: Vec<Elem> = (0..run.store.len()).map(|i| run.store.get(i)[0] as Elem).collect();
    let total = pow_u128(a.size(), gens.len());
    let mut maps = Vec::new();
    let mut assign = vec![0; gens.len()];
    let mut images = vec![0; order.len()];
    let mut h = vec![0; x.size()];
    for idx in 0..total as usize {
        decode_index(idx, a.size(), gens.len(), &mut assign);
        for (i, o) in run.origins.iter().enumerate() {
            images[i] = match o {
                Origin::Seed(s) => assign[*s],
                Origin::App(op, args) => {
                    let vals: Vec<Elem> = args.iter().map(|&j| images[j]).collect();
                    a.apply(*op, &vals)
                }
            };
            h[order[i]] = images[i];
        }
        let map = FiniteMap::new_unchecked(a.size(), h.clone());
        if is_homomorphism(x, a, &map)? {
            maps.push(map);
        }
    }
    Ok(HomSet::new(x.size(), a.size(), maps, true))
}

fn single_binary(alg: &FiniteAlgebra) -> Option<String> {
    let sig = alg.signature();
    (sig.len() == 1 && sig.arity(0) == 2).then(|| sig.name(0).to_string())
}

/// `Hom(X, A)` for a semilattice `X` and a two-element semilattice `A`: the
/// constant map onto the bottom plus the indicators of principal filters
/// that are homomorphisms.
pub fn enumerate_semilattice_homs_2(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<HomSet> {
    x.signature().check_same(a.signature())?;
    let sym = single_binary(a).ok_or_else(|| Error::Precondition("target is not a semilattice".into()))?;
    let sl = IdentitySet::semilattice_for(&sym);
    if a.size() != 2 || !sl.satisfied_by(a)? {
        return Err(Error::Precondition("target is not a two-element semilattice".into()));
    }
    if !sl.satisfied_by(x)? {
        return Err(Error::Precondition("source is not a semilattice".into()));
    }
    let bottom = a.apply(0, &[0, 1]);
    let top = 1 - bottom;
    let mut maps = vec![FiniteMap::constant(x.size(), 2, bottom)];
    for p in 0..x.size() {
        let images = (0..x.size()).map(|y| if x.apply(0, &[p, y]) == p { top } else { bottom }).collect();
        let map = FiniteMap::new_unchecked(2, images);
        if is_homomorphism(x, a, &map)? {
            maps.push(map);
        }
    }
    Ok(HomSet::new(x.size(), 2, maps, true))
}

/// Enumeration strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Brute,
    Special,
    Pieces,
    /// Brute force up to the threshold source size, pieces above (falling
    /// back to brute force when pieces do not apply).
    Auto { threshold: usize },
}

/// `Hom(X, A)` by the chosen method, plus the largest candidate set seen
/// when pieces were used.
pub fn enumerate_with(x: &FiniteAlgebra, a: &FiniteAlgebra, method: Method) -> Result<(HomSet, Option<usize>)> {
    match method {
        Method::Brute => Ok((enumerate_homs(x, a)?, None)),
        Method::Special => Ok((enumerate_special(x, a)?, None)),
        Method::Pieces => {
            let mut ctx = crate::pieces::PieceContext::new(a)?;
            let homs = ctx.enumerate_all(x)?;
            Ok((homs, Some(ctx.stats.max_candidates)))
        }
        Method::Auto { threshold } => {
            if x.size() <= threshold {
                return enumerate_with(x, a, Method::Brute);
            }
            match enumerate_with(x, a, Method::Pieces) {
                Err(Error::NotApplicable(_)) => enumerate_with(x, a, Method::Brute),
                other => other,
            }
        }
    }
}

/// Reflects `X` into the variety of the target and runs the group or the
/// semilattice enumerator.
pub fn enumerate_special(x: &FiniteAlgebra, a: &FiniteAlgebra) -> Result<HomSet> {
    x.signature().check_same(a.signature())?;
    let grp = IdentitySet::group();
    if grp.identities[0].lhs.compile(a.signature()).is_ok() && grp.satisfied_by(a)? {
        let (y, q) = reflect(x, &grp)?;
        return compose_all(&enumerate_group_homs(&y, a)?, &q, x.size());
    }
    if let Some(sym) = single_binary(a) {
        let sl = IdentitySet::semilattice_for(&sym);
        if a.size() == 2 && sl.satisfied_by(a)? {
            let (y, q) = reflect(x, &sl)?;
            return compose_all(&enumerate_semilattice_homs_2(&y, a)?, &q, x.size());
        }
    }
    Err(Error::NotApplicable("no specialized enumerator for this target".into()))
}

fn compose_all(homs: &HomSet, q: &FiniteMap, source: usize) -> Result<HomSet> {
    let maps = homs.maps().iter().map(|h| h.compose(q)).collect();
    Ok(HomSet::new(source, homs.target, maps, homs.exact))
}

/// Families of input algebras indexed by `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// `n`-element chain under the target's binary symbol.
    Chain,
    /// Antichain semilattice on `{0..n}`.
    Antichain,
    /// Two-generated-by-pair free algebra on `n` generators.
    AbFree { a: Elem, b: Elem },
    /// `A^n`.
    Power,
}

impl Family {
    pub fn member(&self, target: &FiniteAlgebra, n: usize) -> Result<FiniteAlgebra> {
        let rename = |alg: FiniteAlgebra| -> Result<FiniteAlgebra> {
            let sym = single_binary(target)
                .ok_or_else(|| Error::SignatureMismatch("family needs a single binary symbol".into()))?;
            FiniteAlgebra::from_ops(alg.name(), alg.size(), [(sym, 2, alg.table(0).to_vec())])
        };
        match self {
            Family::Chain => rename(crate::examples::chain(n)),
            Family::Antichain => rename(crate::examples::antichain(n)),
            Family::AbFree { a, b } => Ok(crate::free::ab_free(target, *a, *b, n)?.algebra),
            Family::Power => power(target, n),
        }
    }
}

/// One CSV row of a counting profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileRow {
    pub n: usize,
    pub size: usize,
    pub homs: u128,
    pub surjective_homs: u128,
    pub max_candidates: Option<usize>,
}

/// Exact counts for `family(1..=n_max)` into `a`.
pub fn counting_profile(
    family: &Family,
    a: &FiniteAlgebra,
    n_max: usize,
    method: Method,
) -> Result<Vec<ProfileRow>> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let x = family.member(a, n)?;
        let row = if method == Method::Brute {
            let (homs, surjective_homs) = count_homs(&x, a)?;
            ProfileRow { n, size: x.size(), homs, surjective_homs, max_candidates: None }
        } else {
            let (set, cands) = enumerate_with(&x, a, method)?;
            ProfileRow {
                n,
                size: x.size(),
                homs: set.len() as u128,
                surjective_homs: set.surjective().len() as u128,
                max_candidates: cands,
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// CSV with header `n,size,homs,surjective_homs`; a `max_candidates` column
/// is appended when any row carries one.
pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let extra = rows.iter().any(|r| r.max_candidates.is_some());
    let mut out = String::from("n,size,homs,surjective_homs");
    if extra {
        out.push_str(",max_candidates");
    }
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{},{}", r.n, r.size, r.homs, r.surjective_homs).unwrap();
        if extra {
            write!(out, ",{}", r.max_candidates.map_or(String::new(), |c| c.to_string())).unwrap();
        }
        out.push('\n');
    }
    out
}

//! Strong abelianness via snags, the direct definition check, and the
//! classification verdicts built on them.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::algebra::{expand_with_constants, is_congruence, quotient, FiniteAlgebra, FiniteMap, Limits};
use crate::closure::{clone_run, generate_congruence, grid, run_closure};
use crate::error::{Error, Result};
use crate::lattice::all_congruences;
use crate::partition::Partition;
use crate::term::TermArena;
use crate::Elem;

/// A binary polynomial `t` with `t(a,b) = t(b,a) = a` and `t(b,b) = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnagWitness {
    pub a: Elem,
    pub b: Elem,
    /// Value table of `t` on `A^2`, first argument most significant.
    pub table: FiniteMap,
    /// The polynomial as a term over the constants expansion.
    pub term: Option<String>,
}

impl SnagWitness {
    pub fn eval(&self, x: Elem, y: Elem) -> Elem {
        let n = (self.table.domain() as f64).sqrt().round() as usize;
        self.table.apply(x * n + y)
    }
}

fn check_pair(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<()> {
    for x in [a, b] {
        if x >= alg.size() {
            return Err(Error::OutOfRange { value: x, size: alg.size() });
        }
    }
    if a == b {
        return Err(Error::Precondition("snag test needs distinct elements".into()));
    }
    Ok(())
}

/// Decides whether `(a, b)` admits a snag by generating the subuniverse of
/// `(A*)^3` spanned by `(a,b,b)` and `(b,a,b)` and looking for `(a,a,b)`.
pub fn has_snag(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<Option<SnagWitness>> {
    snag_impl(alg, a, b, true, false)
}

/// Like [`has_snag`], also rendering the witness as a term.
pub fn has_snag_traced(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<Option<SnagWitness>> {
    snag_impl(alg, a, b, true, true)
}

/// Boolean form of [`has_snag`] without witness extraction.
pub fn snag_exists(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<bool> {
    Ok(snag_impl(alg, a, b, false, false)?.is_some())
}

fn snag_impl(alg: &FiniteAlgebra, a: Elem, b: Elem, witness: bool, term: bool) -> Result<Option<SnagWitness>> {
    check_pair(alg, a, b)?;
    let star = expand_with_constants(alg);
    snag_in_star(&star, alg.size(), a, b, witness, term)
}

fn snag_in_star(
    star: &FiniteAlgebra,
    n: usize,
    a: Elem,
    b: Elem,
    witness: bool,
    term: bool,
) -> Result<Option<SnagWitness>> {
    let target = [a as u32, a as u32, b as u32];
    let seeds = vec![vec![a, b, b], vec![b, a, b]];
    let run = run_closure(star, 3, &seeds, witness, usize::MAX, &mut |t| t == target)?;
    let Some(idx) = run.stopped else {
        return Ok(None);
    };
    if !witness {
        return Ok(Some(SnagWitness { a, b, table: FiniteMap::constant(0, n, a), term: None }));
    }
    let mut arena = TermArena::new();
    let node = run.node_of(idx, &mut arena);
    let all: Vec<Elem> = (0..n).collect();
    let values = arena.eval_points(node, star, &grid(&all, 2));
    let table = FiniteMap::new_unchecked(n, values);
    let term = term.then(|| arena.to_term(node, star.signature()).to_string());
    Ok(Some(SnagWitness { a, b, table, term }))
}

fn require_congruence(alg: &FiniteAlgebra, theta: &Partition) -> Result<()> {
    if !is_congruence(alg, theta) {
        return Err(Error::NotCongruence(theta.to_string()));
    }
    Ok(())
}

/// Snag decisions for one algebra, memoized per ordered pair.
pub(crate) struct SnagOracle {
    star: FiniteAlgebra,
    n: usize,
    memo: HashMap<(Elem, Elem), bool>,
}

impl SnagOracle {
    pub(crate) fn new(alg: &FiniteAlgebra) -> Self {
        SnagOracle { star: expand_with_constants(alg), n: alg.size(), memo: HashMap::new() }
    }

    pub(crate) fn snag(&mut self, a: Elem, b: Elem) -> Result<bool> {
        if let Some(&v) = self.memo.get(&(a, b)) {
            return Ok(v);
        }
        let v = snag_in_star(&self.star, self.n, a, b, false, false)?.is_some();
        self.memo.insert((a, b), v);
        Ok(v)
    }

    /// First related ordered pair with a snag, if any.
    pub(crate) fn violation(&mut self, theta: &Partition) -> Result<Option<(Elem, Elem)>> {
        for (x, y) in theta.nontrivial_pairs() {
            for (a, b) in [(x, y), (y, x)] {
                if self.snag(a, b)? {
                    return Ok(Some((a, b)));
                }
            }
        }
        Ok(None)
    }
}

/// Exact strong-abelianness. A snag inside `theta` refutes it. Without
/// snags every prime quotient below `theta` has type 1, which settles a
/// minimal congruence; above that the four-coordinate closure decides.
pub fn is_strongly_abelian(alg: &FiniteAlgebra, theta: &Partition) -> Result<bool> {
    require_congruence(alg, theta)?;
    if theta.is_discrete() {
        return Ok(true);
    }
    let mut oracle = SnagOracle::new(alg);
    if oracle.violation(theta)?.is_some() {
        return Ok(false);
    }
    if descend_to_atom(alg, theta) == *theta {
        return Ok(true);
    }
    Ok(!term_condition_violated(&oracle.star, theta)?)
}

/// Searches the subuniverse of `(A*)^4` generated by `(x,y,x,y)` and
/// `(x,y,z,z)` over related `x, y, z` for some `(u,u,v,w)` with `v != w`:
/// its term is a polynomial violating the definition.
fn term_condition_violated(star: &FiniteAlgebra, theta: &Partition) -> Result<bool> {
    let mut seeds = Vec::new();
    for block in theta.blocks() {
        for &x in &block {
            for &y in &block {
                if x != y {
                    seeds.push(vec![x, y, x, y]);
                }
                for &z in &block {
                    if (x, y) != (z, z) {
                        seeds.push(vec![x, y, z, z]);
                    }
                }
            }
        }
    }
    let run = run_closure(star, 4, &seeds, false, usize::MAX, &mut |t| t[0] == t[1] && t[2] != t[3])?;
    Ok(run.stopped.is_some())
}

/// A minimal nonzero congruence below `theta`, reached by repeatedly
/// passing to a strictly smaller principal congruence.
fn descend_to_atom(alg: &FiniteAlgebra, theta: &Partition) -> Partition {
    let mut mu = theta.clone();
    'outer: loop {
        for (x, y) in mu.nontrivial_pairs() {
            let c = generate_congruence(alg, &[(x, y)]);
            if c != mu {
                mu = c;
                continue 'outer;
            }
        }
        return mu;
    }
}

/// The first snag inside `theta` (pairs in lexicographic order, both
/// orientations). `None` means `theta` is strongly solvable, which implies
/// strong abelianness only for minimal congruences.
pub fn strongly_abelian_violation(alg: &FiniteAlgebra, theta: &Partition) -> Result<Option<SnagWitness>> {
    require_congruence(alg, theta)?;
    let mut oracle = SnagOracle::new(alg);
    match oracle.violation(theta)? {
        Some((a, b)) => has_snag_traced(alg, a, b),
        None => Ok(None),
    }
}

/// Literal check of the defining implication over the term operations of
/// `alg` of arity at most `max_arity`. `false` means a violating term
/// operation exists; `true` only says none was found up to that arity.
pub fn direct_strong_abelian_check(alg: &FiniteAlgebra, theta: &Partition, max_arity: usize) -> Result<bool> {
    require_congruence(alg, theta)?;
    Ok(direct_check_many(alg, std::slice::from_ref(theta), max_arity)?[0])
}

/// [`direct_strong_abelian_check`] for several congruences sharing one
/// clone computation per arity.
pub fn direct_check_many(alg: &FiniteAlgebra, thetas: &[Partition], max_arity: usize) -> Result<Vec<bool>> {
    let n = alg.size();
    let mut ok: Vec<bool> = vec![true; thetas.len()];
    let pending = |ok: &[bool]| thetas.iter().zip(ok).any(|(t, &o)| o && !t.is_discrete());
    let all: Vec<Elem> = (0..n).collect();
    for k in 2..=max_arity {
        if !pending(&ok) {
            break;
        }
        let checkers: Vec<ViolationCheck> = thetas.iter().map(|t| ViolationCheck::new(t, k)).collect();
        let limits = Limits::default();
        clone_run(alg, k, &all, false, &limits, &mut |t| {
            for (i, c) in checkers.iter().enumerate() {
                if ok[i] && c.violated(t, n) {
                    ok[i] = false;
                }
            }
            !pending(&ok)
        })?;
    }
    Ok(ok)
}

struct ViolationCheck {
    k: usize,
    trivial: bool,
    pairs: Vec<(Elem, Elem)>,
    classes: Vec<Vec<Elem>>,
    labels: Vec<usize>,
}

impl ViolationCheck {
    fn new(theta: &Partition, k: usize) -> Self {
        let blocks = theta.blocks();
        let mut pairs = Vec::new();
        for b in &blocks {
            for &x in b {
                for &y in b {
                    pairs.push((x, y));
                }
            }
        }
        ViolationCheck {
            k,
            trivial: theta.is_discrete(),
            pairs,
            classes: blocks,
            labels: theta.labels().to_vec(),
        }
    }

    /// Does the table `t` on `A^k` violate the implication
    /// `t(x1,x') = t(y1,y')  ⇒  t(x1,z') = t(y1,z')` for coordinatewise
    /// related `x ~ y` and `y' ~ z'`?
    fn violated(&self, t: &[u32], n: usize) -> bool {
        if self.trivial {
            return false;
        }
        let k = self.k;
        let r = k - 1;
        let idx = |first: Elem, rest: &[Elem]| rest.iter().fold(first, |acc, &v| acc * n + v);
        let mut sel = vec![0usize; r];
        let mut xs = vec![0; r];
        let mut ys = vec![0; r];
        let mut zs = vec![0; r];
        for &(x1, y1) in &self.pairs {
            if x1 == y1 {
                continue;
            }
            sel.iter_mut().for_each(|s| *s = 0);
            loop {
                for i in 0..r {
                    (xs[i], ys[i]) = self.pairs[sel[i]];
                }
                if t[idx(x1, &xs)] == t[idx(y1, &ys)] {
                    // z' ranges over the classes of y'
                    let cls: Vec<&Vec<Elem>> = ys.iter().map(|&y| &self.classes[self.labels[y]]).collect();
                    let mut zp = vec![0usize; r];
                    loop {
                        for i in 0..r {
                            zs[i] = cls[i][zp[i]];
                        }
                        if t[idx(x1, &zs)] != t[idx(y1, &zs)] {
                            return true;
                        }
                        let mut p = r;
                        let mut adv = false;
                        while p > 0 {
                            p -= 1;
                            zp[p] += 1;
                            if zp[p] < cls[p].len() {
                                adv = true;
                                break;
                            }
                            zp[p] = 0;
                        }
                        if !adv {
                            break;
                        }
                    }
                }
                if !crate::algebra::odometer(&mut sel, self.pairs.len()) {
                    break;
                }
            }
        }
        false
    }
}

/// The first principal congruence `Cg(a, b)` (pairs in lexicographic order)
/// that is strongly abelian.
pub fn exists_nontrivial_strongly_abelian(alg: &FiniteAlgebra) -> Result<Option<Partition>> {
    let mut oracle = SnagOracle::new(alg);
    first_abelian_principal(alg, &mut oracle)
}

fn first_abelian_principal(alg: &FiniteAlgebra, oracle: &mut SnagOracle) -> Result<Option<Partition>> {
    let n = alg.size();
    let mut tested: HashSet<Partition> = HashSet::new();
    for a in 0..n {
        for b in a + 1..n {
            let theta = generate_congruence(alg, &[(a, b)]);
            if !tested.insert(theta.clone()) {
                continue;
            }
            if oracle.violation(&theta)?.is_none() {
                return Ok(Some(descend_to_atom(alg, &theta)));
            }
        }
    }
    Ok(None)
}

/// A subalgebra generated by two elements carrying a nontrivial strongly
/// abelian congruence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubalgebraWitness {
    pub pair: (Elem, Elem),
    /// Universe of `Sg{c, d}`, sorted.
    pub universe: Vec<Elem>,
    /// The congruence on the subalgebra, indexed by position in `universe`.
    pub congruence: Partition,
}

impl SubalgebraWitness {
    /// The congruence with blocks written in the original element names.
    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        self.congruence
            .blocks()
            .into_iter()
            .map(|b| b.into_iter().map(|i| self.universe[i]).collect())
            .collect()
    }
}

pub fn subalgebra_has_strongly_abelian(alg: &FiniteAlgebra) -> Result<Option<SubalgebraWitness>> {
    let n = alg.size();
    let mut tested: HashSet<(Vec<Elem>, Partition)> = HashSet::new();
    let mut oracles: HashMap<Vec<Elem>, (FiniteAlgebra, SnagOracle)> = HashMap::new();
    for c in 0..n {
        for d in c + 1..n {
            let universe = crate::closure::generate_subuniverse(alg, &[c, d]);
            let entry = match oracles.entry(universe.clone()) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(v) => {
                    let (sub, _) = alg.subalgebra(&universe)?;
                    let oracle = SnagOracle::new(&sub);
                    v.insert((sub, oracle))
                }
            };
            let (sub, oracle) = entry;
            let pc = universe.binary_search(&c).unwrap();
            let pd = universe.binary_search(&d).unwrap();
            let theta = generate_congruence(sub, &[(pc, pd)]);
            if !tested.insert((universe.clone(), theta.clone())) {
                continue;
            }
            if oracle.violation(&theta)?.is_none() {
                let congruence = descend_to_atom(sub, &theta);
                return Ok(Some(SubalgebraWitness { pair: (c, d), universe, congruence }));
            }
        }
    }
    Ok(None)
}

/// Per-congruence diagnostics for the quotient section of a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientNote {
    pub congruence: Partition,
    pub strongly_abelian: bool,
    pub snag: Option<SnagWitness>,
    /// `None` for the full congruence (the quotient is trivial).
    pub quotient_in_ksurj: Option<bool>,
}

/// Classification verdicts and witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub algebra: String,
    pub size: usize,
    pub has_nontrivial_strongly_abelian: bool,
    pub some_subalgebra_has: bool,
    pub in_kpoly: bool,
    pub in_ksurj: bool,
    pub bound_exponent: u32,
    pub abelian_congruence: Option<Partition>,
    pub subalgebra: Option<SubalgebraWitness>,
    pub quotients: Vec<QuotientNote>,
}

pub fn bound_exponent(n: usize) -> u32 {
    usize::BITS - 1 - n.leading_zeros()
}

pub fn classify(alg: &FiniteAlgebra) -> Result<ClassificationReport> {
    let mut oracle = SnagOracle::new(alg);
    let abelian = first_abelian_principal(alg, &mut oracle)?;
    let sub = subalgebra_has_strongly_abelian(alg)?;
    Ok(ClassificationReport {
        algebra: alg.name().to_string(),
        size: alg.size(),
        has_nontrivial_strongly_abelian: abelian.is_some(),
        some_subalgebra_has: sub.is_some(),
        in_kpoly: sub.is_none(),
        in_ksurj: abelian.is_none(),
        bound_exponent: bound_exponent(alg.size()),
        abelian_congruence: abelian,
        subalgebra: sub,
        quotients: Vec::new(),
    })
}

/// [`classify`] plus the quotient section: every nonzero congruence with its
/// strong-abelianness, a snag when it fails, and whether the quotient is free
/// of nontrivial strongly abelian congruences.
pub fn analyze(alg: &FiniteAlgebra) -> Result<ClassificationReport> {
    let mut report = classify(alg)?;
    let lat = all_congruences(alg)?;
    for theta in lat.congruences() {
        if theta.is_discrete() {
            continue;
        }
        let snag = strongly_abelian_violation(alg, theta)?;
        let quotient_in_ksurj = if theta.is_full() {
            None
        } else {
            let (q, _) = quotient(alg, theta)?;
            Some(exists_nontrivial_strongly_abelian(&q)?.is_none())
        };
        report.quotients.push(QuotientNote {
            congruence: theta.clone(),
            strongly_abelian: snag.is_none() && is_strongly_abelian(alg, theta)?,
            snag,
            quotient_in_ksurj,
        });
    }
    Ok(report)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn snag_desc(s: &SnagWitness) -> String {
    let mut out = format!(
        "t({a},{b})={} t({b},{a})={} t({b},{b})={}",
        s.eval(s.a, s.b),
        s.eval(s.b, s.a),
        s.eval(s.b, s.b),
        a = s.a,
        b = s.b
    );
    if let Some(t) = &s.term {
        write!(out, " t(x0,x1)={t}").unwrap();
    }
    out
}

impl ClassificationReport {
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        writeln!(o, "algebra {} (size {})", self.algebra, self.size).unwrap();
        writeln!(o, "nontrivial strongly abelian congruence: {}", yes(self.has_nontrivial_strongly_abelian)).unwrap();
        if let Some(c) = &self.abelian_congruence {
            writeln!(o, "  witness congruence: {c}").unwrap();
        }
        writeln!(o, "subalgebra with one: {}", yes(self.some_subalgebra_has)).unwrap();
        if let Some(s) = &self.subalgebra {
            let blocks: Vec<String> = s
                .blocks()
                .iter()
                .map(|b| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .collect();
            writeln!(
                o,
                "  witness: Sg{{{},{}}} = {:?}, congruence {}",
                s.pair.0,
                s.pair.1,
                s.universe,
                blocks.join("|")
            )
            .unwrap();
        }
        writeln!(o, "in Ksurj (surjective counts polynomial): {}", yes(self.in_ksurj)).unwrap();
        writeln!(o, "in Kpoly (all counts polynomial): {}", yes(self.in_kpoly)).unwrap();
        writeln!(o, "bound exponent k = floor(log2 {}) = {}", self.size, self.bound_exponent).unwrap();
        if !self.quotients.is_empty() {
            writeln!(o, "quotients:").unwrap();
            for q in &self.quotients {
                write!(o, "  {}: strongly abelian {}", q.congruence, yes(q.strongly_abelian)).unwrap();
                if let Some(s) = &q.snag {
                    write!(o, ", snag {}", snag_desc(s)).unwrap();
                }
                if let Some(b) = q.quotient_in_ksurj {
                    write!(o, ", quotient in Ksurj {}", yes(b)).unwrap();
                    if !b {
                        write!(o, " (warning: quotient has a nontrivial strongly abelian congruence)").unwrap();
                    }
                }
                writeln!(o).unwrap();
            }
        }
        o
    }

    /// Stable `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut o = String::new();
        let none = || "none".to_string();
        writeln!(o, "algebra={}", self.algebra).unwrap();
        writeln!(o, "size={}", self.size).unwrap();
        writeln!(o, "has_nontrivial_strongly_abelian={}", self.has_nontrivial_strongly_abelian).unwrap();
        writeln!(
            o,
            "strongly_abelian_congruence={}",
            self.abelian_congruence.as_ref().map_or_else(none, |c| c.to_string())
        )
        .unwrap();
        writeln!(o, "some_subalgebra_has={}", self.some_subalgebra_has).unwrap();
        match &self.subalgebra {
            Some(s) => {
                writeln!(o, "subalgebra_pair={},{}", s.pair.0, s.pair.1).unwrap();
                let u: Vec<String> = s.universe.iter().map(|x| x.to_string()).collect();
                writeln!(o, "subalgebra_universe={}", u.join(",")).unwrap();
                writeln!(o, "subalgebra_congruence={}", s.congruence).unwrap();
            }
            None => {
                writeln!(o, "subalgebra_pair=none").unwrap();
                writeln!(o, "subalgebra_universe=none").unwrap();
                writeln!(o, "subalgebra_congruence=none").unwrap();
            }
        }
        writeln!(o, "in_kpoly={}", self.in_kpoly).unwrap();
        writeln!(o, "in_ksurj={}", self.in_ksurj).unwrap();
        writeln!(o, "bound_exponent={}", self.bound_exponent).unwrap();
        writeln!(o, "quotient_count={}", self.quotients.len()).unwrap();
        for (i, q) in self.quotients.iter().enumerate() {
            writeln!(o, "quotient.{i}.congruence={}", q.congruence).unwrap();
            writeln!(o, "quotient.{i}.strongly_abelian={}", q.strongly_abelian).unwrap();
            match &q.snag {
                Some(s) => {
                    writeln!(o, "quotient.{i}.snag_pair={},{}", s.a, s.b).unwrap();
                    writeln!(o, "quotient.{i}.snag_table={}", s.table).unwrap();
                }
                None => writeln!(o, "quotient.{i}.snag_pair=none").unwrap(),
            }
            writeln!(
                o,
                "quotient.{i}.quotient_in_ksurj={}",
                q.quotient_in_ksurj.map_or_else(|| "trivial".to_string(), |b| b.to_string())
            )
            .unwrap();
        }
        o
    }
}

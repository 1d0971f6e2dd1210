//! A backtracking CSP solver over relational structures and the reduction
//! from positive 1-in-3-SAT.

use crate::abelian::is_strongly_abelian;
use crate::algebra::{FiniteAlgebra, FiniteMap, RelationalStructure};
use crate::closure::{generate_subuniverse, principal_congruence};
use crate::error::{Error, Result};
use crate::free::{ab_free, ab_free_bound, FreeAlgebraResult};
use crate::homenum::Search;
use crate::Elem;

/// A positive 1-in-3-SAT instance with 0-based variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneInThreeInstance {
    pub vars: usize,
    pub clauses: Vec<[usize; 3]>,
}

impl OneInThreeInstance {
    pub fn new(vars: usize, clauses: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(&bad) = clauses.iter().flatten().find(|&&v| v >= vars) {
            return Err(Error::OutOfRange { value: bad, size: vars });
        }
        Ok(OneInThreeInstance { vars, clauses })
    }

    /// Parses `p 1in3 <vars> <clauses>` followed by one triple of 1-based
    /// variables per line (an optional trailing `0` is ignored); lines
    /// starting with `c` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let parse_err = |msg: String| Error::Parse { line, msg };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.is_empty() || toks[0] == "c" || toks[0].starts_with('#') {
                continue;
            }
            if toks[0] == "p" {
                if header.is_some() {
                    return Err(parse_err("duplicate header".into()));
                }
                if toks.len() != 4 || toks[1] != "1in3" {
                    return Err(parse_err("expected `p 1in3 <vars> <clauses>`".into()));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(format!("bad number `{s}`")));
                header = Some((num(toks[2])?, num(toks[3])?));
                continue;
            }
            let (vars, _) = header.ok_or_else(|| parse_err("clause before header".into()))?;
            let mut lits = Vec::new();
            for t in &toks {
                let v: usize = t.parse().map_err(|_| parse_err(format!("bad variable `{t}`")))?;
                lits.push(v);
            }
            if lits.len() == 4 && lits[3] == 0 {
                lits.pop();
            }
            if lits.len() != 3 {
                return Err(parse_err(format!("expected 3 variables, found {}", lits.len())));
            }
            let mut clause = [0; 3];
            for (slot, &v) in clause.iter_mut().zip(&lits) {
                if v == 0 || v > vars {
                    return Err(parse_err(format!("variable {v} outside 1..={vars}")));
                }
                *slot = v - 1;
            }
            clauses.push(clause);
        }
        let (vars, count) = header.ok_or_else(|| Error::Parse { line: text.lines().count().max(1), msg: "missing header".into() })?;
        if clauses.len() != count {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                msg: format!("header announces {count} clauses, found {}", clauses.len()),
            });
        }
        OneInThreeInstance::new(vars, clauses)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("p 1in3 {} {}\n", self.vars, self.clauses.len());
        for c in &self.clauses {
            out.push_str(&format!("{} {} {}\n", c[0] + 1, c[1] + 1, c[2] + 1));
        }
        out
    }

    /// Drops variables occurring in no clause; returns the renumbered
    /// instance and, per new variable, its old index.
    pub fn normalize(&self) -> (OneInThreeInstance, Vec<usize>) {
        let mut used: Vec<usize> = self.clauses.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let mut new_index = vec![usize::MAX; self.vars];
        for (i, &v) in used.iter().enumerate() {
            new_index[v] = i;
        }
        let clauses = self.clauses.iter().map(|c| c.map(|v| new_index[v])).collect();
        (OneInThreeInstance { vars: used.len(), clauses }, used)
    }

    /// An assignment making exactly one variable of every clause true.
    pub fn brute_sat(&self) -> Option<Vec<bool>> {
        assert!(self.vars < 64, "brute force limited to fewer than 64 variables");
        (0..1u64 << self.vars).find_map(|mask| {
            let val = |v: usize| mask >> v & 1 == 1;
            self.clauses
                .iter()
                .all(|c| c.iter().filter(|&&v| val(v)).count() == 1)
                .then(|| (0..self.vars).map(val).collect())
        })
    }
}

/// A homomorphism `X -> B` preserving operations and relations, if any.
pub fn solve_csp(x: &RelationalStructure, b: &RelationalStructure) -> Result<Option<FiniteMap>> {
    let mut found = None;
    Search::new(&x.algebra, &b.algebra, x.relations(), b.relations())?.run(&mut |h| {
        found = Some(FiniteMap::new_unchecked(b.algebra.size(), h.to_vec()));
        false
    });
    Ok(found)
}

/// Output of [`build_reduction`].
#[derive(Clone, Debug)]
pub struct Reduction {
    pub instance: OneInThreeInstance,
    pub free: FreeAlgebraResult,
    pub source: RelationalStructure,
    pub template: RelationalStructure,
    /// Set when `(a, b)` does not lie in a strongly abelian congruence of
    /// the subalgebra it generates.
    pub warning: Option<String>,
}

impl Reduction {
    /// Reads a satisfying assignment off a homomorphism: variable `i` is true
    /// iff its generator maps to `b`.
    pub fn assignment(&self, h: &FiniteMap, b: Elem) -> Vec<bool> {
        self.free.generators.iter().map(|&g| h.apply(g) == b).collect()
    }
}

/// True iff `(a, b)` lies in a strongly abelian congruence of `Sg{a, b}`.
pub fn pair_in_strongly_abelian(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<bool> {
    let universe = generate_subuniverse(alg, &[a, b]);
    let (sub, _) = alg.subalgebra(&universe)?;
    let (ia, ib) = (universe.binary_search(&a).unwrap(), universe.binary_search(&b).unwrap());
    is_strongly_abelian(&sub, &principal_congruence(&sub, ia, ib))
}

/// The template `B = A` with `R = {(a,a,b),(a,b,a),(b,a,a)}` and the source
/// structure on the ab-free algebra whose free generators are the instance's
/// variables, with the clauses as `R`.
pub fn build_reduction(inst: &OneInThreeInstance, alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<Reduction> {
    let (inst, _) = inst.normalize();
    let warning = (!pair_in_strongly_abelian(alg, a, b)?)
        .then(|| format!("pair ({a},{b}) lies in no strongly abelian congruence of its generated subalgebra"));
    let free = ab_free(alg, a, b, inst.vars)?;
    let mut source = RelationalStructure::new(free.algebra.clone());
    let mut triples: Vec<Vec<Elem>> = inst.clauses.iter().map(|c| c.iter().map(|&v| free.generators[v]).collect()).collect();
    triples.sort();
    triples.dedup();
    source.add_relation("R", 3, triples)?;
    let mut template = RelationalStructure::new(alg.clone());
    template.add_relation("R", 3, vec![vec![a, a, b], vec![a, b, a], vec![b, a, a]])?;
    debug_assert!(warning.is_some() || free.algebra.size() as u128 <= ab_free_bound(inst.vars.max(1), alg.size()));
    Ok(Reduction { instance: inst, free, source, template, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn parse_and_print() {
        let inst = OneInThreeInstance::parse("c demo\np 1in3 4 2\n1 2 3 0\n2 3 4\n").unwrap();
        assert_eq!(inst.clauses, vec![[0, 1, 2], [1, 2, 3]]);
        assert_eq!(OneInThreeInstance::parse(&inst.to_text()).unwrap(), inst);
        let err = OneInThreeInstance::parse("p 1in3 2 1\n1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(OneInThreeInstance::parse("p 1in3 3 2\n1 2 3\n").is_err());
    }

    #[test]
    fn normalization_drops_unused_variables() {
        let inst = OneInThreeInstance::new(5, vec![[4, 1, 4]]).unwrap();
        let (norm, old) = inst.normalize();
        assert_eq!(norm.vars, 2);
        assert_eq!(norm.clauses, vec![[1, 0, 1]]);
        assert_eq!(old, vec![1, 4]);
    }

    #[test]
    fn brute_sat_examples() {
        assert!(OneInThreeInstance::new(3, vec![[0, 1, 2]]).unwrap().brute_sat().is_some());
        assert!(OneInThreeInstance::new(1, vec![[0, 0, 0]]).unwrap().brute_sat().is_none());
        assert!(OneInThreeInstance::new(2, vec![[0, 0, 1], [1, 1, 0]]).unwrap().brute_sat().is_none());
    }

    #[test]
    fn empty_relations_admit_constant_maps() {
        let x = RelationalStructure::new(examples::bare_set(3));
        let b = RelationalStructure::new(examples::bare_set(2));
        assert!(solve_csp(&x, &b).unwrap().is_some());
    }

    #[test]
    fn pure_relational_template() {
        let mut b = RelationalStructure::new(examples::bare_set(2));
        b.add_relation("R", 3, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]).unwrap();
        for (vars, clauses) in [(3, vec![[0, 1, 2]]), (2, vec![[0, 0, 1], [1, 1, 0]])] {
            let inst = OneInThreeInstance::new(vars, clauses.clone()).unwrap();
            let mut x = RelationalStructure::new(examples::bare_set(vars));
            x.add_relation("R", 3, clauses.iter().map(|c| c.to_vec()).collect()).unwrap();
            assert_eq!(solve_csp(&x, &b).unwrap().is_some(), inst.brute_sat().is_some());
        }
    }

    #[test]
    fn reduction_single_clause() {
        let alg = examples::abelian_block();
        let inst = OneInThreeInstance::new(3, vec![[0, 1, 2]]).unwrap();
        let red = build_reduction(&inst, &alg, 0, 1).unwrap();
        assert!(red.warning.is_none());
        let h = solve_csp(&red.source, &red.template).unwrap().unwrap();
        let assignment = red.assignment(&h, 1);
        assert_eq!(assignment.iter().filter(|&&t| t).count(), 1);
        assert!(build_reduction(&inst, &examples::semilattice2(), 0, 1).unwrap().warning.is_some());
    }
}

//! Congruence lattices: all congruences, atoms, covers and cover chains.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use crate::algebra::{is_congruence, FiniteAlgebra};
use crate::closure::{generate_congruence, principal_congruence};
use crate::error::{Error, Result};
use crate::format::serialize_algebra;
use crate::partition::Partition;
use crate::Elem;

/// Default bound on the number of congruences computed.
pub const MAX_LATTICE: usize = 200_000;

/// All congruences of an algebra, sorted by canonical label array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceLattice {
    size: usize,
    congruences: Vec<Partition>,
    principal: Vec<usize>,
    covers: Vec<(usize, usize)>,
}

impl CongruenceLattice {
    pub fn congruences(&self) -> &[Partition] {
        &self.congruences
    }

    pub fn len(&self) -> usize {
        self.congruences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.congruences.is_empty()
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.congruences.binary_search(p).ok()
    }

    pub fn bottom(&self) -> usize {
        self.index_of(&Partition::discrete(self.size)).expect("0 is a congruence")
    }

    pub fn top(&self) -> usize {
        self.index_of(&Partition::full(self.size)).expect("1 is a congruence")
    }

    /// Index of `Cg(a, b)`.
    pub fn principal(&self, a: Elem, b: Elem) -> usize {
        self.principal[a * self.size + b]
    }

    /// Hasse edges `(lower, upper)`.
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }

    pub fn upper_covers(&self, i: usize) -> Vec<usize> {
        self.covers.iter().filter(|c| c.0 == i).map(|c| c.1).collect()
    }

    /// Atoms: upper covers of 0, in label order.
    pub fn atoms(&self) -> Vec<usize> {
        self.upper_covers(self.bottom())
    }

    /// Text rendering: one congruence per line, then `lower -> upper` edges.
    pub fn hasse_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.congruences.iter().enumerate() {
            writeln!(out, "c{i} = {c}").unwrap();
        }
        for &(lo, hi) in &self.covers {
            writeln!(out, "c{lo} -> c{hi}").unwrap();
        }
        out
    }
}

pub fn all_congruences(alg: &FiniteAlgebra) -> Result<CongruenceLattice> {
    all_congruences_with(alg, MAX_LATTICE)
}

pub fn all_congruences_with(alg: &FiniteAlgebra, cap: usize) -> Result<CongruenceLattice> {
    let n = alg.size();
    let mut seen: HashSet<Partition> = HashSet::new();
    let mut list: Vec<Partition> = Vec::new();
    let mut principal_raw = vec![Partition::discrete(n); n * n];
    let mut push = |p: Partition, list: &mut Vec<Partition>| {
        if seen.insert(p.clone()) {
            list.push(p);
        }
    };
    push(Partition::discrete(n), &mut list);
    for a in 0..n {
        for b in a + 1..n {
            let p = principal_congruence(alg, a, b);
            principal_raw[a * n + b] = p.clone();
            principal_raw[b * n + a] = p.clone();
            push(p, &mut list);
        }
    }
    let mut i = 0;
    while i < list.len() {
        for j in 0..i {
            let joined = list[i].join(&list[j]);
            push(joined, &mut list);
            if list.len() > cap {
                return Err(Error::cap("congruence lattice", list.len() as u128, cap));
            }
        }
        i += 1;
    }
    list.sort();
    let principal = principal_raw
        .iter()
        .map(|p| list.binary_search(p).expect("principal congruence listed"))
        .collect();
    let covers = hasse_edges(&list);
    Ok(CongruenceLattice { size: n, congruences: list, principal, covers })
}

fn hasse_edges(list: &[Partition]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (i, lo) in list.iter().enumerate() {
        let above: Vec<usize> = (0..list.len()).filter(|&j| j != i && lo.leq(&list[j])).collect();
        for &j in &above {
            if !above.iter().any(|&k| k != j && list[k].leq(&list[j])) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Minimal nonzero congruences, in label order.
pub fn minimal_congruences(alg: &FiniteAlgebra) -> Result<Vec<Partition>> {
    let n = alg.size();
    let mut atoms: Vec<Partition> = Vec::new();
    let mut principals: Vec<Partition> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = principal_congruence(alg, a, b);
            if !principals.contains(&p) {
                principals.push(p);
            }
        }
    }
    // every atom is principal; a principal congruence is an atom iff no
    // other principal congruence lies strictly below it
    for p in &principals {
        if !principals.iter().any(|q| q != p && q.leq(p)) {
            atoms.push(p.clone());
        }
    }
    atoms.sort();
    Ok(atoms)
}

fn spanning_pairs(p: &Partition) -> Vec<(Elem, Elem)> {
    let reps = p.representatives();
    (0..p.size())
        .filter(|&x| reps[p.label(x)] != x)
        .map(|x| (reps[p.label(x)], x))
        .collect()
}

/// True iff `gamma ⊊ delta` and no congruence lies strictly between.
pub fn is_cover(alg: &FiniteAlgebra, gamma: &Partition, delta: &Partition) -> Result<bool> {
    for (name, p) in [("lower", gamma), ("upper", delta)] {
        if !is_congruence(alg, p) {
            return Err(Error::NotCongruence(format!("{name} partition {p}")));
        }
    }
    if gamma == delta || !gamma.leq(delta) {
        return Ok(false);
    }
    let base = spanning_pairs(gamma);
    for (a, b) in delta.nontrivial_pairs() {
        if gamma.related(a, b) {
            continue;
        }
        let mut pairs = base.clone();
        pairs.push((a, b));
        if generate_congruence(alg, &pairs) != *delta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A maximal chain `0 = α_0 ⊊ .. ⊊ α_n = 1` of covers, choosing at each step
/// the cover with the smallest label array.
pub fn find_cover_chain(alg: &FiniteAlgebra) -> Result<Vec<Partition>> {
    let lat = all_congruences(alg)?;
    Ok(chain_in(&lat))
}

pub(crate) fn chain_in(lat: &CongruenceLattice) -> Vec<Partition> {
    let mut cur = lat.bottom();
    let mut chain = vec![lat.congruences[cur].clone()];
    while cur != lat.top() {
        cur = *lat.upper_covers(cur).iter().min().expect("a non-top element has an upper cover");
        chain.push(lat.congruences[cur].clone());
    }
    chain
}

/// Session cache of congruence lattices keyed by the serialized algebra.
#[derive(Debug, Default)]
pub struct LatticeCache {
    map: RwLock<HashMap<String, Arc<CongruenceLattice>>>,
}

impl LatticeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, alg: &FiniteAlgebra) -> Result<Arc<CongruenceLattice>> {
        let key = serialize_algebra(alg);
        if let Some(l) = self.map.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(l));
        }
        let lat = Arc::new(all_congruences(alg)?);
        let mut w = self.map.write().expect("cache lock");
        Ok(Arc::clone(w.entry(key).or_insert(lat)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::expand_with_constants;
    use crate::examples;
    use crate::partition::all_partitions;

    fn brute(alg: &FiniteAlgebra) -> Vec<Partition> {
        let mut v: Vec<Partition> =
            all_partitions(alg.size()).into_iter().filter(|p| is_congruence(alg, p)).collect();
        v.sort();
        v
    }

    #[test]
    fn lattice_matches_exhaustive_enumeration() {
        for alg in [
            examples::unary_quotient(),
            examples::simple_with_unary_sub(),
            examples::rock_paper_scissors(),
            examples::chain(4),
            examples::cyclic_group(4),
            examples::group_product(2, 2),
            examples::bare_set(4),
            examples::antichain(4),
        ] {
            let lat = all_congruences(&alg).unwrap();
            assert_eq!(lat.congruences(), brute(&alg).as_slice(), "{}", alg.name());
            for a in lat.congruences() {
                for b in lat.congruences() {
                    assert!(lat.index_of(&a.meet(b)).is_some());
                    assert!(lat.index_of(&a.join(b)).is_some());
                }
            }
        }
    }

    #[test]
    fn paper_fixture_lattices() {
        let a = examples::unary_quotient();
        let alpha = Partition::from_labels(&[0, 0, 1]);
        let lat = all_congruences(&a).unwrap();
        assert_eq!(lat.len(), 3);
        assert_eq!(minimal_congruences(&a).unwrap(), vec![alpha.clone()]);
        assert!(is_cover(&a, &Partition::discrete(3), &alpha).unwrap());
        assert!(!is_cover(&a, &Partition::discrete(3), &Partition::full(3)).unwrap());
        assert!(!is_cover(&a, &alpha, &alpha).unwrap());
        assert_eq!(
            find_cover_chain(&a).unwrap(),
            vec![Partition::discrete(3), alpha, Partition::full(3)]
        );
        assert_eq!(all_congruences(&examples::simple_with_unary_sub()).unwrap().len(), 2);
        assert_eq!(find_cover_chain(&examples::bare_set(1)).unwrap(), vec![Partition::full(1)]);
        assert_eq!(find_cover_chain(&examples::semilattice2()).unwrap().len(), 2);
        assert!(is_cover(&a, &Partition::from_labels(&[0, 1, 1]), &Partition::full(3)).is_err());
    }

    #[test]
    fn klein_group_atoms() {
        let g = examples::group_product(2, 2);
        let atoms = minimal_congruences(&g).unwrap();
        let expect: Vec<Partition> = {
            let all = brute(&g);
            let zero = Partition::discrete(4);
            all.iter()
                .filter(|p| **p != zero && !all.iter().any(|q| *q != zero && q != *p && q.leq(p)))
                .cloned()
                .collect()
        };
        assert_eq!(atoms, expect);
        assert_eq!(atoms.len(), 3);
    }

    #[test]
    fn chains_are_maximal() {
        for alg in [examples::chain(4), examples::group_product(2, 2), expand_with_constants(&examples::antichain(3))] {
            let chain = find_cover_chain(&alg).unwrap();
            for w in chain.windows(2) {
                assert!(is_cover(&alg, &w[0], &w[1]).unwrap());
            }
            let lat = all_congruences(&alg).unwrap();
            for &(lo, hi) in lat.covers() {
                assert!(is_cover(&alg, &lat.congruences()[lo], &lat.congruences()[hi]).unwrap());
            }
        }
    }

    #[test]
    fn cache_reuses_lattices() {
        let cache = LatticeCache::new();
        let a = cache.get(&examples::chain(3)).unwrap();
        let b = cache.get(&examples::chain(3)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }
}

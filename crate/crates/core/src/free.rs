//! Free algebras as subpowers, ab-free algebras and matrix powers of sets.

use std::collections::HashMap;

use crate::algebra::{
    decode_index, is_homomorphism, pow_u128, table_index, FiniteAlgebra, FiniteMap, Limits, Signature,
};
use crate::closure::{grid, restricted_clone_with, MapSet};
use crate::error::{Error, Result};
use crate::homenum::enumerate_homs;
use crate::term::{Identity, IdentitySet};
use crate::Elem;

/// A free or ab-free algebra whose elements are operations on `base^arity`.
#[derive(Clone, Debug)]
pub struct FreeAlgebraResult {
    pub algebra: FiniteAlgebra,
    /// Elements denoting the (restricted) projections, in coordinate order.
    pub generators: Vec<Elem>,
    /// Per element, its value array over the points of `base^arity` in
    /// mixed-radix order.
    pub element_meaning: Vec<FiniteMap>,
    pub base: Vec<Elem>,
    pub arity: usize,
}

fn subpower(alg: &FiniteAlgebra, name: String, maps: &MapSet, base: &[Elem], n: usize) -> Result<FreeAlgebraResult> {
    let limits = Limits::default();
    let size = maps.len();
    let index: HashMap<&[Elem], usize> = maps.iter().enumerate().map(|(i, m)| (m.images(), i)).collect();
    let sig: Signature = alg.signature().clone();
    let mut cells: u128 = 0;
    for op in 0..sig.len() {
        cells += pow_u128(size, sig.arity(op));
    }
    if cells * maps.domain().max(1) as u128 > limits.max_sweep || cells > limits.max_table as u128 {
        return Err(Error::cap("free algebra tables", cells, limits.max_table));
    }
    let width = maps.domain();
    let mut tables = Vec::with_capacity(sig.len());
    let mut args = vec![0; alg.max_arity()];
    let mut vals = vec![0; alg.max_arity()];
    let mut pointwise = vec![0; width];
    for op in 0..sig.len() {
        let k = sig.arity(op);
        let total = pow_u128(size, k) as usize;
        let mut table = Vec::with_capacity(total);
        for t in 0..total {
            decode_index(t, size, k, &mut args);
            for (p, slot) in pointwise.iter_mut().enumerate() {
                for j in 0..k {
                    vals[j] = maps.maps()[args[j]].images()[p];
                }
                *slot = alg.apply(op, &vals[..k]);
            }
            table.push(*index.get(pointwise.as_slice()).expect("subpower is closed"));
        }
        tables.push(table);
    }
    let algebra = FiniteAlgebra::new(&name, size, sig, tables)?;
    let points = grid(&(0..base.len()).collect::<Vec<_>>(), n);
    let generators = (0..n)
        .map(|i| {
            let proj: Vec<Elem> = points.iter().map(|p| base[p[i]]).collect();
            index[proj.as_slice()]
        })
        .collect();
    Ok(FreeAlgebraResult { algebra, generators, element_meaning: maps.maps().to_vec(), base: base.to_vec(), arity: n })
}

/// The `n`-generated free algebra in the variety of `alg`: the subalgebra of
/// `alg^(alg^n)` on the n-ary term operations.
pub fn free_algebra(alg: &FiniteAlgebra, n: usize) -> Result<FreeAlgebraResult> {
    let base: Vec<Elem> = (0..alg.size()).collect();
    let maps = restricted_clone_with(alg, n, &base, false, &Limits::default())?;
    subpower(alg, format!("F({},{n})", alg.name()), &maps, &base, n)
}

/// Term operations restricted to `{a,b}^n`: every map from the generators
/// into `{a,b}` extends to a homomorphism into `alg`.
pub fn ab_free(alg: &FiniteAlgebra, a: Elem, b: Elem, n: usize) -> Result<FreeAlgebraResult> {
    for x in [a, b] {
        if x >= alg.size() {
            return Err(Error::OutOfRange { value: x, size: alg.size() });
        }
    }
    if a == b {
        return Err(Error::Precondition("ab-free pair must be distinct".into()));
    }
    let maps = restricted_clone_with(alg, n, &[a, b], false, &Limits::default())?;
    subpower(alg, format!("Fab({},{n})", alg.name()), &maps, &[a, b], n)
}

/// The homomorphism `F -> A` sending generator `i` to `h[i]`, obtained by
/// evaluating each element at the point `h`.
pub fn extend_ab_assignment(f: &FreeAlgebraResult, h: &[Elem]) -> Result<FiniteMap> {
    if h.len() != f.arity {
        return Err(Error::Precondition(format!("assignment has {} values, expected {}", h.len(), f.arity)));
    }
    let mut pos = Vec::with_capacity(h.len());
    for &v in h {
        let p = f.base.iter().position(|&x| x == v).ok_or_else(|| {
            Error::Precondition(format!("value {v} is outside the base set"))
        })?;
        pos.push(p);
    }
    let idx = table_index(&pos, f.base.len());
    let codomain = f.element_meaning.first().map_or(0, |m| m.codomain());
    Ok(FiniteMap::new_unchecked(codomain, f.element_meaning.iter().map(|m| m.apply(idx)).collect()))
}

/// Coordinates a map on `d^n` (mixed radix) depends on.
pub fn essential_coordinates(m: &FiniteMap, d: usize, n: usize) -> Vec<usize> {
    let mut point = vec![0; n];
    let mut out = Vec::new();
    let stride = |i: usize| d.pow((n - 1 - i) as u32);
    for i in 0..n {
        let s = stride(i);
        let depends = (0..m.domain()).any(|idx| {
            decode_index(idx, d, n, &mut point);
            let base = idx - point[i] * s;
            (0..d).any(|v| m.apply(base + v * s) != m.apply(idx))
        });
        if depends {
            out.push(i);
        }
    }
    out
}

/// Bound on the size of an ab-free algebra over a strongly abelian pair.
pub fn ab_free_bound(n: usize, alg_size: usize) -> u128 {
    let k = crate::abelian::bound_exponent(alg_size);
    (n as u128).pow(k) * (alg_size as u128).pow(1 << k)
}

/// `Y^[k]` on `{0..y}^k` (first coordinate most significant) with the
/// cyclic shift `s` and the diagonal `d`.
pub fn matrix_power(y: usize, k: usize) -> Result<FiniteAlgebra> {
    if y == 0 || k == 0 {
        return Err(Error::Precondition("matrix power needs positive sizes".into()));
    }
    let limits = Limits::default();
    let n = pow_u128(y, k);
    let cells = n.saturating_mul(pow_u128(n.min(usize::MAX as u128) as usize, k));
    if n > limits.max_universe as u128 || cells > limits.max_table as u128 {
        return Err(Error::cap("matrix power table", cells, limits.max_table));
    }
    let n = n as usize;
    let mut c = vec![0; k];
    let mut shifted = vec![0; k];
    let s: Vec<Elem> = (0..n)
        .map(|x| {
            decode_index(x, y, k, &mut c);
            for i in 0..k {
                shifted[i] = c[(i + 1) % k];
            }
            table_index(&shifted, y)
        })
        .collect();
    let mut args = vec![0; k];
    let d: Vec<Elem> = (0..pow_u128(n, k) as usize)
        .map(|t| {
            decode_index(t, n, k, &mut args);
            for i in 0..k {
                decode_index(args[i], y, k, &mut c);
                shifted[i] = c[i];
            }
            table_index(&shifted, y)
        })
        .collect();
    let alg = FiniteAlgebra::from_ops(&format!("Y{y}^[{k}]"), n, [("s", 1, s), ("d", k, d)])?;
    debug_assert!(satisfies_matrix_identities(&alg, k)?);
    Ok(alg)
}

/// Checks the matrix-power identities. The `k²`-variable one is decided by
/// grouping assignments by their diagonal.
pub fn satisfies_matrix_identities(b: &FiniteAlgebra, k: usize) -> Result<bool> {
    let all = IdentitySet::matrix_power(k);
    let small = IdentitySet { identities: all.identities[..3].to_vec() };
    if !small.satisfied_by(b)? {
        return Ok(false);
    }
    let d = b.op_index("d")?;
    if b.arity(d) != k {
        return Err(Error::SignatureMismatch(format!("d must have arity {k}")));
    }
    let n = b.size();
    let limits = Limits::default();
    let total = pow_u128(n, k);
    if total * total > limits.max_sweep {
        return Err(Error::cap("matrix identity check", total * total, limits.max_sweep as usize));
    }
    // rows[i][v] = values d(row) can take with entry i of the row fixed to v
    let mut rows = vec![vec![Vec::new(); n]; k];
    let table = b.table(d);
    let mut args = vec![0; k];
    for (t, &val) in table.iter().enumerate() {
        decode_index(t, n, k, &mut args);
        for i in 0..k {
            rows[i][args[i]].push(val);
        }
    }
    for row in rows.iter_mut() {
        for vals in row.iter_mut() {
            vals.sort_unstable();
            vals.dedup();
        }
    }
    let mut diag = vec![0; k];
    let mut pick = vec![0; k];
    let mut r = vec![0; k];
    for t in 0..total as usize {
        decode_index(t, n, k, &mut diag);
        let want = table[t];
        let choices: Vec<&Vec<Elem>> = (0..k).map(|i| &rows[i][diag[i]]).collect();
        pick.iter_mut().for_each(|p| *p = 0);
        loop {
            for i in 0..k {
                r[i] = choices[i][pick[i]];
            }
            if b.apply(d, &r) != want {
                return Ok(false);
            }
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                pick[i] += 1;
                if pick[i] < choices[i].len() {
                    break;
                }
                pick[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
        }
    }
    Ok(true)
}

/// The fourth identity as an [`Identity`], for reporting.
pub fn diagonal_identity(k: usize) -> Identity {
    IdentitySet::matrix_power(k).identities[3].clone()
}

/// If `b` is a model of the matrix-power identities, the size of `Y` (the
/// fixed points of `s`) and the isomorphism `Y^[k] -> b`.
pub fn recognize_matrix_power(b: &FiniteAlgebra) -> Result<Option<(usize, FiniteMap)>> {
    let sig = b.signature();
    let (s, d) = match (sig.index_of("s"), sig.index_of("d")) {
        (Some(s), Some(d)) if sig.len() == 2 && sig.arity(s) == 1 => (s, d),
        _ => return Err(Error::SignatureMismatch("expected the signature s/1, d/k".into())),
    };
    let k = sig.arity(d);
    if k == 0 || !satisfies_matrix_identities(b, k)? {
        return Ok(None);
    }
    let fixed: Vec<Elem> = (0..b.size()).filter(|&x| b.apply(s, &[x]) == x).collect();
    let y = fixed.len();
    if y == 0 || pow_u128(y, k) != b.size() as u128 {
        return Ok(None);
    }
    let model = matrix_power(y, k)?;
    let mut c = vec![0; k];
    let images = (0..model.size())
        .map(|x| {
            decode_index(x, y, k, &mut c);
            let args: Vec<Elem> = c.iter().map(|&i| fixed[i]).collect();
            b.apply(d, &args)
        })
        .collect();
    let h = FiniteMap::new_unchecked(b.size(), images);
    if h.is_injective() && h.is_surjective() && is_homomorphism(&model, b, &h)? {
        Ok(Some((y, h)))
    } else {
        Ok(None)
    }
}

/// `|Hom(Z^[k], Y^[k])| = y^z`.
pub fn matrix_power_hom_count(z: usize, y: usize, _k: usize) -> u128 {
    pow_u128(y, z)
}

/// Brute-force check that `Hom(Z^[k], Y^[k])` is exactly `{h^k : h: Z -> Y}`.
pub fn verify_matrix_power_homs(z: usize, y: usize, k: usize) -> Result<bool> {
    let (zk, yk) = (matrix_power(z, k)?, matrix_power(y, k)?);
    let homs = enumerate_homs(&zk, &yk)?;
    let mut expected = Vec::new();
    let mut h = vec![0; z];
    let mut c = vec![0; k];
    for idx in 0..pow_u128(y, z) as usize {
        decode_index(idx, y, z, &mut h);
        let images = (0..zk.size())
            .map(|x| {
                decode_index(x, z, k, &mut c);
                let img: Vec<Elem> = c.iter().map(|&v| h[v]).collect();
                table_index(&img, y)
            })
            .collect();
        expected.push(FiniteMap::new_unchecked(yk.size(), images));
    }
    expected.sort();
    expected.dedup();
    Ok(homs.maps() == expected.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::expand_with_constants;
    use crate::examples;
    use crate::homenum::reflect;

    #[test]
    fn free_algebra_sizes() {
        assert_eq!(free_algebra(&examples::semilattice2(), 3).unwrap().algebra.size(), 7);
        assert_eq!(free_algebra(&examples::chain(3), 2).unwrap().algebra.size(), 3);
        let z2 = free_algebra(&examples::cyclic_group(2), 2).unwrap();
        assert_eq!(z2.algebra.size(), 4);
        assert!(IdentitySet::group().satisfied_by(&z2.algebra).unwrap());
        let bare = free_algebra(&examples::bare_set(3), 2).unwrap();
        assert_eq!(bare.algebra.size(), 2);
        assert_ne!(bare.generators[0], bare.generators[1]);
    }

    #[test]
    fn ab_free_semilattice() {
        let f = ab_free(&examples::semilattice2(), 0, 1, 2).unwrap();
        assert_eq!(f.algebra.size(), 3);
        let h = extend_ab_assignment(&f, &[0, 1]).unwrap();
        let meet = f.algebra.apply(0, &[f.generators[0], f.generators[1]]);
        assert_eq!(h.apply(f.generators[0]), 0);
        assert_eq!(h.apply(f.generators[1]), 1);
        assert_eq!(h.apply(meet), 0);
        let diag = extend_ab_assignment(&f, &[0, 0]).unwrap();
        assert!(diag.images().iter().all(|&v| v == 0));
    }

    #[test]
    fn ab_free_extensions_are_homomorphisms() {
        let alg = expand_with_constants(&examples::abelian_block());
        for n in 0..=5 {
            let f = ab_free(&alg, 0, 1, n).unwrap();
            assert!(f.algebra.size() as u128 <= ab_free_bound(n.max(1), 3));
            let mut seen = Vec::new();
            let mut h = vec![0; n];
            for idx in 0..1usize << n {
                decode_index(idx, 2, n, &mut h);
                let m = extend_ab_assignment(&f, &h).unwrap();
                assert!(is_homomorphism(&f.algebra, &alg, &m).unwrap());
                seen.push(m);
            }
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), 1 << n);
            for m in &f.element_meaning {
                assert!(essential_coordinates(m, 2, n).len() <= 1);
            }
        }
    }

    #[test]
    fn essential_coordinates_examples() {
        assert!(essential_coordinates(&FiniteMap::constant(8, 2, 1), 2, 3).is_empty());
        let proj = FiniteMap::new(2, (0..8).map(|i| (i >> 1) & 1).collect()).unwrap();
        assert_eq!(essential_coordinates(&proj, 2, 3), vec![1]);
    }

    #[test]
    fn matrix_power_definitions() {
        let m = matrix_power(2, 2).unwrap();
        // s(1,2) = (2,1) and d((1,2),(2,1)) = (1,1) with 1,2 encoded as 0,1
        assert_eq!(m.apply(0, &[1]), 2);
        assert_eq!(m.apply(1, &[1, 2]), 0);
        let id = matrix_power(3, 1).unwrap();
        assert!((0..3).all(|x| id.apply(0, &[x]) == x && id.apply(1, &[x]) == x));
        for (y, k) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            assert!(satisfies_matrix_identities(&matrix_power(y, k).unwrap(), k).unwrap());
        }
    }

    #[test]
    fn fourth_identity_matches_brute_force() {
        let id = diagonal_identity(2);
        let ids = IdentitySet { identities: vec![id] };
        for seed in 0..40usize {
            let size = 3;
            let d: Vec<Elem> = (0..9).map(|i| (i * 7 + seed * 13 + (i * seed) % 5) % size).collect();
            let s: Vec<Elem> = (0..3).collect();
            let b = FiniteAlgebra::from_ops("b", size, [("s", 1, s), ("d", 2, d)]).unwrap();
            let small = IdentitySet { identities: IdentitySet::matrix_power(2).identities[..3].to_vec() };
            let fast = satisfies_matrix_identities(&b, 2).unwrap();
            let slow = small.satisfied_by(&b).unwrap() && ids.satisfied_by(&b).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn recognition_round_trips() {
        let (y, h) = recognize_matrix_power(&matrix_power(3, 2).unwrap()).unwrap().unwrap();
        assert_eq!(y, 3);
        assert!(h.is_injective());
        let bad = FiniteAlgebra::from_ops("bad", 2, [("s", 1, vec![0, 1]), ("d", 2, vec![1, 1, 0, 0])]).unwrap();
        assert!(recognize_matrix_power(&bad).unwrap().is_none());
        let x = FiniteAlgebra::from_ops("x", 3, [("s", 1, vec![1, 0, 2]), ("d", 2, vec![0, 2, 1, 1, 0, 2, 2, 1, 0])])
            .unwrap();
        let (r, _) = reflect(&x, &IdentitySet::matrix_power(2)).unwrap();
        assert!(recognize_matrix_power(&r).unwrap().is_some());
    }

    #[test]
    fn matrix_power_hom_counts() {
        assert_eq!(matrix_power_hom_count(2, 2, 2), 4);
        for (z, y, k) in [(2, 2, 2), (1, 3, 2), (3, 1, 2), (2, 3, 1)] {
            assert!(verify_matrix_power_homs(z, y, k).unwrap());
            let homs = enumerate_homs(&matrix_power(z, k).unwrap(), &matrix_power(y, k).unwrap()).unwrap();
            assert_eq!(homs.len() as u128, matrix_power_hom_count(z, y, k));
        }
    }
}

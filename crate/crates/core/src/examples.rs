//! Small named algebras used as fixtures by tests, the CLI and the demo.

use crate::algebra::{product, FiniteAlgebra};

fn binary(name: &str, rows: [[usize; 3]; 3]) -> FiniteAlgebra {
    let table = rows.iter().flatten().copied().collect();
    FiniteAlgebra::from_ops(name, 3, [("mul", 2, table)]).expect("fixture table")
}

/// Cyclic group `Z_n` in the signature `mul/2, inv/1, one/0`.
pub fn cyclic_group(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(
        &format!("Z{n}"),
        n,
        vec![
            ("mul", 2, &|a: &[usize]| (a[0] + a[1]) % n),
            ("inv", 1, &|a: &[usize]| (n - a[0]) % n),
            ("one", 0, &|_: &[usize]| 0),
        ],
    )
    .expect("cyclic group")
}

/// `Z_m x Z_n` as a group.
pub fn group_product(m: usize, n: usize) -> FiniteAlgebra {
    product(&[cyclic_group(m), cyclic_group(n)])
        .expect("small product")
        .with_name(format!("Z{m}xZ{n}"))
}

/// The symmetric group on three points; elements are permutations in
/// lexicographic order, `mul(p, q) = p ∘ q`.
pub fn symmetric_group3() -> FiniteAlgebra {
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let idx = |p: [usize; 3]| perms.iter().position(|&q| q == p).unwrap();
    let compose = |a: &[usize]| {
        let (p, q) = (perms[a[0]], perms[a[1]]);
        idx([p[q[0]], p[q[1]], p[q[2]]])
    };
    let inverse = |a: &[usize]| {
        let p = perms[a[0]];
        let mut inv = [0; 3];
        for (i, &v) in p.iter().enumerate() {
            inv[v] = i;
        }
        idx(inv)
    };
    FiniteAlgebra::from_fns(
        "S3",
        6,
        vec![("mul", 2, &compose), ("inv", 1, &inverse), ("one", 0, &|_: &[usize]| 0)],
    )
    .expect("S3")
}

/// Chain semilattice on `{0..n-1}` with `meet = min`.
pub fn chain(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(&format!("chain{n}"), n, vec![("meet", 2, &|a: &[usize]| a[0].min(a[1]))])
        .expect("chain")
}

/// The two-element semilattice with `0 ∧ 1 = 0`.
pub fn semilattice2() -> FiniteAlgebra {
    chain(2).with_name("SL2")
}

/// Semilattice on `{0..n}` whose atoms `1..n` meet to 0.
pub fn antichain(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(
        &format!("antichain{n}"),
        n + 1,
        vec![("meet", 2, &|a: &[usize]| if a[0] == a[1] { a[0] } else { 0 })],
    )
    .expect("antichain")
}

/// A set with no operations.
pub fn bare_set(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_ops::<&str>(&format!("set{n}"), n, []).expect("set")
}

/// Two-element Boolean algebra with `and`, `or`, `not`.
pub fn boolean2() -> FiniteAlgebra {
    FiniteAlgebra::from_fns(
        "Bool",
        2,
        vec![
            ("and", 2, &|a: &[usize]| a[0] & a[1]),
            ("or", 2, &|a: &[usize]| a[0] | a[1]),
            ("not", 1, &|a: &[usize]| 1 - a[0]),
        ],
    )
    .expect("boolean algebra")
}

/// A three-element groupoid with the unique nontrivial congruence
/// `{0,1}|{2}`, which is not strongly abelian while the quotient is
/// essentially unary.
pub fn unary_quotient() -> FiniteAlgebra {
    binary("unary_quotient", [[0, 0, 2], [0, 1, 2], [1, 0, 2]])
}

/// A simple groupoid whose subalgebra `{0,1}` satisfies `x·y = y`.
pub fn simple_with_unary_sub() -> FiniteAlgebra {
    binary("simple_unary_sub", [[0, 1, 0], [0, 1, 0], [0, 2, 2]])
}

/// A groupoid where `{0,1}|{2}` is strongly abelian with a semilattice
/// quotient.
pub fn abelian_block() -> FiniteAlgebra {
    binary("abelian_block", [[0, 1, 0], [0, 1, 0], [0, 1, 2]])
}

/// Rock-paper-scissors: `x·y` is the winner (0 beats 1, 1 beats 2, 2 beats 0).
pub fn rock_paper_scissors() -> FiniteAlgebra {
    binary("rps", [[0, 0, 2], [0, 1, 1], [2, 1, 2]])
}

//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use finalg::abelian::{
    classify, direct_check_many, exists_nontrivial_strongly_abelian, has_snag, is_strongly_abelian,
};
use finalg::algebra::{decode_index, expand_with_constants, is_homomorphism, power, quotient};
use finalg::closure::generate_subuniverse;
use finalg::csp::{build_reduction, solve_csp, OneInThreeInstance};
use finalg::examples;
use finalg::free::{
    ab_free, essential_coordinates, extend_ab_assignment, matrix_power, recognize_matrix_power,
    satisfies_matrix_identities, verify_matrix_power_homs,
};
use finalg::homenum::{
    count_homs, enumerate_group_homs, enumerate_homs, enumerate_special, reflect,
};
use finalg::lattice::all_congruences;
use finalg::pieces::PieceContext;
use finalg::{Elem, FiniteAlgebra, FiniteMap, IdentitySet, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn images(maps: &[FiniteMap]) -> Vec<Vec<Elem>> {
    let mut v: Vec<Vec<Elem>> = maps.iter().map(|h| h.images().to_vec()).collect();
    v.sort();
    v
}

fn groupoid(n: usize, table: Vec<Elem>) -> FiniteAlgebra {
    FiniteAlgebra::from_ops("g", n, [("mul", 2, table)]).unwrap()
}

fn random_like(rng: &mut ChaCha8Rng, s: &FiniteAlgebra, size: usize) -> FiniteAlgebra {
    let tables = (0..s.signature().len())
        .map(|op| {
            let cells = size.pow(s.arity(op) as u32);
            (0..cells).map(|_| rng.gen_range(0..size)).collect()
        })
        .collect();
    FiniteAlgebra::new("x", size, s.signature().clone(), tables).unwrap()
}

fn subuniverses(a: &FiniteAlgebra) -> Vec<Vec<Elem>> {
    let n = a.size();
    let mut subs: Vec<Vec<Elem>> = (1u32..1 << n)
        .map(|m| generate_subuniverse(a, &(0..n).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>()))
        .collect();
    subs.sort();
    subs.dedup();
    subs
}

fn timed(limit: Duration, f: impl FnOnce() -> Result<(), String>) -> Result<(), String> {
    let t = Instant::now();
    f()?;
    ensure!(t.elapsed() < limit, "took {:?}, limit {limit:?}", t.elapsed());
    Ok(())
}

fn classification() -> Outcome {
    let second = Duration::from_secs(1);
    timed(second, || {
        let a = examples::unary_quotient();
        let r = ok(classify(&a))?;
        ensure!(r.in_kpoly, "unary_quotient should be in Kpoly");
        let alpha = Partition::from_labels(&[0, 0, 1]);
        ensure!(!ok(is_strongly_abelian(&a, &alpha))?, "alpha should not be strongly abelian");
        let w = ok(has_snag(&a, 0, 1))?.ok_or("no snag for (0,1)")?;
        ensure!((w.eval(0, 1), w.eval(1, 0), w.eval(1, 1)) == (0, 0, 1), "unexpected snag witness");
        ensure!(a.apply(0, &[0, 1]) == 0 && a.apply(0, &[1, 0]) == 0 && a.apply(0, &[1, 1]) == 1, "table check");
        let (q, _) = ok(quotient(&a, &alpha))?;
        ensure!(!ok(classify(&q))?.in_ksurj, "A/alpha should not be in Ksurj");
        Ok(())
    })?;
    timed(second, || {
        let b = examples::simple_with_unary_sub();
        ensure!(ok(all_congruences(&b))?.len() == 2, "B should be simple");
        let r = ok(classify(&b))?;
        ensure!(r.in_ksurj && !r.in_kpoly, "B: in_ksurj {} in_kpoly {}", r.in_ksurj, r.in_kpoly);
        let s = r.subalgebra.as_ref().ok_or("no subalgebra witness")?;
        ensure!(s.universe == vec![0, 1], "witness universe {:?}", s.universe);
        let (c, _) = ok(b.subalgebra(&[0, 1]))?;
        let unary_in_y = (0..2).all(|x| (0..2).all(|y| c.apply(0, &[x, y]) == c.apply(0, &[0, y])));
        ensure!(unary_in_y, "subalgebra {{0,1}} should be essentially unary");
        Ok(())
    })?;
    timed(second, || {
        let c = ok(exists_nontrivial_strongly_abelian(&examples::abelian_block()))?;
        ensure!(c == Some(Partition::from_labels(&[0, 0, 1])), "got {c:?}");
        Ok(())
    })?;
    Ok("3 examples, each under 1 s".into())
}

fn cross_validation() -> Outcome {
    let n = 3usize;
    let mut table = vec![0; 9];
    let (mut congruences, mut abelian) = (0usize, 0usize);
    for idx in 0..3usize.pow(9) {
        decode_index(idx, n, 9, &mut table);
        let a = groupoid(n, table.clone());
        let star = expand_with_constants(&a);
        let lat = ok(all_congruences(&a))?;
        let thetas = lat.congruences();
        let sa: Vec<bool> = thetas.iter().map(|t| is_strongly_abelian(&a, t)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let direct = ok(direct_check_many(&star, thetas, 2))?;
        congruences += thetas.len();
        abelian += sa.iter().filter(|&&s| s).count();
        for (i, t) in thetas.iter().enumerate() {
            ensure!(sa[i] == direct[i], "table {table:?} theta {t}: decided {} direct {}", sa[i], direct[i]);
            ensure!(sa[i] == ok(is_strongly_abelian(&star, t))?, "constants change the verdict on {table:?} {t}");
            if !sa[i] {
                continue;
            }
            for (j, u) in thetas.iter().enumerate() {
                ensure!(!u.leq(t) || sa[j], "hereditarity fails on {table:?}: {u} below {t}");
            }
            for sub in subuniverses(&a).iter().filter(|s| s.len() >= 2) {
                let (b, _) = ok(a.subalgebra(sub))?;
                ensure!(ok(is_strongly_abelian(&b, &t.restrict(sub)))?, "restriction fails on {table:?} {t} to {sub:?}");
            }
        }
    }
    Ok(format!("19683 tables, {congruences} congruences, {abelian} strongly abelian"))
}

fn semilattice_counting() -> Outcome {
    let sl = examples::semilattice2();
    let mut ctx = ok(PieceContext::new(&sl))?;
    for n in 1..=12 {
        let x = examples::chain(n);
        let (brute, _) = ok(count_homs(&x, &sl))?;
        let brute_set = ok(enumerate_homs(&x, &sl))?;
        let special = ok(enumerate_special(&x, &sl))?;
        let pieces = ok(ctx.enumerate_all(&x))?;
        ensure!(brute == n as u128 + 1, "n={n}: brute {brute}");
        ensure!(images(brute_set.maps()) == images(special.maps()), "n={n}: special differs");
        ensure!(images(brute_set.maps()) == images(pieces.maps()), "n={n}: pieces differs");
    }
    Ok("n = 1..12, three methods agree on n+1".into())
}

fn abfree_bound() -> Outcome {
    let a = expand_with_constants(&examples::abelian_block());
    let k = (usize::BITS - 1 - 3usize.leading_zeros()) as u32;
    ensure!(k == 1, "k should be 1");
    let mut sizes = Vec::new();
    for m in 1..=8usize {
        let f = ok(ab_free(&a, 0, 1, m))?;
        let bound = (m as u128).pow(k) * (a.size() as u128).pow(1 << k);
        ensure!((f.algebra.size() as u128) <= bound, "m={m}: |F|={} > {bound}", f.algebra.size());
        let mut seen = std::collections::HashSet::new();
        for mask in 0..1u32 << m {
            let h: Vec<Elem> = (0..m).map(|i| (mask >> i & 1) as Elem).collect();
            let ext = ok(extend_ab_assignment(&f, &h))?;
            ensure!(ok(is_homomorphism(&f.algebra, &a, &ext))?, "m={m}: extension of {h:?} is not a homomorphism");
            ensure!(f.generators.iter().zip(&h).all(|(&g, &v)| ext.apply(g) == v), "m={m}: wrong generator images");
            ensure!(seen.insert(ext.images().to_vec()), "m={m}: repeated extension");
        }
        for e in &f.element_meaning {
            let ess = essential_coordinates(e, 2, m);
            ensure!(ess.len() <= k as usize, "m={m}: element with {} essential coordinates", ess.len());
        }
        sizes.push(f.algebra.size());
    }
    Ok(format!("|F| for m = 1..8: {sizes:?}"))
}

fn permuted(b: &FiniteAlgebra, perm: &[Elem]) -> FiniteAlgebra {
    let n = b.size();
    let mut inv = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let tables = (0..b.signature().len())
        .map(|op| {
            let k = b.arity(op);
            let mut args = vec![0; k];
            (0..n.pow(k as u32))
                .map(|idx| {
                    decode_index(idx, n, k, &mut args);
                    let orig: Vec<Elem> = args.iter().map(|&x| inv[x]).collect();
                    perm[b.apply(op, &orig)]
                })
                .collect()
        })
        .collect();
    FiniteAlgebra::new("perm", n, b.signature().clone(), tables).unwrap()
}

fn matrix_powers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for y in 1..=3 {
        for k in 1..=3 {
            let m = ok(matrix_power(y, k))?;
            ensure!(ok(satisfies_matrix_identities(&m, k))?, "Y={y} k={k} violates the identities");
            if (m.size() as u128).pow((k * k) as u32) <= 1 << 24 {
                ensure!(ok(IdentitySet::matrix_power(k).satisfied_by(&m))?, "Y={y} k={k} literal check fails");
            }
            let (ry, h) = ok(recognize_matrix_power(&m))?.ok_or(format!("Y={y} k={k} not recognized"))?;
            ensure!(ry == y && h.is_injective() && ok(is_homomorphism(&m, &m, &h))?, "Y={y} k={k} bad round trip");
            let mut perm: Vec<Elem> = (0..m.size()).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let (py, _) = ok(recognize_matrix_power(&permuted(&m, &perm)))?.ok_or("relabeled copy not recognized")?;
            ensure!(py == y, "relabeled copy recognized with y={py}");
            if y >= 2 {
                let r = ok(classify(&m))?;
                ensure!(r.has_nontrivial_strongly_abelian && !r.in_ksurj, "Y={y} k={k} should not be in Ksurj");
            }
        }
    }
    for z in 1..=2 {
        for y in 1..=2 {
            for k in 1..=2 {
                let homs = ok(enumerate_homs(&ok(matrix_power(z, k))?, &ok(matrix_power(y, k))?))?;
                ensure!(homs.len() == y.pow(z as u32), "z={z} y={y} k={k}: {} homs", homs.len());
                ensure!(ok(verify_matrix_power_homs(z, y, k))?, "z={z} y={y} k={k}: not all of the form h^k");
            }
        }
    }
    Ok("y,k <= 3 identities and recognition; hom counts for z,y,k <= 2; classify for y >= 2".into())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn groups() -> Outcome {
    let gs = [
        examples::cyclic_group(2),
        examples::cyclic_group(3),
        examples::cyclic_group(4),
        examples::group_product(2, 2),
        examples::cyclic_group(6),
        examples::symmetric_group3(),
    ];
    for x in &gs {
        for a in &gs {
            let fast = ok(enumerate_group_homs(x, a))?;
            let slow = ok(enumerate_homs(x, a))?;
            ensure!(images(fast.maps()) == images(slow.maps()), "{} -> {}", x.name(), a.name());
        }
    }
    for n in 1..=8 {
        for m in 1..=8 {
            let (x, a) = (examples::cyclic_group(n), examples::cyclic_group(m));
            ensure!(ok(enumerate_group_homs(&x, &a))?.len() == gcd(n, m), "Z{n} -> Z{m}");
            ensure!(ok(count_homs(&x, &a))?.0 == gcd(n, m) as u128, "Z{n} -> Z{m} brute");
        }
    }
    Ok("36 group pairs and gcd(n,m) for n,m <= 8".into())
}

#[derive(Clone, Copy, PartialEq)]
enum Engine {
    Chain,
    Membership,
}

/// Every source with at most two elements, then random sources with three to
/// five elements and small subalgebras of `s²`.
fn inputs(s: &FiniteAlgebra, rng: &mut ChaCha8Rng, sampled: usize) -> Vec<FiniteAlgebra> {
    let mut out = Vec::new();
    for size in 1..=2usize {
        let cells: Vec<usize> = (0..s.signature().len()).map(|op| size.pow(s.arity(op) as u32)).collect();
        let total: usize = cells.iter().sum();
        let mut flat = vec![0; total];
        for idx in 0..size.pow(total as u32) {
            decode_index(idx, size, total, &mut flat);
            let mut rest = &flat[..];
            let tables = cells
                .iter()
                .map(|&c| {
                    let (t, r) = rest.split_at(c);
                    rest = r;
                    t.to_vec()
                })
                .collect();
            out.push(FiniteAlgebra::new("x", size, s.signature().clone(), tables).unwrap());
        }
    }
    out.push(s.clone());
    let sq = power(s, 2).unwrap();
    for _ in 0..sampled {
        let size = rng.gen_range(3..=5);
        out.push(random_like(rng, s, size));
        let gens = [rng.gen_range(0..sq.size()), rng.gen_range(0..sq.size())];
        let u = generate_subuniverse(&sq, &gens);
        if u.len() <= 5 {
            out.push(sq.subalgebra(&u).unwrap().0);
        }
    }
    out
}

/// Runs one engine on every input; `None` when the engine does not apply.
fn check_pieces(a: &FiniteAlgebra, engine: Engine, rng: &mut ChaCha8Rng) -> Result<Option<usize>, String> {
    let s = expand_with_constants(a);
    let mut ctx = ok(PieceContext::new(a))?;
    ctx.verify = true;
    let run = |ctx: &mut PieceContext, x: &FiniteAlgebra| match engine {
        Engine::Chain => ctx.enumerate_via_type_chain(x),
        Engine::Membership => ctx.enumerate_membership(x),
    };
    match run(&mut ctx, &s) {
        Err(finalg::Error::NotApplicable(_)) => return Ok(None),
        Err(e) => return Err(format!("{}: {e}", a.name())),
        Ok(_) => {}
    }
    let xs = inputs(&s, rng, 8);
    for x in &xs {
        let want = ok(enumerate_homs(x, &s))?;
        let got = run(&mut ctx, x).map_err(|e| format!("{} on {x:?}: {e}", a.name()))?;
        ensure!(images(got.maps()) == images(want.maps()), "{}: wrong result on {x:?}", a.name());
    }
    Ok(Some(xs.len()))
}

fn pieces_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut summary = Vec::new();
    for engine in [Engine::Chain, Engine::Membership] {
        let (mut fixtures, mut runs) = (0, 0);
        for a in [examples::unary_quotient(), examples::simple_with_unary_sub(), examples::abelian_block()] {
            if let Some(k) = check_pieces(&a, engine, &mut rng)? {
                fixtures += 1;
                runs += k;
            }
        }
        let mut random = 0;
        let mut tries = 0;
        while random < 50 {
            tries += 1;
            ensure!(tries < 5000, "too few applicable random tables");
            let n = rng.gen_range(2..=4);
            let a = groupoid(n, (0..n * n).map(|_| rng.gen_range(0..n)).collect());
            if let Some(k) = check_pieces(&a, engine, &mut rng)? {
                random += 1;
                runs += k;
            }
        }
        let name = if engine == Engine::Chain { "chain" } else { "membership" };
        summary.push(format!("{name}: {fixtures}/3 fixtures + 50 random tables, {runs} inputs"));
    }
    Ok(summary.join("; "))
}

fn csp_reduction() -> Outcome {
    let a = expand_with_constants(&examples::abelian_block());
    let mut triples = Vec::new();
    for x in 0..4 {
        for y in x..4 {
            for z in y..4 {
                triples.push([x, y, z]);
            }
        }
    }
    let (mut instances, mut sat) = (0, 0);
    let mut choose = vec![];
    fn walk(
        start: usize,
        triples: &[[usize; 3]],
        choose: &mut Vec<[usize; 3]>,
        visit: &mut dyn FnMut(&[[usize; 3]]) -> Result<(), String>,
    ) -> Result<(), String> {
        if !choose.is_empty() {
            visit(choose)?;
        }
        if choose.len() == 4 {
            return Ok(());
        }
        for i in start..triples.len() {
            choose.push(triples[i]);
            walk(i + 1, triples, choose, visit)?;
            choose.pop();
        }
        Ok(())
    }
    walk(0, &triples, &mut choose, &mut |clauses| {
        let inst = ok(OneInThreeInstance::new(4, clauses.to_vec()))?;
        let red = ok(build_reduction(&inst, &a, 0, 1))?;
        ensure!(red.warning.is_none(), "unexpected warning");
        let m = red.instance.vars as u128;
        ensure!(red.free.algebra.size() as u128 <= m * 9, "|F| above bound for {clauses:?}");
        let h = ok(solve_csp(&red.source, &red.template))?;
        let truth = inst.brute_sat();
        ensure!(h.is_some() == truth.is_some(), "{clauses:?}: csp {} sat {}", h.is_some(), truth.is_some());
        if let Some(h) = h {
            let bits = red.assignment(&h, 1);
            ensure!(
                red.instance.clauses.iter().all(|c| c.iter().filter(|&&v| bits[v]).count() == 1),
                "{clauses:?}: read-off assignment fails"
            );
            sat += 1;
        }
        instances += 1;
        Ok(())
    })?;
    Ok(format!("{instances} instances, {sat} satisfiable"))
}

fn reflection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cases = [
        (IdentitySet::group(), vec![examples::cyclic_group(2), examples::cyclic_group(3), examples::symmetric_group3()]),
        (IdentitySet::semilattice(), vec![examples::semilattice2(), examples::chain(3), examples::antichain(2)]),
        (IdentitySet::matrix_power(2), vec![matrix_power(2, 2).unwrap(), matrix_power(1, 2).unwrap()]),
    ];
    let mut checked = 0;
    for (sigma, targets) in &cases {
        for i in 0..100 {
            let model = &targets[i % targets.len()];
            let size = rng.gen_range(1..=5);
            let x = random_like(&mut rng, model, size);
            let (y, q) = ok(reflect(&x, sigma))?;
            ensure!(ok(sigma.satisfied_by(&y))?, "reflection does not satisfy the identities");
            ensure!(q.is_surjective() && ok(is_homomorphism(&x, &y, &q))?, "q is not a surjective homomorphism");
            for a in targets {
                let direct = ok(enumerate_homs(&x, a))?;
                let via: Vec<FiniteMap> = ok(enumerate_homs(&y, a))?.maps().iter().map(|h| h.compose(&q)).collect();
                ensure!(images(direct.maps()) == images(&via), "factorization fails for {x:?} into {}", a.name());
                checked += 1;
            }
        }
    }
    Ok(format!("300 random sources, {checked} factorizations"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("classification fidelity", classification),
        ("decision cross-validation", cross_validation),
        ("semilattice counting", semilattice_counting),
        ("ab-free bound", abfree_bound),
        ("matrix powers", matrix_powers),
        ("group enumeration", groups),
        ("pieces exactness", pieces_exactness),
        ("csp reduction", csp_reduction),
        ("reflection", reflection),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

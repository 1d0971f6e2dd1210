//! Finite algebras, maps between universes and relational structures.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::term::Term;
use crate::Elem;

/// Size caps guarding constructions whose output grows exponentially.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest universe a construction may produce.
    pub max_universe: usize,
    /// Largest total number of table entries of a constructed algebra.
    pub max_table: usize,
    /// Largest number of elements stored by one closure run.
    pub max_closure: usize,
    /// Largest number of tuples any brute-force sweep may visit.
    pub max_sweep: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_universe: 1 << 20,
            max_table: 1 << 26,
            max_closure: 10_000_000,
            max_sweep: 1 << 32,
        }
    }
}

/// `base^exp`, or `None` on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

pub(crate) fn pow_u128(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Row-major index of an argument tuple, first argument most significant.
#[inline]
pub fn table_index(args: &[Elem], n: usize) -> usize {
    args.iter().fold(0, |acc, &a| acc * n + a)
}

/// Inverse of [`table_index`].
pub fn decode_index(mut idx: usize, n: usize, arity: usize, out: &mut [Elem]) {
    for slot in out[..arity].iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// Ordered list of operation symbols with unique names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut sig = Signature::default();
        for (name, arity) in symbols {
            sig.push(name, arity)?;
        }
        Ok(sig)
    }

    pub fn push(&mut self, name: impl Into<String>, arity: usize) -> Result<usize> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::DuplicateSymbol(name));
        }
        self.symbols.push(Symbol { name, arity });
        Ok(self.symbols.len() - 1)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn arity(&self, idx: usize) -> usize {
        self.symbols[idx].arity
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.symbols[idx].name
    }

    pub(crate) fn check_same(&self, other: &Signature) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SignatureMismatch(format!("[{self}] vs [{other}]")))
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}/{}", s.name, s.arity)?;
        }
        Ok(())
    }
}

/// A finite algebra on `{0, .., size-1}` with one dense table per symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    signature: Signature,
    tables: Vec<Vec<Elem>>,
}

impl FiniteAlgebra {
    pub fn new(
        name: impl Into<String>,
        size: usize,
        signature: Signature,
        tables: Vec<Vec<Elem>>,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::Precondition("universe must be nonempty".into()));
        }
        if tables.len() != signature.len() {
            return Err(Error::SignatureMismatch(format!(
                "{} tables for {} symbols",
                tables.len(),
                signature.len()
            )));
        }
        for (sym, table) in signature.symbols().iter().zip(&tables) {
            let expected = checked_pow(size, sym.arity)
                .ok_or_else(|| Error::cap("table length", pow_u128(size, sym.arity), usize::MAX))?;
            if table.len() != expected {
                return Err(Error::TableLength {
                    symbol: sym.name.clone(),
                    expected,
                    found: table.len(),
                });
            }
            if let Some(&bad) = table.iter().find(|&&v| v >= size) {
                return Err(Error::OutOfRange { value: bad, size });
            }
        }
        Ok(FiniteAlgebra {
            name: name.into(),
            size,
            signature,
            tables,
        })
    }

    /// Builds an algebra from `(name, arity, table)` triples.
    pub fn from_ops<S: Into<String>>(
        name: &str,
        size: usize,
        ops: impl IntoIterator<Item = (S, usize, Vec<Elem>)>,
    ) -> Result<Self> {
        let mut sig = Signature::default();
        let mut tables = Vec::new();
        for (n, arity, t) in ops {
            sig.push(n, arity)?;
            tables.push(t);
        }
        FiniteAlgebra::new(name, size, sig, tables)
    }

    /// Builds an algebra by evaluating closures on every argument tuple.
    pub fn from_fns(
        name: &str,
        size: usize,
        ops: Vec<(&str, usize, &dyn Fn(&[Elem]) -> Elem)>,
    ) -> Result<Self> {
        let mut sig = Signature::default();
        let mut tables = Vec::new();
        let mut args = vec![0; ops.iter().map(|o| o.1).max().unwrap_or(0)];
        for (n, arity, f) in ops {
            sig.push(n, arity)?;
            let len = checked_pow(size, arity)
                .ok_or_else(|| Error::cap("table length", pow_u128(size, arity), usize::MAX))?;
            let mut t = Vec::with_capacity(len);
            for idx in 0..len {
                decode_index(idx, size, arity, &mut args);
                t.push(f(&args[..arity]));
            }
            tables.push(t);
        }
        FiniteAlgebra::new(name, size, sig, tables)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn table(&self, op: usize) -> &[Elem] {
        &self.tables[op]
    }

    pub fn tables(&self) -> &[Vec<Elem>] {
        &self.tables
    }

    pub fn arity(&self, op: usize) -> usize {
        self.signature.arity(op)
    }

    pub fn op_index(&self, name: &str) -> Result<usize> {
        self.signature
            .index_of(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    #[inline]
    pub fn apply(&self, op: usize, args: &[Elem]) -> Elem {
        self.tables[op][table_index(args, self.size)]
    }

    /// Values of the nullary symbols.
    pub fn constants(&self) -> Vec<Elem> {
        self.signature
            .symbols()
            .iter()
            .zip(&self.tables)
            .filter(|(s, _)| s.arity == 0)
            .map(|(_, t)| t[0])
            .collect()
    }

    /// True when every element is the value of some nullary symbol.
    pub fn is_constant_complete(&self) -> bool {
        let mut seen = vec![false; self.size];
        for c in self.constants() {
            seen[c] = true;
        }
        seen.into_iter().all(|b| b)
    }

    /// Checks whether `subset` is closed under all operations.
    pub fn is_subuniverse(&self, subset: &[Elem]) -> bool {
        let mut member = vec![false; self.size];
        for &x in subset {
            member[x] = true;
        }
        let mut args = vec![0; self.max_arity()];
        for (op, sym) in self.signature.symbols().iter().enumerate() {
            let k = sym.arity;
            if k == 0 {
                if !member[self.tables[op][0]] {
                    return false;
                }
                continue;
            }
            if subset.is_empty() {
                continue;
            }
            let mut pos = vec![0usize; k];
            loop {
                for (a, &p) in args.iter_mut().zip(&pos) {
                    *a = subset[p];
                }
                if !member[self.apply(op, &args[..k])] {
                    return false;
                }
                if !odometer(&mut pos, subset.len()) {
                    break;
                }
            }
        }
        true
    }

    pub fn max_arity(&self) -> usize {
        self.signature.symbols().iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// Subalgebra on a closed subset, re-indexed in increasing element order.
    /// Returns the algebra and the sorted universe (new index to old element).
    pub fn subalgebra(&self, subset: &[Elem]) -> Result<(FiniteAlgebra, Vec<Elem>)> {
        let mut universe: Vec<Elem> = subset.to_vec();
        universe.sort_unstable();
        universe.dedup();
        if let Some(&bad) = universe.iter().find(|&&x| x >= self.size) {
            return Err(Error::OutOfRange { value: bad, size: self.size });
        }
        if universe.is_empty() {
            return Err(Error::Precondition("subalgebra universe is empty".into()));
        }
        if !self.is_subuniverse(&universe) {
            return Err(Error::Precondition(format!(
                "{universe:?} is not closed under the operations"
            )));
        }
        let m = universe.len();
        let mut pos = vec![usize::MAX; self.size];
        for (i, &x) in universe.iter().enumerate() {
            pos[x] = i;
        }
        let mut tables = Vec::with_capacity(self.tables.len());
        let mut args = vec![0; self.max_arity()];
        for (op, sym) in self.signature.symbols().iter().enumerate() {
            let k = sym.arity;
            let len = checked_pow(m, k).unwrap_or(usize::MAX);
            let mut t = Vec::with_capacity(len);
            for idx in 0..len {
                decode_index(idx, m, k, &mut args);
                for a in args[..k].iter_mut() {
                    *a = universe[*a];
                }
                t.push(pos[self.apply(op, &args[..k])]);
            }
            tables.push(t);
        }
        let alg = FiniteAlgebra::new(
            format!("{}_sub", self.name),
            m,
            self.signature.clone(),
            tables,
        )?;
        Ok((alg, universe))
    }
}

/// Advances a little-endian-last odometer; returns false after wrapping.
pub(crate) fn odometer(pos: &mut [usize], base: usize) -> bool {
    for p in pos.iter_mut().rev() {
        *p += 1;
        if *p < base {
            return true;
        }
        *p = 0;
    }
    false
}

/// A total map `{0..domain-1} -> {0..codomain-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteMap {
    codomain: usize,
    images: Vec<Elem>,
}

impl FiniteMap {
    pub fn new(codomain: usize, images: Vec<Elem>) -> Result<Self> {
        if let Some(&bad) = images.iter().find(|&&v| v >= codomain) {
            return Err(Error::OutOfRange { value: bad, size: codomain });
        }
        Ok(FiniteMap { codomain, images })
    }

    pub(crate) fn new_unchecked(codomain: usize, images: Vec<Elem>) -> Self {
        debug_assert!(images.iter().all(|&v| v < codomain));
        FiniteMap { codomain, images }
    }

    pub fn identity(n: usize) -> Self {
        FiniteMap { codomain: n, images: (0..n).collect() }
    }

    pub fn constant(domain: usize, codomain: usize, value: Elem) -> Self {
        FiniteMap { codomain, images: vec![value; domain] }
    }

    pub fn domain(&self) -> usize {
        self.images.len()
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    pub fn images(&self) -> &[Elem] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, x: Elem) -> Elem {
        self.images[x]
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &FiniteMap) -> FiniteMap {
        FiniteMap {
            codomain: self.codomain,
            images: inner.images.iter().map(|&x| self.images[x]).collect(),
        }
    }

    /// Sorted set of images.
    pub fn image(&self) -> Vec<Elem> {
        let mut v = self.images.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn image_of(&self, set: &[Elem]) -> Vec<Elem> {
        let mut v: Vec<Elem> = set.iter().map(|&x| self.images[x]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_surjective(&self) -> bool {
        self.image().len() == self.codomain
    }

    pub fn is_injective(&self) -> bool {
        self.image().len() == self.images.len()
    }

    pub fn kernel(&self) -> Partition {
        Partition::from_labels(&self.images)
    }
}

impl fmt::Display for FiniteMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.images.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// True iff `h` commutes with every operation.
pub fn is_homomorphism(x: &FiniteAlgebra, a: &FiniteAlgebra, h: &FiniteMap) -> Result<bool> {
    x.signature.check_same(&a.signature)?;
    if h.domain() != x.size || h.codomain() != a.size {
        return Err(Error::Precondition(format!(
            "map {}->{} does not match universes {}->{}",
            h.domain(),
            h.codomain(),
            x.size,
            a.size
        )));
    }
    let mut xargs = vec![0; x.max_arity()];
    let mut aargs = vec![0; x.max_arity()];
    for op in 0..x.signature.len() {
        let k = x.arity(op);
        let table = x.table(op);
        for (idx, &out) in table.iter().enumerate() {
            decode_index(idx, x.size, k, &mut xargs);
            for (d, &s) in aargs[..k].iter_mut().zip(&xargs[..k]) {
                *d = h.apply(s);
            }
            if a.apply(op, &aargs[..k]) != h.apply(out) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Direct product; elements are encoded mixed-radix with the first factor
/// most significant.
pub fn product(algs: &[FiniteAlgebra]) -> Result<FiniteAlgebra> {
    product_with(algs, &Limits::default())
}

pub fn product_with(algs: &[FiniteAlgebra], limits: &Limits) -> Result<FiniteAlgebra> {
    let first = algs
        .first()
        .ok_or_else(|| Error::Precondition("product of an empty list".into()))?;
    for a in &algs[1..] {
        first.signature.check_same(&a.signature)?;
    }
    let mut size: u128 = 1;
    for a in algs {
        size = size.saturating_mul(a.size as u128);
    }
    if size > limits.max_universe as u128 {
        return Err(Error::cap("product universe", size, limits.max_universe));
    }
    let size = size as usize;
    let mut cells: u128 = 0;
    for s in first.signature.symbols() {
        cells = cells.saturating_add(pow_u128(size, s.arity));
    }
    if cells > limits.max_table as u128 {
        return Err(Error::cap("product table entries", cells, limits.max_table));
    }
    let sizes: Vec<usize> = algs.iter().map(|a| a.size).collect();
    let decode = |mut e: usize, out: &mut [usize]| {
        for (slot, &s) in out.iter_mut().zip(&sizes).rev() {
            *slot = e % s;
            e /= s;
        }
    };
    let f = algs.len();
    // coordinates of every element, row-major
    let mut coords = vec![0usize; size * f];
    for e in 0..size {
        decode(e, &mut coords[e * f..(e + 1) * f]);
    }
    let mut tables = Vec::new();
    let mut args = vec![0; first.max_arity()];
    let mut fargs = vec![0; first.max_arity()];
    for (op, sym) in first.signature.symbols().iter().enumerate() {
        let k = sym.arity;
        let len = checked_pow(size, k).unwrap();
        let mut t = Vec::with_capacity(len);
        for idx in 0..len {
            decode_index(idx, size, k, &mut args);
            let mut out = 0;
            for (c, a) in algs.iter().enumerate() {
                for (d, &s) in fargs[..k].iter_mut().zip(&args[..k]) {
                    *d = coords[s * f + c];
                }
                out = out * a.size + a.apply(op, &fargs[..k]);
            }
            t.push(out);
        }
        tables.push(t);
    }
    let name = algs.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join("x");
    FiniteAlgebra::new(name, size, first.signature.clone(), tables)
}

pub fn power(a: &FiniteAlgebra, k: usize) -> Result<FiniteAlgebra> {
    if k == 0 {
        return Err(Error::Precondition("power exponent must be positive".into()));
    }
    let algs = vec![a.clone(); k];
    Ok(product(&algs)?.with_name(format!("{}^{k}", a.name)))
}

/// Quotient by a congruence; universe = blocks in canonical order.
pub fn quotient(alg: &FiniteAlgebra, theta: &Partition) -> Result<(FiniteAlgebra, FiniteMap)> {
    if theta.size() != alg.size {
        return Err(Error::Precondition(format!(
            "partition on {} elements for an algebra of size {}",
            theta.size(),
            alg.size
        )));
    }
    let n = alg.size;
    let m = theta.num_blocks();
    let labels = theta.labels();
    let reps = theta.representatives();
    let mut tables = Vec::new();
    let mut args = vec![0; alg.max_arity()];
    for (op, sym) in alg.signature.symbols().iter().enumerate() {
        let k = sym.arity;
        let len = checked_pow(m, k).unwrap_or(usize::MAX);
        let mut t = Vec::with_capacity(len);
        for idx in 0..len {
            decode_index(idx, m, k, &mut args);
            for a in args[..k].iter_mut() {
                *a = reps[*a];
            }
            t.push(labels[alg.apply(op, &args[..k])]);
        }
        // well-definedness on every tuple of A
        let table = alg.table(op);
        for (idx, &out) in table.iter().enumerate() {
            decode_index(idx, n, k, &mut args);
            for a in args[..k].iter_mut() {
                *a = labels[*a];
            }
            if t[table_index(&args[..k], m)] != labels[out] {
                return Err(Error::NotCongruence(format!(
                    "operation `{}` does not preserve {theta}",
                    sym.name
                )));
            }
        }
        tables.push(t);
    }
    let q = FiniteMap::new_unchecked(m, labels.to_vec());
    let qa = FiniteAlgebra::new(format!("{}_quo", alg.name), m, alg.signature.clone(), tables)?;
    Ok((qa, q))
}

/// True iff the partition is preserved by all operations.
pub fn is_congruence(alg: &FiniteAlgebra, theta: &Partition) -> bool {
    theta.size() == alg.size && quotient(alg, theta).is_ok()
}

/// Adds one fresh nullary symbol per element, `c<i>` interpreted as `i`.
pub fn expand_with_constants(alg: &FiniteAlgebra) -> FiniteAlgebra {
    let mut sig = alg.signature.clone();
    let mut tables = alg.tables.clone();
    for i in 0..alg.size {
        let base = format!("c{i}");
        let mut name = base.clone();
        let mut j = 1;
        while sig.index_of(&name).is_some() {
            name = format!("{base}_{j}");
            j += 1;
        }
        sig.push(name, 0).expect("fresh name");
        tables.push(vec![i]);
    }
    FiniteAlgebra {
        name: format!("{}*", alg.name),
        size: alg.size,
        signature: sig,
        tables,
    }
}

/// Reinterprets `y` in a new signature: each new symbol is defined by a term
/// over `y`'s signature whose variables are `x0..x{arity-1}`.
pub fn reduct_transform(y: &FiniteAlgebra, defs: &[(Symbol, Term)]) -> Result<FiniteAlgebra> {
    let mut sig = Signature::default();
    let mut tables = Vec::new();
    let mut args = vec![0; defs.iter().map(|d| d.0.arity).max().unwrap_or(0)];
    for (sym, t) in defs {
        if let Some(v) = t.max_var() {
            if v >= sym.arity {
                return Err(Error::Precondition(format!(
                    "term for `{}` uses x{v} but the symbol has arity {}",
                    sym.name, sym.arity
                )));
            }
        }
        let compiled = t.compile(&y.signature)?;
        sig.push(sym.name.clone(), sym.arity)?;
        let len = checked_pow(y.size, sym.arity).unwrap_or(usize::MAX);
        let mut table = Vec::with_capacity(len);
        for idx in 0..len {
            decode_index(idx, y.size, sym.arity, &mut args);
            table.push(compiled.eval(y, &args[..sym.arity]));
        }
        tables.push(table);
    }
    FiniteAlgebra::new(y.name.clone(), y.size, sig, tables)
}

/// A named relation: ordered, duplicate-free list of tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    tuples: Vec<Vec<Elem>>,
    members: HashSet<Vec<Elem>>,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Relation {
            name: name.into(),
            arity,
            tuples: Vec::new(),
            members: HashSet::new(),
        }
    }

    /// Adds a tuple; returns false if it was already present.
    pub fn insert(&mut self, tuple: Vec<Elem>) -> Result<bool> {
        if tuple.len() != self.arity {
            return Err(Error::Precondition(format!(
                "tuple of length {} for relation `{}` of arity {}",
                tuple.len(),
                self.name,
                self.arity
            )));
        }
        if self.members.contains(&tuple) {
            return Ok(false);
        }
        self.members.insert(tuple.clone());
        self.tuples.push(tuple);
        Ok(true)
    }

    pub fn tuples(&self) -> &[Vec<Elem>] {
        &self.tuples
    }

    pub fn contains(&self, tuple: &[Elem]) -> bool {
        self.members.contains(tuple)
    }
}

/// An algebra together with named relations on its universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationalStructure {
    pub algebra: FiniteAlgebra,
    relations: Vec<Relation>,
}

impl RelationalStructure {
    pub fn new(algebra: FiniteAlgebra) -> Self {
        RelationalStructure { algebra, relations: Vec::new() }
    }

    pub fn add_relation(&mut self, name: &str, arity: usize, tuples: Vec<Vec<Elem>>) -> Result<()> {
        if self.relations.iter().any(|r| r.name == name) {
            return Err(Error::DuplicateSymbol(name.to_string()));
        }
        let mut rel = Relation::new(name, arity);
        let n = self.algebra.size();
        for t in tuples {
            if let Some(&bad) = t.iter().find(|&&v| v >= n) {
                return Err(Error::OutOfRange { value: bad, size: n });
            }
            if !rel.insert(t.clone())? {
                return Err(Error::Precondition(format!("duplicate tuple {t:?} in `{name}`")));
            }
        }
        self.relations.push(rel);
        Ok(())
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// Names and arities of the relations, in order.
    pub fn relational_signature(&self) -> Vec<(String, usize)> {
        self.relations.iter().map(|r| (r.name.clone(), r.arity)).collect()
    }
}

//! Terms, identities and a hash-consed term arena for witnesses.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::algebra::{decode_index, pow_u128, FiniteAlgebra, Limits, Signature};
use crate::error::{Error, Result};
use crate::Elem;

/// A term over variables `x0, x1, ..` and named symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Op(String, Vec<Term>),
}

impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn op(name: &str, args: Vec<Term>) -> Term {
        Term::Op(name.to_string(), args)
    }

    /// Largest variable index occurring in the term.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Term::Var(i) => Some(*i),
            Term::Op(_, args) => args.iter().filter_map(Term::max_var).max(),
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        fn walk(t: &Term, out: &mut Vec<usize>) {
            match t {
                Term::Var(i) => out.push(*i),
                Term::Op(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Resolves symbol names against a signature and checks arities.
    pub fn compile(&self, sig: &Signature) -> Result<CompiledTerm> {
        let mut nodes = Vec::new();
        let root = compile_rec(self, sig, &mut nodes)?;
        Ok(CompiledTerm { nodes, root, arity: self.max_var().map_or(0, |v| v + 1) })
    }
}

fn compile_rec(t: &Term, sig: &Signature, nodes: &mut Vec<CNode>) -> Result<usize> {
    let node = match t {
        Term::Var(i) => CNode::Var(*i),
        Term::Op(name, args) => {
            let op = sig.index_of(name).ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
            if sig.arity(op) != args.len() {
                return Err(Error::SignatureMismatch(format!(
                    "`{name}` has arity {} but is applied to {} arguments",
                    sig.arity(op),
                    args.len()
                )));
            }
            let kids = args
                .iter()
                .map(|a| compile_rec(a, sig, nodes))
                .collect::<Result<Vec<_>>>()?;
            CNode::App(op, kids)
        }
    };
    nodes.push(node);
    Ok(nodes.len() - 1)
}

#[derive(Clone, Debug)]
enum CNode {
    Var(usize),
    App(usize, Vec<usize>),
}

/// A term with symbols resolved to operation indices; nodes are stored in
/// post-order so evaluation is a single forward pass.
#[derive(Clone, Debug)]
pub struct CompiledTerm {
    nodes: Vec<CNode>,
    root: usize,
    arity: usize,
}

impl CompiledTerm {
    /// Number of variables needed (largest index + 1).
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, alg: &FiniteAlgebra, assignment: &[Elem]) -> Elem {
        let mut vals = Vec::with_capacity(self.nodes.len());
        let mut args = Vec::new();
        for node in &self.nodes {
            let v = match node {
                CNode::Var(i) => assignment[*i],
                CNode::App(op, kids) => {
                    args.clear();
                    args.extend(kids.iter().map(|&k| vals[k]));
                    alg.apply(*op, &args)
                }
            };
            vals.push(v);
        }
        vals[self.root]
    }
}

/// Value of `t` in `alg` at `assignment`.
pub fn eval_term(alg: &FiniteAlgebra, t: &Term, assignment: &[Elem]) -> Result<Elem> {
    let c = t.compile(alg.signature())?;
    if assignment.len() < c.arity {
        return Err(Error::Precondition(format!(
            "assignment has {} values, term needs {}",
            assignment.len(),
            c.arity
        )));
    }
    if let Some(&bad) = assignment.iter().find(|&&v| v >= alg.size()) {
        return Err(Error::OutOfRange { value: bad, size: alg.size() });
    }
    Ok(c.eval(alg, assignment))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "x{i}"),
            Term::Op(name, args) => {
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

fn is_var_name(s: &str) -> Option<usize> {
    let digits = s.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct TermParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl TermParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse { line: 1, msg: format!("term column {}: {msg}", self.pos + 1) }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || b"_'".contains(&self.src[self.pos]))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a symbol or variable"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == c {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn term(&mut self) -> Result<Term> {
        let name = self.ident()?;
        if !self.eat(b'(') {
            return Ok(match is_var_name(&name) {
                Some(i) => Term::Var(i),
                None => Term::Op(name, Vec::new()),
            });
        }
        let mut args = Vec::new();
        if !self.eat(b')') {
            loop {
                args.push(self.term()?);
                if self.eat(b')') {
                    break;
                }
                if !self.eat(b',') {
                    return Err(self.err("expected `,` or `)`"));
                }
            }
        }
        Ok(Term::Op(name, args))
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Term> {
        let mut p = TermParser { src: s.as_bytes(), pos: 0 };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }
}

/// An identity `lhs ≈ rhs` over variables `x0..x{vars-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identity {
    pub vars: usize,
    pub lhs: Term,
    pub rhs: Term,
}

impl Identity {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        let vars = lhs.max_var().max(rhs.max_var()).map_or(0, |v| v + 1);
        Identity { vars, lhs, rhs }
    }

    pub fn parse(lhs: &str, rhs: &str) -> Result<Self> {
        Ok(Identity::new(lhs.parse()?, rhs.parse()?))
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// A finite set of identities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentitySet {
    pub identities: Vec<Identity>,
}

fn ids(pairs: &[(&str, &str)]) -> IdentitySet {
    IdentitySet {
        identities: pairs
            .iter()
            .map(|(l, r)| Identity::parse(l, r).expect("built-in identity"))
            .collect(),
    }
}

impl IdentitySet {
    /// Group axioms in the signature `mul/2, inv/1, one/0`.
    pub fn group() -> Self {
        ids(&[
            ("mul(one,x0)", "x0"),
            ("mul(x0,one)", "x0"),
            ("mul(x0,inv(x0))", "one"),
            ("mul(inv(x0),x0)", "one"),
            ("mul(mul(x0,x1),x2)", "mul(x0,mul(x1,x2))"),
        ])
    }

    /// Semilattice axioms for the binary symbol `meet`.
    pub fn semilattice() -> Self {
        Self::semilattice_for("meet")
    }

    /// Semilattice axioms for an arbitrary binary symbol.
    pub fn semilattice_for(sym: &str) -> Self {
        let m = |a: &str, b: &str| format!("{sym}({a},{b})");
        let owned = [
            (m("x0", "x0"), "x0".to_string()),
            (m("x0", "x1"), m("x1", "x0")),
            (m(&m("x0", "x1"), "x2"), m("x0", &m("x1", "x2"))),
        ];
        IdentitySet {
            identities: owned
                .iter()
                .map(|(l, r)| Identity::parse(l, r).expect("built-in identity"))
                .collect(),
        }
    }

    /// The four matrix-power identities for shift `s/1` and diagonal `d/k`.
    pub fn matrix_power(k: usize) -> Self {
        assert!(k >= 1, "matrix power arity must be positive");
        let v = |i: usize| Term::Var(i);
        let s = |t: Term| Term::Op("s".into(), vec![t]);
        let d = |args: Vec<Term>| Term::Op("d".into(), args);
        let mut out = Vec::new();
        out.push(Identity::new(d(vec![v(0); k]), v(0)));
        let mut sk = v(0);
        for _ in 0..k {
            sk = s(sk);
        }
        out.push(Identity::new(sk, v(0)));
        let lhs = s(d((0..k).map(v).collect()));
        // argument order matching the shift (y_1..y_k) -> (y_2..y_k, y_1)
        let rargs = (0..k).map(|i| s(v((i + 1) % k))).collect();
        out.push(Identity::new(lhs, d(rargs)));
        let rows = (0..k).map(|i| d((0..k).map(|j| v(i * k + j)).collect())).collect();
        out.push(Identity::new(d(rows), d((0..k).map(|i| v(i * k + i)).collect())));
        IdentitySet { identities: out }
    }

    /// First identity with an assignment where both sides differ.
    pub fn first_violation(
        &self,
        alg: &FiniteAlgebra,
        limits: &Limits,
    ) -> Result<Option<(usize, Vec<Elem>)>> {
        let n = alg.size();
        for (i, id) in self.identities.iter().enumerate() {
            let l = id.lhs.compile(alg.signature())?;
            let r = id.rhs.compile(alg.signature())?;
            let total = pow_u128(n, id.vars);
            if total > limits.max_sweep {
                return Err(Error::cap("identity check assignments", total, limits.max_sweep as usize));
            }
            let mut z = vec![0; id.vars];
            for idx in 0..total as usize {
                decode_index(idx, n, id.vars, &mut z);
                if l.eval(alg, &z) != r.eval(alg, &z) {
                    return Ok(Some((i, z)));
                }
            }
        }
        Ok(None)
    }

    pub fn satisfied_by(&self, alg: &FiniteAlgebra) -> Result<bool> {
        Ok(self.first_violation(alg, &Limits::default())?.is_none())
    }
}

/// Index of a node in a [`TermArena`].
pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var(usize),
    App(usize, Vec<NodeId>),
}

/// Hash-consed term DAG; symbol indices refer to one fixed signature.
#[derive(Clone, Debug, Default)]
pub struct TermArena {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl TermArena {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        self.nodes.push(node.clone());
        self.index.insert(node, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        self.intern(Node::Var(i))
    }

    pub fn app(&mut self, op: usize, args: Vec<NodeId>) -> NodeId {
        self.intern(Node::App(op, args))
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Replaces `Var(i)` by `subs[i]` throughout `root`.
    pub fn substitute(&mut self, root: NodeId, subs: &[NodeId]) -> NodeId {
        let mut memo: HashMap<NodeId, NodeId> = HashMap::new();
        self.subst_rec(root, subs, &mut memo)
    }

    fn subst_rec(&mut self, id: NodeId, subs: &[NodeId], memo: &mut HashMap<NodeId, NodeId>) -> NodeId {
        if let Some(&r) = memo.get(&id) {
            return r;
        }
        let r = match self.nodes[id].clone() {
            Node::Var(i) => subs[i],
            Node::App(op, args) => {
                let new_args = args.iter().map(|&a| self.subst_rec(a, subs, memo)).collect();
                self.app(op, new_args)
            }
        };
        memo.insert(id, r);
        r
    }

    /// Values of `root` at each assignment in `points`.
    pub fn eval_points(&self, root: NodeId, alg: &FiniteAlgebra, points: &[Vec<Elem>]) -> Vec<Elem> {
        let mut memo: HashMap<NodeId, Vec<Elem>> = HashMap::new();
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if memo.contains_key(&id) {
                continue;
            }
            match &self.nodes[id] {
                Node::Var(i) => {
                    memo.insert(id, points.iter().map(|p| p[*i]).collect());
                }
                Node::App(op, args) => {
                    if expanded {
                        let mut vals = Vec::with_capacity(points.len());
                        let mut a = vec![0; args.len()];
                        for p in 0..points.len() {
                            for (slot, &arg) in a.iter_mut().zip(args) {
                                *slot = memo[&arg][p];
                            }
                            vals.push(alg.apply(*op, &a));
                        }
                        memo.insert(id, vals);
                    } else {
                        stack.push((id, true));
                        for &arg in args {
                            stack.push((arg, false));
                        }
                    }
                }
            }
        }
        memo.remove(&root).unwrap()
    }

    /// Value of `root` at a single assignment.
    pub fn eval_at(&self, root: NodeId, alg: &FiniteAlgebra, point: &[Elem]) -> Elem {
        self.eval_points(root, alg, &[point.to_vec()])[0]
    }

    /// Copies the subgraph below `root` of `other` into this arena.
    pub fn import(&mut self, other: &TermArena, root: NodeId) -> NodeId {
        let mut memo: HashMap<NodeId, NodeId> = HashMap::new();
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if memo.contains_key(&id) {
                continue;
            }
            match &other.nodes[id] {
                Node::Var(i) => {
                    let v = self.var(*i);
                    memo.insert(id, v);
                }
                Node::App(op, args) => {
                    if expanded {
                        let kids = args.iter().map(|a| memo[a]).collect();
                        let n = self.app(*op, kids);
                        memo.insert(id, n);
                    } else {
                        stack.push((id, true));
                        stack.extend(args.iter().map(|&a| (a, false)));
                    }
                }
            }
        }
        memo[&root]
    }

    /// Number of nodes of the tree unfolding of `root`, saturating.
    pub fn tree_size(&self, root: NodeId) -> usize {
        let mut memo: HashMap<NodeId, usize> = HashMap::new();
        self.tree_size_rec(root, &mut memo)
    }

    fn tree_size_rec(&self, id: NodeId, memo: &mut HashMap<NodeId, usize>) -> usize {
        if let Some(&s) = memo.get(&id) {
            return s;
        }
        let s = match &self.nodes[id] {
            Node::Var(_) => 1,
            Node::App(_, args) => args
                .iter()
                .fold(1usize, |acc, &a| acc.saturating_add(self.tree_size_rec(a, memo))),
        };
        memo.insert(id, s);
        s
    }

    /// The term as text, or a size summary when its unfolding exceeds `limit`
    /// nodes.
    pub fn render(&self, root: NodeId, sig: &Signature, limit: usize) -> String {
        let size = self.tree_size(root);
        if size > limit {
            format!("<term with {size} nodes>")
        } else {
            self.to_term(root, sig).to_string()
        }
    }

    pub fn to_term(&self, root: NodeId, sig: &Signature) -> Term {
        match &self.nodes[root] {
            Node::Var(i) => Term::Var(*i),
            Node::App(op, args) => Term::Op(
                sig.name(*op).to_string(),
                args.iter().map(|&a| self.to_term(a, sig)).collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["x0", "one", "mul(x0,inv(x1))", "d(s(x2),x0,x1)"] {
            let t: Term = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("mul(x0,".parse::<Term>().is_err());
        assert!("mul(x0) x1".parse::<Term>().is_err());
    }

    #[test]
    fn evaluation_examples() {
        let sl = examples::semilattice2();
        let t: Term = "meet(meet(x0,x1),x0)".parse().unwrap();
        assert_eq!(eval_term(&sl, &t, &[1, 0]).unwrap(), 0);
        let z2 = examples::cyclic_group(2);
        assert_eq!(eval_term(&z2, &"mul(x0,x0)".parse().unwrap(), &[1]).unwrap(), 0);
        assert_eq!(eval_term(&z2, &Term::Var(0), &[1]).unwrap(), 1);
        assert!(matches!(
            eval_term(&z2, &"foo(x0)".parse().unwrap(), &[1]),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn built_in_identity_sets() {
        assert_eq!(IdentitySet::group().identities.len(), 5);
        assert_eq!(IdentitySet::semilattice().identities.len(), 3);
        let mp = IdentitySet::matrix_power(2);
        assert_eq!(mp.identities.len(), 4);
        assert_eq!(mp.identities[3].vars, 4);
        assert_eq!(mp.identities[2].to_string(), "s(d(x0,x1)) = d(s(x1),s(x0))");
        for g in [examples::cyclic_group(4), examples::symmetric_group3()] {
            assert!(IdentitySet::group().satisfied_by(&g).unwrap());
        }
        assert!(IdentitySet::semilattice().satisfied_by(&examples::chain(4)).unwrap());
    }

    #[test]
    fn arena_hash_conses_and_substitutes() {
        let z3 = examples::cyclic_group(3);
        let mul = z3.op_index("mul").unwrap();
        let mut arena = TermArena::new();
        let x0 = arena.var(0);
        let x1 = arena.var(1);
        let t = arena.app(mul, vec![x0, x1]);
        assert_eq!(arena.app(mul, vec![x0, x1]), t);
        let tt = arena.substitute(t, &[t, x1]);
        assert_eq!(arena.eval_at(tt, &z3, &[1, 1]), 0);
        assert_eq!(arena.to_term(tt, z3.signature()).to_string(), "mul(mul(x0,x1),x1)");
    }
}

//! Text format for algebras and relational structures.
//!
//! ```text
//! algebra <name>
//! size <n>
//! op <name> <arity>
//! <n^arity integers, row-major, first argument most significant>
//! rel <name> <arity> <count>     (relational structures only)
//! <count tuples, one per line>
//! ```
//! `#` starts a comment running to the end of the line.

use std::fmt::Write as _;

use crate::algebra::{checked_pow, FiniteAlgebra, RelationalStructure, Signature};
use crate::error::{Error, Result};

struct Token<'a> {
    line: usize,
    text: &'a str,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for t in line.split_whitespace() {
            out.push(Token { line: i + 1, text: t });
        }
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '*' || c == '-' || c == '^')
}

struct Cursor<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.toks.get(self.pos)
    }

    fn line(&self) -> usize {
        self.peek().map_or(self.last_line, |t| t.line)
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>> {
        let line = self.line();
        let t = self
            .toks
            .get(self.pos)
            .ok_or_else(|| perr(line, format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<usize> {
        let t = self.next(&format!("`{kw}`"))?;
        if t.text != kw {
            return Err(perr(t.line, format!("expected `{kw}`, found `{}`", t.text)));
        }
        Ok(t.line)
    }

    fn name(&mut self, what: &str) -> Result<(usize, String)> {
        let t = self.next(what)?;
        if !valid_name(t.text) {
            return Err(perr(t.line, format!("invalid {what} `{}`", t.text)));
        }
        Ok((t.line, t.text.to_string()))
    }

    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        let t = self.next(what)?;
        let v = t
            .text
            .parse::<usize>()
            .map_err(|_| perr(t.line, format!("expected {what}, found `{}`", t.text)))?;
        Ok((t.line, v))
    }

    fn at_number(&self) -> bool {
        self.peek().is_some_and(|t| t.text.bytes().all(|b| b.is_ascii_digit()))
    }
}

fn parse_algebra_part(cur: &mut Cursor<'_>) -> Result<FiniteAlgebra> {
    cur.keyword("algebra")?;
    let (_, name) = cur.name("algebra name")?;
    cur.keyword("size")?;
    let (size_line, size) = cur.number("universe size")?;
    if size == 0 {
        return Err(perr(size_line, "universe size must be positive"));
    }
    let mut sig = Signature::default();
    let mut tables = Vec::new();
    while cur.peek().is_some_and(|t| t.text == "op") {
        let op_line = cur.keyword("op")?;
        let (_, sym) = cur.name("symbol name")?;
        let (arity_line, arity) = cur.number("arity")?;
        if sig.index_of(&sym).is_some() {
            return Err(perr(op_line, format!("duplicate symbol `{sym}`")));
        }
        let len = checked_pow(size, arity)
            .filter(|&l| l <= 1 << 28)
            .ok_or_else(|| perr(arity_line, format!("table of `{sym}` is too large")))?;
        let mut table = Vec::with_capacity(len);
        for _ in 0..len {
            if !cur.at_number() {
                return Err(perr(
                    cur.line(),
                    format!("table of `{sym}` has {} entries, expected {len}", table.len()),
                ));
            }
            let (line, v) = cur.number("table entry")?;
            if v >= size {
                return Err(perr(line, format!("entry {v} out of range for size {size}")));
            }
            table.push(v);
        }
        if cur.at_number() {
            return Err(perr(
                cur.line(),
                format!("table of `{sym}` has more than {len} entries"),
            ));
        }
        sig.push(sym, arity).expect("checked above");
        tables.push(table);
    }
    FiniteAlgebra::new(name, size, sig, tables).map_err(|e| perr(cur.line(), e.to_string()))
}

fn finish(cur: &Cursor<'_>) -> Result<()> {
    match cur.peek() {
        None => Ok(()),
        Some(t) => Err(perr(t.line, format!("unexpected `{}`", t.text))),
    }
}

fn cursor(text: &str) -> Cursor<'_> {
    let last_line = text.lines().count().max(1);
    Cursor { toks: tokenize(text), pos: 0, last_line }
}

pub fn parse_algebra(text: &str) -> Result<FiniteAlgebra> {
    let mut cur = cursor(text);
    let alg = parse_algebra_part(&mut cur)?;
    finish(&cur)?;
    Ok(alg)
}

pub fn parse_structure(text: &str) -> Result<RelationalStructure> {
    let mut cur = cursor(text);
    let alg = parse_algebra_part(&mut cur)?;
    let n = alg.size();
    let mut st = RelationalStructure::new(alg);
    while cur.peek().is_some_and(|t| t.text == "rel") {
        let rel_line = cur.keyword("rel")?;
        let (_, name) = cur.name("relation name")?;
        let (_, arity) = cur.number("arity")?;
        let (_, count) = cur.number("tuple count")?;
        let mut tuples = Vec::with_capacity(count);
        for _ in 0..count {
            let mut t = Vec::with_capacity(arity);
            for _ in 0..arity {
                if !cur.at_number() {
                    return Err(perr(cur.line(), format!("relation `{name}` has too few entries")));
                }
                let (line, v) = cur.number("tuple entry")?;
                if v >= n {
                    return Err(perr(line, format!("entry {v} out of range for size {n}")));
                }
                t.push(v);
            }
            tuples.push(t);
        }
        st.add_relation(&name, arity, tuples).map_err(|e| perr(rel_line, e.to_string()))?;
    }
    finish(&cur)?;
    Ok(st)
}

/// `name` with characters the parser rejects replaced by `_`.
fn printable_name(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if valid_name(&format!("a{c}")) { c } else { '_' })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string();
    if !valid_name(&s) {
        s.insert(0, '_');
    }
    s
}

/// Text form of `alg`; the algebra name is sanitized so the output always
/// parses back.
pub fn serialize_algebra(alg: &FiniteAlgebra) -> String {
    let mut out = String::new();
    writeln!(out, "algebra {}", printable_name(alg.name())).unwrap();
    writeln!(out, "size {}", alg.size()).unwrap();
    for (op, sym) in alg.signature().symbols().iter().enumerate() {
        writeln!(out, "op {} {}", sym.name, sym.arity).unwrap();
        let row = if sym.arity == 0 { 1 } else { alg.size() };
        for chunk in alg.table(op).chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    }
    out
}

pub fn serialize_structure(st: &RelationalStructure) -> String {
    let mut out = serialize_algebra(&st.algebra);
    for rel in st.relations() {
        writeln!(out, "rel {} {} {}", rel.name, rel.arity, rel.tuples().len()).unwrap();
        for t in rel.tuples() {
            let line: Vec<String> = t.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn parses_commented_table() {
        let text = "# groupoid\nalgebra A\nsize 3\nop mul 2\n0 0 2 # row 0\n0 1 2\n1 0 2\n";
        let a = parse_algebra(text).unwrap();
        assert_eq!(a, examples::unary_quotient().with_name("A"));
        assert_eq!(a.apply(0, &[0, 1]), 0);
        assert_eq!(a.apply(0, &[2, 0]), 1);
    }

    #[test]
    fn generated_names_round_trip() {
        for name in ["Fab(A,3)", "Y2^[2]", "9x", "", "ok_name"] {
            let a = examples::semilattice2().with_name(name);
            let b = parse_algebra(&serialize_algebra(&a)).unwrap();
            assert_eq!(b.tables(), a.tables());
        }
        assert_eq!(printable_name("Fab(A,3)"), "Fab_A_3");
        assert_eq!(printable_name("ok_name"), "ok_name");
    }

    #[test]
    fn one_element_algebra() {
        let a = parse_algebra("algebra t\nsize 1\nop f 2\n0\n").unwrap();
        assert_eq!(a.size(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("algebra A\nsize 2\nop f x\n0 0 0 0\n", 3),
            ("algebra A\nsize 2\nop f 2\n0 0 0\n", 4),
            ("algebra A\nsize 2\nop f 1\n0 2\n", 4),
            ("algebra A\nsize 2\nop f 1\n0 1\nop f 1\n0 1\n", 5),
            ("algebra A\nsize 2\nop f 1\n0 1 1\n", 4),
            ("algebra A\nsize 2\nop f 1\n0 1\nop g\n", 5),
        ];
        for (text, line) in cases {
            match parse_algebra(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn round_trips() {
        for a in [
            examples::symmetric_group3(),
            examples::bare_set(2),
            examples::rock_paper_scissors(),
            crate::algebra::expand_with_constants(&examples::chain(3)),
        ] {
            assert_eq!(parse_algebra(&serialize_algebra(&a)).unwrap(), a);
        }
    }

    #[test]
    fn structure_round_trip() {
        let mut st = RelationalStructure::new(examples::bare_set(3));
        st.add_relation("R", 3, vec![vec![0, 0, 1], vec![0, 1, 0]]).unwrap();
        let text = serialize_structure(&st);
        assert_eq!(parse_structure(&text).unwrap(), st);
        assert!(parse_structure("algebra s\nsize 2\nrel R 2 1\n0 5\n").is_err());
    }
}

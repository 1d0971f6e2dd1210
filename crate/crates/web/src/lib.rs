//! Browser bindings: each export takes algebra files as text and returns a
//! JSON object, `{"error": ...}` on failure.

use finalg::abelian::analyze;
use finalg::format::parse_algebra;
use finalg::homenum::{enumerate_with, Method};
use finalg::lattice::all_congruences;
use finalg::{Error, FiniteAlgebra};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest number of homomorphisms listed in full.
const LIST_LIMIT: usize = 200;

fn load(label: &str, text: &str) -> Result<FiniteAlgebra, String> {
    parse_algebra(text).map_err(|e| format!("{label}: {e}"))
}

fn fail(e: Error) -> String {
    e.to_string()
}

fn render(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Classification report as a `key=value` map plus the text rendering.
pub fn analyze_json(text: &str) -> Result<Value, String> {
    let a = load("algebra", text)?;
    let report = analyze(&a).map_err(fail)?;
    let kv: serde_json::Map<String, Value> = report
        .to_kv()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
        .collect();
    Ok(json!({ "kv": kv, "text": report.to_text() }))
}

/// `Hom(X, A)` counts by the named method, with up to [`LIST_LIMIT`] maps.
pub fn count_json(source: &str, target: &str, method: &str) -> Result<Value, String> {
    let x = load("source", source)?;
    let a = load("target", target)?;
    let method = match method {
        "brute" => Method::Brute,
        "special" => Method::Special,
        "pieces" => Method::Pieces,
        "auto" => Method::Auto { threshold: 8 },
        other => return Err(format!("unknown method `{other}`")),
    };
    let (set, cands) = enumerate_with(&x, &a, method).map_err(fail)?;
    let maps: Vec<Vec<usize>> = set.maps().iter().take(LIST_LIMIT).map(|h| h.images().to_vec()).collect();
    Ok(json!({
        "homs": set.len(),
        "surjective_homs": set.surjective().len(),
        "max_candidates": cands,
        "maps": maps,
        "truncated": set.len() > LIST_LIMIT,
    }))
}

/// Congruences as block lists and covering pairs as index pairs.
pub fn lattice_json(text: &str) -> Result<Value, String> {
    let a = load("algebra", text)?;
    let lat = all_congruences(&a).map_err(fail)?;
    let congruences: Vec<Vec<Vec<usize>>> = lat.congruences().iter().map(|c| c.blocks()).collect();
    Ok(json!({
        "congruences": congruences,
        "covers": lat.covers(),
        "bottom": lat.bottom(),
        "top": lat.top(),
    }))
}

#[wasm_bindgen]
pub fn analyze_algebra(text: &str) -> String {
    render(analyze_json(text))
}

#[wasm_bindgen]
pub fn count_homs(source: &str, target: &str, method: &str) -> String {
    render(count_json(source, target, method))
}

#[wasm_bindgen]
pub fn congruence_lattice(text: &str) -> String {
    render(lattice_json(text))
}

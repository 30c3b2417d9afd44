//! WebAssembly bindings behind `www/index.html`. Each export returns a JSON
//! string; the `*_json` functions carry the logic and are usable natively.

use serde::Serialize;
use sublinear_ldp::fenchel::{exposed_point_test, flat_region};
use sublinear_ldp::ldp_lab::{counterexample_report, figure1_data, VerdictThresholds};
use sublinear_ldp::{GridSpec, LabError};
use wasm_bindgen::prelude::*;

/// Largest `n` the page may request; the binomial table is `O(n)` per row.
pub const MAX_N: u64 = 200_000;

#[derive(Serialize)]
struct Curves {
    p: f64,
    flat: (f64, f64),
    x: Vec<f64>,
    i_p: Vec<f64>,
    i: Vec<f64>,
}

/// `I_p` and `I` sampled on `0:1:step`, with the flat region `[p², p(2-p)]`.
pub fn rate_curves_json(p: f64, step: f64) -> Result<String, LabError> {
    let rows = figure1_data(p, &GridSpec::new(0.0, 1.0, step)?)?;
    let curves = Curves {
        p,
        flat: flat_region(p),
        x: rows.iter().map(|r| r.x).collect(),
        i_p: rows.iter().map(|r| r.i_p).collect(),
        i: rows.iter().map(|r| r.i).collect(),
    };
    Ok(serde_json::to_string(&curves).expect("finite curves serialize"))
}

pub fn counterexample_json(p: f64, a: f64, b: f64, ns: &[u32]) -> Result<String, LabError> {
    let ns: Vec<u64> = ns.iter().map(|&n| u64::from(n)).collect();
    if let Some(n) = ns.iter().find(|&&n| n > MAX_N) {
        return Err(LabError::Capability(format!("n = {n} exceeds the demo limit {MAX_N}")));
    }
    let report = counterexample_report(p, a, b, &ns, &VerdictThresholds::default())?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

pub fn exposed_json(p: f64, y: f64) -> Result<String, LabError> {
    let verdict = exposed_point_test(p, y, &GridSpec::new(0.0, 1.0, 0.001)?)?;
    Ok(serde_json::to_string(&verdict).expect("verdict serializes"))
}

fn js(r: Result<String, LabError>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = rateCurves)]
pub fn rate_curves(p: f64, step: f64) -> Result<String, JsError> {
    js(rate_curves_json(p, step))
}

#[wasm_bindgen]
pub fn counterexample(p: f64, a: f64, b: f64, ns: Vec<u32>) -> Result<String, JsError> {
    js(counterexample_json(p, a, b, &ns))
}

#[wasm_bindgen]
pub fn exposed(p: f64, y: f64) -> Result<String, JsError> {
    js(exposed_json(p, y))
}

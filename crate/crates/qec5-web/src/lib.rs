//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string (or DOT text). The plain functions
//! below the bindings do the work so they can be tested natively.

use qec5::code5::{build_check_matrix, memory_circuit};
use qec5::decoders::{check_success, Decoder, DecoderKind};
use qec5::detector_graph::{activate, build_graph, DetectionEvent, DetectorModel, EdgeLabel};
use qec5::experiments::{concatenation_curves, log_grid, threshold, FitResult, PUBLISHED_FITS};
use qec5::noise::{NoiseKind, NoiseModel};
use qec5::{pauli_mul, Dim, PauliString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_DIM: u32 = 13;
const MAX_CYCLES: usize = 4;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Detector graph as DOT.
#[wasm_bindgen]
pub fn graph_dot(q: u32, cycles: usize) -> Result<String, JsError> {
    js(dot(q, cycles))
}

/// Detector graph as `{nodes, edges, components}` JSON.
#[wasm_bindgen]
pub fn graph_json(q: u32, cycles: usize) -> Result<String, JsError> {
    js(graph(q, cycles).map(|v| v.to_string()))
}

/// Decodes one data error `X^r Z^s` on `site` from its noiseless syndrome.
#[wasm_bindgen]
pub fn decode_single_error(q: u32, site: usize, r: u32, s: u32, decoder: &str) -> Result<String, JsError> {
    js(decode(q, site, r, s, decoder).map(|v| v.to_string()))
}

/// Threshold and level curves for `P_L = a p^b`.
#[wasm_bindgen]
pub fn concatenation(a: f64, b: f64, levels: u32) -> Result<String, JsError> {
    js(curves(a, b, levels).map(|v| v.to_string()))
}

/// The published fits as `[{q, flag, a, b, threshold}]`.
#[wasm_bindgen]
pub fn published_fits() -> String {
    let rows: Vec<Value> = PUBLISHED_FITS
        .iter()
        .map(|&(q, flag, a, b, t)| json!({"q": q, "flag": flag, "a": a, "b": b, "threshold": t}))
        .collect();
    Value::Array(rows).to_string()
}

fn dim(q: u32) -> Result<Dim, String> {
    if q > MAX_DIM {
        return Err(format!("dimension above {MAX_DIM} is too large for the demo"));
    }
    Dim::new(q).map_err(|e| e.to_string())
}

fn checked_cycles(cycles: usize) -> Result<usize, String> {
    if (1..=MAX_CYCLES).contains(&cycles) {
        Ok(cycles)
    } else {
        Err(format!("cycles must be between 1 and {MAX_CYCLES}"))
    }
}

pub fn dot(q: u32, cycles: usize) -> Result<String, String> {
    Ok(build_graph(&build_check_matrix(dim(q)?), checked_cycles(cycles)?).to_dot())
}

pub fn graph(q: u32, cycles: usize) -> Result<Value, String> {
    let g = build_graph(&build_check_matrix(dim(q)?), checked_cycles(cycles)?);
    let comps = g.components();
    let mut comp_of = vec![0; g.nodes.len()];
    for (ci, c) in comps.iter().enumerate() {
        for &n in c {
            comp_of[n] = ci;
        }
    }
    let nodes: Vec<Value> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| json!({"id": i, "check": n.check, "value": n.value, "cycle": n.cycle, "component": comp_of[i]}))
        .collect();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| {
            let kind = if matches!(e.label, EdgeLabel::Measurement { .. }) { "measurement" } else { "data" };
            json!({"nodes": e.nodes, "label": e.label.to_string(), "kind": kind})
        })
        .collect();
    Ok(json!({"q": q, "cycles": cycles, "nodes": nodes, "edges": edges, "components": comps.len()}))
}

pub fn decode(q: u32, site: usize, r: u32, s: u32, decoder: &str) -> Result<Value, String> {
    let d = dim(q)?;
    if site >= 5 {
        return Err("site must be 0..4".into());
    }
    let kind: DecoderKind = decoder.parse().map_err(|e: qec5::Error| e.to_string())?;
    let code = build_check_matrix(d);
    let error = PauliString::single(d, 5, site, r % q, s % q);
    let syndrome = code.syndrome(&error);
    let circuit = memory_circuit(d, 1, false).map_err(|e| e.to_string())?;
    let noise = NoiseModel::new(NoiseKind::StandardDepolarizing(0.01), d).map_err(|e| e.to_string())?;
    let model = DetectorModel::build(&circuit, &noise, &code).map_err(|e| e.to_string())?;
    let dec = Decoder::new(kind, model.dem());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let correction = dec.decode(&syndrome, &mut rng).map_err(|e| e.to_string())?;
    let residual = pauli_mul(&error, &correction).map_err(|e| e.to_string())?;
    let events: Vec<DetectionEvent> = syndrome
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(check, &value)| DetectionEvent { check, cycle: 0, value })
        .collect();
    let lit = activate(&build_graph(&code, 1), &events).map_err(|e| e.to_string())?;
    Ok(json!({
        "error": error.to_string(),
        "syndrome": syndrome,
        "active_nodes": lit.into_iter().collect::<Vec<_>>(),
        "correction": correction.to_string(),
        "residual": residual.phaseless().to_string(),
        "success": check_success(&residual, &code),
    }))
}

pub fn curves(a: f64, b: f64, levels: u32) -> Result<Value, String> {
    if !(a > 0.0 && b.is_finite()) {
        return Err("a must be positive and b finite".into());
    }
    if !(1..=5).contains(&levels) {
        return Err("levels must be between 1 and 5".into());
    }
    let fit = FitResult { a, b, cov: [[0.0; 2]; 2] };
    let t = threshold(&fit).map_err(|e| e.to_string())?;
    let grid = log_grid(t / 100.0, (t * 100.0).min(1.0), 81);
    let curves: Vec<Value> = concatenation_curves(&fit, levels, &grid)
        .into_iter()
        .map(|c| json!({"level": c.level, "n": c.n, "distance": c.distance, "points": c.points}))
        .collect();
    Ok(json!({"threshold": t, "curves": curves}))
}

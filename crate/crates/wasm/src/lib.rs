//! Browser bindings: every export takes plain numbers or JSON text and
//! returns JSON text.

use peerbias::harness::{run_iteration, ScenarioConfig, TestKind};
use peerbias::hypothesis::{counting_test, disagreement_test, PermutationPlan};
use peerbias::types::{DecisionTuple, TupleSet};
use peerbias::RngStream;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse_tuples(text: &str) -> Result<TupleSet, String> {
    let rows: Vec<(u8, u8, i8)> = serde_json::from_str(text).map_err(|e| format!("expected [[sb, db, w], ...]: {e}"))?;
    let tuples = rows
        .iter()
        .enumerate()
        .map(|(k, &(sb, db, w))| {
            if sb > 1 || db > 1 || (w != 1 && w != -1) {
                return Err(format!("row {k}: decisions must be 0/1 and w must be 1 or -1"));
            }
            Ok(DecisionTuple {
                paper: k,
                sb_decision: sb,
                db_decision: db,
                properties: vec![w],
                sb_reviewer: 2 * k,
                db_reviewer: 2 * k + 1,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TupleSet::new(tuples))
}

/// Disagreement and Counting tests on `[[sb, db, w], ...]`.
pub fn run_tests(tuples_json: &str, alpha: f64, seed: u64) -> Result<String, String> {
    let t = parse_tuples(tuples_json)?;
    let plan = PermutationPlan::new(RngStream::new(seed));
    let dis = disagreement_test(&t, alpha, &plan).map_err(|e| e.to_string())?;
    let cnt = counting_test(&t, alpha).map_err(|e| e.to_string())?;
    Ok(json!({ "disagreement": dis, "counting": cnt }).to_string())
}

/// Rejection rates of a registered scenario at one sweep value, with `n`
/// papers when given (0 keeps the registered size).
pub fn scenario_point(scenario: &str, sweep_value: f64, n: usize, iterations: usize, seed: u64) -> Result<String, String> {
    let mut cfg = ScenarioConfig::registered(scenario).map_err(|e| e.to_string())?;
    if iterations == 0 || iterations > 2000 {
        return Err("iterations must be between 1 and 2000".into());
    }
    cfg.grid = vec![sweep_value];
    cfg.iterations = iterations;
    cfg.seed = seed;
    if n > 0 {
        if cfg.sweep_name == "n" {
            cfg.grid = vec![n as f64];
        } else {
            cfg.params.insert("n".into(), n as f64);
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    let mut rejects = vec![0usize; cfg.tests.len()];
    let mut effects = vec![0.0; cfg.tests.len()];
    for it in 0..iterations {
        let outcomes = run_iteration(&cfg, 0, it).map_err(|e| e.to_string())?;
        for (k, o) in outcomes.iter().enumerate() {
            rejects[k] += usize::from(o.reject);
            effects[k] += o.effect_size;
        }
    }
    let rows: Vec<Value> = cfg
        .tests
        .iter()
        .enumerate()
        .map(|(k, t)| {
            json!({
                "test": t.name(),
                "rejection_rate": rejects[k] as f64 / iterations as f64,
                "mean_effect": effects[k] / iterations as f64,
            })
        })
        .collect();
    Ok(json!({
        "scenario": scenario,
        "sweep_name": cfg.sweep_name,
        "sweep_value": cfg.grid[0],
        "iterations": iterations,
        "rows": rows,
    })
    .to_string())
}

/// Counting and Disagreement rates on one of the two dual instances.
pub fn dual_instance(instance: u8, n: usize, iterations: usize, seed: u64) -> Result<String, String> {
    if instance != 1 && instance != 2 {
        return Err("instance must be 1 or 2".into());
    }
    let text = scenario_point("fig5a", f64::from(instance), n, iterations, seed)?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let (linear, logistic) = if instance == 1 {
        ("null", "alternative (bias in favour)")
    } else {
        ("alternative (bias against)", "null")
    };
    v["linear_reading"] = json!(linear);
    v["logistic_reading"] = json!(logistic);
    v["tests"] = json!([TestKind::Counting.name(), TestKind::Disagreement.name()]);
    Ok(v.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = runTests)]
pub fn run_tests_js(tuples_json: &str, alpha: f64, seed: u32) -> Result<String, JsValue> {
    js(run_tests(tuples_json, alpha, u64::from(seed)))
}

#[wasm_bindgen(js_name = scenarioPoint)]
pub fn scenario_point_js(scenario: &str, sweep_value: f64, n: u32, iterations: u32, seed: u32) -> Result<String, JsValue> {
    js(scenario_point(scenario, sweep_value, n as usize, iterations as usize, u64::from(seed)))
}

#[wasm_bindgen(js_name = dualInstance)]
pub fn dual_instance_js(instance: u8, n: u32, iterations: u32, seed: u32) -> Result<String, JsValue> {
    js(dual_instance(instance, n as usize, iterations as usize, u64::from(seed)))
}

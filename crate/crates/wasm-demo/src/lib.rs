//! Browser bindings: each export takes plain numbers and returns a JSON string,
//! either the result document or `{"error": ..., "message": ...}`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use wilks::betamodel::fit_mle;
use wilks::graphdata::simulate_beta_graph;
use wilks::montecarlo::build_truth;
use wilks::{Model, RegimeChoice, Runner, Schedule, SimScenario, Tolerance, WilksError};

// browser work is interactive, keep it bounded
const MAX_N: usize = 2000;
const MAX_REPS: usize = 5000;

#[derive(Serialize)]
struct GraphFit {
    n: usize,
    edges: usize,
    degrees: Vec<usize>,
    truth: Vec<f64>,
    beta_hat: Vec<f64>,
    se: Vec<f64>,
    iterations: usize,
    max_abs_error: f64,
}

#[derive(Serialize)]
struct QqPoints {
    r: usize,
    reps_effective: usize,
    nonexistent: usize,
    ks: Option<f64>,
    empirical: Vec<f64>,
    normal_q: Vec<f64>,
}

#[derive(Serialize)]
struct PowerPoint {
    c: f64,
    lrt: f64,
    wald: Option<f64>,
}

fn model(name: &str) -> Result<Model, WilksError> {
    match name {
        "beta" => Ok(Model::Beta),
        "bt" => Ok(Model::Bt),
        other => Err(WilksError::Domain(format!("unknown model {other:?}"))),
    }
}

fn check_size(n: usize, reps: usize) -> Result<(), WilksError> {
    if n > MAX_N || reps > MAX_REPS {
        return Err(WilksError::InvalidScenario(format!("demo limits: n <= {MAX_N}, reps <= {MAX_REPS}")));
    }
    Ok(())
}

fn to_json<T: Serialize>(r: Result<T, WilksError>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string(),
    }
}

/// Draws a β-model graph under `L_n = ln_factor * log n` and fits it.
pub fn fit_random_graph_doc(n: usize, ln_factor: f64, seed: u64) -> Result<impl Serialize, WilksError> {
    check_size(n, 0)?;
    let mut s = SimScenario::new(Model::Beta, Schedule::H01, n);
    s.ln_factor = ln_factor;
    let truth = build_truth(&s)?;
    let g = simulate_beta_graph(&truth, seed)?;
    let fit = fit_mle(&g, &Tolerance::default())?;
    let max_abs_error = fit
        .beta_hat
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(GraphFit {
        n,
        edges: g.edge_count(),
        degrees: g.degrees().to_vec(),
        truth: truth.into_values(),
        beta_hat: fit.beta_hat.values().to_vec(),
        se: fit.se,
        iterations: fit.iterations,
        max_abs_error,
    })
}

/// QQ points of `(lrt - r) / sqrt(2r)` under the simple null on every β.
pub fn qq_points_doc(n: usize, ln_factor: f64, reps: usize, seed: u64) -> Result<impl Serialize, WilksError> {
    check_size(n, reps)?;
    let mut s = SimScenario::new(Model::Beta, Schedule::H01, n);
    s.ln_factor = ln_factor;
    s.reps = reps;
    s.master_seed = seed;
    s.regime = RegimeChoice::Normal;
    let report = Runner::new(Some(1)).type1(&s)?;
    let rows = wilks::montecarlo::qq_table(&report.normalized_statistics(), report.normal_r)?;
    Ok(QqPoints {
        r: report.normal_r,
        reps_effective: report.reps_effective(),
        nonexistent: report.nonexistent,
        ks: report.ks_distance_normal,
        empirical: rows.iter().map(|q| q.empirical).collect(),
        normal_q: rows.iter().map(|q| q.normal_q).collect(),
    })
}

/// Rejection rate at level 0.05 for `steps + 1` separations evenly spaced on `[0, c_max]`.
#[allow(clippy::too_many_arguments)]
pub fn power_curve_doc(
    model_name: &str,
    n: usize,
    r: usize,
    k: u64,
    reps: usize,
    seed: u64,
    c_max: f64,
    steps: usize,
) -> Result<impl Serialize, WilksError> {
    check_size(n, reps.saturating_mul(steps + 1))?;
    if steps == 0 || !(c_max.is_finite() && c_max >= 0.0) {
        return Err(WilksError::InvalidScenario("need steps >= 1 and a finite c_max >= 0".into()));
    }
    let runner = Runner::new(Some(1));
    (0..=steps)
        .map(|i| {
            let mut s = SimScenario::new(model(model_name)?, Schedule::Power, n);
            s.r = Some(r);
            s.k_common = k;
            s.reps = reps;
            s.master_seed = seed;
            s.alpha_levels = vec![0.05];
            s.c = c_max * i as f64 / steps as f64;
            let rep = runner.power(&s)?;
            Ok(PowerPoint {
                c: s.c,
                lrt: rep.rate_at(0.05).unwrap_or(f64::NAN),
                wald: rep.wald_rate_at(0.05),
            })
        })
        .collect::<Result<Vec<_>, _>>()
}

#[wasm_bindgen]
pub fn fit_random_graph(n: usize, ln_factor: f64, seed: u64) -> String {
    to_json(fit_random_graph_doc(n, ln_factor, seed))
}

#[wasm_bindgen]
pub fn qq_points(n: usize, ln_factor: f64, reps: usize, seed: u64) -> String {
    to_json(qq_points_doc(n, ln_factor, reps, seed))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn power_curve(model: &str, n: usize, r: usize, k: u64, reps: usize, seed: u64, c_max: f64, steps: usize) -> String {
    to_json(power_curve_doc(model, n, r, k, reps, seed, c_max, steps))
}

//! JSON-in, JSON-out entry points for the browser page in `www/`.
//! The plain functions are usable natively; the `#[wasm_bindgen]` wrappers turn errors into JS exceptions.

use serde::Serialize;
use std::sync::Arc;
use synthsel_core::data::Dataset;
use synthsel_core::aggregate::{run_graph_selection, run_selection, Generator, GraphOptions, GraphRule, SelectionOptions};
use synthsel_core::numerics::RngStream;
use synthsel_core::selectors::{lambda_grid, lambda_max, lasso_path, select_lambda_ebic, EbicOptions, Family};
use synthsel_core::simbench::{
    make_small_world, make_true_model, sample_dataset, score_edges, score_selection, Scenario, ScenarioOptions,
    TrueModel,
};
use wasm_bindgen::prelude::*;

fn scenario(name: &str) -> Result<Scenario, String> {
    match name {
        "iid_s5" => Ok(Scenario::IidS5),
        "ar10" => Ok(Scenario::Ar10),
        "block5" => Ok(Scenario::Block5),
        other => Err(format!("unknown scenario '{other}' (iid_s5, ar10, block5)")),
    }
}

fn draw(name: &str, n: usize, p: usize, seed: u64) -> Result<(TrueModel, Dataset), String> {
    let stream = RngStream::new(seed, 0);
    let opts = ScenarioOptions { n, ..Default::default() };
    let tm = make_true_model(scenario(name)?, p, &opts, &mut stream.rng()).map_err(|e| e.to_string())?;
    let d = sample_dataset(&tm, n, &mut stream.derive(1).rng()).map_err(|e| e.to_string())?;
    Ok((tm, d))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[derive(Serialize)]
struct Scored {
    selected: Vec<usize>,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn scored(selected: Vec<usize>, truth: &[usize], p: usize) -> Scored {
    let m = score_selection(&selected, truth, p);
    Scored {
        selected,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    }
}

#[derive(Serialize)]
struct SelectionDemo {
    truth: Vec<usize>,
    raw_lasso: Scored,
    aggregate: Scored,
    pi_hat: Vec<f64>,
}

/// EBIC-lasso on one simulated dataset next to the aggregate over `replicates` synthetic copies.
/// `generator` is "oracle" (fresh draws from the true model) or "bootstrap" (resampled rows).
pub fn selection_demo(
    scenario: &str,
    n: usize,
    p: usize,
    replicates: usize,
    pi_thres: f64,
    generator: &str,
    seed: u64,
) -> Result<String, String> {
    let (tm, d) = draw(scenario, n, p, seed)?;
    let raw = select_lambda_ebic(&d.features(), &d.response(), Family::Linear, &EbicOptions::default())
        .map_err(|e| e.to_string())?;
    let g = match generator {
        "oracle" => Generator::oracle(tm.clone(), n),
        "bootstrap" => Generator::bootstrap(Arc::new(d)),
        other => return Err(format!("unknown generator '{other}' (oracle, bootstrap)")),
    };
    let opts = SelectionOptions {
        replicates,
        pi_thres,
        ..Default::default()
    };
    let r = run_selection(&g, &opts, seed).map_err(|e| e.to_string())?;
    Ok(json(&SelectionDemo {
        raw_lasso: scored(raw.active_set, &tm.support, p),
        aggregate: scored(r.active_set, &tm.support, p),
        pi_hat: r.pi_hat,
        truth: tm.support,
    }))
}

#[derive(Serialize)]
struct PathDemo {
    lambdas: Vec<f64>,
    /// `coefficients[k][j]` at `lambdas[k]`.
    coefficients: Vec<Vec<f64>>,
    chosen_lambda: f64,
    truth: Vec<usize>,
}

/// Coefficient paths over a 50-point λ grid and the λ picked by EBIC.
pub fn lasso_path_demo(scenario: &str, n: usize, p: usize, seed: u64) -> Result<String, String> {
    let (tm, d) = draw(scenario, n, p, seed)?;
    let (x, y) = (d.features(), d.response());
    let ebic = EbicOptions::default();
    let lambdas = lambda_grid(lambda_max(&x, &y), ebic.grid_size, ebic.min_ratio);
    let fits = lasso_path(&x, &y, Family::Linear, &lambdas).map_err(|e| e.to_string())?;
    let chosen = select_lambda_ebic(&x, &y, Family::Linear, &ebic).map_err(|e| e.to_string())?;
    Ok(json(&PathDemo {
        coefficients: fits.into_iter().map(|f| f.coefficients).collect(),
        lambdas,
        chosen_lambda: chosen.lambda,
        truth: tm.support,
    }))
}

#[derive(Serialize)]
struct GraphDemo {
    p: usize,
    truth: Vec<(usize, usize)>,
    selected: Vec<(usize, usize)>,
    edge_pi_hat: Vec<Vec<f64>>,
    precision: f64,
    recall: f64,
    f1: f64,
}

/// Neighbourhood selection on a small-world Gaussian graphical model, oracle generator.
/// `rule` is "or" or "and".
#[allow(clippy::too_many_arguments)]
pub fn graph_demo(
    p: usize,
    k_neighbors: usize,
    rewire_prob: f64,
    n: usize,
    replicates: usize,
    pi_thres: f64,
    rule: &str,
    seed: u64,
) -> Result<String, String> {
    let truth = make_small_world(p, k_neighbors, rewire_prob, 0.3, &mut RngStream::new(seed, 0).rng())
        .map_err(|e| e.to_string())?;
    let rule = match rule {
        "or" => GraphRule::Or,
        "and" => GraphRule::And,
        other => return Err(format!("unknown rule '{other}' (or, and)")),
    };
    let opts = GraphOptions {
        replicates,
        pi_thres,
        rule,
        ..Default::default()
    };
    let true_edges = truth.edges();
    let r = run_graph_selection(&Generator::graph_oracle(truth, n), &opts, seed).map_err(|e| e.to_string())?;
    let m = score_edges(&r.edge_set, &true_edges);
    Ok(json(&GraphDemo {
        p,
        edge_pi_hat: (0..p).map(|i| r.edge_pi_hat.row(i).to_vec()).collect(),
        selected: r.edge_set,
        truth: true_edges,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    }))
}

#[wasm_bindgen(js_name = selectionDemo)]
pub fn selection_demo_js(
    scenario: &str,
    n: usize,
    p: usize,
    replicates: usize,
    pi_thres: f64,
    generator: &str,
    seed: u32,
) -> Result<String, JsError> {
    selection_demo(scenario, n, p, replicates, pi_thres, generator, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lassoPathDemo)]
pub fn lasso_path_demo_js(scenario: &str, n: usize, p: usize, seed: u32) -> Result<String, JsError> {
    lasso_path_demo(scenario, n, p, seed.into()).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = graphDemo)]
pub fn graph_demo_js(
    p: usize,
    k_neighbors: usize,
    rewire_prob: f64,
    n: usize,
    replicates: usize,
    pi_thres: f64,
    rule: &str,
    seed: u32,
) -> Result<String, JsError> {
    graph_demo(p, k_neighbors, rewire_prob, n, replicates, pi_thres, rule, seed.into()).map_err(|e| JsError::new(&e))
}

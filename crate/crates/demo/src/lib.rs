//! Browser bindings for three interactive views: the composite sign curve,
//! a single encrypted argmax window and the method cost curve.
//!
//! Every export returns a JSON string; failures come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hevote_core::argmax::{self, NormBounds, PackingLayout};
use hevote_core::bench::{self, BackendKind, BenchConfig, Method};
use hevote_core::sign::{CompositeSign, SignConfig};
use hevote_core::{BackendParams, ExactBackend, HomBackend};

/// Ring degree used by the demo; small enough to stay interactive.
const DEMO_RING: usize = 4096;

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
struct SignCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    depth: u32,
    margin: f64,
    /// Largest `|p(x) - sign(x)|` among plotted points outside the margin.
    max_err: f64,
}

/// Samples `f^d_f(g^d_g(x))` at `points` evenly spaced inputs on `[lo, hi]`.
#[wasm_bindgen]
pub fn sign_curve(
    alpha: u32,
    d_f: u32,
    d_g: u32,
    degree: usize,
    lo: f64,
    hi: f64,
    points: usize,
) -> String {
    respond(sign_curve_inner(alpha, d_f, d_g, degree, lo, hi, points))
}

fn sign_curve_inner(
    alpha: u32,
    d_f: u32,
    d_g: u32,
    degree: usize,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<SignCurve, String> {
    if !(-1.0..=1.0).contains(&lo) || !(-1.0..=1.0).contains(&hi) || lo >= hi {
        return Err("range must satisfy -1 <= lo < hi <= 1".into());
    }
    if !(2..=20_000).contains(&points) {
        return Err("points must be in [2, 20000]".into());
    }
    let config = SignConfig::new(alpha, d_f, d_g, degree).map_err(|e| e.to_string())?;
    let margin = config.margin();
    let sign = CompositeSign::new(config);
    let step = (hi - lo) / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| sign.eval_scalar(*x)).collect();
    let max_err = xs
        .iter()
        .zip(&ys)
        .filter(|(x, _)| x.abs() >= margin)
        .map(|(x, y)| (y - x.signum()).abs())
        .fold(0.0, f64::max);
    Ok(SignCurve {
        xs,
        ys,
        depth: sign.depth(),
        margin,
        max_err,
    })
}

#[derive(Serialize)]
struct ArgmaxView {
    normalized: Vec<f64>,
    soft: Vec<f64>,
    one_hot: Vec<u8>,
    label: Option<usize>,
    sign_ops: u64,
    rotations: u64,
    bootstraps: u64,
    modeled_cost: f64,
}

/// Runs one argmax window through the exact backend. `values` is a comma
/// separated list; `method` is `secpe` or `phoenix`.
#[wasm_bindgen]
pub fn argmax_window(values: &str, d_min: f64, d_max: f64, method: &str) -> String {
    respond(argmax_window_inner(values, d_min, d_max, method))
}

fn argmax_window_inner(
    values: &str,
    d_min: f64,
    d_max: f64,
    method: &str,
) -> Result<ArgmaxView, String> {
    let row: Vec<f64> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let method: Method = method
        .parse()
        .map_err(|e: hevote_core::Error| e.to_string())?;
    let bounds = NormBounds::new(d_min, d_max).map_err(|e| e.to_string())?;
    if let Some(v) = row.iter().find(|v| !bounds.contains(**v)) {
        return Err(format!("value {v} lies outside [{d_min}, {d_max}]"));
    }
    let backend = ExactBackend::new(BackendParams::default().with_ring_degree(DEMO_RING))
        .map_err(|e| e.to_string())?;
    let layout =
        PackingLayout::new(row.len(), backend.params().slot_count()).map_err(|e| e.to_string())?;
    let sign = CompositeSign::new(SignConfig::certified());
    let ct = argmax::pack(&backend, std::slice::from_ref(&row), &layout, &bounds)
        .map_err(|e| e.to_string())?;
    let before = backend.counters();
    let z = match method {
        Method::Secpe => argmax::secpe_argmax(&backend, &ct, &layout, &sign),
        Method::Phoenix => argmax::phoenix_argmax(&backend, &ct, &layout, &sign),
    }
    .map_err(|e| e.to_string())?;
    let d = backend.counters().since(&before);
    let soft = backend.decrypt(&z).map_err(|e| e.to_string())?[..row.len()].to_vec();
    let one_hot = argmax::round_one_hot(&soft);
    Ok(ArgmaxView {
        normalized: row.iter().map(|v| bounds.apply(*v)).collect(),
        label: one_hot.iter().position(|v| *v == 1),
        soft,
        one_hot,
        sign_ops: d.n_sign,
        rotations: d.n_rot,
        bootstraps: d.n_bootstrap,
        modeled_cost: d.modeled_cost,
    })
}

#[derive(Serialize)]
struct CostPoint {
    n: usize,
    secpe: f64,
    phoenix: f64,
    speedup: f64,
}

/// Modeled argmax cost of both methods for `n = 2, 4, ..., 2^max_log_n`
/// (at most 1024) under the default cost model, with `cost_rot` and
/// `cost_bootstrap` overridable from the page.
#[wasm_bindgen]
pub fn cost_curve(max_log_n: u32, cost_rot: f64, cost_bootstrap: f64) -> String {
    respond(cost_curve_inner(max_log_n, cost_rot, cost_bootstrap))
}

fn cost_curve_inner(
    max_log_n: u32,
    cost_rot: f64,
    cost_bootstrap: f64,
) -> Result<Vec<CostPoint>, String> {
    if !(1..=10).contains(&max_log_n) {
        return Err("max_log_n must be in [1, 10]".into());
    }
    let mut params = BackendParams::default().with_ring_degree(DEMO_RING);
    params.cost.cost_rot = cost_rot;
    params.cost.cost_bootstrap = cost_bootstrap;
    let cfg = BenchConfig {
        dims: (1..=max_log_n).map(|k| 1usize << k).collect(),
        methods: vec![Method::Secpe, Method::Phoenix],
        backend: BackendKind::Exact,
        params,
        seed: 0,
        sign: SignConfig::certified(),
    };
    let records = bench::run_bench(&cfg).map_err(|e| e.to_string())?;
    let cost = |m: Method, n: usize| {
        records
            .iter()
            .find(|r| r.method == m && r.n == n)
            .map_or(f64::NAN, |r| r.modeled_cost)
    };
    Ok(bench::speedup_curve(&records)
        .into_iter()
        .map(|(n, speedup)| CostPoint {
            n,
            secpe: cost(Method::Secpe, n),
            phoenix: cost(Method::Phoenix, n),
            speedup,
        })
        .collect())
}

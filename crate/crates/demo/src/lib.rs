//! Browser demo: three interactive views over the core toolkit, exported
//! through `wasm-bindgen` as JSON-returning functions so the page stays a
//! single static file with a few `<canvas>` plots.
//!
//! The exports only use primitive arguments and `String` results, so the
//! crate also compiles and tests natively.

use logitest_core::densities::{
    mean_shift_pair, tail_bump_pair, variance_dilation_pair, AnalyticDensity,
};
use logitest_core::functionals::{gmmd_witness_1d, mean_std_summary};
use logitest_core::manifold::gdelta::GDelta;
use logitest_core::nn::{self, MlpSpec, TrainConfig};
use logitest_core::rng::{derive_seed, tag};
use logitest_core::testing::{
    median_bandwidth, permutation_calibrate_scores, ScoredSamples, StatisticKind,
};
use wasm_bindgen::prelude::wasm_bindgen;

fn pair_by_name(example: &str, delta: f64) -> Option<(AnalyticDensity, AnalyticDensity)> {
    Some(match example {
        "mean-shift" => mean_shift_pair(delta),
        "variance-dilation" => variance_dilation_pair(delta),
        "tail-bump" => tail_bump_pair(delta),
        _ => return None,
    })
}

fn err_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

/// Densities and population witness curves of a 1-D pair on a plotting grid,
/// plus the mean/spread/ratio summary of each witness.
#[wasm_bindgen]
pub fn witness_curves(example: String, delta: f64, points: u32) -> String {
    let Some((p, q)) = pair_by_name(&example, delta) else {
        return err_json("unknown example");
    };
    let n = points.clamp(16, 4096) as usize;
    let grid = logitest_core::densities::pair_grid(&p, &q);
    let radius = q.support_radius().max(p.support_radius()).min(6.0);
    let xs: Vec<f64> = (0..n)
        .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
        .collect();
    let log_ratio = |x: &[f64]| p.log_ratio(&q, x).unwrap_or(0.0);
    let sign_ratio = |x: &[f64]| if log_ratio(x) >= 0.0 { 1.0 } else { -1.0 };
    let sigma = {
        let xr = p.sample(128, 11).expect("n >= 1");
        let yr = q.sample(128, 12).expect("n >= 1");
        median_bandwidth(&xr.vstack(&yr))
            .map(|s| s.max(1e-3))
            .unwrap_or(1.0)
    };
    let kernel = gmmd_witness_1d(&p, &q, &grid, sigma);
    let mut summaries = serde_json::Map::new();
    for (name, w) in [
        ("net_logit", &log_ratio as &dyn Fn(&[f64]) -> f64),
        ("net_acc", &sign_ratio),
        ("gmmd", &kernel),
    ] {
        if let Ok(s) = mean_std_summary(w, &p, &q, &grid) {
            summaries.insert(
                name.into(),
                serde_json::json!({"mean": s.mean_gap, "std": s.spread, "ratio": s.ratio}),
            );
        }
    }
    serde_json::json!({
        "x": xs,
        "p_pdf": xs.iter().map(|&x| p.pdf(&[x])).collect::<Vec<_>>(),
        "q_pdf": xs.iter().map(|&x| q.pdf(&[x])).collect::<Vec<_>>(),
        "log_ratio": xs.iter().map(|&x| log_ratio(&[x])).collect::<Vec<_>>(),
        "kernel_witness": xs.iter().map(|&x| kernel(&[x])).collect::<Vec<_>>(),
        "kernel_sigma": sigma,
        "summaries": summaries,
    })
    .to_string()
}

/// Train a small classifier in the browser and run the permutation-calibrated
/// logit test once; returns the statistic, threshold, p-value, the null
/// replicates for the histogram, and the scored test points.
#[wasm_bindgen]
pub fn run_logit_test(example: String, delta: f64, n_all: u32, seed: u64, m_perm: u32) -> String {
    let Some((p, q)) = pair_by_name(&example, delta) else {
        return err_json("unknown example");
    };
    let n_all = (n_all.clamp(40, 2000) as usize) / 4 * 4;
    let n_each = n_all / 2;
    let x = p
        .sample(n_each, derive_seed(seed, &[tag("draw-x")]))
        .expect("n >= 1");
    let y = q
        .sample(n_each, derive_seed(seed, &[tag("draw-y")]))
        .expect("n >= 1");
    let half = n_each / 2;
    let (x_tr, x_te) = (x.slice_rows(0, half), x.slice_rows(half, n_each));
    let (y_tr, y_te) = (y.slice_rows(0, half), y.slice_rows(half, n_each));
    let spec = MlpSpec::new(1, vec![32, 32]).expect("valid spec");
    let tc = TrainConfig {
        epochs: 100,
        batch_size: if half > 100 { 100 } else { 0 },
        seed: derive_seed(seed, &[tag("train")]),
        ..TrainConfig::default()
    };
    let (params, trace) = match nn::train(&spec, &tc, &x_tr, &y_tr) {
        Ok(r) => r,
        Err(e) => return err_json(&e.to_string()),
    };
    let scores = match ScoredSamples::new(params.logits(&x_te), params.logits(&y_te)) {
        Ok(s) => s,
        Err(e) => return err_json(&e.to_string()),
    };
    let outcome = match permutation_calibrate_scores(
        &scores,
        StatisticKind::NetLogit,
        m_perm.clamp(20, 2000) as usize,
        0.05,
        derive_seed(seed, &[tag("perm")]),
    ) {
        Ok(o) => o,
        Err(e) => return err_json(&e.to_string()),
    };
    serde_json::json!({
        "statistic": outcome.statistic,
        "threshold": outcome.threshold,
        "p_value": outcome.p_value,
        "reject": outcome.reject,
        "null_samples": outcome.null_samples,
        "x_points": x_te.iter_rows().map(|r| r[0]).collect::<Vec<_>>(),
        "x_scores": scores.x_scores,
        "y_points": y_te.iter_rows().map(|r| r[0]).collect::<Vec<_>>(),
        "y_scores": scores.y_scores,
        "final_train_loss": trace.loss.last().copied().unwrap_or(f64::NAN),
    })
    .to_string()
}

/// Radial profile of the manifold tube gadget: exact 1 inside the inner
/// radius, exact 0 outside the tube, with its audited parameter count and
/// gradient bound.
#[wasm_bindgen]
pub fn tube_gadget_profile(delta: f64, dim: u32, points: u32) -> String {
    let gd = match GDelta::build(delta.clamp(0.01, 1.0), dim.clamp(1, 256) as usize) {
        Ok(g) => g,
        Err(e) => return err_json(&e.to_string()),
    };
    let n = points.clamp(16, 4096) as usize;
    let m = gd.dim;
    let mut radii = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut grad_norms = Vec::with_capacity(n);
    // Radial direction with equal components; the gadget is defined
    // coordinate-wise, so this exercises every branch.
    let unit = 1.0 / (m as f64).sqrt();
    for i in 0..n {
        let r = 1.3 * gd.delta * i as f64 / (n - 1) as f64;
        let v = vec![r * unit; m];
        radii.push(r);
        values.push(gd.eval(&v));
        grad_norms.push(
            gd.grad(&v)
                .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
                .unwrap_or(f64::NAN),
        );
    }
    serde_json::json!({
        "delta": gd.delta,
        "dim": gd.dim,
        "inner_radius": 3f64.sqrt() / 2.0 * gd.delta,
        "radii": radii,
        "values": values,
        "grad_norms": grad_norms,
        "grad_bound": 10.5 / gd.delta,
        "parameter_count": gd.parameter_count(),
        "levels": gd.levels(),
    })
    .to_string()
}

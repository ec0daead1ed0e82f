//! Subcommand implementations. Every command resolves the configuration,
//! computes, then writes all artifacts plus `effective-config.toml`; no file
//! is touched before the computation finishes.

use crate::artifacts::{csv_table, fmt_f64, outcome_json, samples_csv, OutDir};
use crate::config::{loss_curve_target, ManifoldSection, RunConfig};
use crate::data::DataSource;
use crate::error::CliError;
use logitest_core::functionals::{gmmd_witness_1d, mean_std_summary};
use logitest_core::linalg::Matrix;
use logitest_core::manifold::geometry::ParamManifold;
use logitest_core::manifold::{assemble_net, measure_manifold_error, Atlas, ConstructedNet};
use logitest_core::nn::{self, params_from_bytes, params_to_bytes, Layer, MlpSpec};
use logitest_core::power::{
    loss_vs_width_experiment, replicate_table, run_once, LossWidthConfig, Method, PairSource,
};
use logitest_core::rng::{derive_seed, tag};
use logitest_core::testing::{
    median_bandwidth, permutation_calibrate_scores, ScoredSamples, StatisticKind, TestOutcome,
};
use std::path::Path;

fn write_effective_config(out: &OutDir, cfg: &RunConfig) -> Result<(), CliError> {
    out.write_str("effective-config.toml", &cfg.to_toml())
}

fn split_half(m: &Matrix) -> (Matrix, Matrix) {
    let half = m.rows() / 2;
    (m.slice_rows(0, half), m.slice_rows(half, m.rows()))
}

/// Seed of the single-run commands (`gen`, `train`, `test`): the harness's
/// replica-0 run-0 seed, so they reproduce the first run of a power sweep.
fn single_run_seed(cfg: &RunConfig) -> u64 {
    derive_seed(cfg.harness.base_seed.unwrap_or(17), &[0, 0, tag("run")])
}

pub fn cmd_gen(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let source = DataSource::from_config(cfg)?;
    let n_each = cfg.data.n_all.unwrap_or(400) / 2;
    let (x, y) = source.draw_pair(n_each, derive_seed(single_run_seed(cfg), &[tag("draw")]));
    out.write_str("x.csv", &samples_csv(&x))?;
    out.write_str("y.csv", &samples_csv(&y))?;
    write_effective_config(out, cfg)
}

pub fn cmd_train(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let source = DataSource::from_config(cfg)?;
    let n_each = cfg.data.n_all.unwrap_or(400) / 2;
    let seed = single_run_seed(cfg);
    let (x, y) = source.draw_pair(n_each, derive_seed(seed, &[tag("draw")]));
    let (x_tr, _) = split_half(&x);
    let (y_tr, _) = split_half(&y);
    let profile = cfg.net_profile();
    let spec = MlpSpec::new(source.dim(), profile.hidden_widths.clone())?;
    let tc = train_config_from(cfg, x_tr.rows(), derive_seed(seed, &[tag("train")]));
    let (params, trace) = nn::train(&spec, &tc, &x_tr, &y_tr)?;
    out.write("model.bin", &params_to_bytes(&params))?;
    let rows: Vec<Vec<String>> = trace
        .loss
        .iter()
        .zip(&trace.train_error)
        .enumerate()
        .map(|(e, (l, err))| vec![e.to_string(), fmt_f64(*l), fmt_f64(*err)])
        .collect();
    out.write_str(
        "trace.csv",
        &csv_table(&["epoch", "empirical_loss", "train_error"], &rows),
    )?;
    write_effective_config(out, cfg)
}

fn train_config_from(cfg: &RunConfig, n_per_class: usize, seed: u64) -> nn::TrainConfig {
    let profile = cfg.net_profile();
    let batch = if n_per_class > profile.batch_cap {
        profile.batch_cap
    } else {
        0
    };
    nn::TrainConfig {
        epochs: profile.epoch_rule.epochs(2 * n_per_class),
        batch_size: batch,
        learning_rate: profile.learning_rate,
        seed,
        weight_clip: profile.weight_clip,
        ..nn::TrainConfig::default()
    }
}

/// Scores CSV: header `set,score`, one row per test point, set ∈ {x, y}.
pub fn parse_scores_csv(text: &str) -> Result<ScoredSamples, CliError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "set,score" {
                return Err(CliError::Other(format!(
                    "scores file must start with the header \"set,score\", got \"{line}\""
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (set, score) = line
            .split_once(',')
            .ok_or_else(|| CliError::Other(format!("malformed scores row \"{line}\"")))?;
        let v: f64 = score
            .trim()
            .parse()
            .map_err(|_| CliError::Other(format!("bad score \"{score}\"")))?;
        match set.trim() {
            "x" => xs.push(v),
            "y" => ys.push(v),
            other => return Err(CliError::Other(format!("bad set \"{other}\""))),
        }
    }
    Ok(ScoredSamples::new(xs, ys)?)
}

pub fn cmd_test(
    cfg: &RunConfig,
    out: &OutDir,
    scores_path: Option<&Path>,
    params_path: Option<&Path>,
) -> Result<(), CliError> {
    let m_perm = cfg.harness.m_perm.unwrap_or(200);
    let alpha = cfg.harness.alpha.unwrap_or(0.05);
    let seed = single_run_seed(cfg);
    let mut outcomes: Vec<TestOutcome> = Vec::new();
    if let Some(path) = scores_path {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let scores = parse_scores_csv(&text)?;
        let perm_seed = derive_seed(seed, &[tag("perm")]);
        outcomes.push(permutation_calibrate_scores(
            &scores,
            StatisticKind::NetLogit,
            m_perm,
            alpha,
            perm_seed,
        )?);
        if scores.x_scores.len() == scores.y_scores.len() {
            outcomes.push(permutation_calibrate_scores(
                &scores,
                StatisticKind::NetAcc,
                m_perm,
                alpha,
                perm_seed,
            )?);
        }
    } else if let Some(path) = params_path {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let params = params_from_bytes(&bytes)?;
        let source = DataSource::from_config(cfg)?;
        let n_each = cfg.data.n_all.unwrap_or(400) / 2;
        let (x, y) = source.draw_pair(n_each, derive_seed(seed, &[tag("draw")]));
        let (_, x_te) = split_half(&x);
        let (_, y_te) = split_half(&y);
        let scores = ScoredSamples::new(params.logits(&x_te), params.logits(&y_te))?;
        let perm_seed = derive_seed(seed, &[tag("perm")]);
        for kind in [StatisticKind::NetLogit, StatisticKind::NetAcc] {
            outcomes.push(permutation_calibrate_scores(
                &scores, kind, m_perm, alpha, perm_seed,
            )?);
        }
        if cfg.output.write_samples {
            out.write_str("x_test.csv", &samples_csv(&x_te))?;
            out.write_str("y_test.csv", &samples_csv(&y_te))?;
        }
    } else {
        let source = DataSource::from_config(cfg)?;
        let exp = cfg.experiment_config()?;
        for method in cfg.method_list()? {
            if method == Method::GmmdPlusPlus {
                continue; // harness-level only; covered by `power`
            }
            outcomes.push(run_once(&exp, &source, method, seed)?);
        }
    }
    let json = serde_json::Value::Array(outcomes.iter().map(outcome_json).collect());
    out.write_str(
        "test_outcome.json",
        &serde_json::to_string_pretty(&json).unwrap(),
    )?;
    write_effective_config(out, cfg)
}

pub fn cmd_power(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let source = DataSource::from_config(cfg)?;
    let exp = cfg.experiment_config()?;
    let table = replicate_table(&exp, &source)?;
    let mut rows = Vec::new();
    for row in &table.rows {
        for (rep, p) in row.per_replica_percent.iter().enumerate() {
            rows.push(vec![
                row.method.label().to_string(),
                rep.to_string(),
                fmt_f64(*p),
            ]);
        }
    }
    out.write_str(
        "power.csv",
        &csv_table(&["method", "replica", "power_percent"], &rows),
    )?;
    let summary: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.method.label().to_string(),
                fmt_f64(r.mean_percent),
                fmt_f64(r.std_percent),
                fmt_f64(r.median_percent),
            ]
        })
        .collect();
    out.write_str(
        "power_summary.csv",
        &csv_table(
            &["method", "mean_percent", "std_percent", "median_percent"],
            &summary,
        ),
    )?;
    write_effective_config(out, cfg)
}

pub fn cmd_loss_curve(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let section = cfg
        .loss_curve
        .as_ref()
        .ok_or_else(|| CliError::Config("loss-curve needs a [loss_curve] section".into()))?;
    let lw = LossWidthConfig {
        target: loss_curve_target(&section.target)?,
        widths: section.widths.clone(),
        train_sizes: section.train_sizes.clone(),
        n_rep: section.n_rep,
        base_seed: cfg.harness.base_seed.unwrap_or(17),
    };
    let table = loss_vs_width_experiment(&lw)?;
    let rows: Vec<Vec<String>> = table
        .cells
        .iter()
        .map(|c| {
            vec![
                c.hidden_width.to_string(),
                c.n_train_total.to_string(),
                fmt_f64(c.mean_loss),
                fmt_f64(c.std_loss),
                fmt_f64(table.jsd_line),
            ]
        })
        .collect();
    out.write_str(
        "loss_width.csv",
        &csv_table(
            &[
                "hidden_width",
                "n_train",
                "mean_loss",
                "std_loss",
                "jsd_line",
            ],
            &rows,
        ),
    )?;
    write_effective_config(out, cfg)
}

pub fn cmd_witness(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let source = DataSource::from_config(cfg)?;
    let Some((p, q)) = source.analytic() else {
        return Err(CliError::Config(
            "witness curves need an analytic density pair".into(),
        ));
    };
    if p.ambient_dim() != 1 {
        return Err(CliError::Config(
            "witness curves are available for 1-D pairs only".into(),
        ));
    }
    let grid = logitest_core::densities::pair_grid(p, q);
    // Kernel witness bandwidth: median pairwise distance of a pooled
    // reference draw.
    let base_seed = cfg.harness.base_seed.unwrap_or(17);
    let xs = p.sample(256, derive_seed(base_seed, &[tag("witness-x")]))?;
    let ys = q.sample(256, derive_seed(base_seed, &[tag("witness-y")]))?;
    let sigma = median_bandwidth(&xs.vstack(&ys))?;
    let kernel_witness = gmmd_witness_1d(p, q, &grid, sigma);
    let log_ratio = |x: &[f64]| p.log_ratio(q, x).unwrap();
    let sign_ratio = |x: &[f64]| if log_ratio(x) >= 0.0 { 1.0 } else { -1.0 };

    // Population curves over a display grid.
    let (lo, hi) = p.integration_bounds()[0];
    let n_plot = 801usize;
    let mut rows = Vec::with_capacity(n_plot);
    for i in 0..n_plot {
        let x = lo + (hi - lo) * i as f64 / (n_plot - 1) as f64;
        let pt = [x];
        rows.push(vec![
            fmt_f64(x),
            fmt_f64(p.pdf(&pt)),
            fmt_f64(q.pdf(&pt)),
            fmt_f64(log_ratio(&pt)),
            fmt_f64(sign_ratio(&pt)),
            fmt_f64(kernel_witness(&pt)),
        ]);
    }
    out.write_str(
        "witness_curves.csv",
        &csv_table(
            &[
                "x",
                "p_pdf",
                "q_pdf",
                "log_ratio",
                "sign_log_ratio",
                "kernel_witness",
            ],
            &rows,
        ),
    )?;

    // Population mean/spread/ratio per witness.
    let mut summary = Vec::new();
    for (name, w) in [
        ("net-logit", &log_ratio as &dyn Fn(&[f64]) -> f64),
        ("net-acc", &sign_ratio),
        ("gmmd", &kernel_witness),
    ] {
        let s = mean_std_summary(w, p, q, &grid)?;
        summary.push(vec![
            name.to_string(),
            fmt_f64(s.mean_gap),
            fmt_f64(s.spread),
            fmt_f64(s.ratio),
        ]);
    }
    out.write_str(
        "witness_summary.csv",
        &csv_table(&["witness", "mean_gap", "spread", "ratio"], &summary),
    )?;

    // Trained witness evaluated on a held-out test draw.
    let seed = single_run_seed(cfg);
    let n_each = cfg.data.n_all.unwrap_or(400) / 2;
    let (x, y) = source.draw_pair(n_each, derive_seed(seed, &[tag("draw")]));
    let (x_tr, x_te) = split_half(&x);
    let (y_tr, y_te) = split_half(&y);
    let profile = cfg.net_profile();
    let spec = MlpSpec::new(1, profile.hidden_widths.clone())?;
    let tc = train_config_from(cfg, x_tr.rows(), derive_seed(seed, &[tag("train")]));
    let (params, _) = nn::train(&spec, &tc, &x_tr, &y_tr)?;
    let mut score_rows = Vec::new();
    for r in x_te.iter_rows() {
        score_rows.push(vec![
            "x".into(),
            fmt_f64(r[0]),
            fmt_f64(params.forward_logit(r)),
        ]);
    }
    for r in y_te.iter_rows() {
        score_rows.push(vec![
            "y".into(),
            fmt_f64(r[0]),
            fmt_f64(params.forward_logit(r)),
        ]);
    }
    out.write_str(
        "witness_scores.csv",
        &csv_table(&["set", "x", "score"], &score_rows),
    )?;
    write_effective_config(out, cfg)
}

fn manifold_shape(section: &ManifoldSection) -> Result<ParamManifold, CliError> {
    match section.shape.as_str() {
        "circle" => Ok(ParamManifold::Circle),
        "sigmoid-curve" => Ok(ParamManifold::SigmoidCurve),
        "sphere-patch" => Ok(ParamManifold::SpherePatch),
        other => Err(CliError::Config(format!(
            "unknown manifold.shape \"{other}\" (expected circle, sigmoid-curve or sphere-patch)"
        ))),
    }
}

fn manifold_target(section: &ManifoldSection) -> Result<usize, CliError> {
    match section.target.as_str() {
        "x" => Ok(0),
        "y" => Ok(1),
        "z" => Ok(2),
        other => Err(CliError::Config(format!(
            "unknown manifold.target \"{other}\" (expected x, y or z)"
        ))),
    }
}

pub fn cmd_manifold_approx(
    cfg: &RunConfig,
    out: &OutDir,
    kmax_override: Option<Vec<u32>>,
) -> Result<(), CliError> {
    let default_section;
    let section = match &cfg.manifold {
        Some(s) => s,
        None => {
            default_section = toml::from_str::<ManifoldSection>("").unwrap();
            &default_section
        }
    };
    let shape = manifold_shape(section)?;
    let coord = manifold_target(section)?;
    if coord >= shape.ambient_dim() {
        return Err(CliError::Config(format!(
            "target coordinate {} out of range for a manifold in {} dimensions",
            section.target,
            shape.ambient_dim()
        )));
    }
    let target = move |x: &[f64]| x[coord];
    let atlas = Atlas::build(shape.clone(), section.delta, section.n_grid)?;
    let kmax_list = kmax_override.unwrap_or_else(|| section.kmax.clone());
    // Compute everything first; files land only after the whole run
    // succeeded, so a failed scale count leaves no partial artifacts.
    let mut rows = Vec::new();
    let mut nets = Vec::new();
    for &k_max in &kmax_list {
        let net = assemble_net(&atlas, &target, k_max, section.c_d, 1e-10)?;
        let (err, _) = measure_manifold_error(&net, &target, &shape, section.n_eval);
        rows.push(vec![
            k_max.to_string(),
            fmt_f64(err),
            net.parameter_count.to_string(),
        ]);
        nets.push((k_max, net));
    }
    for (k_max, net) in &nets {
        out.write(&format!("net-k{k_max}.bin"), &container_bytes(net))?;
        out.write_str(
            &format!("net-k{k_max}.json"),
            &serde_json::to_string_pretty(&sidecar_json(net)).unwrap(),
        )?;
    }
    out.write_str(
        "manifold_error.csv",
        &csv_table(&["k_max", "linf_error", "param_count"], &rows),
    )?;
    write_effective_config(out, cfg)
}

/// Serialize the constructed net's layers in the shared binary container.
fn container_bytes(net: &ConstructedNet) -> Vec<u8> {
    let layers = net.container_layers();
    let mut out = Vec::new();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for l in &layers {
        out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        for w in &l.w {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in &l.b {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out
}

pub fn container_layers_from_bytes(bytes: &[u8]) -> Result<Vec<Layer>, CliError> {
    let mut pos = 0usize;
    let take_u32 = |pos: &mut usize| -> Result<u32, CliError> {
        let end = *pos + 4;
        let s = bytes
            .get(*pos..end)
            .ok_or_else(|| CliError::Other("truncated container".into()))?;
        *pos = end;
        Ok(u32::from_le_bytes(s.try_into().unwrap()))
    };
    let n = take_u32(&mut pos)? as usize;
    let mut layers = Vec::with_capacity(n);
    for i in 0..n {
        let out_dim = take_u32(&mut pos)? as usize;
        let in_dim = take_u32(&mut pos)? as usize;
        let mut take_f64s = |count: usize| -> Result<Vec<f64>, CliError> {
            let end = pos + 8 * count;
            let s = bytes
                .get(pos..end)
                .ok_or_else(|| CliError::Other("truncated container".into()))?;
            pos = end;
            Ok(s.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let w = take_f64s(out_dim * in_dim)?;
        // Layers alternate (chart frame, coefficient row); frame layers
        // carry the chart center appended to the bias.
        let b = if i % 2 == 0 {
            take_f64s(out_dim + in_dim)?
        } else {
            take_f64s(out_dim)?
        };
        layers.push(Layer {
            w,
            b,
            out_dim,
            in_dim,
        });
    }
    Ok(layers)
}

fn sidecar_json(net: &ConstructedNet) -> serde_json::Value {
    let s = net.sidecar();
    serde_json::json!({
        "intrinsic_dim": s.intrinsic_dim,
        "ambient_dim": s.ambient_dim,
        "k_max": s.k_max,
        "delta": s.delta,
        "c_d": s.c_d,
        "f_sup_bound": s.f_sup_bound,
        "parameter_count": s.parameter_count,
        "chart_distortions": s.chart_distortions,
    })
}

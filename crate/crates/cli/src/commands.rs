//! The four subcommands. Each reads a resolved [`RunConfig`], writes its
//! files under `cfg.out` and returns a one-line summary for stdout.

use mnr_core::causality::{assess_causality_with, DirectionReport};
use mnr_core::inference::{fit_mle_with, sigma_int_summary, taylor_warning, MleOptions, Warning};
use mnr_core::mock::{run_1d_sweep, run_5d_grid, run_cells, run_gmm_study, write_bias_csv, CellResult};
use mnr_core::{default_init, sample_posterior, stats, LikelihoodSpec, Method};
use serde_json::{json, Map, Value};

use crate::config::{BenchMode, RunConfig};
use crate::error::CliError;
use crate::io::{create_out_dir, read_dataset, write_csv, write_json, Meta};

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<String, CliError> {
    let spec = cfg.spec()?;
    let built = cfg.model.build()?;
    let (d, data_hash) = read_dataset(cfg)?;
    let model = built.model.as_ref();
    let init = default_init(&spec, &d, model, built.init.as_deref())?;
    let opts = MleOptions {
        bounds: cfg.bounds.clone(),
        ..MleOptions::default()
    };
    let fit = fit_mle_with(&spec, &d, model, &init, &opts)?;

    let mut warnings: Vec<Warning> = fit
        .at_bound
        .iter()
        .map(|p| Warning::AtPriorBound { param: p.clone() })
        .collect();
    warnings.extend(taylor_warning(&d, model, &fit.params.theta));
    if !fit.converged {
        warnings.push(Warning::MleNotConverged);
    }
    let mut out = Map::new();
    for (n, v) in fit.param_names.iter().zip(&fit.values) {
        out.insert(n.clone(), json!(v));
    }
    for (name, param, f) in &built.derived {
        if let Some(v) = fit.get(param) {
            out.insert(name.clone(), json!(f(v)));
        }
    }
    out.insert("loglike".into(), finite_or_null(fit.loglike));
    out.insert("converged".into(), json!(fit.converged));
    out.insert("at_bound".into(), json!(fit.at_bound));
    out.insert("warnings".into(), warnings_json(&warnings));
    out.insert("method".into(), json!(spec.method));
    out.insert("meta".into(), json!(Meta::new("fit", cfg, Some(data_hash))));
    create_out_dir(&cfg.out)?;
    let path = cfg.out.join("fit.json");
    write_json(&path, &Value::Object(out))?;
    let summary: Vec<String> = fit
        .param_names
        .iter()
        .zip(&fit.values)
        .map(|(n, v)| format!("{n}={v:.6}"))
        .collect();
    Ok(format!("{} -> {}", summary.join(" "), path.display()))
}

fn warnings_json(w: &[Warning]) -> Value {
    Value::Array(
        w.iter()
            .map(|w| {
                let mut v = serde_json::to_value(w).expect("warning serialises");
                v["message"] = json!(w.to_string());
                v
            })
            .collect(),
    )
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<String, CliError> {
    let spec = cfg.spec()?;
    let built = cfg.model.build()?;
    let (d, data_hash) = read_dataset(cfg)?;
    let mut sc = cfg.sampler();
    if sc.init_theta.is_none() {
        sc.init_theta = built.init.clone();
    }
    let post = sample_posterior(&spec, &d, built.model.as_ref(), &sc)?;
    let meta = Meta::new("sample", cfg, Some(data_hash));

    let derived: Vec<(String, Vec<f64>)> = built
        .derived
        .iter()
        .filter_map(|(name, param, f)| {
            post.column(param)
                .map(|c| (name.clone(), c.iter().map(|v| f(*v)).collect()))
        })
        .collect();

    let per_chain = post.n_draws() / post.n_chains.max(1);
    let mut columns = vec!["chain".to_string(), "draw".to_string()];
    columns.extend(post.param_names.iter().cloned());
    columns.extend(derived.iter().map(|(n, _)| n.clone()));
    create_out_dir(&cfg.out)?;
    let chains_path = cfg.out.join("chains.csv");
    write_csv(
        &chains_path,
        &meta.csv_header(),
        &columns,
        post.samples.iter().enumerate().map(|(i, row)| {
            let mut r = vec![(i / per_chain) as f64, (i % per_chain) as f64];
            r.extend_from_slice(row);
            r.extend(derived.iter().map(|(_, c)| c[i]));
            r
        }),
    )?;

    let summarise = |c: &[f64]| {
        let mut s = c.to_vec();
        s.sort_by(f64::total_cmp);
        json!({
            "mean": stats::mean(c),
            "std": stats::std_sample(c),
            "p16": stats::quantile_sorted(&s, 0.16),
            "p50": stats::quantile_sorted(&s, 0.5),
            "p84": stats::quantile_sorted(&s, 0.84),
        })
    };
    let mut params = Map::new();
    for (j, name) in post.param_names.iter().enumerate() {
        let c: Vec<f64> = post.samples.iter().map(|r| r[j]).collect();
        let mut s = summarise(&c);
        s["rhat"] = json!(post.gelman_rubin[j]);
        s["ess"] = json!(post.ess[j]);
        params.insert(name.clone(), s);
    }
    let mut derived_json = Map::new();
    for (name, c) in &derived {
        derived_json.insert(name.clone(), summarise(c));
    }
    let sigma_int = post.column("sigma_int").map(|c| {
        let mut s = c.clone();
        s.sort_by(f64::total_cmp);
        let (mode, width) = sigma_int_summary(&s);
        json!({"mode": mode, "width": width})
    });
    let mle: Map<String, Value> = post
        .param_names
        .iter()
        .zip(&post.mle_values)
        .map(|(n, v)| (n.clone(), json!(v)))
        .collect();
    let summary = json!({
        "method": spec.method,
        "n_gauss": spec.n_gauss,
        "n_chains": post.n_chains,
        "n_draws": post.n_draws(),
        "params": params,
        "derived": derived_json,
        "sigma_int_truncated": sigma_int,
        "mle": mle,
        "loglike_at_mle": finite_or_null(post.log_like_at_mle),
        "bic": finite_or_null(post.bic),
        "n_free_params": post.n_free_params,
        "n_divergent": post.n_divergent,
        "step_sizes": post.step_sizes,
        "warnings": warnings_json(&post.warnings),
        "meta": meta,
    });
    let summary_path = cfg.out.join("summary.json");
    write_json(&summary_path, &summary)?;
    for w in &post.warnings {
        eprintln!("warning: {w}");
    }
    let headline: Vec<String> = post
        .param_names
        .iter()
        .take(3)
        .map(|n| format!("{n}={:.4}+-{:.4}", post.mean(n).unwrap(), post.std(n).unwrap()))
        .collect();
    Ok(format!(
        "{} -> {}, {}",
        headline.join(" "),
        summary_path.display(),
        chains_path.display()
    ))
}

fn cell_json(c: &CellResult) -> Value {
    json!({
        "cell": c.cell,
        "method": c.method,
        "n_gauss": c.n_gauss,
        "n_ok": c.n_ok,
        "n_failed": c.n_failed,
        "n_skipped": c.n_skipped,
        "failures": c.failures,
        "reports": c.reports.iter().map(|r| json!({
            "parameter": r.parameter,
            "median": finite_or_null(r.median),
            "p16": finite_or_null(r.p16),
            "p84": finite_or_null(r.p84),
            "mean": finite_or_null(r.mean),
            "biases": r.biases.iter().map(|b| finite_or_null(*b)).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

pub fn cmd_bias_bench(cfg: &RunConfig) -> Result<String, CliError> {
    let b = &cfg.bias_bench;
    b.cell.validate()?;
    if b.methods.is_empty() && b.mode != BenchMode::Gmm {
        return Err(CliError::validation("bias_bench.methods is empty"));
    }
    let study = b.study(&cfg.sampler, cfg.seed);
    let specs: Vec<LikelihoodSpec> = b.methods.iter().map(|&m| LikelihoodSpec::new(m)).collect();
    let mut extra = Map::new();
    let cells = match b.mode {
        BenchMode::Fiducial => run_cells(&[b.cell], &specs, &study),
        BenchMode::Sweep => {
            let p = b
                .parameter
                .ok_or_else(|| CliError::validation("bias_bench.parameter is required for a sweep"))?;
            if b.points < 2 {
                return Err(CliError::validation("bias_bench.points must be at least 2"));
            }
            run_1d_sweep(p, &p.grid(b.points, true), &b.methods, &study)
        }
        BenchMode::Grid => {
            if b.points < 2 {
                return Err(CliError::validation("bias_bench.points must be at least 2"));
            }
            let g = run_5d_grid(&b.methods, b.points, &study);
            extra.insert("extremal".into(), json!(g.extremal));
            g.cells
        }
        BenchMode::Gmm => {
            let g = run_gmm_study(&[b.cell], 1..=b.max_gauss, cfg.hyperprior, &study)?;
            extra.insert("selected_n_gauss".into(), json!(g.selected[0]));
            g.cells
        }
    };
    if b.methods.contains(&Method::Gmm) && b.mode != BenchMode::Gmm {
        eprintln!("note: gmm in methods runs a single component; use mode = \"gmm\" for the component study");
    }
    let partial = cells.iter().any(|c| c.n_skipped > 0);
    let failed: usize = cells.iter().map(|c| c.n_failed).sum();
    let meta = Meta::new("bias-bench", cfg, None);
    create_out_dir(&cfg.out)?;
    let csv_path = cfg.out.join("bias.csv");
    let mut buf = meta.csv_header().into_bytes();
    write_bias_csv(&mut buf, &cells)?;
    std::fs::write(&csv_path, buf)?;
    let mut out = json!({
        "mode": b.mode,
        "replicates": study.replicates,
        "partial": partial,
        "cells": cells.iter().map(cell_json).collect::<Vec<_>>(),
        "meta": meta,
    });
    for (k, v) in extra {
        out[k] = v;
    }
    let json_path = cfg.out.join("bias.json");
    write_json(&json_path, &out)?;
    if partial {
        eprintln!("warning: time budget reached; some replicates were skipped (see n_skipped)");
    }
    if failed > 0 {
        eprintln!("warning: {failed} replicate fits failed (see failures in bias.json)");
    }
    Ok(format!(
        "{} rows -> {}, {}",
        cells.len(),
        csv_path.display(),
        json_path.display()
    ))
}

fn direction_json(r: &Option<DirectionReport>, err: &Option<String>) -> Value {
    match r {
        Some(r) => json!({
            "params": r.param_names.iter().cloned().zip(r.values.iter().map(|v| json!(v))).collect::<Map<String, Value>>(),
            "loglike": finite_or_null(r.loglike),
            "pearson": r.pearson,
            "spearman": r.spearman,
            "max_abs_coefficient": r.max_abs_coefficient(),
        }),
        None => json!({ "error": err }),
    }
}

pub fn cmd_assess_causality(cfg: &RunConfig) -> Result<String, CliError> {
    let spec = cfg.spec()?;
    let fwd = cfg.model.build()?;
    let inv = cfg.inverse_model.build()?;
    let (d, data_hash) = read_dataset(cfg)?;
    let report = assess_causality_with(
        &d,
        fwd.model.as_ref(),
        inv.model.as_ref(),
        &spec,
        fwd.init.as_deref(),
        inv.init.as_deref(),
    );
    let meta = Meta::new("assess-causality", cfg, Some(data_hash));
    create_out_dir(&cfg.out)?;
    let swapped = d.swapped();
    for (name, r, data) in [("forward", &report.forward, &d), ("inverse", &report.inverse, &swapped)] {
        if let Some(r) = r {
            write_csv(
                &cfg.out.join(format!("residuals_{name}.csv")),
                &meta.csv_header(),
                &["x".to_string(), "residual".to_string()],
                data.x_obs().iter().zip(&r.residuals).map(|(x, e)| vec![*x, *e]),
            )?;
        }
    }
    let out = json!({
        "forward": direction_json(&report.forward, &report.forward_error),
        "inverse": direction_json(&report.inverse, &report.inverse_error),
        "recommendation": report.recommendation,
        "partial": report.partial(),
        "advisory": report.advisory,
        "margin": report.margin,
        "meta": meta,
    });
    let path = cfg.out.join("causality.json");
    write_json(&path, &out)?;
    if report.forward.is_none() && report.inverse.is_none() {
        return Err(CliError::runtime(format!(
            "both fits failed: forward: {}; inverse: {}",
            report.forward_error.unwrap_or_default(),
            report.inverse_error.unwrap_or_default()
        )));
    }
    if report.partial() {
        eprintln!("warning: one direction failed to fit; the report is partial");
    }
    Ok(format!(
        "recommendation {:?} (advisory) -> {}",
        report.recommendation,
        path.display()
    ))
}

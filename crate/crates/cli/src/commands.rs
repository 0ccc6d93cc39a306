//! The verification workflows behind each subcommand.

use anyhow::Result;
use serde_json::{json, Value};

use kacstroock::ensemble::{compare_cov, convergence_study, run, EnsembleStats, Mode, NORMALITY_THRESHOLD_999};
use kacstroock::kernels::{CovModel, KernelSpec, SubFbmCov};
use kacstroock::oracle::kernel_inner_product;
use kacstroock::Covariance;

use crate::config::{
    invalid, RunConfig, DEFAULT_DECOMPOSE_TOL, DEFAULT_KERNEL_CHECK_TOL, DEFAULT_ORACLE_TOL,
};
use crate::output::{Cell, Table};

/// Independence holds when every cross-covariance is within this many
/// standard errors of zero.
pub const CROSS_SE_FACTOR: f64 = 4.0;
/// Standard errors added to the covariance tolerance of `decompose`.
pub const COV_SE_FACTOR: f64 = 3.0;

pub struct Report {
    pub table: Table,
    pub passed: bool,
    pub metrics: Value,
}

pub const KERNEL_CHECK_COLUMNS: &[&str] = &["t", "s", "oracle", "closed_form", "abs_error", "scaled_error", "pass"];
pub const SIMULATE_COLUMNS: &[&str] = &["t_i", "t_j", "channel", "statistic", "estimate", "se"];
pub const CONVERGENCE_COLUMNS: &[&str] = &[
    "epsilon",
    "max_cov_error",
    "se_cov_at_max",
    "max_abs_cross",
    "se_cross_at_max",
    "max_normality",
];
pub const INDEPENDENCE_COLUMNS: &[&str] = &["t_i", "t_j", "cross_cov", "se", "ratio", "pass"];
pub const DECOMPOSE_COLUMNS: &[&str] = &["t_i", "t_j", "estimate", "se", "target", "error", "allowed", "pass"];

/// Oracle inner products of the kernel against its closed-form covariance,
/// with errors scaled by `√(Var(t) Var(s))`.
pub fn kernel_check(cfg: &RunConfig) -> Result<Report> {
    let h = cfg.hurst()?;
    let model = cfg.model.clone().unwrap_or_else(|| "fbm".to_string());
    let cov = CovModel::new(&model, h).build()?;
    let kernel = match model.as_str() {
        "fbm" => KernelSpec::fbm(h),
        "lei-nualart" => KernelSpec::lei_nualart(h),
        other => return Err(invalid(&format!("kernel-check has no kernel for model '{other}'"))),
    }
    .build()?;
    let tol = cfg.tol.unwrap_or(DEFAULT_KERNEL_CHECK_TOL);
    let quad_tol = cfg.quad_tol.unwrap_or(DEFAULT_ORACLE_TOL);
    let grid = cfg.grid();
    if grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("kernel-check grid points must be positive and finite"));
    }

    let mut table = Table::new("kernel_check", KERNEL_CHECK_COLUMNS);
    let mut worst: f64 = 0.0;
    for (i, &t) in grid.iter().enumerate() {
        for &s in &grid[i..] {
            let oracle = kernel_inner_product(kernel.as_ref(), t, s, quad_tol)?.value;
            let exact = cov.cov(t, s);
            let abs_error = (oracle - exact).abs();
            let scaled = abs_error / (cov.variance(t) * cov.variance(s)).sqrt();
            worst = worst.max(scaled);
            table.push(vec![
                t.into(),
                s.into(),
                oracle.into(),
                exact.into(),
                abs_error.into(),
                scaled.into(),
                (scaled <= tol).into(),
            ]);
        }
    }
    let passed = worst <= tol;
    Ok(Report {
        table,
        passed,
        metrics: json!({ "model": model, "max_scaled_error": worst, "tol": tol }),
    })
}

fn stats_table(stats: &EnsembleStats) -> Table {
    let grid = &stats.grid;
    let mut table = Table::new("stats", SIMULATE_COLUMNS);
    for s in &stats.series {
        let label = s.label.as_str();
        for (i, &t) in grid.iter().enumerate() {
            table.push(vec![t.into(), t.into(), label.into(), "mean".into(), s.mean[i].into(), s.se_mean[i].into()]);
        }
        for (i, &t) in grid.iter().enumerate() {
            for (j, &u) in grid.iter().enumerate().skip(i) {
                table.push(vec![
                    t.into(),
                    u.into(),
                    label.into(),
                    "cov".into(),
                    s.cov.get(i, j).into(),
                    s.se_cov.get(i, j).into(),
                ]);
            }
        }
        for (i, &t) in grid.iter().enumerate() {
            table.push(vec![t.into(), t.into(), label.into(), "m2".into(), s.m2[i].into(), s.se_m2[i].into()]);
        }
        for (i, &t) in grid.iter().enumerate() {
            table.push(vec![t.into(), t.into(), label.into(), "m4".into(), s.m4[i].into(), s.se_m4[i].into()]);
        }
        for (i, n) in s.normality.iter().enumerate() {
            let t = grid[i];
            table.push(vec![
                t.into(),
                t.into(),
                label.into(),
                "normality".into(),
                n.map(|n| n.composite).into(),
                Cell::Empty,
            ]);
        }
    }
    if let Some(c) = &stats.cross {
        let label = format!("{}*{}", c.left, c.right);
        for (i, &t) in grid.iter().enumerate() {
            for (j, &u) in grid.iter().enumerate() {
                table.push(vec![
                    t.into(),
                    u.into(),
                    label.as_str().into(),
                    "cross_cov".into(),
                    c.cov.get(i, j).into(),
                    c.se.get(i, j).into(),
                ]);
            }
        }
    }
    table
}

fn run_metrics(stats: &EnsembleStats) -> Value {
    json!({
        "mode": stats.mode,
        "replicas": stats.replicas,
        "epsilon": stats.epsilon,
        "theta": stats.theta,
        "series": stats.series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(),
        "ensemble_wall_time": stats.wall_time,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Report> {
    let mode = cfg.mode.map_or(Mode::DualChannel, Mode::from);
    let ens = cfg.ensemble(mode, cfg.single_epsilon()?)?;
    let stats = run(&ens)?;
    Ok(Report {
        table: stats_table(&stats),
        passed: true,
        metrics: run_metrics(&stats),
    })
}

/// The ensemble at each ε against the target covariance; passes when the
/// error at the smallest ε is not larger than at the largest one beyond
/// their combined standard error.
pub fn convergence(cfg: &RunConfig) -> Result<Report> {
    if cfg.epsilon.is_empty() {
        return Err(invalid("convergence needs at least one --epsilon"));
    }
    let mode = cfg.mode.map_or(Mode::SingleChannel, Mode::from);
    let ens = cfg.ensemble(mode, cfg.epsilon[0])?;
    let target = cfg.target(mode, &ens.kernel)?;
    let report = convergence_study(&ens, &cfg.epsilon, &target)?;
    let mut table = Table::new("convergence", CONVERGENCE_COLUMNS);
    for row in &report.rows {
        let max_normality = row.normality.iter().flatten().map(|n| n.composite).fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
        table.push(vec![
            row.epsilon.into(),
            row.max_cov_error.into(),
            row.se_cov_at_max.into(),
            row.max_abs_cross.into(),
            row.se_cross_at_max.into(),
            max_normality.into(),
        ]);
    }
    Ok(Report {
        table,
        passed: report.trend_ok,
        metrics: json!({
            "target": report.target,
            "trend_ok": report.trend_ok,
            "normality_threshold": NORMALITY_THRESHOLD_999,
        }),
    })
}

/// Cross-covariance of the two channels on one path; passes when every
/// entry is within [`CROSS_SE_FACTOR`] standard errors of zero.
pub fn independence(cfg: &RunConfig) -> Result<Report> {
    let ens = cfg.ensemble(Mode::DualChannel, cfg.single_epsilon()?)?;
    let stats = run(&ens)?;
    let cross = stats.cross.as_ref().expect("dual-channel run has a cross block");
    let mut table = Table::new("independence", INDEPENDENCE_COLUMNS);
    let mut worst: f64 = 0.0;
    for (i, &t) in stats.grid.iter().enumerate() {
        for (j, &u) in stats.grid.iter().enumerate() {
            let (c, se) = (cross.cov.get(i, j), cross.se.get(i, j));
            let ratio = if se > 0.0 { c.abs() / se } else if c == 0.0 { 0.0 } else { f64::INFINITY };
            worst = worst.max(ratio);
            table.push(vec![
                t.into(),
                u.into(),
                c.into(),
                se.into(),
                ratio.into(),
                (ratio <= CROSS_SE_FACTOR).into(),
            ]);
        }
    }
    let mut metrics = run_metrics(&stats);
    metrics["max_ratio"] = json!(worst);
    metrics["se_factor"] = json!(CROSS_SE_FACTOR);
    Ok(Report {
        table,
        passed: worst <= CROSS_SE_FACTOR,
        metrics,
    })
}

/// `C₁ X_ε + B_ε` from opposite channels of one path against the sub-fBm
/// covariance. An entry passes when its error is within
/// `tol · Var(T) + 3 se`, `T` the last grid time.
pub fn decompose(cfg: &RunConfig) -> Result<Report> {
    let h = cfg.hurst()?;
    let ens = cfg.ensemble(Mode::Decomposition, cfg.single_epsilon()?)?;
    let stats = run(&ens)?;
    let target = SubFbmCov::new(h)?;
    let series = &stats.series[0];
    let cmp = compare_cov(series, &stats.grid, &target);
    let horizon = stats.grid.iter().copied().fold(0.0, f64::max);
    let tol = cfg.tol.unwrap_or(DEFAULT_DECOMPOSE_TOL) * target.variance(horizon);
    let mut table = Table::new("decompose", DECOMPOSE_COLUMNS);
    let mut passed = true;
    for (i, &t) in stats.grid.iter().enumerate() {
        for (j, &u) in stats.grid.iter().enumerate().skip(i) {
            let se = series.se_cov.get(i, j);
            let err = cmp.errors.get(i, j);
            let allowed = tol + COV_SE_FACTOR * se;
            let ok = err.abs() <= allowed;
            passed &= ok;
            table.push(vec![
                t.into(),
                u.into(),
                series.cov.get(i, j).into(),
                se.into(),
                target.cov(t, u).into(),
                err.into(),
                allowed.into(),
                ok.into(),
            ]);
        }
    }
    let mut metrics = run_metrics(&stats);
    metrics["max_cov_error"] = json!(cmp.max_error);
    metrics["truncation_radius"] = json!(ens.params.truncation_radius);
    Ok(Report { table, passed, metrics })
}

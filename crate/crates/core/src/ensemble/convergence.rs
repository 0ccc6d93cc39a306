use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{CovModel, Covariance};

use super::stats::{Matrix, NormalityStat, SeriesStats};
use super::{run, EnsembleConfig, EnsembleStats};

/// Empirical minus target covariance on every grid pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovComparison {
    pub errors: Matrix,
    pub max_error: f64,
    /// Standard error of the entry attaining `max_error`.
    pub se_at_max: f64,
    pub at: (usize, usize),
}

impl CovComparison {
    /// True when every entry satisfies `|err| ≤ tol + k·se`.
    pub fn within(&self, se: &Matrix, tol: f64, k: f64) -> bool {
        self.errors
            .data
            .iter()
            .zip(&se.data)
            .all(|(e, s)| e.abs() <= tol + k * s)
    }
}

pub fn compare_cov(series: &SeriesStats, grid: &[f64], target: &dyn Covariance) -> CovComparison {
    let n = grid.len();
    let mut errors = Matrix::zeros(n);
    let mut best = (0.0, 0.0, (0, 0));
    for i in 0..n {
        for j in 0..n {
            let e = series.cov.get(i, j) - target.cov(grid[i], grid[j]);
            errors.set(i, j, e);
            if e.abs() > best.0 || (i, j) == (0, 0) {
                best = (e.abs(), series.se_cov.get(i, j), (i, j));
            }
        }
    }
    CovComparison {
        errors,
        max_error: best.0,
        se_at_max: best.1,
        at: best.2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// Largest covariance error over the compared series and grid pairs.
    pub max_cov_error: f64,
    pub se_cov_at_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs_cross: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_cross_at_max: Option<f64>,
    /// Normality of the first series at each grid point; `None` where the
    /// marginal is degenerate (for instance at `t = 0`).
    pub normality: Vec<Option<NormalityStat>>,
    pub stats: EnsembleStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub target: CovModel,
    pub rows: Vec<ConvergenceRow>,
    /// Error at the smallest ε does not exceed the error at the largest ε
    /// by more than their combined standard error.
    pub trend_ok: bool,
}

/// Runs `config` at each ε (strictly decreasing) and compares with `target`.
pub fn convergence_study(config: &EnsembleConfig, epsilons: &[f64], target: &CovModel) -> Result<ConvergenceReport> {
    if epsilons.is_empty() {
        return Err(Error::invalid("no epsilon values given"));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("epsilon values must be strictly decreasing"));
    }
    let cov = target.build()?;
    // fail before any Monte Carlo work if the smallest ε is infeasible
    let mut smallest = config.clone();
    smallest.params.epsilon = *epsilons.last().unwrap();
    smallest.validate()?;
    check_events(&smallest)?;

    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut cfg = config.clone();
        cfg.params.epsilon = eps;
        let stats = run(&cfg)?;
        let (mut max_err, mut se_err) = (0.0, 0.0);
        for s in stats.target_series() {
            let cmp = compare_cov(s, &stats.grid, cov.as_ref());
            if cmp.max_error >= max_err {
                max_err = cmp.max_error;
                se_err = cmp.se_at_max;
            }
        }
        let (max_abs_cross, se_cross_at_max) = match &stats.cross {
            Some(c) => {
                let (k, v) = c
                    .cov
                    .data
                    .iter()
                    .enumerate()
                    .fold((0, 0.0f64), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
                (Some(v), Some(c.se.data[k]))
            }
            None => (None, None),
        };
        let normality = stats.series[0].normality.clone();
        rows.push(ConvergenceRow {
            epsilon: eps,
            max_cov_error: max_err,
            se_cov_at_max: se_err,
            max_abs_cross,
            se_cross_at_max,
            normality,
            stats,
        });
    }
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let combined = (first.se_cov_at_max.powi(2) + last.se_cov_at_max.powi(2)).sqrt();
    let trend_ok = last.max_cov_error <= first.max_cov_error + combined;
    Ok(ConvergenceReport {
        target: target.clone(),
        rows,
        trend_ok,
    })
}

fn check_events(config: &EnsembleConfig) -> Result<()> {
    let s_max = |spec: &crate::kernels::KernelSpec| -> Result<f64> {
        let kernel = spec.build()?;
        let t_max = config.grid.iter().copied().fold(0.0, f64::max);
        Ok(match (kernel.support_end(t_max), config.params.truncation_radius) {
            (Some(e), _) => e,
            (None, Some(r)) => r,
            (None, None) => 0.0,
        })
    };
    let mut reach = s_max(&config.kernel)?;
    if let Some(p) = &config.partner {
        reach = reach.max(s_max(p)?);
    }
    let expected = 2.0 * reach / (config.params.epsilon * config.params.epsilon);
    if expected > config.params.max_events {
        return Err(Error::HorizonGuard {
            expected_events: expected,
            limit: config.params.max_events,
        });
    }
    Ok(())
}

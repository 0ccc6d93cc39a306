//! Monte Carlo ensembles of approximating paths: finite-dimensional
//! moments with standard errors, marginal normality, and ε sweeps.
//!
//! Replica `r` always uses Poisson stream `r` under the master seed, and
//! estimates are formed from replica-ordered values, so results do not
//! depend on how many threads run the replicas.

mod convergence;
mod stats;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{FbmVolterra, KernelSpec, LeiNualart};
use crate::transform::{subfbm_combine, ApproxParams, Channel, PreparedTransform};

pub use convergence::{compare_cov, convergence_study, CovComparison, ConvergenceReport, ConvergenceRow};
pub use stats::{
    cross_stats, normality_stat, series_stats, Matrix, NormalityStat, SeriesStats, NORMALITY_MIN_SAMPLES,
    NORMALITY_THRESHOLD_999,
};

/// Replica count below which no statistics are produced.
pub const MIN_REPLICAS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One channel of one kernel.
    SingleChannel,
    /// Both channels of one kernel, plus their cross-covariance.
    DualChannel,
    /// `C₁ X_ε + B_ε` with the Lei–Nualart kernel on `channel` and the fBm
    /// kernel on the opposite channel of the same path.
    Decomposition,
}

fn default_channel() -> Channel {
    Channel::Cos
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub mode: Mode,
    /// The kernel; the fBm kernel in decomposition mode.
    pub kernel: KernelSpec,
    /// Decomposition mode only: the Lei–Nualart kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<KernelSpec>,
    /// Single-channel mode: the channel used. Decomposition mode: the
    /// channel of the Lei–Nualart part.
    #[serde(default = "default_channel")]
    pub channel: Channel,
    pub grid: Vec<f64>,
    pub params: ApproxParams,
    pub replicas: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses every available core. Does not affect
    /// results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(mode: Mode, kernel: KernelSpec, grid: Vec<f64>, params: ApproxParams, replicas: u64, master_seed: u64) -> Self {
        Self {
            mode,
            kernel,
            partner: None,
            channel: Channel::Cos,
            grid,
            params,
            replicas,
            master_seed,
            threads: None,
        }
    }

    /// Decomposition run for sub-fBm with index `hurst`.
    pub fn decomposition(hurst: f64, grid: Vec<f64>, params: ApproxParams, replicas: u64, master_seed: u64) -> Self {
        let mut cfg = Self::new(Mode::Decomposition, KernelSpec::fbm(hurst), grid, params, replicas, master_seed);
        cfg.partner = Some(KernelSpec::lei_nualart(hurst));
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("thread count must be positive"));
        }
        match self.mode {
            Mode::SingleChannel | Mode::DualChannel => {
                if self.partner.is_some() {
                    return Err(Error::invalid("a second kernel is only used in decomposition mode"));
                }
            }
            Mode::Decomposition => {
                let partner = self
                    .partner
                    .as_ref()
                    .ok_or_else(|| Error::invalid("decomposition mode needs the Lei-Nualart kernel as partner"))?;
                if self.kernel.kind != FbmVolterra::NAME || partner.kind != LeiNualart::NAME {
                    return Err(Error::invalid(format!(
                        "decomposition mode combines kernels 'fbm' and 'lei-nualart', got '{}' and '{}'",
                        self.kernel.kind, partner.kind
                    )));
                }
                let h = self.kernel.require_hurst()?;
                if partner.hurst != Some(h) {
                    return Err(Error::invalid("decomposition kernels must share H"));
                }
                if !(h > 0.0 && h < 1.0) {
                    return Err(Error::invalid(format!("decomposition mode needs H in (0, 1), got {h}")));
                }
            }
        }
        Ok(())
    }

    fn hurst(&self) -> Option<f64> {
        self.kernel.hurst
    }
}

/// Per-replica values, `series[k][r][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSamples {
    pub labels: Vec<String>,
    pub series: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossStats {
    pub left: String,
    pub right: String,
    pub cov: Matrix,
    pub se: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub grid: Vec<f64>,
    pub replicas: u64,
    pub epsilon: f64,
    pub theta: f64,
    pub master_seed: u64,
    pub mode: Mode,
    /// The first entry is the series compared against target covariances.
    pub series: Vec<SeriesStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<CrossStats>,
    /// Seconds spent, excluded from equality checks by callers that care.
    pub wall_time: f64,
}

impl EnsembleStats {
    pub fn series(&self, label: &str) -> Option<&SeriesStats> {
        self.series.iter().find(|s| s.label == label)
    }

    /// Series compared against the target covariance: both channels in
    /// dual mode, the first series otherwise.
    pub fn target_series(&self) -> &[SeriesStats] {
        match self.mode {
            Mode::DualChannel => &self.series[..2],
            _ => &self.series[..1],
        }
    }
}

fn label(spec: &KernelSpec, channel: Channel) -> String {
    let ch = match channel {
        Channel::Cos => "cos",
        Channel::Sin => "sin",
    };
    format!("{}:{ch}", spec.kind)
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker threads: {e}")))
}

/// Runs every replica and returns the raw values, in replica order. Works
/// for any replica count.
pub fn simulate_raw(config: &EnsembleConfig) -> Result<RawSamples> {
    config.validate()?;
    let main = PreparedTransform::new(&config.kernel, &config.grid, &config.params)?;
    let partner = match &config.partner {
        Some(spec) => Some(PreparedTransform::new(spec, &config.grid, &config.params)?),
        None => None,
    };
    let seed = config.master_seed;
    let replica = |r: u64| -> Result<Vec<Vec<f64>>> {
        let values = main.apply_stream(seed, r)?;
        Ok(match config.mode {
            Mode::SingleChannel => vec![values.values(config.channel).to_vec()],
            Mode::DualChannel => vec![values.cos_values, values.sin_values],
            Mode::Decomposition => {
                let x = partner.as_ref().expect("validated").apply_stream(seed, r)?;
                let b_channel = config.channel.other();
                let h = config.hurst().expect("validated");
                let combined = subfbm_combine(x.channel(config.channel), values.channel(b_channel), h)?;
                vec![combined, x.values(config.channel).to_vec(), values.values(b_channel).to_vec()]
            }
        })
    };
    let results: Vec<Result<Vec<Vec<f64>>>> =
        pool(config.threads)?.install(|| (0..config.replicas).into_par_iter().map(replica).collect());
    let labels = match config.mode {
        Mode::SingleChannel => vec![label(&config.kernel, config.channel)],
        Mode::DualChannel => vec![label(&config.kernel, Channel::Cos), label(&config.kernel, Channel::Sin)],
        Mode::Decomposition => vec![
            "subfbm".to_string(),
            label(config.partner.as_ref().expect("validated"), config.channel),
            label(&config.kernel, config.channel.other()),
        ],
    };
    let mut series = vec![Vec::with_capacity(results.len()); labels.len()];
    for (r, res) in results.into_iter().enumerate() {
        let rows = res.map_err(|e| Error::Replica {
            index: r as u64,
            source: Box::new(e),
        })?;
        for (k, row) in rows.into_iter().enumerate() {
            series[k].push(row);
        }
    }
    Ok(RawSamples { labels, series })
}

/// Runs the ensemble and forms all estimates.
pub fn run(config: &EnsembleConfig) -> Result<EnsembleStats> {
    if config.replicas < MIN_REPLICAS {
        return Err(Error::invalid(format!(
            "statistics need at least {MIN_REPLICAS} replicas, got {}",
            config.replicas
        )));
    }
    let start = Instant::now();
    let raw = simulate_raw(config)?;
    let series: Vec<SeriesStats> = raw
        .labels
        .iter()
        .zip(&raw.series)
        .map(|(label, samples)| series_stats(label, samples))
        .collect();
    let cross = match config.mode {
        Mode::SingleChannel => None,
        Mode::DualChannel | Mode::Decomposition => {
            let (a, b) = match config.mode {
                Mode::DualChannel => (0, 1),
                _ => (1, 2),
            };
            let (cov, se) = cross_stats(&raw.series[a], &raw.series[b]);
            Some(CrossStats {
                left: raw.labels[a].clone(),
                right: raw.labels[b].clone(),
                cov,
                se,
            })
        }
    };
    Ok(EnsembleStats {
        grid: config.grid.clone(),
        replicas: config.replicas,
        epsilon: config.params.epsilon,
        theta: config.params.theta.value(),
        master_seed: config.master_seed,
        mode: config.mode,
        series,
        cross,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

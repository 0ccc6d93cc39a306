//! Run configuration: a JSON document whose keys can each be overridden by
//! a command-line flag.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use kacstroock::ensemble::{EnsembleConfig, Mode};
use kacstroock::kernels::{CovModel, FbmVolterra, KernelSpec, LeiNualart, ThetaParam};
use kacstroock::transform::{default_tail_tol, truncation_radius_for, ApproxParams, Channel};

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_REPLICAS: u64 = 1000;
pub const DEFAULT_KERNEL_CHECK_TOL: f64 = 1e-4;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-9;
/// Relative covariance tolerance of `decompose`, as a fraction of the target
/// variance at the last grid time.
pub const DEFAULT_DECOMPOSE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Fixed(u64),
    Auto(AutoSeed),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoSeed {
    Auto,
}

fn parse_seed(s: &str) -> Result<SeedSpec, String> {
    if s == "auto" {
        return Ok(SeedSpec::Auto(AutoSeed::Auto));
    }
    s.parse::<u64>()
        .map(SeedSpec::Fixed)
        .map_err(|_| format!("expected a 64-bit unsigned integer or 'auto', got '{s}'"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    SingleChannel,
    DualChannel,
    Decomposition,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SingleChannel => Mode::SingleChannel,
            ModeArg::DualChannel => Mode::DualChannel,
            ModeArg::Decomposition => Mode::Decomposition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChannelArg {
    Cos,
    Sin,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Cos => Channel::Cos,
            ChannelArg::Sin => Channel::Sin,
        }
    }
}

/// Every configurable key. Absent keys take per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    /// Kernel or covariance model name (`fbm`, `lei-nualart`, `subfbm`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Full kernel description; takes precedence over `model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_events: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verbosity: Option<u8>,
}

/// Flags shared by every subcommand; each one overrides its config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON configuration file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Hurst-type index H in (0, 2)
    #[arg(long = "H", alias = "hurst", value_name = "H")]
    pub hurst: Option<f64>,
    /// Kernel or covariance model: fbm, lei-nualart, subfbm
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Scale parameter; repeat for convergence sweeps
    #[arg(long, action = clap::ArgAction::Append)]
    pub epsilon: Vec<f64>,
    /// Comma-separated time grid, e.g. "0.25,0.5,1"
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Master seed, or "auto" to draw one (it is echoed)
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<SeedSpec>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; tables go to stdout when absent
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Tail tolerance for the truncation radius of unbounded kernels
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Explicit truncation radius (overrides --tail-tol)
    #[arg(long)]
    pub truncation_radius: Option<f64>,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Pass/fail tolerance of kernel-check and decompose
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub channel: Option<ChannelArg>,
    /// Target covariance model of convergence (default follows the kernel)
    #[arg(long)]
    pub target: Option<String>,
    /// Refuse runs expecting more Poisson events per path than this
    #[arg(long)]
    pub max_events: Option<f64>,
    /// Segment integrator: chebyshev or adaptive-gl
    #[arg(long)]
    pub integrator: Option<String>,
    /// Progress messages on stderr (repeat for more)
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl RunConfig {
    /// Reads a configuration file. A summary written by an earlier run is
    /// accepted too; its `config` member is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc: serde_json::Value = serde_json::from_str(text).map_err(|e| invalid(&e.to_string()))?;
        if let Some(obj) = doc.as_object_mut() {
            if obj.contains_key("command") {
                doc = obj.remove("config").ok_or_else(|| invalid("summary document has no config"))?;
            }
        }
        let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| invalid(&e.to_string()))?;
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                return Err(invalid(&format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")));
            }
        }
        Ok(cfg)
    }

    /// The configuration file (if any) with every given flag applied.
    pub fn from_flags(flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if flags.$field.is_some() { cfg.$field = flags.$field.clone(); })*
            };
        }
        take!(
            hurst, model, theta, grid, replicas, seed, threads, out, format, tail_tol, truncation_radius, quad_tol,
            tol, mode, channel, target, max_events, integrator
        );
        if !flags.epsilon.is_empty() {
            cfg.epsilon = flags.epsilon.clone();
        }
        if flags.verbose > 0 {
            cfg.verbosity = Some(flags.verbose);
        }
        cfg.schema_version = Some(SCHEMA_VERSION);
        Ok(cfg)
    }

    /// Fills the defaults shared by every command so that the echoed
    /// configuration is complete. `seed = auto` is replaced by a drawn seed.
    pub fn resolve(&mut self) -> u64 {
        self.grid.get_or_insert_with(|| DEFAULT_GRID.to_vec());
        self.theta.get_or_insert(PI / 2.0);
        self.format.get_or_insert_with(Format::default);
        self.fix_seed()
    }

    fn fix_seed(&mut self) -> u64 {
        let seed = match self.seed {
            Some(SeedSpec::Fixed(s)) => s,
            Some(SeedSpec::Auto(_)) => rand::random::<u64>(),
            None => 0,
        };
        self.seed = Some(SeedSpec::Fixed(seed));
        seed
    }

    pub fn seed(&self) -> u64 {
        match self.seed {
            Some(SeedSpec::Fixed(s)) => s,
            _ => 0,
        }
    }

    pub fn verbosity(&self) -> u8 {
        self.verbosity.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec())
    }

    pub fn hurst(&self) -> Result<f64> {
        self.hurst
            .or_else(|| self.kernel.as_ref().and_then(|k| k.hurst))
            .ok_or_else(|| kacstroock::Error::InvalidArgument("H is required (--H or \"hurst\")".into()).into())
    }

    pub fn theta(&self) -> Result<ThetaParam> {
        Ok(ThetaParam::new(self.theta.unwrap_or(PI / 2.0))?)
    }

    /// The single ε of non-sweep commands.
    pub fn single_epsilon(&self) -> Result<f64> {
        match self.epsilon.as_slice() {
            [e] => Ok(*e),
            [] => Err(invalid("epsilon is required (--epsilon)")),
            _ => Err(invalid("this command takes exactly one epsilon")),
        }
    }

    /// Kernel of simulate / convergence / independence.
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        if let Some(k) = &self.kernel {
            return Ok(k.clone());
        }
        let model = self.model.as_deref().unwrap_or(FbmVolterra::NAME);
        match model {
            "fbm" => Ok(KernelSpec::fbm(self.hurst()?)),
            "lei-nualart" => Ok(KernelSpec::lei_nualart(self.hurst()?)),
            other => Err(invalid(&format!("no kernel for model '{other}' (use fbm or lei-nualart)"))),
        }
    }

    /// Approximation parameters for `kernels` at scale `epsilon`. Unbounded
    /// kernels get a truncation radius from `truncation_radius` or from the
    /// tail tolerance.
    pub fn approx_params(&self, kernels: &[&KernelSpec], epsilon: f64) -> Result<ApproxParams> {
        let theta = self.theta()?;
        let mut params = ApproxParams::new(epsilon, theta);
        if let Some(q) = self.quad_tol {
            params.quad_tol = q;
        }
        if let Some(m) = self.max_events {
            params.max_events = m;
        }
        if let Some(i) = &self.integrator {
            params.integrator = i.clone();
        }
        let horizon = self.grid().iter().copied().fold(0.0, f64::max);
        let mut radius: Option<f64> = self.truncation_radius;
        if radius.is_none() {
            for spec in kernels {
                let kernel = spec.build()?;
                if kernel.support_end(horizon).is_some() {
                    continue;
                }
                let tail_tol = match (self.tail_tol, spec.kind.as_str()) {
                    (Some(t), _) => t,
                    (None, "lei-nualart") => default_tail_tol(spec.require_hurst()?, horizon)?,
                    (None, kind) => return Err(invalid(&format!("kernel '{kind}' needs --tail-tol or --truncation-radius"))),
                };
                let r = truncation_radius_for(kernel.as_ref(), theta, tail_tol, horizon)?;
                radius = Some(radius.map_or(r, |prev: f64| prev.max(r)));
            }
        }
        params.truncation_radius = radius;
        params.validate()?;
        Ok(params)
    }

    pub fn ensemble(&self, mode: Mode, epsilon: f64) -> Result<EnsembleConfig> {
        let replicas = self.replicas.unwrap_or(DEFAULT_REPLICAS);
        let mut cfg = match mode {
            Mode::Decomposition => {
                let h = self.hurst()?;
                if !(h > 0.0 && h < 1.0) {
                    return Err(invalid(&format!("decomposition needs H in (0, 1), got {h}")));
                }
                let (b, x) = (KernelSpec::fbm(h), KernelSpec::lei_nualart(h));
                let params = self.approx_params(&[&b, &x], epsilon)?;
                EnsembleConfig::decomposition(h, self.grid(), params, replicas, self.seed())
            }
            _ => {
                let spec = self.kernel_spec()?;
                let params = self.approx_params(&[&spec], epsilon)?;
                EnsembleConfig::new(mode, spec, self.grid(), params, replicas, self.seed())
            }
        };
        if let Some(c) = self.channel {
            cfg.channel = c.into();
        }
        cfg.threads = self.threads;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Target covariance of convergence runs.
    pub fn target(&self, mode: Mode, kernel: &KernelSpec) -> Result<CovModel> {
        let h = self.hurst()?;
        let name = match (&self.target, mode) {
            (Some(t), _) => t.clone(),
            (None, Mode::Decomposition) => "subfbm".to_string(),
            (None, _) if kernel.kind == LeiNualart::NAME => "lei-nualart".to_string(),
            (None, _) if kernel.kind == FbmVolterra::NAME => "fbm".to_string(),
            (None, _) => return Err(invalid("no default target for this kernel; pass --target")),
        };
        let model = CovModel::new(&name, h);
        model.build()?;
        Ok(model)
    }
}

pub fn invalid(msg: &str) -> anyhow::Error {
    kacstroock::Error::InvalidArgument(msg.to_string()).into()
}

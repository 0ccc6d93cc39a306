//! Sample-moment estimators with standard errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }
}

/// Estimates for one series of process values on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub label: String,
    pub mean: Vec<f64>,
    pub se_mean: Vec<f64>,
    /// Sample covariance (divisor `n − 1`).
    pub cov: Matrix,
    pub se_cov: Matrix,
    /// Raw second moments `E[Y²]`.
    pub m2: Vec<f64>,
    pub se_m2: Vec<f64>,
    /// Raw fourth moments `E[Y⁴]`.
    pub m4: Vec<f64>,
    pub se_m4: Vec<f64>,
    /// Marginal normality per grid point; empty below
    /// [`NORMALITY_MIN_SAMPLES`] replicas, `None` for degenerate marginals.
    #[serde(default)]
    pub normality: Vec<Option<NormalityStat>>,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Per-replica values of one series: `samples[r][j]` is replica `r` at
/// grid point `j`.
pub fn series_stats(label: &str, samples: &[Vec<f64>]) -> SeriesStats {
    let n = samples.len();
    let g = samples.first().map_or(0, Vec::len);
    let nf = n as f64;
    let mut mean = vec![0.0; g];
    let mut se_mean = vec![0.0; g];
    let mut m2 = vec![0.0; g];
    let mut se_m2 = vec![0.0; g];
    let mut m4 = vec![0.0; g];
    let mut se_m4 = vec![0.0; g];
    for j in 0..g {
        let col = samples.iter().map(move |r| r[j]);
        (mean[j], se_mean[j]) = mean_and_se(col.clone(), n);
        (m2[j], se_m2[j]) = mean_and_se(col.clone().map(|v| v * v), n);
        (m4[j], se_m4[j]) = mean_and_se(col.map(|v| v.powi(4)), n);
    }
    let mut cov = Matrix::zeros(g);
    let mut se_cov = Matrix::zeros(g);
    for i in 0..g {
        for j in i..g {
            let (mi, mj) = (mean[i], mean[j]);
            let products = samples.iter().map(move |r| (r[i] - mi) * (r[j] - mj));
            let (avg, se) = mean_and_se(products, n);
            let c = avg * nf / (nf - 1.0);
            cov.set(i, j, c);
            cov.set(j, i, c);
            se_cov.set(i, j, se);
            se_cov.set(j, i, se);
        }
    }
    let normality = if n >= NORMALITY_MIN_SAMPLES {
        (0..g)
            .map(|j| {
                let col: Vec<f64> = samples.iter().map(|r| r[j]).collect();
                normality_stat(&col).ok()
            })
            .collect()
    } else {
        Vec::new()
    };
    SeriesStats {
        label: label.to_string(),
        mean,
        se_mean,
        cov,
        se_cov,
        m2,
        se_m2,
        m4,
        se_m4,
        normality,
    }
}

/// Sample cross-covariance `cov(a(t_i), b(t_j))` and its standard errors.
/// Not symmetric in general.
pub fn cross_stats(a: &[Vec<f64>], b: &[Vec<f64>]) -> (Matrix, Matrix) {
    let n = a.len();
    let g = a.first().map_or(0, Vec::len);
    let nf = n as f64;
    let col_mean = |s: &[Vec<f64>], j: usize| s.iter().map(|r| r[j]).sum::<f64>() / nf;
    let ma: Vec<f64> = (0..g).map(|j| col_mean(a, j)).collect();
    let mb: Vec<f64> = (0..g).map(|j| col_mean(b, j)).collect();
    let mut cross = Matrix::zeros(g);
    let mut se = Matrix::zeros(g);
    for i in 0..g {
        for j in 0..g {
            let products = a.iter().zip(b).map(|(ra, rb)| (ra[i] - ma[i]) * (rb[j] - mb[j]));
            let (avg, s) = mean_and_se(products, n);
            cross.set(i, j, avg * nf / (nf - 1.0));
            se.set(i, j, s);
        }
    }
    (cross, se)
}

/// Moment-based Gaussianity check of one marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityStat {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `n (b₁²/6 + (b₂ − 3)²/24)`, asymptotically χ² with 2 degrees of
    /// freedom under normality.
    pub composite: f64,
}

pub const NORMALITY_MIN_SAMPLES: usize = 1000;

/// 99.9% quantile of χ² with 2 degrees of freedom, `2 ln 1000`.
pub const NORMALITY_THRESHOLD_999: f64 = 13.815510557964274;

pub fn normality_stat(samples: &[f64]) -> Result<NormalityStat> {
    let n = samples.len();
    if n < NORMALITY_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "normality statistic needs at least {NORMALITY_MIN_SAMPLES} samples, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 == 0.0 || m2 <= (f64::EPSILON * mean).powi(2) {
        return Err(Error::DegenerateSample(format!("zero sample variance over {n} samples")));
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let composite = nf * (skewness * skewness / 6.0 + excess_kurtosis * excess_kurtosis / 24.0);
    Ok(NormalityStat {
        skewness,
        excess_kurtosis,
        composite,
    })
}

//! Group-wise resampling of whole observation vectors and summaries of the
//! resulting replicate distribution on the `sqrt(N)` scale.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{empirical_quantile, Group, GroupedDataset, Sample, WeightScheme};
use crate::error::{OverlapError, Result};
use crate::numerics::CorrelationMatrix;
use crate::overlap::Estimand;

pub const DEFAULT_REPLICATES: usize = 2000;

/// Components whose bootstrap standard deviation is at or below this are
/// treated as degenerate.
pub const DEGENERATE_SD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Worker-count hint. `None` uses the ambient rayon pool; the output
    /// never depends on it.
    pub workers: Option<usize>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { replicates: DEFAULT_REPLICATES, seed: 0, workers: None }
    }
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        BootstrapConfig { replicates, seed, workers: None }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }
}

/// `B` bootstrap re-estimates, one flattened estimate vector per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMatrix {
    rows: Vec<Vec<f64>>,
    dim: usize,
    seed: u64,
}

impl ReplicateMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || dim == 0 {
            return Err(OverlapError::InvalidInput("replicate matrix is empty".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(OverlapError::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(ReplicateMatrix { rows, dim, seed })
    }

    pub fn replicates(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.rows[b]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Restricts every row to the given components.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(OverlapError::InvalidInput("empty component selection".into()));
        }
        if let Some(&j) = indices.iter().find(|&&j| j >= self.dim) {
            return Err(OverlapError::DimensionMismatch { expected: self.dim, got: j + 1 });
        }
        let rows = self.rows.iter().map(|r| indices.iter().map(|&j| r[j]).collect()).collect();
        Ok(ReplicateMatrix { rows, dim: indices.len(), seed: self.seed })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream seed for one group of one replicate.
pub fn stream_seed(master: u64, replicate: u64, group: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ replicate) ^ group.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Draws `n` rows with replacement. Rows are indexed in lexicographic
/// order of their values, so the draw depends only on the multiset of rows.
pub fn resample_group<R: Rng + ?Sized>(group: &Group, rng: &mut R) -> Group {
    let order = group.canonical_order();
    let n = order.len();
    let picks: Vec<usize> = (0..n).map(|_| order[rng.random_range(0..n)]).collect();
    group.select_rows(&picks)
}

fn resample_dataset(data: &GroupedDataset, master: u64, b: usize) -> GroupedDataset {
    let groups = data
        .groups()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(master, b as u64, i as u64));
            resample_group(g, &mut rng)
        })
        .collect();
    data.with_groups(groups)
}

/// Reference-overlap replicates for the given weights.
pub fn bootstrap_replicates(
    data: &GroupedDataset,
    weights: &WeightScheme,
    replicates: usize,
    seed: u64,
) -> Result<ReplicateMatrix> {
    let estimand = Estimand::reference(weights.clone());
    bootstrap_replicates_with(data, &estimand, &BootstrapConfig::new(replicates, seed))
}

/// Replicates of an arbitrary estimand. Bit-identical for any worker count.
pub fn bootstrap_replicates_with(
    data: &GroupedDataset,
    estimand: &Estimand,
    config: &BootstrapConfig,
) -> Result<ReplicateMatrix> {
    if config.replicates == 0 {
        return Err(OverlapError::InvalidInput("bootstrap needs at least one replicate".into()));
    }
    // surface estimator errors before spawning work
    estimand.evaluate(data)?;
    let one = |b: usize| estimand.evaluate(&resample_dataset(data, config.seed, b));
    let rows: Result<Vec<Vec<f64>>> = match config.workers {
        Some(1) => (0..config.replicates).map(one).collect(),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| OverlapError::Internal(format!("thread pool: {e}")))?;
            pool.install(|| (0..config.replicates).into_par_iter().map(one).collect())
        }
        None => (0..config.replicates).into_par_iter().map(one).collect(),
    };
    ReplicateMatrix::from_rows(rows?, config.seed)
}

/// Bootstrap covariance on the asymptotic scale together with derived
/// standard deviations and correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub sigma_star: DMatrix<f64>,
    pub correlation: CorrelationMatrix,
    /// Estimate-scale standard deviations, `sqrt(diag(sigma_star) / N)`.
    pub component_sd: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub n_total: usize,
}

impl CovarianceEstimate {
    /// Derives standard deviations and correlation from an asymptotic-scale
    /// covariance for total sample size `n_total`.
    pub fn from_sigma(sigma_star: DMatrix<f64>, n_total: usize) -> Result<Self> {
        let p = sigma_star.nrows();
        if sigma_star.ncols() != p || p == 0 {
            return Err(OverlapError::DimensionMismatch { expected: p, got: sigma_star.ncols() });
        }
        if n_total == 0 {
            return Err(OverlapError::InvalidInput("total sample size must be positive".into()));
        }
        let sigma = sigma_star;
        let n = n_total as f64;
        let component_sd: Vec<f64> = (0..p).map(|j| (sigma[(j, j)].max(0.0) / n).sqrt()).collect();
        let degenerate: Vec<bool> = component_sd.iter().map(|&s| s <= DEGENERATE_SD).collect();
        let corr = DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else if degenerate[i] || degenerate[j] {
                0.0
            } else {
                let r = 0.5 * (sigma[(i, j)] + sigma[(j, i)]) / (sigma[(i, i)] * sigma[(j, j)]).sqrt();
                r.clamp(-1.0, 1.0)
            }
        });
        let correlation = CorrelationMatrix::new(corr)?;
        Ok(CovarianceEstimate { sigma_star: sigma, correlation, component_sd, degenerate, n_total })
    }

    pub fn dim(&self) -> usize {
        self.component_sd.len()
    }

    pub fn nondegenerate(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| !self.degenerate[j]).collect()
    }

    pub fn sigma_block(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |a, b| self.sigma_star[(indices[a], indices[b])])
    }

    /// Principal sub-problem on the given components.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(OverlapError::InvalidInput("empty component selection".into()));
        }
        if let Some(&j) = indices.iter().find(|&&j| j >= self.dim()) {
            return Err(OverlapError::DimensionMismatch { expected: self.dim(), got: j + 1 });
        }
        CovarianceEstimate::from_sigma(self.sigma_block(indices), self.n_total)
    }

    pub fn correlation_block(&self, indices: &[usize]) -> Result<CorrelationMatrix> {
        let m = self.correlation.matrix();
        CorrelationMatrix::new(DMatrix::from_fn(indices.len(), indices.len(), |a, b| {
            m[(indices[a], indices[b])]
        }))
    }
}

/// `sigma_star = N * unbiased covariance of the replicate rows`.
pub fn bootstrap_covariance(rep: &ReplicateMatrix, n_total: usize) -> Result<CovarianceEstimate> {
    let b = rep.replicates();
    if b < 2 {
        return Err(OverlapError::InvalidInput(format!(
            "covariance needs at least 2 replicates, got {b}"
        )));
    }
    if n_total == 0 {
        return Err(OverlapError::InvalidInput("total sample size must be positive".into()));
    }
    let p = rep.dim();
    let mean: Vec<f64> = (0..p).map(|j| rep.rows.iter().map(|r| r[j]).sum::<f64>() / b as f64).collect();
    let mut sigma = DMatrix::<f64>::zeros(p, p);
    for row in &rep.rows {
        for i in 0..p {
            let di = row[i] - mean[i];
            if di == 0.0 {
                continue;
            }
            for j in 0..=i {
                sigma[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    let scale = n_total as f64 / (b - 1) as f64;
    for i in 0..p {
        for j in 0..=i {
            let v = sigma[(i, j)] * scale;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    CovarianceEstimate::from_sigma(sigma, n_total)
}

/// Per-component quantiles of `sqrt(N) (I* - I)`, inf convention.
/// Returns one vector per component, ordered like `probs`.
pub fn bootstrap_quantiles(
    rep: &ReplicateMatrix,
    center: &[f64],
    n_total: usize,
    probs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if probs.is_empty() {
        return Err(OverlapError::InvalidInput("no quantile levels requested".into()));
    }
    if let Some(&u) = probs.iter().find(|&&u| !(u > 0.0 && u < 1.0)) {
        return Err(OverlapError::Domain(format!("quantile level {u} outside (0, 1)")));
    }
    if center.len() != rep.dim() {
        return Err(OverlapError::DimensionMismatch { expected: rep.dim(), got: center.len() });
    }
    let root_n = (n_total as f64).sqrt();
    (0..rep.dim())
        .map(|j| {
            let values: Vec<f64> = rep.rows.iter().map(|r| root_n * (r[j] - center[j])).collect();
            let sample = Sample::new(&values)?;
            probs.iter().map(|&u| empirical_quantile(&sample, u)).collect()
        })
        .collect()
}

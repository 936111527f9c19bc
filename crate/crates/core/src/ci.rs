//! Simultaneous confidence intervals and the Wald confidence ellipsoid.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_quantiles, CovarianceEstimate, ReplicateMatrix};
use crate::error::{OverlapError, Result};
use crate::inference::WaldMetric;
use crate::numerics::{chi_square_quantile, equicoordinate_quantile, McParams};
use crate::overlap::VariableLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Bonferroni,
    Mvt,
    EllipseProjection,
}

impl CiMethod {
    pub const ALL: [CiMethod; 3] = [CiMethod::Bonferroni, CiMethod::Mvt, CiMethod::EllipseProjection];

    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Bonferroni => "bonferroni",
            CiMethod::Mvt => "mvt",
            CiMethod::EllipseProjection => "ellipse_projection",
        }
    }
}

impl std::str::FromStr for CiMethod {
    type Err = OverlapError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "bonferroni" => Ok(CiMethod::Bonferroni),
            "mvt" => Ok(CiMethod::Mvt),
            "ellipse" | "ellipse_projection" => Ok(CiMethod::EllipseProjection),
            other => Err(OverlapError::InvalidInput(format!("unknown interval method {other:?}"))),
        }
    }
}

/// Simultaneous intervals, clipped to `[0, 1]` with the raw bounds kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub method: CiMethod,
    pub level: f64,
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub raw_lower: Vec<f64>,
    pub raw_upper: Vec<f64>,
    /// Components reported as zero-width because they have no spread.
    pub degenerate: Vec<bool>,
    pub labels: Vec<VariableLabel>,
    pub notes: Vec<String>,
}

impl IntervalSet {
    fn build(
        method: CiMethod,
        alpha: f64,
        estimate: &[f64],
        raw_lower: Vec<f64>,
        raw_upper: Vec<f64>,
        degenerate: Vec<bool>,
        notes: Vec<String>,
    ) -> Self {
        IntervalSet {
            method,
            level: 1.0 - alpha,
            estimate: estimate.to_vec(),
            lower: raw_lower.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            upper: raw_upper.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            raw_lower,
            raw_upper,
            degenerate,
            labels: Vec::new(),
            notes,
        }
    }

    pub fn len(&self) -> usize {
        self.estimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimate.is_empty()
    }

    pub fn with_labels(mut self, labels: Vec<VariableLabel>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(OverlapError::DimensionMismatch { expected: self.len(), got: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Clipped interval widths.
    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    /// Whether every clipped interval contains the matching entry of `v`.
    pub fn covers(&self, v: &[f64]) -> bool {
        v.len() == self.len() && v.iter().enumerate().all(|(j, &x)| self.lower[j] <= x && x <= self.upper[j])
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(OverlapError::Domain(format!("significance level {alpha} outside (0, 1)")))
    }
}

/// Basic-bootstrap intervals with Bonferroni levels `alpha / (2p)`:
/// `[I - q(1 - a) / sqrt(N), I - q(a) / sqrt(N)]`.
pub fn bonferroni_sci(est: &[f64], rep: &ReplicateMatrix, n_total: usize, alpha: f64) -> Result<IntervalSet> {
    check_alpha(alpha)?;
    if rep.replicates() < 2 {
        return Err(OverlapError::InvalidInput("Bonferroni intervals need at least 2 replicates".into()));
    }
    let p = est.len();
    let a = alpha / (2.0 * p as f64);
    let q = bootstrap_quantiles(rep, est, n_total, &[a, 1.0 - a])?;
    let root_n = (n_total as f64).sqrt();
    let raw_lower = (0..p).map(|j| est[j] - q[j][1] / root_n).collect();
    let raw_upper = (0..p).map(|j| est[j] - q[j][0] / root_n).collect();
    let degenerate = (0..p).map(|j| q[j][0] == 0.0 && q[j][1] == 0.0).collect();
    Ok(IntervalSet::build(CiMethod::Bonferroni, alpha, est, raw_lower, raw_upper, degenerate, Vec::new()))
}

/// `I_s +- q sd_s` with `q` the equicoordinate quantile of the bootstrap
/// correlation of the nondegenerate components.
pub fn mvt_sci(est: &[f64], cov: &CovarianceEstimate, alpha: f64, mc: &McParams) -> Result<IntervalSet> {
    check_alpha(alpha)?;
    if est.len() != cov.dim() {
        return Err(OverlapError::DimensionMismatch { expected: cov.dim(), got: est.len() });
    }
    let active = cov.nondegenerate();
    if active.is_empty() {
        return Err(OverlapError::Degenerate("all components have zero bootstrap spread".into()));
    }
    let q = equicoordinate_quantile(&cov.correlation_block(&active)?, 1.0 - alpha, mc)?;
    let half: Vec<f64> = (0..est.len()).map(|j| if cov.degenerate[j] { 0.0 } else { q * cov.component_sd[j] }).collect();
    let mut notes = Vec::new();
    if active.len() < est.len() {
        notes.push(format!(
            "{} components with zero bootstrap spread reported as zero-width intervals",
            est.len() - active.len()
        ));
    }
    Ok(IntervalSet::build(
        CiMethod::Mvt,
        alpha,
        est,
        est.iter().zip(&half).map(|(e, h)| e - h).collect(),
        est.iter().zip(&half).map(|(e, h)| e + h).collect(),
        cov.degenerate.clone(),
        notes,
    ))
}

/// The Wald confidence ellipsoid `{v : N (I - v)^T M (I - v) <= q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseRegion {
    pub center: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub n_total: usize,
    pub threshold: f64,
    pub effective_rank: usize,
    pub notes: Vec<String>,
    wald: WaldMetric,
}

pub fn ellipse_region(est: &[f64], cov: &CovarianceEstimate, alpha: f64) -> Result<EllipseRegion> {
    check_alpha(alpha)?;
    if est.len() != cov.dim() {
        return Err(OverlapError::DimensionMismatch { expected: cov.dim(), got: est.len() });
    }
    let wald = WaldMetric::new(&cov.sigma_star)?;
    let threshold = chi_square_quantile(wald.rank as f64, 1.0 - alpha)?;
    Ok(EllipseRegion {
        center: est.to_vec(),
        metric: wald.matrix.clone(),
        n_total: cov.n_total,
        threshold,
        effective_rank: wald.rank,
        notes: wald.note(est.len()).into_iter().collect(),
        wald,
    })
}

/// Closed membership test; shares the quadratic form with the Wald test.
pub fn ellipse_contains(region: &EllipseRegion, v: &[f64]) -> Result<bool> {
    if v.len() != region.center.len() {
        return Err(OverlapError::DimensionMismatch { expected: region.center.len(), got: v.len() });
    }
    Ok(region.wald.quadratic_form(region.n_total, &region.center, v) <= region.threshold)
}

/// Coordinate projections of the Wald ellipsoid:
/// `I_s +- sqrt(q_chi2_r(1 - alpha) * S_ss / N)`.
pub fn ellipse_projection_sci(est: &[f64], cov: &CovarianceEstimate, alpha: f64) -> Result<IntervalSet> {
    check_alpha(alpha)?;
    if est.len() != cov.dim() {
        return Err(OverlapError::DimensionMismatch { expected: cov.dim(), got: est.len() });
    }
    let p = est.len();
    let (rank, mut notes) = match WaldMetric::new(&cov.sigma_star) {
        Ok(w) => (w.rank, w.note(p).into_iter().collect()),
        Err(OverlapError::Degenerate(_)) => (p, vec!["covariance is zero; intervals have zero width".to_string()]),
        Err(e) => return Err(e),
    };
    let q = chi_square_quantile(rank as f64, 1.0 - alpha)?;
    let n = cov.n_total as f64;
    let half: Vec<f64> = (0..p).map(|j| (q * cov.sigma_star[(j, j)].max(0.0) / n).sqrt()).collect();
    if cov.degenerate.iter().any(|&d| d) && notes.is_empty() {
        notes.push("some components have zero bootstrap spread".into());
    }
    Ok(IntervalSet::build(
        CiMethod::EllipseProjection,
        alpha,
        est,
        est.iter().zip(&half).map(|(e, h)| e - h).collect(),
        est.iter().zip(&half).map(|(e, h)| e + h).collect(),
        cov.degenerate.clone(),
        notes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::symmetric_eigen;

    fn cov(sigma: DMatrix<f64>, n: usize) -> CovarianceEstimate {
        CovarianceEstimate::from_sigma(sigma, n).unwrap()
    }

    #[test]
    fn bonferroni_examples() {
        let rep = ReplicateMatrix::from_rows(vec![vec![0.3, 0.7]; 10], 0).unwrap();
        let s = bonferroni_sci(&[0.3, 0.7], &rep, 50, 0.05).unwrap();
        assert_eq!(s.raw_lower, vec![0.3, 0.7]);
        assert_eq!(s.raw_upper, vec![0.3, 0.7]);

        // 40 replicates; the 0.025 and 0.975 inf-quantiles are the 1st and
        // 39th order statistics of sqrt(N)(I* - I).
        let mut values = vec![-1.0];
        values.extend(std::iter::repeat_n(0.0, 37));
        values.extend([1.0, 1.0]);
        let rows = values.iter().map(|v| vec![0.5 + v / 10.0]).collect();
        let rep = ReplicateMatrix::from_rows(rows, 0).unwrap();
        let s = bonferroni_sci(&[0.5], &rep, 100, 0.05).unwrap();
        assert!((s.raw_lower[0] - 0.4).abs() < 1e-12);
        assert!((s.raw_upper[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn mvt_examples() {
        let mc = McParams::default();
        let s = mvt_sci(&[0.6], &cov(DMatrix::from_element(1, 1, 4.0), 100), 0.05, &mc).unwrap();
        assert!((s.raw_upper[0] - (0.6 + 1.959_963_984_540_054 * 0.2)).abs() < 1e-8);

        let s = mvt_sci(&[0.6, 0.4], &cov(DMatrix::identity(2, 2), 100), 0.05, &mc).unwrap();
        assert!((s.raw_upper[0] - 0.6 - 0.22365).abs() < 0.0005);

        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let s = mvt_sci(&[0.6, 0.4], &cov(sigma, 100), 0.05, &mc).unwrap();
        assert_eq!((s.raw_lower[1], s.raw_upper[1]), (0.4, 0.4));
        assert_eq!(s.degenerate, vec![false, true]);
    }

    #[test]
    fn ellipse_projection_examples() {
        let s = ellipse_projection_sci(&[0.5], &cov(DMatrix::identity(1, 1), 100), 0.05).unwrap();
        assert!((s.raw_upper[0] - 0.5 - (3.841_458_820_694_124f64 / 100.0).sqrt()).abs() < 1e-9);
        let s = ellipse_projection_sci(&[0.2, 0.9], &cov(DMatrix::zeros(2, 2), 100), 0.05).unwrap();
        assert_eq!(s.raw_lower, s.raw_upper);
    }

    #[test]
    fn clipping_keeps_raw_bounds() {
        let s = ellipse_projection_sci(&[0.98], &cov(DMatrix::identity(1, 1), 10), 0.05).unwrap();
        assert_eq!(s.upper[0], 1.0);
        assert!(s.raw_upper[0] > 1.0);
        assert!(s.lower[0] <= s.upper[0]);
    }

    #[test]
    fn ellipse_membership() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = cov(sigma.clone(), 40);
        let center = [0.55, 0.45];
        let region = ellipse_region(&center, &c, 0.05).unwrap();
        assert!(ellipse_contains(&region, &center).unwrap());

        let (values, vectors) = symmetric_eigen(&sigma).unwrap();
        let radius = |l: f64| (region.threshold * l / 40.0).sqrt();
        // slightly inside along the long axis, just outside along the short one
        let long = radius(values[0]) * (1.0 - 1e-9);
        let v: Vec<f64> = (0..2).map(|i| center[i] + long * vectors[(i, 0)]).collect();
        assert!(ellipse_contains(&region, &v).unwrap());
        let short = radius(values[1]) * 1.001;
        let v: Vec<f64> = (0..2).map(|i| center[i] + short * vectors[(i, 1)]).collect();
        assert!(!ellipse_contains(&region, &v).unwrap());
        assert!(ellipse_contains(&region, &[0.5]).is_err());
    }
}

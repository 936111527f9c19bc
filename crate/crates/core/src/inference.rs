//! Global tests of `I = 1/2` and post-hoc sub-tests with closed testing.
//!
//! Every test takes the flattened estimate vector, so the same code serves
//! the `k`-sample reference overlaps and two-sample overlaps.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{CovarianceEstimate, ReplicateMatrix};
use crate::ci::bonferroni_sci;
use crate::error::{OverlapError, Result};
use crate::numerics::{
    chi_square_sf, equicoordinate_quantile, f_nu_inf_sf, mvn_rectangle_prob, pseudoinverse_from_eigen,
    reconstruct, symmetric_eigen, McParams,
};
use crate::BENCHMARK;

/// Largest eigenvalue ratio for which the plain inverse is used.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative eigenvalue cutoff of the pseudoinverse fallback.
pub const PSEUDO_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Wald,
    AnovaType,
    MaxT,
    Percentile,
}

impl TestMethod {
    pub const ALL: [TestMethod; 4] = [TestMethod::Wald, TestMethod::AnovaType, TestMethod::MaxT, TestMethod::Percentile];

    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Wald => "wald",
            TestMethod::AnovaType => "anova_type",
            TestMethod::MaxT => "max_t",
            TestMethod::Percentile => "percentile",
        }
    }
}

impl std::str::FromStr for TestMethod {
    type Err = OverlapError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "wald" => Ok(TestMethod::Wald),
            "anova" | "anova_type" => Ok(TestMethod::AnovaType),
            "max_t" | "maxt" => Ok(TestMethod::MaxT),
            "percentile" => Ok(TestMethod::Percentile),
            other => Err(OverlapError::InvalidInput(format!("unknown test method {other:?}"))),
        }
    }
}

/// Null distribution the statistic is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceDistribution {
    ChiSquare { df: f64 },
    FNuInf { nu: f64 },
    Equicoordinate { critical_value: f64, dim: usize },
    Bonferroni { lower_level: f64, upper_level: f64 },
}

impl std::fmt::Display for ReferenceDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReferenceDistribution::ChiSquare { df } => write!(f, "chi2({df})"),
            ReferenceDistribution::FNuInf { nu } => write!(f, "F({nu:.4},inf)"),
            ReferenceDistribution::Equicoordinate { critical_value, dim } => {
                write!(f, "equicoordinate normal quantile {critical_value:.6} (dim {dim})")
            }
            ReferenceDistribution::Bonferroni { lower_level, upper_level } => {
                write!(f, "Bonferroni bootstrap quantiles at {lower_level:.6e} and {upper_level:.6}")
            }
        }
    }
}

/// Per-component readout of the Max-T and percentile tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStat {
    pub index: usize,
    pub statistic: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub reference: ReferenceDistribution,
    /// `None` for the percentile test, which only yields a decision.
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub reject: bool,
    pub per_component: Option<Vec<ComponentStat>>,
    pub notes: Vec<String>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(OverlapError::Domain(format!("significance level {alpha} outside (0, 1)")))
    }
}

fn check_dims(est: &[f64], cov: &CovarianceEstimate) -> Result<()> {
    if est.len() != cov.dim() {
        return Err(OverlapError::DimensionMismatch { expected: cov.dim(), got: est.len() });
    }
    if est.iter().any(|v| !v.is_finite()) {
        return Err(OverlapError::InvalidInput("estimate has non-finite entries".into()));
    }
    Ok(())
}

/// Middle matrix of the Wald form: the inverse of `sigma_star` when its
/// condition number is at most [`MAX_CONDITION`], else the pseudoinverse.
#[derive(Debug, Clone, PartialEq)]
pub struct WaldMetric {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub pseudo: bool,
}

impl WaldMetric {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let (mut values, vectors) = symmetric_eigen(sigma)?;
        // a Gram matrix: negative eigenvalues are round-off
        for l in &mut values {
            *l = l.max(0.0);
        }
        let max = values.first().copied().unwrap_or(0.0);
        let min = values.last().copied().unwrap_or(0.0);
        if !(max > 0.0) {
            return Err(OverlapError::Degenerate("covariance has zero effective rank".into()));
        }
        if min > 0.0 && max / min <= MAX_CONDITION {
            let matrix = reconstruct(&values, &vectors, |l| 1.0 / l);
            return Ok(WaldMetric { matrix, rank: values.len(), pseudo: false });
        }
        let (matrix, rank) = pseudoinverse_from_eigen(&values, &vectors, PSEUDO_REL_TOL);
        if rank == 0 {
            return Err(OverlapError::Degenerate("covariance has zero effective rank".into()));
        }
        Ok(WaldMetric { matrix, rank, pseudo: true })
    }

    /// `N (a - b)^T M (a - b)`.
    pub fn quadratic_form(&self, n_total: usize, a: &[f64], b: &[f64]) -> f64 {
        let p = a.len();
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let mut q = 0.0;
        for i in 0..p {
            let mut row = 0.0;
            for j in 0..p {
                row += self.matrix[(i, j)] * diff[j];
            }
            q += diff[i] * row;
        }
        n_total as f64 * q.max(0.0)
    }

    pub fn note(&self, dim: usize) -> Option<String> {
        self.pseudo.then(|| {
            format!(
                "covariance ill-conditioned or singular; Moore-Penrose inverse used with effective rank {} of {dim}",
                self.rank
            )
        })
    }
}

/// Wald-type test of `est = target`, `Q = N (I - t)^T M (I - t)`,
/// referred to `chi2` with the (effective) rank as degrees of freedom.
pub fn wald_test(est: &[f64], cov: &CovarianceEstimate, alpha: f64, target: Option<&[f64]>) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_dims(est, cov)?;
    let default_target = vec![BENCHMARK; est.len()];
    let target = target.unwrap_or(&default_target);
    if target.len() != est.len() {
        return Err(OverlapError::DimensionMismatch { expected: est.len(), got: target.len() });
    }
    let metric = WaldMetric::new(&cov.sigma_star)?;
    let statistic = metric.quadratic_form(cov.n_total, est, target);
    let df = metric.rank as f64;
    let p = chi_square_sf(df, statistic);
    Ok(TestResult {
        method: TestMethod::Wald,
        statistic,
        reference: ReferenceDistribution::ChiSquare { df },
        p_value: Some(p),
        alpha,
        reject: p <= alpha,
        per_component: None,
        notes: metric.note(est.len()).into_iter().collect(),
    })
}

/// ANOVA-type test: `F = N / tr(S) * sum (I - 1/2)^2` against
/// `F(nu, inf)` with `nu = tr(S)^2 / tr(S^2)`.
pub fn anova_type_test(est: &[f64], cov: &CovarianceEstimate, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_dims(est, cov)?;
    let sigma = &cov.sigma_star;
    let trace = sigma.trace();
    if !(trace > 0.0) {
        return Err(OverlapError::Degenerate("covariance trace is zero".into()));
    }
    let trace_sq: f64 = sigma.iter().map(|v| v * v).sum();
    let nu = trace * trace / trace_sq;
    let ss: f64 = est.iter().map(|v| (v - BENCHMARK) * (v - BENCHMARK)).sum();
    let statistic = cov.n_total as f64 / trace * ss;
    let p = f_nu_inf_sf(nu, statistic);
    Ok(TestResult {
        method: TestMethod::AnovaType,
        statistic,
        reference: ReferenceDistribution::FNuInf { nu },
        p_value: Some(p),
        alpha,
        reject: p <= alpha,
        per_component: None,
        notes: Vec::new(),
    })
}

fn degenerate_note(cov: &CovarianceEstimate) -> Option<String> {
    let excluded: Vec<String> = (0..cov.dim()).filter(|&j| cov.degenerate[j]).map(|j| j.to_string()).collect();
    (!excluded.is_empty()).then(|| {
        format!("components [{}] have zero bootstrap spread and were excluded", excluded.join(", "))
    })
}

/// Max-T test with `T_s = (I_s - 1/2) / sd_s`. The statistic is
/// `max |T_s|` over nondegenerate components; the critical value is the
/// equicoordinate normal quantile of their bootstrap correlation, and the
/// p-value is `P(max |Z_s| >= T0)`. The decision is `p <= alpha`.
pub fn max_t_test(est: &[f64], cov: &CovarianceEstimate, alpha: f64, mc: &McParams) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_dims(est, cov)?;
    let active = cov.nondegenerate();
    if active.is_empty() {
        return Err(OverlapError::Degenerate("all components have zero bootstrap spread".into()));
    }
    let corr = cov.correlation_block(&active)?;
    let critical_value = equicoordinate_quantile(&corr, 1.0 - alpha, mc)?;
    let t: Vec<f64> = active.iter().map(|&j| (est[j] - BENCHMARK) / cov.component_sd[j]).collect();
    let statistic = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let p = if statistic == 0.0 {
        1.0
    } else {
        let dim = active.len();
        let (inside, _) = mvn_rectangle_prob(&corr, &vec![-statistic; dim], &vec![statistic; dim], mc)?;
        (1.0 - inside).clamp(0.0, 1.0)
    };
    let per_component = active
        .iter()
        .zip(&t)
        .map(|(&index, &ts)| ComponentStat { index, statistic: ts, flagged: ts.abs() >= critical_value })
        .collect();
    Ok(TestResult {
        method: TestMethod::MaxT,
        statistic,
        reference: ReferenceDistribution::Equicoordinate { critical_value, dim: active.len() },
        p_value: Some(p),
        alpha,
        reject: p <= alpha,
        per_component: Some(per_component),
        notes: degenerate_note(cov).into_iter().collect(),
    })
}

/// Rejects when `1/2` falls outside at least one Bonferroni bootstrap
/// interval. Per-component statistics are `sqrt(N) (I_s - 1/2)`.
pub fn percentile_test(est: &[f64], rep: &ReplicateMatrix, n_total: usize, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let sci = bonferroni_sci(est, rep, n_total, alpha)?;
    let p = est.len();
    let spread: Vec<bool> = (0..p)
        .map(|j| {
            let col = rep.column(j);
            col.iter().any(|&v| v != col[0])
        })
        .collect();
    if !spread.iter().any(|&s| s) {
        return Err(OverlapError::Degenerate("all components have zero bootstrap spread".into()));
    }
    let root_n = (n_total as f64).sqrt();
    let per_component: Vec<ComponentStat> = (0..p)
        .map(|j| ComponentStat {
            index: j,
            statistic: root_n * (est[j] - BENCHMARK),
            flagged: BENCHMARK < sci.raw_lower[j] || BENCHMARK > sci.raw_upper[j],
        })
        .collect();
    let excluded = per_component.iter().filter(|c| c.flagged).count();
    let mut notes = sci.notes.clone();
    let level = alpha / (2.0 * p as f64);
    if (rep.replicates() as f64) * level < 5.0 {
        notes.push(format!(
            "only {:.2} bootstrap replicates expected beyond each Bonferroni quantile; increase B",
            rep.replicates() as f64 * level
        ));
    }
    let zero: Vec<String> = (0..p).filter(|&j| !spread[j]).map(|j| j.to_string()).collect();
    if !zero.is_empty() {
        notes.push(format!("components [{}] have zero bootstrap spread", zero.join(", ")));
    }
    Ok(TestResult {
        method: TestMethod::Percentile,
        statistic: excluded as f64,
        reference: ReferenceDistribution::Bonferroni { lower_level: level, upper_level: 1.0 - level },
        p_value: None,
        alpha,
        reject: excluded > 0,
        per_component: Some(per_component),
        notes,
    })
}

/// Method for sub-vector hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubTestMethod {
    Wald,
    AnovaType,
}

impl SubTestMethod {
    pub fn name(self) -> &'static str {
        match self {
            SubTestMethod::Wald => "wald",
            SubTestMethod::AnovaType => "anova_type",
        }
    }
}

/// Wald or ANOVA-type test on the components in `selector`.
pub fn subvector_test(
    est: &[f64],
    cov: &CovarianceEstimate,
    selector: &[usize],
    method: SubTestMethod,
    alpha: f64,
) -> Result<TestResult> {
    check_dims(est, cov)?;
    let sub_cov = cov.select(selector)?;
    let sub_est: Vec<f64> = selector.iter().map(|&j| est[j]).collect();
    match method {
        SubTestMethod::Wald => wald_test(&sub_est, &sub_cov, alpha, None),
        SubTestMethod::AnovaType => anova_type_test(&sub_est, &sub_cov, alpha),
    }
}

/// Predefined post-hoc families over a `k x d` group-major layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostHocFamily {
    /// One hypothesis per component `s`: all groups' overlaps on `s` equal 1/2.
    PerComponent,
    /// One hypothesis per group `i`: all components of group `i` equal 1/2.
    PerGroup,
}

impl PostHocFamily {
    pub fn name(self) -> &'static str {
        match self {
            PostHocFamily::PerComponent => "per_component",
            PostHocFamily::PerGroup => "per_group",
        }
    }

    /// Flat indices of member `m` of the family.
    pub fn selector(self, k: usize, d: usize, m: usize) -> Vec<usize> {
        match self {
            PostHocFamily::PerComponent => (0..k).map(|i| i * d + m).collect(),
            PostHocFamily::PerGroup => (0..d).map(|s| m * d + s).collect(),
        }
    }

    pub fn members(self, k: usize, d: usize) -> usize {
        match self {
            PostHocFamily::PerComponent => d,
            PostHocFamily::PerGroup => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostHocResult {
    pub family: PostHocFamily,
    pub member: usize,
    pub label: String,
    pub selector: Vec<usize>,
    /// The unadjusted sub-test; `None` when the sub-covariance is degenerate.
    pub raw: Option<TestResult>,
    /// Closure-adjusted p-value: the largest p over all intersection
    /// hypotheses containing this member.
    pub adjusted_p: f64,
    pub reject: bool,
}

/// Largest family for which all intersections are enumerated.
pub const MAX_CLOSURE_MEMBERS: usize = 16;

/// Raw sub-tests for every member of `family` plus closed-testing decisions
/// controlling the familywise error at `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn closed_testing(
    est: &[f64],
    cov: &CovarianceEstimate,
    k: usize,
    d: usize,
    family: PostHocFamily,
    method: SubTestMethod,
    alpha: f64,
    names: &[String],
) -> Result<Vec<PostHocResult>> {
    if k * d != est.len() {
        return Err(OverlapError::DimensionMismatch { expected: est.len(), got: k * d });
    }
    let m = family.members(k, d);
    if names.len() != m {
        return Err(OverlapError::DimensionMismatch { expected: m, got: names.len() });
    }
    if m > MAX_CLOSURE_MEMBERS {
        return Err(OverlapError::InvalidInput(format!(
            "closed testing over {m} hypotheses exceeds the limit of {MAX_CLOSURE_MEMBERS}"
        )));
    }
    let mut subset_p = vec![0.0; 1 << m];
    for mask in 1usize..(1 << m) {
        let mut selector: Vec<usize> = (0..m)
            .filter(|&h| mask & (1 << h) != 0)
            .flat_map(|h| family.selector(k, d, h))
            .collect();
        selector.sort_unstable();
        subset_p[mask] = match subvector_test(est, cov, &selector, method, alpha) {
            Ok(r) => r.p_value.unwrap_or(1.0),
            // no variability in this intersection: nothing to reject
            Err(e) if e.is_numerical() => 1.0,
            Err(e) => return Err(e),
        };
    }
    (0..m)
        .map(|h| {
            let selector = family.selector(k, d, h);
            let raw = match subvector_test(est, cov, &selector, method, alpha) {
                Ok(r) => Some(r),
                Err(e) if e.is_numerical() => None,
                Err(e) => return Err(e),
            };
            let adjusted_p = (1usize..(1 << m))
                .filter(|mask| mask & (1 << h) != 0)
                .map(|mask| subset_p[mask])
                .fold(0.0_f64, f64::max);
            Ok(PostHocResult {
                family,
                member: h,
                label: names[h].clone(),
                selector,
                raw,
                adjusted_p,
                reject: adjusted_p <= alpha,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(sigma: DMatrix<f64>, n: usize) -> CovarianceEstimate {
        CovarianceEstimate::from_sigma(sigma, n).unwrap()
    }

    #[test]
    fn wald_examples() {
        let c = cov(DMatrix::identity(3, 3), 50);
        let r = wald_test(&[0.5; 3], &c, 0.05, None).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, Some(1.0)));
        assert!(!r.reject);

        let r = wald_test(&[0.6], &cov(DMatrix::identity(1, 1), 100), 0.05, None).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!((r.p_value.unwrap() - 0.317_310_507_862_914).abs() < 1e-9);

        let est = [0.4, 0.7, 0.55];
        let r = wald_test(&est, &c, 0.05, None).unwrap();
        let expect: f64 = 50.0 * est.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>();
        assert!((r.statistic - expect).abs() < 1e-12);
        assert_eq!(r.reference, ReferenceDistribution::ChiSquare { df: 3.0 });
    }

    #[test]
    fn wald_singular_uses_effective_rank() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = wald_test(&[0.6, 0.6], &cov(sigma, 10), 0.05, None).unwrap();
        assert_eq!(r.reference, ReferenceDistribution::ChiSquare { df: 1.0 });
        assert_eq!(r.notes.len(), 1);
        let zero = cov(DMatrix::zeros(2, 2), 10);
        assert!(matches!(wald_test(&[0.6, 0.6], &zero, 0.05, None), Err(OverlapError::Degenerate(_))));
    }

    #[test]
    fn anova_examples() {
        let r = anova_type_test(&[0.5; 4], &cov(DMatrix::identity(4, 4), 30), 0.05).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, Some(1.0)));
        assert_eq!(r.reference, ReferenceDistribution::FNuInf { nu: 4.0 });

        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let r = anova_type_test(&[0.6, 0.6], &cov(sigma, 100), 0.05).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
        match r.reference {
            ReferenceDistribution::FNuInf { nu } => assert!((nu - 1.6).abs() < 1e-12),
            _ => panic!(),
        }
        assert!(anova_type_test(&[0.6], &cov(DMatrix::zeros(1, 1), 10), 0.05).is_err());
    }

    #[test]
    fn wald_and_anova_agree_for_scaled_identity() {
        let c = cov(DMatrix::identity(3, 3) * 2.5, 40);
        let est = [0.45, 0.62, 0.5];
        let w = wald_test(&est, &c, 0.05, None).unwrap();
        let a = anova_type_test(&est, &c, 0.05).unwrap();
        assert!((a.statistic - w.statistic / 3.0).abs() < 1e-12);
    }

    #[test]
    fn max_t_univariate_is_z_test() {
        let mc = McParams::default();
        let c = cov(DMatrix::from_element(1, 1, 4.0), 100); // sd = 0.2
        let r = max_t_test(&[0.5 + 0.2 * 1.97], &c, 0.05, &mc).unwrap();
        assert!(r.reject);
        let r = max_t_test(&[0.5 + 0.2 * 1.95], &c, 0.05, &mc).unwrap();
        assert!(!r.reject);
        match r.reference {
            ReferenceDistribution::Equicoordinate { critical_value, .. } => {
                assert!((critical_value - 1.959_963_984_540_054).abs() < 1e-6)
            }
            _ => panic!(),
        }
        let r = max_t_test(&[0.5], &c, 0.05, &mc).unwrap();
        assert_eq!((r.statistic, r.reject), (0.0, false));
    }

    #[test]
    fn max_t_excludes_degenerate_components() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let r = max_t_test(&[0.55, 0.9], &cov(sigma, 25), 0.05, &McParams::default()).unwrap();
        assert_eq!(r.per_component.as_ref().unwrap().len(), 1);
        assert_eq!(r.notes.len(), 1);
        assert!(max_t_test(&[0.5], &cov(DMatrix::zeros(1, 1), 25), 0.05, &McParams::default()).is_err());
    }

    #[test]
    fn percentile_examples() {
        let rows = (0..200).map(|b| vec![0.5 + ((b % 21) as f64 - 10.0) * 0.01, 0.5]).collect();
        let rep = ReplicateMatrix::from_rows(rows, 0).unwrap();
        let r = percentile_test(&[0.5, 0.5], &rep, 100, 0.05).unwrap();
        assert!(!r.reject);

        let rows = (0..200).map(|b| vec![0.5 + ((b % 21) as f64 - 10.0) * 0.01, 0.9 + (b % 3) as f64 * 0.01]).collect();
        let rep = ReplicateMatrix::from_rows(rows, 0).unwrap();
        let r = percentile_test(&[0.5, 0.91], &rep, 100, 0.05).unwrap();
        assert!(r.reject);
        let flags: Vec<bool> = r.per_component.unwrap().iter().map(|c| c.flagged).collect();
        assert_eq!(flags, vec![false, true]);

        let rep = ReplicateMatrix::from_rows(vec![vec![0.3; 12]; 50], 0).unwrap();
        let est = [0.3; 12];
        assert!(percentile_test(&est, &rep, 100, 0.05).is_err());
    }

    #[test]
    fn subvector_full_mask_is_global() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5]);
        let c = cov(sigma, 60);
        let est = [0.41, 0.58, 0.52];
        let full = subvector_test(&est, &c, &[0, 1, 2], SubTestMethod::Wald, 0.05).unwrap();
        assert_eq!(full, wald_test(&est, &c, 0.05, None).unwrap());
        let full = subvector_test(&est, &c, &[0, 1, 2], SubTestMethod::AnovaType, 0.05).unwrap();
        assert_eq!(full, anova_type_test(&est, &c, 0.05).unwrap());
        assert!(subvector_test(&est, &c, &[], SubTestMethod::Wald, 0.05).is_err());

        let one = subvector_test(&est, &c, &[1], SubTestMethod::Wald, 0.05).unwrap();
        let z = (0.58 - 0.5) / (1.0f64 / 60.0).sqrt();
        assert!((one.statistic - z * z).abs() < 1e-10);
    }

    #[test]
    fn closed_testing_adjusts_upwards() {
        let k = 2;
        let d = 2;
        let c = cov(DMatrix::identity(4, 4), 100);
        // component 0 strongly violated, component 1 null
        let est = [0.75, 0.5, 0.3, 0.52];
        let names = vec!["X1".to_string(), "X2".to_string()];
        let res = closed_testing(&est, &c, k, d, PostHocFamily::PerComponent, SubTestMethod::Wald, 0.05, &names).unwrap();
        assert_eq!(res.len(), 2);
        assert!(res[0].reject);
        assert!(!res[1].reject);
        for r in &res {
            assert!(r.adjusted_p >= r.raw.as_ref().unwrap().p_value.unwrap());
        }
        assert_eq!(res[0].selector, vec![0, 2]);
        assert_eq!(PostHocFamily::PerGroup.selector(k, d, 1), vec![2, 3]);
    }
}

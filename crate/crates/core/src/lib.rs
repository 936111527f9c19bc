//! Nonparametric multivariate niche overlap.
//!
//! For `k` groups of `d`-dimensional observations, the crate estimates the
//! componentwise overlap of each group with a weighted reference mixture of
//! all groups, bootstraps the joint sampling distribution of the `k*d`
//! estimates, and builds global tests and simultaneous confidence intervals
//! around the equal-distribution benchmark `1/2`.
//!
//! The [`sim`] module reproduces size, power and coverage studies.

pub mod bootstrap;
pub mod ci;
pub mod empirical;
pub mod error;
pub mod inference;
pub mod numerics;
pub mod overlap;
pub mod sim;

pub use bootstrap::{
    bootstrap_covariance, bootstrap_quantiles, bootstrap_replicates, bootstrap_replicates_with,
    resample_group, BootstrapConfig, CovarianceEstimate, ReplicateMatrix, DEFAULT_REPLICATES,
};
pub use ci::{
    bonferroni_sci, ellipse_contains, ellipse_projection_sci, ellipse_region, mvt_sci,
    CiMethod, EllipseRegion, IntervalSet,
};
pub use empirical::{
    ecdf_eval, empirical_quantile, midranks, Group, GroupedDataset, Sample, WeightMode,
    WeightScheme,
};
pub use error::{OverlapError, Result};
pub use inference::{
    anova_type_test, closed_testing, max_t_test, percentile_test, subvector_test, wald_test,
    PostHocFamily, PostHocResult, ReferenceDistribution, SubTestMethod, TestMethod, TestResult,
};
pub use numerics::{
    chi_square_quantile, cholesky_psd, equicoordinate_quantile, f_nu_inf_quantile,
    mvn_rectangle_prob, std_normal_cdf, std_normal_quantile, sym_pseudoinverse, CorrelationMatrix,
    McParams,
};
pub use overlap::{
    pairwise_overlap, rank_reference_overlap, reference_overlap, two_sample_overlap, Estimand,
    OverlapMatrix, PairwiseOverlap, VariableLabel,
};

/// Overlap value of two identical continuous distributions; the null
/// benchmark for every test in [`inference`].
pub const BENCHMARK: f64 = 0.5;

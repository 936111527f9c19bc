//! Random vectors for simulation scenarios.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{OverlapError, Result};
use crate::numerics::cholesky_psd;

fn check_shape(mean: &[f64], cov: &DMatrix<f64>) -> Result<()> {
    let d = mean.len();
    if d == 0 {
        return Err(OverlapError::InvalidInput("mean vector is empty".into()));
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(OverlapError::DimensionMismatch { expected: d, got: cov.nrows() });
    }
    Ok(())
}

fn correlated_normal<R: Rng + ?Sized>(l: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let d = l.nrows();
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    (0..d).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect()
}

/// `n` rows of `mean + L z` with `L = cholesky_psd(cov)`.
pub fn sample_mvnormal<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &DMatrix<f64>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_shape(mean, cov)?;
    let l = cholesky_psd(cov)?;
    Ok((0..n)
        .map(|_| correlated_normal(&l, rng).iter().zip(mean).map(|(x, m)| m + x).collect())
        .collect())
}

/// `n` rows of `mean + L z / sqrt(g / df)` with one `g ~ chi2_df` per row.
pub fn sample_mvt<R: Rng + ?Sized>(
    mean: &[f64],
    scale: &DMatrix<f64>,
    df: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_shape(mean, scale)?;
    if !(df > 0.0 && df.is_finite()) {
        return Err(OverlapError::InvalidInput(format!("t degrees of freedom {df} must be positive")));
    }
    let l = cholesky_psd(scale)?;
    let chi = ChiSquared::new(df).map_err(|e| OverlapError::InvalidInput(e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            let x = correlated_normal(&l, rng);
            let w = (chi.sample(rng) / df).sqrt();
            x.iter().zip(mean).map(|(x, m)| m + x / w).collect()
        })
        .collect())
}

/// Normal rows with component `c` replaced by `exp(log_mean + sqrt(log_var) u)`,
/// where `u` is that component's standardized normal draw, so the
/// dependence on the other components is kept through a Gaussian copula.
pub fn sample_mvnormal_lognormal<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &DMatrix<f64>,
    component: usize,
    log_mean: f64,
    log_var: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_shape(mean, cov)?;
    if component >= mean.len() {
        return Err(OverlapError::InvalidInput(format!(
            "lognormal component {component} out of range for d = {}",
            mean.len()
        )));
    }
    if !(log_var >= 0.0) || !log_mean.is_finite() {
        return Err(OverlapError::InvalidInput("lognormal parameters must be finite with log_var >= 0".into()));
    }
    let sd = cov[(component, component)].max(0.0).sqrt();
    let mut rows = sample_mvnormal(mean, cov, n, rng)?;
    for row in &mut rows {
        let u = if sd > 0.0 { (row[component] - mean[component]) / sd } else { 0.0 };
        row[component] = (log_mean + log_var.sqrt() * u).exp();
    }
    Ok(rows)
}

/// Mean and variance of `exp(N(mu, s2))`.
pub fn lognormal_moments(mu: f64, s2: f64) -> (f64, f64) {
    let mean = (mu + 0.5 * s2).exp();
    let var = (s2.exp() - 1.0) * (2.0 * mu + s2).exp();
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_covariance_gives_constant_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = sample_mvnormal(&[1.0, 2.0], &DMatrix::zeros(2, 2), 5, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r == &vec![1.0, 2.0]));
        let rows = sample_mvt(&[1.0, 2.0], &DMatrix::zeros(2, 2), 3.0, 5, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r == &vec![1.0, 2.0]));
    }

    #[test]
    fn lognormal_log_scale_matches_unit_variance() {
        let (m, v) = lognormal_moments(-0.35, 0.7);
        assert!((m - 1.0).abs() < 1e-12);
        assert!((v - (0.7f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn lognormal_component_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]);
        let rows = sample_mvnormal_lognormal(&[1.0, 1.0], &cov, 1, -0.35, 0.7, 200, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r[1] > 0.0));
    }
}

//! Multivariate normal rectangle probabilities and equicoordinate quantiles.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{check_symmetric, reconstruct, symmetric_eigen};
use super::special::{std_normal_cdf, std_normal_pdf, std_normal_quantile_unchecked};
use crate::error::{OverlapError, Result};

/// Monte Carlo settings for rectangle probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub sample_count: usize,
    pub seed: u64,
    pub target_se: f64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams { sample_count: 100_000, seed: 0x5eed_0f_6e_4e2, target_se: 5e-4 }
    }
}

impl McParams {
    pub fn new(sample_count: usize, seed: u64, target_se: f64) -> Result<Self> {
        let mc = McParams { sample_count, seed, target_se };
        mc.validate()?;
        Ok(mc)
    }

    pub fn with_seed(seed: u64) -> Self {
        McParams { seed, ..McParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 1000 {
            return Err(OverlapError::InvalidInput(format!(
                "Monte Carlo sample count {} is below 1000",
                self.sample_count
            )));
        }
        if !(self.target_se >= 0.0 && self.target_se.is_finite()) {
            return Err(OverlapError::InvalidInput("target standard error must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// A validated correlation matrix. Slightly negative eigenvalues (down to
/// `-1e-8`) are clipped to zero and the diagonal restored to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m, 1e-12)?;
        let p = m.nrows();
        if p == 0 {
            return Err(OverlapError::InvalidInput("empty correlation matrix".into()));
        }
        for i in 0..p {
            if (m[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(OverlapError::LinearAlgebra(format!(
                    "correlation diagonal entry {i} is {} rather than 1",
                    m[(i, i)]
                )));
            }
        }
        let (values, vectors) = symmetric_eigen(&m)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(OverlapError::LinearAlgebra(format!(
                "correlation matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        let mut entries = if min < 0.0 {
            let clipped = reconstruct(&values, &vectors, |l| l.max(0.0));
            let d: Vec<f64> = (0..p).map(|i| clipped[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
            DMatrix::from_fn(p, p, |i, j| clipped[(i, j)] / (d[i] * d[j]))
        } else {
            m
        };
        for i in 0..p {
            entries[(i, i)] = 1.0;
            for j in 0..i {
                let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(CorrelationMatrix { entries })
    }

    pub fn identity(p: usize) -> Self {
        CorrelationMatrix { entries: DMatrix::identity(p, p) }
    }

    /// Rescales a covariance matrix with strictly positive diagonal.
    pub fn from_covariance(cov: &DMatrix<f64>) -> Result<Self> {
        let p = cov.nrows();
        let sd: Vec<f64> = (0..p).map(|i| cov[(i, i)].sqrt()).collect();
        if sd.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(OverlapError::Degenerate(
                "covariance has a zero or non-finite variance".into(),
            ));
        }
        let m = DMatrix::from_fn(p, p, |i, j| {
            if i == j {
                1.0
            } else {
                0.5 * (cov[(i, j)] + cov[(j, i)]) / (sd[i] * sd[j])
            }
        });
        CorrelationMatrix::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    fn is_diagonal(&self) -> bool {
        let p = self.dim();
        (0..p).all(|i| (0..p).all(|j| i == j || self.entries[(i, j)] == 0.0))
    }
}

const DEGENERATE_VAR: f64 = 1e-10;
const SHIFTS: usize = 10;

/// Cholesky factor of the reordered correlation with reordered bounds.
struct GenzPlan {
    l: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn interval_mass(a: f64, b: f64) -> f64 {
    (std_normal_cdf(b) - std_normal_cdf(a)).max(0.0)
}

// Mean of a standard normal truncated to (a, b).
fn truncated_mean(a: f64, b: f64) -> f64 {
    let mass = interval_mass(a, b);
    if mass < 1e-300 {
        return if a.is_finite() { a } else if b.is_finite() { b } else { 0.0 };
    }
    let pa = if a.is_finite() { std_normal_pdf(a) } else { 0.0 };
    let pb = if b.is_finite() { std_normal_pdf(b) } else { 0.0 };
    (pa - pb) / mass
}

impl GenzPlan {
    /// Pivoted Cholesky: at each step pick the remaining variable with the
    /// smallest conditional interval probability.
    fn new(corr: &DMatrix<f64>, lower: &[f64], upper: &[f64]) -> Self {
        let p = corr.nrows();
        let mut c = corr.clone();
        let mut a = lower.to_vec();
        let mut b = upper.to_vec();
        let mut l = DMatrix::<f64>::zeros(p, p);
        let mut y = vec![0.0; p];
        for i in 0..p {
            let mut best = i;
            let mut best_mass = f64::INFINITY;
            for j in i..p {
                let mut s = c[(j, j)];
                let mut mu = 0.0;
                for k in 0..i {
                    s -= l[(j, k)] * l[(j, k)];
                    mu += l[(j, k)] * y[k];
                }
                // degenerate rows go last
                let mass = if s > DEGENERATE_VAR {
                    let sd = s.sqrt();
                    interval_mass((a[j] - mu) / sd, (b[j] - mu) / sd)
                } else {
                    2.0
                };
                if mass < best_mass {
                    best_mass = mass;
                    best = j;
                }
            }
            if best != i {
                c.swap_rows(i, best);
                c.swap_columns(i, best);
                l.swap_rows(i, best);
                a.swap(i, best);
                b.swap(i, best);
            }
            let mut s = c[(i, i)];
            let mut mu = 0.0;
            for k in 0..i {
                s -= l[(i, k)] * l[(i, k)];
                mu += l[(i, k)] * y[k];
            }
            if s > DEGENERATE_VAR {
                let lii = s.sqrt();
                l[(i, i)] = lii;
                for r in (i + 1)..p {
                    let mut v = c[(r, i)];
                    for k in 0..i {
                        v -= l[(r, k)] * l[(i, k)];
                    }
                    l[(r, i)] = v / lii;
                }
                y[i] = truncated_mean((a[i] - mu) / lii, (b[i] - mu) / lii);
            } else {
                y[i] = 0.0;
            }
        }
        GenzPlan { l, lower: a, upper: b }
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        GenzPlan { l: self.l.clone(), lower, upper }
    }

    /// Integrand at a point of the unit cube of dimension `p - 1`.
    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let p = self.dim();
        let mut f = 1.0;
        for i in 0..p {
            let mut mu = 0.0;
            for k in 0..i {
                mu += self.l[(i, k)] * y[k];
            }
            let lii = self.l[(i, i)];
            if lii > 0.0 {
                let d = std_normal_cdf((self.lower[i] - mu) / lii);
                let e = std_normal_cdf((self.upper[i] - mu) / lii);
                let mass = (e - d).max(0.0);
                f *= mass;
                if f == 0.0 {
                    return 0.0;
                }
                if i + 1 < p {
                    let u = (d + w[i] * mass).clamp(1e-17, 1.0 - 1e-16);
                    y[i] = std_normal_quantile_unchecked(u);
                }
            } else {
                let tol = 1e-8 * (1.0 + mu.abs());
                if mu < self.lower[i] - tol || mu > self.upper[i] + tol {
                    return 0.0;
                }
                y[i] = 0.0;
            }
        }
        f
    }

    /// True when the integrand does not depend on the sampled point.
    fn is_exact(&self) -> bool {
        let p = self.dim();
        (0..p).all(|i| (0..i).all(|k| self.l[(i, k)] == 0.0))
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut n = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&q| q * q <= n).all(|&q| n % q != 0) {
            primes.push(n);
        }
        n += 1;
    }
    primes
}

/// Randomly shifted Richtmyer lattice. Points for `k = 1..n` are nested, so
/// the sums can be extended in place.
struct Lattice {
    alpha: Vec<f64>,
    shifts: Vec<Vec<f64>>,
}

impl Lattice {
    fn new(dim: usize, seed: u64) -> Self {
        let alpha = first_primes(dim).into_iter().map(|q| (q as f64).sqrt().fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts = (0..SHIFTS).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        Lattice { alpha, shifts }
    }

    /// Accumulates integrand values for lattice indices `from..to` into `sums`.
    fn accumulate(&self, plan: &GenzPlan, from: usize, to: usize, sums: &mut [f64]) {
        let dim = self.alpha.len();
        let mut w = vec![0.0; dim];
        let mut y = vec![0.0; plan.dim()];
        for (shift, sum) in self.shifts.iter().zip(sums.iter_mut()) {
            let mut acc = 0.0;
            for k in from..to {
                for j in 0..dim {
                    let x = (k as f64 * self.alpha[j] + shift[j]).fract();
                    // baker's transform
                    w[j] = 1.0 - (2.0 * x - 1.0).abs();
                }
                acc += plan.integrand(&w, &mut y);
            }
            *sum += acc;
        }
    }
}

fn summarize(sums: &[f64], n: usize) -> (f64, f64) {
    let means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean.clamp(0.0, 1.0), (var / m).sqrt())
}

fn initial_points(mc: &McParams) -> usize {
    (mc.sample_count / (SHIFTS * 16)).max(1)
}

/// Adaptive integration; returns `(estimate, se, points per shift used)`.
fn integrate_adaptive(plan: &GenzPlan, mc: &McParams) -> (f64, f64, usize) {
    if plan.is_exact() {
        let w = vec![0.5; plan.dim().saturating_sub(1)];
        let mut y = vec![0.0; plan.dim()];
        return (plan.integrand(&w, &mut y), 0.0, 0);
    }
    let lattice = Lattice::new(plan.dim() - 1, mc.seed);
    let per_shift_budget = (mc.sample_count / SHIFTS).max(1);
    let mut sums = vec![0.0; SHIFTS];
    let mut n = 0;
    let mut next = initial_points(mc).min(per_shift_budget);
    loop {
        lattice.accumulate(plan, n + 1, next + 1, &mut sums);
        n = next;
        let (est, se) = summarize(&sums, n);
        if se <= mc.target_se || n >= per_shift_budget {
            return (est, se, n);
        }
        next = (2 * n).min(per_shift_budget);
    }
}

fn integrate_fixed(plan: &GenzPlan, lattice: &Lattice, n: usize) -> (f64, f64) {
    if plan.is_exact() {
        let w = vec![0.5; plan.dim().saturating_sub(1)];
        let mut y = vec![0.0; plan.dim()];
        return (plan.integrand(&w, &mut y), 0.0);
    }
    let mut sums = vec![0.0; SHIFTS];
    lattice.accumulate(plan, 1, n + 1, &mut sums);
    summarize(&sums, n)
}

fn check_bounds(p: usize, lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != p {
        return Err(OverlapError::DimensionMismatch { expected: p, got: lower.len() });
    }
    if upper.len() != p {
        return Err(OverlapError::DimensionMismatch { expected: p, got: upper.len() });
    }
    for (j, (&a, &b)) in lower.iter().zip(upper).enumerate() {
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(OverlapError::Domain(format!(
                "rectangle bounds for coordinate {j} must satisfy lower < upper (got {a}, {b})"
            )));
        }
    }
    Ok(())
}

/// `P(lower <= Z <= upper)` for `Z ~ N(0, corr)` with a standard error.
/// Genz sequential conditioning with variable reordering, integrated on a
/// randomly shifted lattice. Deterministic given `mc.seed`.
pub fn mvn_rectangle_prob(
    corr: &CorrelationMatrix,
    lower: &[f64],
    upper: &[f64],
    mc: &McParams,
) -> Result<(f64, f64)> {
    mc.validate()?;
    let p = corr.dim();
    check_bounds(p, lower, upper)?;
    if p == 1 || corr.is_diagonal() {
        let prob = lower.iter().zip(upper).map(|(&a, &b)| interval_mass(a, b)).product();
        return Ok((prob, 0.0));
    }
    let plan = GenzPlan::new(corr.matrix(), lower, upper);
    let (est, se, _) = integrate_adaptive(&plan, mc);
    Ok((est, se))
}

/// The `q` with `P(|Z_j| <= q for all j) = conf`. The variable ordering,
/// lattice and point count are fixed before bisecting so the objective is
/// the same deterministic function of `q` at every step.
pub fn equicoordinate_quantile(corr: &CorrelationMatrix, conf: f64, mc: &McParams) -> Result<f64> {
    if !(conf > 0.0 && conf < 1.0) {
        return Err(OverlapError::Domain(format!("confidence level {conf} outside (0, 1)")));
    }
    mc.validate()?;
    let p = corr.dim();
    let z_lo = std_normal_quantile_unchecked(0.5 * (1.0 + conf));
    if p == 1 {
        return Ok(z_lo);
    }
    let z_hi = std_normal_quantile_unchecked(1.0 - (1.0 - conf) / (2.0 * p as f64));

    let objective: Box<dyn Fn(f64) -> f64> = if corr.is_diagonal() {
        Box::new(move |q: f64| interval_mass(-q, q).powi(p as i32))
    } else {
        let q0 = 0.5 * (z_lo + z_hi);
        let plan = GenzPlan::new(corr.matrix(), &vec![-q0; p], &vec![q0; p]);
        let (_, _, n) = integrate_adaptive(&plan, mc);
        let lattice = Lattice::new(p - 1, mc.seed);
        let n = n.max(initial_points(mc));
        Box::new(move |q: f64| {
            let at_q = plan.with_bounds(vec![-q; p], vec![q; p]);
            integrate_fixed(&at_q, &lattice, n).0
        })
    };

    let (mut lo, mut hi) = (z_lo, z_hi);
    let mut widen = 0;
    while objective(lo) > conf && lo > 1e-8 {
        lo *= 0.5;
        widen += 1;
        if widen > 60 {
            break;
        }
    }
    widen = 0;
    while objective(hi) < conf {
        hi += 1.0;
        widen += 1;
        if widen > 40 {
            return Err(OverlapError::Internal(
                "equicoordinate quantile bisection failed to bracket".into(),
            ));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-9 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if objective(mid) < conf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

//! Normal, chi-square and `F(nu, inf)` distribution functions and quantiles.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{OverlapError, Result};

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    }
}

// Acklam's rational approximation, relative error ~1.15e-9 before polishing.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse of the standard normal CDF for `p` in `(0, 1)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(OverlapError::Domain(format!(
            "normal quantile level {p} outside (0, 1)"
        )));
    }
    Ok(std_normal_quantile_unchecked(p))
}

/// Same as [`std_normal_quantile`] but maps 0 and 1 to the infinities.
pub(crate) fn std_normal_quantile_unchecked(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = acklam(p);
    // One Halley step on Phi(x) - p.
    let e = if x < 0.0 {
        std_normal_cdf(x) - p
    } else {
        (1.0 - p) - std_normal_cdf(-x)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

fn check_chi_args(df: f64, p: f64) -> Result<()> {
    if !(df > 0.0 && df.is_finite()) {
        return Err(OverlapError::Domain(format!("degrees of freedom {df} must be positive")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(OverlapError::Domain(format!("probability {p} outside (0, 1)")));
    }
    Ok(())
}

pub fn chi_square_cdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        gamma_lr(0.5 * df, 0.5 * x)
    }
}

/// Upper tail `P(chi2_df > x)`.
pub fn chi_square_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x == f64::INFINITY {
        0.0
    } else {
        gamma_ur(0.5 * df, 0.5 * x)
    }
}

fn chi_square_pdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df;
    ((a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)).exp()
}

/// Chi-square quantile: Wilson-Hilferty start, then safeguarded Newton on
/// the regularized lower incomplete gamma.
pub fn chi_square_quantile(df: f64, p: f64) -> Result<f64> {
    check_chi_args(df, p)?;
    let z = std_normal_quantile_unchecked(p);
    let c = 2.0 / (9.0 * df);
    let wh = df * (1.0 - c + z * c.sqrt()).powi(3);
    let mut x = if wh > 1e-3 {
        wh
    } else {
        // small-df / lower-tail start from the leading series term
        let a = 0.5 * df;
        2.0 * (p * a * ln_gamma(a).exp()).powf(1.0 / a)
    };
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let f = chi_square_cdf(df, x) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let pdf = chi_square_pdf(df, x);
        let mut next = if pdf > 0.0 { x - f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Quantile of `F(nu, inf)`, i.e. of `chi2_nu / nu`.
pub fn f_nu_inf_quantile(nu: f64, p: f64) -> Result<f64> {
    Ok(chi_square_quantile(nu, p)? / nu)
}

/// Upper tail of `F(nu, inf)` at `f`.
pub fn f_nu_inf_sf(nu: f64, f: f64) -> f64 {
    chi_square_sf(nu, nu * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((std_normal_quantile(0.025).unwrap() + 1.959_963_984_540_054).abs() < 1e-9);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn chi_square_examples() {
        let p = 1.0 - (-1.0f64).exp();
        assert!((chi_square_quantile(2.0, p).unwrap() - 2.0).abs() < 1e-8);
        assert!((chi_square_quantile(1.0, 0.95).unwrap() - 3.841_458_820_694_124).abs() < 1e-8);
        assert!((f_nu_inf_quantile(2.0, p).unwrap() - 1.0).abs() < 1e-8);
        assert!(chi_square_quantile(0.0, 0.5).is_err());
        assert!(chi_square_quantile(1.0, 1.0).is_err());
    }

    #[test]
    fn chi_square_extreme_levels() {
        for &df in &[0.3, 1.0, 1.6, 12.0, 200.0] {
            for &p in &[1e-10, 1e-4, 0.5, 0.9999, 1.0 - 1e-10] {
                let q = chi_square_quantile(df, p).unwrap();
                let back = chi_square_cdf(df, q);
                assert!(
                    (back - p).abs() <= 1e-8 * p.min(1.0 - p).max(1e-300) + 1e-14,
                    "df={df} p={p} q={q} back={back}"
                );
            }
        }
    }
}

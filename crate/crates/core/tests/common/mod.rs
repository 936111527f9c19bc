#![allow(dead_code)]

use overlapkit::{GroupedDataset, WeightScheme};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plug-in overlap of the weighted mixture of `evaluated` groups against the
/// splitter atoms, evaluated as a finite sum over the splitter's order
/// statistics. Odd splitter sizes give the median atom half weight on
/// each side, so it drops out.
pub fn plug_in_sum(splitter: &[f64], evaluated: &[(&[f64], f64)]) -> f64 {
    let mut y = splitter.to_vec();
    y.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = y.len();
    let h = |t: f64| -> f64 {
        evaluated
            .iter()
            .map(|(x, w)| {
                // mid-step ECDF: ties at t count one half
                let below = x.iter().filter(|&&v| v < t).count() as f64;
                let at = x.iter().filter(|&&v| v == t).count() as f64;
                w * (below + at / 2.0) / x.len() as f64
            })
            .sum()
    };
    let mut acc = 0.0;
    for (r, &t) in y.iter().enumerate() {
        let sign = if 2 * r + 1 < m {
            -1.0
        } else if 2 * r + 1 > m {
            1.0
        } else {
            0.0
        };
        acc += sign * h(t);
    }
    2.0 * acc / m as f64
}

/// Group-major oracle for the reference overlap.
pub fn reference_oracle(data: &GroupedDataset, weights: &[f64]) -> Vec<f64> {
    let (k, d) = (data.k(), data.d());
    let mut out = Vec::with_capacity(k * d);
    for i in 0..k {
        for s in 0..d {
            let evaluated: Vec<(&[f64], f64)> =
                (0..k).map(|j| (data.group(j).column(s), weights[j])).collect();
            out.push(plug_in_sum(data.group(i).column(s), &evaluated));
        }
    }
    out
}

/// Random untied dataset: within each component the pooled values are a
/// shuffled set of distinct numbers.
pub fn untied_dataset(rng: &mut ChaCha8Rng, k: usize, d: usize, sizes: &[usize]) -> GroupedDataset {
    let total: usize = sizes.iter().sum();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut vals: Vec<f64> = (0..total).map(|v| v as f64 * 0.37 + rng.random::<f64>() * 0.1).collect();
        vals.shuffle(rng);
        columns.push(vals);
    }
    let mut groups = Vec::with_capacity(k);
    let mut offset = 0;
    for &n in sizes {
        let rows: Vec<Vec<f64>> = (0..n).map(|r| (0..d).map(|s| columns[s][offset + r]).collect()).collect();
        offset += n;
        groups.push(rows);
    }
    GroupedDataset::from_rows(&groups).unwrap()
}

pub fn random_shape(rng: &mut ChaCha8Rng, max_k: usize, max_d: usize, max_n: usize) -> (usize, usize, Vec<usize>) {
    let k = rng.random_range(1..=max_k);
    let d = rng.random_range(1..=max_d);
    let sizes = (0..k).map(|_| rng.random_range(2..=max_n)).collect();
    (k, d, sizes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> WeightScheme {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    WeightScheme::custom(w).unwrap()
}

/// Lanczos log-gamma (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma by its power series.
pub fn gamma_p_series(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 1.0;
    while term > sum * 1e-17 && n < 10_000.0 {
        term *= x / (a + n);
        sum += term;
        n += 1.0;
    }
    (sum.ln() + a * x.ln() - x - ln_gamma(a)).exp().min(1.0)
}

pub fn chi2_cdf_oracle(df: f64, x: f64) -> f64 {
    gamma_p_series(df / 2.0, x / 2.0)
}

/// Plain bisection for an increasing function.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal CDF from a Simpson integral of the density, for checks
/// that must not share code with the library.
pub fn normal_cdf_oracle(x: f64) -> f64 {
    let a = if x < 0.0 { x } else { -x };
    // integrate phi from a-12 to a
    let lo = a - 12.0;
    let n = 20_000;
    let h = (a - lo) / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(lo) + phi(a);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(lo + i as f64 * h);
    }
    let tail = s * h / 3.0;
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

//! Synthetic inputs shared by the criterion benchmarks.

use nalgebra::DMatrix;
use overlapkit::{CorrelationMatrix, GroupedDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `k` groups of `n` standard normal rows in `d` components, group `i`
/// shifted by `0.1 * i`.
pub fn normal_dataset(k: usize, d: usize, n: usize, seed: u64) -> GroupedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|i| {
            (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z + 0.1 * i as f64
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    GroupedDataset::from_rows(&groups).expect("finite synthetic data")
}

/// Equicorrelated `p x p` correlation matrix.
pub fn equicorrelation(p: usize, rho: f64) -> CorrelationMatrix {
    let m = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
    CorrelationMatrix::new(m).expect("valid correlation")
}

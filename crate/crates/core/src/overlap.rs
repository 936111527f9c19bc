//! Overlap index estimators.
//!
//! The overlap of an evaluated distribution `F` with respect to a splitting
//! distribution `G` is `P(Y_low < X < Y_up)` with `X ~ F` and `Y_low`,
//! `Y_up` drawn from `G` conditioned below / above its median. The plug-in
//! estimator replaces both distributions by empirical CDFs:
//!
//! ```text
//! I(F, G) = 2 * ( sum_{r upper} F(y_(r)) - sum_{r lower} F(y_(r)) ) / m
//! ```
//!
//! where `y_(1) <= .. <= y_(m)` is the sorted splitter. For odd `m` the
//! median observation carries half weight on both sides, so it drops out.
//!
//! The k-sample reference overlap uses the mixture `H = sum_j lambda_j F_j`
//! as the evaluated distribution and group `i` as the splitter. It is linear
//! in `H`, and with `lambda_j = n_j / N` it reduces to combined ranks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::empirical::{GroupedDataset, Sample, WeightMode, WeightScheme};
use crate::error::{OverlapError, Result};

/// Sign of the `r`-th order statistic (0-based) of a size-`n` splitter in
/// the plug-in sum: `-1` below the median, `+1` above, `0` for the median of
/// an odd sample.
#[inline]
fn split_sign(r: usize, n: usize) -> f64 {
    let half = n / 2;
    if n % 2 == 0 {
        if r < half {
            -1.0
        } else {
            1.0
        }
    } else if r < half {
        -1.0
    } else if r == half {
        0.0
    } else {
        1.0
    }
}

/// `sum_upper c(y_(r)) - sum_lower c(y_(r))` over a sorted splitter, with
/// `c = #{x < y} + #{x <= y}` (twice the mid-step ECDF count, so ties count
/// half). Integer arithmetic keeps the plug-in sum exact until the final
/// division.
fn split_count_diff(splitter: &[f64], evaluated: &Sample) -> i64 {
    let n = splitter.len();
    let mut acc = 0i64;
    for (r, &y) in splitter.iter().enumerate() {
        let sign = split_sign(r, n);
        if sign != 0.0 {
            acc += sign as i64 * evaluated.count_mid2(y) as i64;
        }
    }
    acc
}

/// Pairwise overlap from a doubled count difference: `2 (C2 / 2) / (m n)`.
#[inline]
fn from_count_diff(diff2: i64, m: usize, n: usize) -> f64 {
    (diff2 as f64 / (m as f64 * n as f64)).clamp(0.0, 1.0)
}

/// Plug-in overlap of `evaluated` with respect to the median split of
/// `splitter`.
pub fn pairwise_overlap(splitter: &Sample, evaluated: &Sample) -> f64 {
    let diff = split_count_diff(splitter.sorted(), evaluated);
    from_count_diff(diff, splitter.len(), evaluated.len())
}

/// Two-sample overlap vector: component `s` is the overlap of `x[s]`
/// (evaluated) with respect to `y[s]` (splitter).
///
/// Even splitter sizes go through the rank form
/// `2/(m n) * (R_upper - R_lower) + c/2` with `c = -m/n` on untied data;
/// odd sizes use the plug-in sum directly.
pub fn two_sample_overlap(x: &[Sample], y: &[Sample]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(OverlapError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x
        .iter()
        .zip(y)
        .map(|(xs, ys)| {
            if ys.len() % 2 == 0 {
                two_sample_rank_form(xs, ys)
            } else {
                pairwise_overlap(ys, xs)
            }
        })
        .collect())
}

fn two_sample_rank_form(x: &Sample, y: &Sample) -> f64 {
    let m = y.len();
    let n = x.len();
    let mut rank_sum = 0.0;
    let mut within_sum = 0.0;
    for (r, &v) in y.sorted().iter().enumerate() {
        let sign = split_sign(r, m);
        let within = y.count_mid2(v) as f64 / 2.0;
        let combined = x.count_mid2(v) as f64 / 2.0 + within;
        rank_sum += sign * combined;
        within_sum += sign * within;
    }
    // Untied splitter: within ranks are 1..m and within_sum = m^2/4, i.e.
    // the constant term is -m/(2n). Ties shift it; the general sum stays exact.
    (2.0 * (rank_sum - within_sum) / (m as f64 * n as f64)).clamp(0.0, 1.0)
}

/// Row/column label of one flattened estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLabel {
    pub group: String,
    pub component: String,
}

impl fmt::Display for VariableLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.group, self.component)
    }
}

/// The `k x d` matrix of reference overlaps, flattened group-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    k: usize,
    d: usize,
    entries: Vec<f64>,
    weights: WeightScheme,
    group_labels: Vec<String>,
    component_labels: Vec<String>,
}

impl OverlapMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, group: usize, component: usize) -> f64 {
        self.entries[group * self.d + component]
    }

    /// Estimates in group-major order (group outer, component inner).
    pub fn flat(&self) -> &[f64] {
        &self.entries
    }

    pub fn weights(&self) -> &WeightScheme {
        &self.weights
    }

    pub fn labels(&self) -> Vec<VariableLabel> {
        flat_labels(&self.group_labels, &self.component_labels)
    }
}

fn flat_labels(groups: &[String], components: &[String]) -> Vec<VariableLabel> {
    groups
        .iter()
        .flat_map(|g| {
            components.iter().map(move |c| VariableLabel {
                group: g.clone(),
                component: c.clone(),
            })
        })
        .collect()
}

fn check_weights(data: &GroupedDataset, weights: &WeightScheme) -> Result<()> {
    if weights.len() != data.k() {
        return Err(OverlapError::DimensionMismatch {
            expected: data.k(),
            got: weights.len(),
        });
    }
    Ok(())
}

/// `samples[i][s]`, sorted.
fn all_samples(data: &GroupedDataset) -> Vec<Vec<Sample>> {
    data.groups()
        .iter()
        .map(|g| (0..g.d()).map(|s| g.sample(s)).collect())
        .collect()
}

/// Plug-in reference overlap: entry `(i, s)` integrates the empirical
/// mixture CDF `H(t) = sum_j lambda_j F_j(t)` against the median split of
/// group `i` on component `s`. The sum is grouped by `j` so that each
/// pairwise term is exact up to one rounding.
pub fn reference_overlap(data: &GroupedDataset, weights: &WeightScheme) -> Result<OverlapMatrix> {
    check_weights(data, weights)?;
    let samples = all_samples(data);
    let lambda = weights.weights();
    let (k, d) = (data.k(), data.d());
    let mut entries = Vec::with_capacity(k * d);
    for split_group in &samples {
        for s in 0..d {
            let splitter = &split_group[s];
            let value: f64 = samples
                .iter()
                .zip(lambda)
                .map(|(g, &w)| w * pairwise_overlap(splitter, &g[s]))
                .sum();
            entries.push(value.clamp(0.0, 1.0));
        }
    }
    Ok(OverlapMatrix {
        k,
        d,
        entries,
        weights: weights.clone(),
        group_labels: data.group_labels(),
        component_labels: data.component_labels().to_vec(),
    })
}

/// All pairwise overlaps `I(F_j, F_i)` per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseOverlap {
    k: usize,
    d: usize,
    /// `[(evaluated * k + splitter) * d + s]`
    entries: Vec<f64>,
}

impl PairwiseOverlap {
    pub fn compute(data: &GroupedDataset) -> Self {
        let samples = all_samples(data);
        let (k, d) = (data.k(), data.d());
        let mut entries = Vec::with_capacity(k * k * d);
        for evaluated in &samples {
            for splitter in &samples {
                for s in 0..d {
                    entries.push(pairwise_overlap(&splitter[s], &evaluated[s]));
                }
            }
        }
        Self { k, d, entries }
    }

    /// Overlap of group `evaluated` w.r.t. the median split of `splitter`.
    pub fn get(&self, evaluated: usize, splitter: usize, s: usize) -> f64 {
        self.entries[(evaluated * self.k + splitter) * self.d + s]
    }

    /// Reference overlaps through linearity in the evaluated distribution:
    /// `I(H, F_i) = sum_j lambda_j I(F_j, F_i)`.
    pub fn combine(&self, data: &GroupedDataset, weights: &WeightScheme) -> Result<OverlapMatrix> {
        check_weights(data, weights)?;
        let lambda = weights.weights();
        let mut entries = Vec::with_capacity(self.k * self.d);
        for i in 0..self.k {
            for s in 0..self.d {
                entries.push(
                    (0..self.k)
                        .map(|j| lambda[j] * self.get(j, i, s))
                        .sum::<f64>(),
                );
            }
        }
        Ok(OverlapMatrix {
            k: self.k,
            d: self.d,
            entries,
            weights: weights.clone(),
            group_labels: data.group_labels(),
            component_labels: data.component_labels().to_vec(),
        })
    }
}

/// Combined `<=`-ranks per group for one component: `ranks[i][r]` is the
/// number of pooled observations `<=` the `r`-th smallest value of group `i`.
/// Doubled midranks (`2 * midrank`, an integer) in the pooled sample, per
/// group in sorted order.
fn combined_ranks(samples: &[Vec<Sample>], s: usize) -> Vec<Vec<usize>> {
    let mut pooled: Vec<(f64, usize)> = samples
        .iter()
        .enumerate()
        .flat_map(|(i, g)| g[s].sorted().iter().map(move |&v| (v, i)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks: Vec<Vec<usize>> = samples.iter().map(|g| Vec::with_capacity(g[s].len())).collect();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        for &(_, g) in &pooled[start..end] {
            ranks[g].push(start + end + 1);
        }
        start = end;
    }
    ranks
}

fn require_proportional(data: &GroupedDataset, weights: &WeightScheme) -> Result<()> {
    check_weights(data, weights)?;
    let n = data.total_n() as f64;
    let matches = data
        .sizes()
        .iter()
        .zip(weights.weights())
        .all(|(&ni, &w)| (w - ni as f64 / n).abs() <= 1e-12);
    if !matches {
        let what = if weights.mode() == WeightMode::Proportional {
            "proportional weights do not match the dataset's group sizes"
        } else {
            "the rank form requires lambda_i = n_i / N"
        };
        return Err(OverlapError::UnsupportedWeights(what.into()));
    }
    Ok(())
}

/// Rank form of [`reference_overlap`] for proportional weights:
/// `2 / (n_i N) * (sum_upper R - sum_lower R)` with combined midranks `R`.
/// The median of an odd group enters both halves with weight 1/2 and cancels.
pub fn rank_reference_overlap(
    data: &GroupedDataset,
    weights: &WeightScheme,
) -> Result<OverlapMatrix> {
    rank_form(data, weights, false)
}

/// Combined-minus-within rank form. Subtracting each group's within-sample
/// ranks removes its own contribution to the pooled CDF, so for even `n_i`
/// this equals [`reference_overlap`] minus `lambda_i / 2`.
pub fn rank_overlap_within_adjusted(
    data: &GroupedDataset,
    weights: &WeightScheme,
) -> Result<OverlapMatrix> {
    rank_form(data, weights, true)
}

fn rank_form(
    data: &GroupedDataset,
    weights: &WeightScheme,
    subtract_within: bool,
) -> Result<OverlapMatrix> {
    require_proportional(data, weights)?;
    let samples = all_samples(data);
    let (k, d) = (data.k(), data.d());
    let n_total = data.total_n() as f64;
    let mut entries = vec![0.0; k * d];
    for s in 0..d {
        let ranks = combined_ranks(&samples, s);
        for (i, group_ranks) in ranks.iter().enumerate() {
            let sample = &samples[i][s];
            let n_i = sample.len();
            let mut acc = 0.0;
            for (r, &rank) in group_ranks.iter().enumerate() {
                let mut v = rank as f64 / 2.0;
                if subtract_within {
                    let x = sample.sorted()[r];
                    v -= (sample.count_mid2(x) + 1) as f64 / 2.0;
                }
                acc += split_sign(r, n_i) * v;
            }
            entries[i * d + s] = 2.0 * acc / (n_i as f64 * n_total);
        }
    }
    Ok(OverlapMatrix {
        k,
        d,
        entries,
        weights: weights.clone(),
        group_labels: data.group_labels(),
        component_labels: data.component_labels().to_vec(),
    })
}

/// What a bootstrap run estimates: the flattened vector that gets
/// resampled, tested against `1/2`, and covered by intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    /// k-sample reference overlaps, `k * d` entries.
    Reference(WeightScheme),
    /// Two-sample overlap of one group w.r.t. another, `d` entries.
    TwoSample { evaluated: usize, splitter: usize },
}

impl Estimand {
    pub fn reference(weights: WeightScheme) -> Self {
        Estimand::Reference(weights)
    }

    pub fn evaluate(&self, data: &GroupedDataset) -> Result<Vec<f64>> {
        match self {
            Estimand::Reference(w) => Ok(reference_overlap(data, w)?.entries),
            Estimand::TwoSample {
                evaluated,
                splitter,
            } => {
                self.check_groups(data)?;
                let x: Vec<Sample> = (0..data.d()).map(|s| data.group(*evaluated).sample(s)).collect();
                let y: Vec<Sample> = (0..data.d()).map(|s| data.group(*splitter).sample(s)).collect();
                two_sample_overlap(&x, &y)
            }
        }
    }

    fn check_groups(&self, data: &GroupedDataset) -> Result<()> {
        if let Estimand::TwoSample {
            evaluated,
            splitter,
        } = self
        {
            if *evaluated >= data.k() || *splitter >= data.k() || evaluated == splitter {
                return Err(OverlapError::InvalidInput(format!(
                    "two-sample groups ({evaluated}, {splitter}) invalid for k = {}",
                    data.k()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self, data: &GroupedDataset) -> usize {
        match self {
            Estimand::Reference(_) => data.k() * data.d(),
            Estimand::TwoSample { .. } => data.d(),
        }
    }

    pub fn labels(&self, data: &GroupedDataset) -> Vec<VariableLabel> {
        match self {
            Estimand::Reference(_) => flat_labels(&data.group_labels(), data.component_labels()),
            Estimand::TwoSample {
                evaluated,
                splitter,
            } => {
                let name = format!(
                    "{}|{}",
                    data.group(*evaluated).label,
                    data.group(*splitter).label
                );
                flat_labels(&[name], data.component_labels())
            }
        }
    }

    /// Number of groups and components in the flattened layout.
    pub fn shape(&self, data: &GroupedDataset) -> (usize, usize) {
        match self {
            Estimand::Reference(_) => (data.k(), data.d()),
            Estimand::TwoSample { .. } => (1, data.d()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v).unwrap()
    }

    /// Direct evaluation of the plug-in integral: sums of `F(y)` over the
    /// splitter's point masses, with the odd median split in halves.
    fn plug_in_oracle(splitter: &[f64], evaluated: &[f64]) -> f64 {
        let mut y = splitter.to_vec();
        y.sort_by(f64::total_cmp);
        let m = y.len();
        let f = |t: f64| evaluated.iter().filter(|&&x| x <= t).count() as f64 / evaluated.len() as f64;
        let (mut lower, mut upper) = (0.0, 0.0);
        let l = m.div_ceil(2);
        for (r, &v) in y.iter().enumerate() {
            let pos = r + 1;
            if m % 2 == 0 {
                if pos <= l {
                    lower += f(v) / m as f64;
                } else {
                    upper += f(v) / m as f64;
                }
            } else if pos < l {
                lower += f(v) / m as f64;
            } else if pos == l {
                lower += 0.5 * f(v) / m as f64;
                upper += 0.5 * f(v) / m as f64;
            } else {
                upper += f(v) / m as f64;
            }
        }
        2.0 * (upper - lower)
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_overlap(&s(&[2.0, 4.0]), &s(&[1.0, 3.0])), 0.5);
        assert_eq!(plug_in_oracle(&[2.0, 4.0], &[1.0, 3.0]), 0.5);
        assert_eq!(pairwise_overlap(&s(&[1.0, 2.0]), &s(&[10.0, 11.0])), 0.0);
        assert_eq!(pairwise_overlap(&s(&[0.0, 10.0]), &s(&[5.0, 6.0])), 1.0);
        assert_eq!(pairwise_overlap(&s(&[1.0, 3.0]), &s(&[1.0, 3.0])), 0.5);
    }

    #[test]
    fn pairwise_odd_splitter_matches_oracle() {
        let y = [0.3, 1.7, -0.4, 2.2, 0.9];
        let x = [0.1, 1.0, 2.0, -1.0];
        let got = pairwise_overlap(&s(&y), &s(&x));
        assert!((got - plug_in_oracle(&y, &x)).abs() < 1e-15);
    }

    #[test]
    fn two_sample_examples() {
        let v = two_sample_overlap(&[s(&[1.0, 3.0])], &[s(&[2.0, 4.0])]).unwrap();
        assert_eq!(v, vec![0.5]);
        let v = two_sample_overlap(&[s(&[10.0, 11.0])], &[s(&[1.0, 2.0])]).unwrap();
        assert_eq!(v, vec![0.0]);
        let v = two_sample_overlap(
            &[s(&[1.0, 3.0]), s(&[10.0, 11.0])],
            &[s(&[2.0, 4.0]), s(&[1.0, 2.0])],
        )
        .unwrap();
        assert_eq!(v, vec![0.5, 0.0]);
        assert!(two_sample_overlap(&[s(&[1.0])], &[]).is_err());
    }

    #[test]
    fn two_sample_rank_form_handles_splitter_ties() {
        let x = s(&[0.5, 1.0, 2.0, 2.0, 3.5]);
        let y = s(&[1.0, 1.0, 2.0, 4.0]);
        let ranked = two_sample_overlap(&[x.clone()], &[y.clone()]).unwrap()[0];
        assert!((ranked - pairwise_overlap(&y, &x)).abs() < 1e-15);
    }

    fn toy() -> GroupedDataset {
        GroupedDataset::from_rows(&[vec![vec![1.0], vec![3.0]], vec![vec![2.0], vec![4.0]]]).unwrap()
    }

    #[test]
    fn reference_examples() {
        let data = toy();
        let w = WeightScheme::proportional_for(&data);
        let m = reference_overlap(&data, &w).unwrap();
        assert_eq!(m.get(0, 0), 0.5);
        let r = rank_reference_overlap(&data, &w).unwrap();
        assert_eq!(r.get(0, 0), 0.5);
        let printed = rank_overlap_within_adjusted(&data, &w).unwrap();
        assert_eq!(printed.get(0, 0), 0.25);

        let single = GroupedDataset::from_rows(&[vec![vec![0.2], vec![-1.0], vec![3.0], vec![1.5]]]).unwrap();
        let w1 = WeightScheme::proportional_for(&single);
        assert_eq!(reference_overlap(&single, &w1).unwrap().get(0, 0), 0.5);
        assert_eq!(rank_reference_overlap(&single, &w1).unwrap().get(0, 0), 0.5);
        assert_eq!(rank_overlap_within_adjusted(&single, &w1).unwrap().get(0, 0), 0.0);

        let separated =
            GroupedDataset::from_rows(&[vec![vec![1.0], vec![2.0]], vec![vec![10.0], vec![11.0]]]).unwrap();
        let eq = WeightScheme::equal(2).unwrap();
        assert_eq!(reference_overlap(&separated, &eq).unwrap().get(0, 0), 0.25);
    }

    #[test]
    fn rank_form_rejects_non_proportional() {
        let data = GroupedDataset::from_rows(&[
            vec![vec![1.0], vec![3.0]],
            vec![vec![2.0], vec![4.0], vec![5.0]],
        ])
        .unwrap();
        let err = rank_reference_overlap(&data, &WeightScheme::equal(2).unwrap()).unwrap_err();
        assert!(matches!(err, OverlapError::UnsupportedWeights(_)));
        assert!(reference_overlap(&data, &WeightScheme::equal(3).unwrap()).is_err());
    }

    #[test]
    fn estimand_shapes_and_labels() {
        let data = toy();
        let est = Estimand::TwoSample {
            evaluated: 0,
            splitter: 1,
        };
        assert_eq!(est.evaluate(&data).unwrap(), vec![0.5]);
        assert_eq!(est.dim(&data), 1);
        assert_eq!(est.labels(&data)[0].to_string(), "G1|G2 X1");
        let bad = Estimand::TwoSample {
            evaluated: 0,
            splitter: 0,
        };
        assert!(bad.evaluate(&data).is_err());
        let r = Estimand::reference(WeightScheme::proportional_for(&data));
        assert_eq!(r.dim(&data), 2);
        assert_eq!(r.labels(&data)[1].to_string(), "G2 X1");
    }
}

//! Empirical distribution functions, quantiles and midranks.

use serde::{Deserialize, Serialize};

use crate::error::{OverlapError, Result};

/// Observations of one group on one component, stored sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    sorted: Vec<f64>,
    /// `order[r]` is the original position of the `r`-th smallest value.
    order: Vec<usize>,
}

impl Sample {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(OverlapError::InvalidInput("sample is empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(OverlapError::InvalidInput(format!(
                "non-finite value at position {pos}"
            )));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        // Stable sort keeps tied values in input order.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted = order.iter().map(|&i| values[i]).collect();
        Ok(Self { sorted, order })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of observations `<= t`.
    pub fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|&x| x <= t)
    }

    /// Number of observations `< t`.
    pub fn count_lt(&self, t: f64) -> usize {
        self.sorted.partition_point(|&x| x < t)
    }

    /// `#{x < t} + #{x <= t}`: twice the count under the normalized
    /// (mid-step) empirical CDF, the tie convention matching midranks.
    pub fn count_mid2(&self, t: f64) -> usize {
        self.count_lt(t) + self.count_le(t)
    }

    pub fn has_ties(&self) -> bool {
        self.sorted.windows(2).any(|w| w[0] == w[1])
    }
}

/// Right-continuous empirical CDF, `#{x <= t} / n`.
pub fn ecdf_eval(sample: &Sample, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(OverlapError::Domain(format!("ecdf argument {t} is not finite")));
    }
    Ok(sample.count_le(t) as f64 / sample.len() as f64)
}

/// Generalized inverse `inf { y : F(y) >= u }`, without interpolation.
pub fn empirical_quantile(sample: &Sample, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(OverlapError::Domain(format!(
            "quantile level {u} outside (0, 1]"
        )));
    }
    Ok(sample.sorted[quantile_rank(sample.len(), u) - 1])
}

/// 1-based rank of the smallest order statistic with `r / n >= u`.
pub(crate) fn quantile_rank(n: usize, u: f64) -> usize {
    let nf = n as f64;
    let mut r = (u * nf).ceil().max(1.0) as usize;
    // `u * n` can land a hair above an integer when `u` came from `r / n`.
    while r > 1 && (r - 1) as f64 / nf >= u {
        r -= 1;
    }
    while r < n && (r as f64 / nf) < u {
        r += 1;
    }
    r.min(n)
}

/// Midranks: tied values share the average of the ranks they occupy.
pub fn midranks(values: &[f64]) -> Result<Vec<f64>> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(OverlapError::InvalidInput(format!(
            "non-finite value at position {pos}"
        )));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

/// One group: `n` complete observations on `d` components, stored by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    columns: Vec<Vec<f64>>,
}

impl Group {
    /// Builds a group from row-major observations.
    pub fn from_rows(label: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(OverlapError::InvalidInput(format!(
                    "row {r} has {} components, expected {d}",
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(label, columns)
    }

    pub fn from_columns(label: impl Into<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let label = label.into();
        let n = columns.first().map(Vec::len).unwrap_or(0);
        if columns.is_empty() {
            return Err(OverlapError::InvalidInput(format!(
                "group {label:?} has no components"
            )));
        }
        for (s, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(OverlapError::InvalidInput(format!(
                    "group {label:?}: component {s} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(OverlapError::InvalidInput(format!(
                    "group {label:?}: component {s} contains non-finite values"
                )));
            }
        }
        Ok(Self { label, columns })
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, s: usize) -> &[f64] {
        &self.columns[s]
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// Copies the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Group {
        let columns = self
            .columns
            .iter()
            .map(|c| indices.iter().map(|&i| c[i]).collect())
            .collect();
        Group {
            label: self.label.clone(),
            columns,
        }
    }

    /// Row indices in lexicographic order of their values.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| {
            for col in &self.columns {
                let ord = col[a].total_cmp(&col[b]);
                if ord.is_ne() {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        });
        idx
    }

    pub fn sample(&self, s: usize) -> Sample {
        // columns are validated finite and nonempty at construction
        Sample::new(&self.columns[s]).expect("validated column")
    }
}

/// `k` independent groups observed on the same `d` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    groups: Vec<Group>,
    component_labels: Vec<String>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Group>, component_labels: Vec<String>) -> Result<Self> {
        if groups.is_empty() {
            return Err(OverlapError::InvalidInput("dataset has no groups".into()));
        }
        let d = component_labels.len();
        if d == 0 {
            return Err(OverlapError::InvalidInput("dataset has no components".into()));
        }
        for g in &groups {
            if g.d() != d {
                return Err(OverlapError::InvalidInput(format!(
                    "group {:?} has {} components, expected {d}",
                    g.label,
                    g.d()
                )));
            }
            if g.n() < 2 {
                return Err(OverlapError::InvalidInput(format!(
                    "group {:?} has {} observations; at least 2 are required",
                    g.label,
                    g.n()
                )));
            }
        }
        Ok(Self {
            groups,
            component_labels,
        })
    }

    /// Convenience constructor with generated labels `G1..Gk` / `X1..Xd`.
    pub fn from_rows(groups: &[Vec<Vec<f64>>]) -> Result<Self> {
        let built = groups
            .iter()
            .enumerate()
            .map(|(i, rows)| Group::from_rows(format!("G{}", i + 1), rows))
            .collect::<Result<Vec<_>>>()?;
        let d = built.first().map(Group::d).unwrap_or(0);
        Self::new(built, (1..=d).map(|s| format!("X{s}")).collect())
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn d(&self) -> usize {
        self.component_labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Group::n).collect()
    }

    pub fn total_n(&self) -> usize {
        self.groups.iter().map(Group::n).sum()
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &Group {
        &self.groups[i]
    }

    pub fn group_labels(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.label.clone()).collect()
    }

    pub fn component_labels(&self) -> &[String] {
        &self.component_labels
    }

    /// Replaces the groups, keeping labels. Used for resampled copies, which
    /// preserve every group's size.
    pub(crate) fn with_groups(&self, groups: Vec<Group>) -> Self {
        Self {
            groups,
            component_labels: self.component_labels.clone(),
        }
    }

    /// Components (by index) where at least one value occurs twice across
    /// the pooled sample.
    pub fn tied_components(&self) -> Vec<usize> {
        (0..self.d())
            .filter(|&s| {
                let mut pooled: Vec<f64> = self
                    .groups
                    .iter()
                    .flat_map(|g| g.column(s).iter().copied())
                    .collect();
                pooled.sort_by(f64::total_cmp);
                pooled.windows(2).any(|w| w[0] == w[1])
            })
            .collect()
    }

    /// Applies `f` to every value of component `s` in every group.
    pub fn map_component(&self, s: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = self.clone();
        for g in &mut out.groups {
            for v in &mut g.columns[s] {
                *v = f(*v);
                if !v.is_finite() {
                    return Err(OverlapError::InvalidInput(
                        "transform produced a non-finite value".into(),
                    ));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Proportional,
    Equal,
    Custom,
}

/// Mixture weights defining the reference distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    mode: WeightMode,
    weights: Vec<f64>,
}

impl WeightScheme {
    /// `lambda_i = n_i / N`.
    pub fn proportional(sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if sizes.is_empty() || total == 0 {
            return Err(OverlapError::InvalidInput("no observations to weight".into()));
        }
        Ok(Self {
            mode: WeightMode::Proportional,
            weights: sizes.iter().map(|&n| n as f64 / total as f64).collect(),
        })
    }

    pub fn proportional_for(data: &GroupedDataset) -> Self {
        Self::proportional(&data.sizes()).expect("datasets are nonempty")
    }

    /// `lambda_i = 1 / k`.
    pub fn equal(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(OverlapError::InvalidInput("k must be positive".into()));
        }
        Ok(Self {
            mode: WeightMode::Equal,
            weights: vec![1.0 / k as f64; k],
        })
    }

    /// Arbitrary nonnegative weights; they must already sum to one (to 1e-6)
    /// and are renormalised exactly.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(OverlapError::InvalidInput("no weights given".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(OverlapError::InvalidInput(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(OverlapError::InvalidInput(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            mode: WeightMode::Custom,
            weights: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Re-derives size-dependent weights for a dataset with the same group
    /// layout. Bootstrap resamples keep group sizes, so this is the identity
    /// there; it matters when a scheme is reused across datasets.
    pub fn for_dataset(&self, data: &GroupedDataset) -> Result<Self> {
        match self.mode {
            WeightMode::Proportional => Self::proportional(&data.sizes()),
            WeightMode::Equal => Self::equal(data.k()),
            WeightMode::Custom => Ok(self.clone()),
        }
    }
}

//! Declarative simulation scenarios, read from TOML.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{sample_mvnormal, sample_mvnormal_lognormal, sample_mvt};
use crate::bootstrap::stream_seed;
use crate::ci::CiMethod;
use crate::empirical::{Group, GroupedDataset, WeightScheme};
use crate::error::{OverlapError, Result};
use crate::inference::TestMethod;
use crate::numerics::cholesky_psd;
use crate::overlap::Estimand;

const DATA_TAG: u64 = 0x6461_7461;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Reference overlaps of all `k` groups.
    #[default]
    KSample,
    /// Overlap of the `evaluated` group with respect to the `splitter` group.
    TwoSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Mvnormal,
    Mvt,
    MvnormalLognormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVector {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Default for ScalarOrVector {
    fn default() -> Self {
        ScalarOrVector::Scalar(0.0)
    }
}

impl ScalarOrVector {
    fn expand(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            ScalarOrVector::Scalar(v) => Ok(vec![*v; d]),
            ScalarOrVector::Vector(v) if v.len() == d => Ok(v.clone()),
            ScalarOrVector::Vector(v) => Err(OverlapError::DimensionMismatch { expected: d, got: v.len() }),
        }
    }
}

/// One group's sampling distribution. The covariance (or `t` scale) is
/// either a full `cov` matrix or the `variance`/`offdiag` shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n: usize,
    #[serde(default)]
    pub family: Family,
    #[serde(default)]
    pub mean: ScalarOrVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lognormal_component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    /// `"proportional"` or `"equal"`.
    Named(String),
    Custom(Vec<f64>),
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Named("proportional".into())
    }
}

impl WeightSpec {
    pub fn resolve(&self, data: &GroupedDataset) -> Result<WeightScheme> {
        match self {
            WeightSpec::Named(s) if s == "proportional" => Ok(WeightScheme::proportional_for(data)),
            WeightSpec::Named(s) if s == "equal" => WeightScheme::equal(data.k()),
            WeightSpec::Named(s) => Err(OverlapError::InvalidInput(format!("unknown weight scheme {s:?}"))),
            WeightSpec::Custom(w) => WeightScheme::custom(w.clone())?.for_dataset(data),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthSpec {
    /// `"equal"` (every entry 1/2) or `"large_sample"` (estimated once at
    /// `n = 10^6` per group).
    Named(String),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Every group's sample size.
    N,
    /// Diagonal of one group's covariance (shorthand form only).
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<usize>,
    pub values: Vec<f64>,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_bootstrap() -> usize {
    500
}
fn default_reps() -> usize {
    1000
}
fn default_mc() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub design: Design,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluated: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitter: Option<usize>,
    pub d: usize,
    #[serde(default)]
    pub weights: WeightSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub tests: Vec<TestMethod>,
    #[serde(default)]
    pub intervals: Vec<CiMethod>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub groups: Vec<GroupSpec>,
}

/// A group's distribution with parameters resolved to full matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupModel {
    Normal { mean: Vec<f64>, cov: DMatrix<f64> },
    T { mean: Vec<f64>, scale: DMatrix<f64>, df: f64 },
    NormalLognormal { mean: Vec<f64>, cov: DMatrix<f64>, component: usize, log_mean: f64, log_var: f64 },
}

impl GroupSpec {
    fn matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        let m = match &self.cov {
            Some(rows) => {
                if self.variance.is_some() || self.offdiag.is_some() {
                    return Err(OverlapError::InvalidInput(
                        "give either cov or variance/offdiag, not both".into(),
                    ));
                }
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(OverlapError::InvalidInput(format!("cov must be {d}x{d}")));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
            None => {
                let v = self.variance.unwrap_or(1.0);
                let o = self.offdiag.unwrap_or(0.0);
                DMatrix::from_fn(d, d, |i, j| if i == j { v } else { o })
            }
        };
        // validates symmetry and positive semidefiniteness
        cholesky_psd(&m)?;
        Ok(m)
    }

    pub fn model(&self, d: usize) -> Result<GroupModel> {
        if self.n < 2 {
            return Err(OverlapError::InvalidInput(format!("group size {} is below 2", self.n)));
        }
        let mean = self.mean.expand(d)?;
        let cov = self.matrix(d)?;
        match self.family {
            Family::Mvnormal => Ok(GroupModel::Normal { mean, cov }),
            Family::Mvt => {
                let df = self.df.ok_or_else(|| OverlapError::InvalidInput("mvt group needs df".into()))?;
                if !(df > 0.0) {
                    return Err(OverlapError::InvalidInput(format!("df {df} must be positive")));
                }
                Ok(GroupModel::T { mean, scale: cov, df })
            }
            Family::MvnormalLognormal => {
                let missing = || OverlapError::InvalidInput(
                    "lognormal group needs lognormal_component, log_mean and log_var".into(),
                );
                let component = self.lognormal_component.ok_or_else(missing)?;
                if component >= d {
                    return Err(OverlapError::InvalidInput(format!(
                        "lognormal component {component} out of range for d = {d}"
                    )));
                }
                Ok(GroupModel::NormalLognormal {
                    mean,
                    cov,
                    component,
                    log_mean: self.log_mean.ok_or_else(missing)?,
                    log_var: self.log_var.ok_or_else(missing)?,
                })
            }
        }
    }
}

impl GroupModel {
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        match self {
            GroupModel::Normal { mean, cov } => sample_mvnormal(mean, cov, n, rng),
            GroupModel::T { mean, scale, df } => sample_mvt(mean, scale, *df, n, rng),
            GroupModel::NormalLognormal { mean, cov, component, log_mean, log_var } => {
                sample_mvnormal_lognormal(mean, cov, *component, *log_mean, *log_var, n, rng)
            }
        }
    }
}

/// One point of a sweep: the concrete scenario plus the swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub value: Option<f64>,
    pub spec: ScenarioSpec,
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            toml::from_str(text).map_err(|e| OverlapError::InvalidInput(format!("scenario file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OverlapError::Internal(format!("scenario serialization: {e}")))
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(OverlapError::InvalidInput("scenario needs d >= 1".into()));
        }
        if self.groups.is_empty() {
            return Err(OverlapError::InvalidInput("scenario has no groups".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(OverlapError::Domain(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.reps == 0 {
            return Err(OverlapError::InvalidInput("reps must be at least 1".into()));
        }
        if self.bootstrap < 2 {
            return Err(OverlapError::InvalidInput("bootstrap replicates must be at least 2".into()));
        }
        if self.mc_samples < 1000 {
            return Err(OverlapError::InvalidInput("mc_samples must be at least 1000".into()));
        }
        if self.design == Design::TwoSample {
            let (e, s) = self.two_sample_pair();
            if e >= self.k() || s >= self.k() || e == s {
                return Err(OverlapError::InvalidInput(format!(
                    "two-sample design needs distinct evaluated/splitter groups, got ({e}, {s})"
                )));
            }
        }
        if let Some(TruthSpec::Named(t)) = &self.truth {
            if t != "equal" && t != "large_sample" {
                return Err(OverlapError::InvalidInput(format!("unknown truth {t:?}")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(OverlapError::InvalidInput("sweep has no values".into()));
            }
            if sweep.parameter == SweepParameter::Variance {
                let g = sweep.group.ok_or_else(|| {
                    OverlapError::InvalidInput("variance sweep needs a group index".into())
                })?;
                if g >= self.k() || self.groups[g].cov.is_some() {
                    return Err(OverlapError::InvalidInput(
                        "variance sweep needs a valid group using the variance shorthand".into(),
                    ));
                }
            }
        }
        for setting in self.settings()? {
            for g in &setting.spec.groups {
                g.model(self.d)?;
            }
        }
        Ok(())
    }

    /// `(evaluated, splitter)`; defaults to `(0, 1)`.
    pub fn two_sample_pair(&self) -> (usize, usize) {
        (self.evaluated.unwrap_or(0), self.splitter.unwrap_or(1))
    }

    /// The concrete scenarios of the sweep, or the scenario itself.
    pub fn settings(&self) -> Result<Vec<Setting>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![Setting { value: None, spec: self.clone() }]);
        };
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut spec = self.clone();
                spec.sweep = None;
                match sweep.parameter {
                    SweepParameter::N => {
                        if !(v >= 2.0 && v.fract() == 0.0) {
                            return Err(OverlapError::InvalidInput(format!("sample size {v} must be an integer >= 2")));
                        }
                        for g in &mut spec.groups {
                            g.n = v as usize;
                        }
                    }
                    SweepParameter::Variance => {
                        let g = sweep.group.unwrap_or(0);
                        spec.groups[g].variance = Some(v);
                    }
                }
                Ok(Setting { value: Some(v), spec })
            })
            .collect()
    }

    pub fn estimand(&self, data: &GroupedDataset) -> Result<Estimand> {
        match self.design {
            Design::KSample => Ok(Estimand::Reference(self.weights.resolve(data)?)),
            Design::TwoSample => {
                let (evaluated, splitter) = self.two_sample_pair();
                Ok(Estimand::TwoSample { evaluated, splitter })
            }
        }
    }

    /// Sample size on which the asymptotic scale is based.
    pub fn scale_n(&self, data: &GroupedDataset) -> usize {
        match self.design {
            Design::KSample => data.total_n(),
            Design::TwoSample => {
                let (e, s) = self.two_sample_pair();
                data.group(e).n() + data.group(s).n()
            }
        }
    }

    fn labels(&self) -> (Vec<String>, Vec<String>) {
        let groups = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| g.label.clone().unwrap_or_else(|| format!("G{}", i + 1)))
            .collect();
        let comps = (1..=self.d).map(|s| format!("X{s}")).collect();
        (groups, comps)
    }

    /// Draws a dataset with every group of size `n_override` (if given).
    pub fn generate_with_size(&self, seed: u64, replication: u64, n_override: Option<usize>) -> Result<GroupedDataset> {
        let (group_labels, comps) = self.labels();
        let groups = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let model = g.model(self.d)?;
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed ^ DATA_TAG, replication, i as u64));
                let rows = model.sample(n_override.unwrap_or(g.n), &mut rng)?;
                Group::from_rows(group_labels[i].clone(), &rows)
            })
            .collect::<Result<Vec<_>>>()?;
        GroupedDataset::new(groups, comps)
    }
}

/// One dataset of the scenario, deterministic per `(spec.seed, replication)`.
pub fn generate_scenario(spec: &ScenarioSpec, replication: u64) -> Result<GroupedDataset> {
    spec.generate_with_size(spec.seed, replication, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
name = "size"
d = 2
seed = 3
reps = 10
tests = ["wald", "anova_type"]

[[groups]]
n = 20
mean = 1.0
offdiag = 0.25

[[groups]]
n = 25
family = "mvt"
df = 1.0
mean = [0.0, 1.0]
cov = [[1.0, 0.5], [0.5, 2.0]]
"#;

    #[test]
    fn parses_and_generates() {
        let spec = ScenarioSpec::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(spec.k(), 2);
        assert_eq!(spec.bootstrap, 500);
        let a = generate_scenario(&spec, 4).unwrap();
        let b = generate_scenario(&spec, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sizes(), vec![20, 25]);
        assert_ne!(a, generate_scenario(&spec, 5).unwrap());
        let back = ScenarioSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let bad = EXAMPLE.replace("df = 1.0", "df = -1.0");
        assert!(ScenarioSpec::from_toml_str(&bad).is_err());
        let bad = EXAMPLE.replace("offdiag = 0.25", "offdiag = 2.0");
        assert!(ScenarioSpec::from_toml_str(&bad).is_err());
        let bad = EXAMPLE.replace("d = 2", "d = 2\nbogus = 1");
        assert!(ScenarioSpec::from_toml_str(&bad).is_err());
    }

    #[test]
    fn sweeps_expand() {
        let text = EXAMPLE.replace("tests = [", "sweep = { parameter = \"n\", values = [10, 30] }\ntests = [");
        let spec = ScenarioSpec::from_toml_str(&text).unwrap();
        let settings = spec.settings().unwrap();
        assert_eq!(settings.len(), 2);
        assert!(settings[1].spec.groups.iter().all(|g| g.n == 30));
    }
}

//! The estimate, bootstrap, test and interval pipeline behind the CLI.

use std::path::PathBuf;
use std::str::FromStr;

use overlapkit::{
    anova_type_test, bonferroni_sci, bootstrap_covariance, bootstrap_replicates_with, closed_testing,
    ellipse_projection_sci, max_t_test, mvt_sci, percentile_test, reference_overlap, wald_test,
    BootstrapConfig, CiMethod, Estimand, IntervalSet, McParams, PostHocFamily, PostHocResult, SubTestMethod,
    TestMethod, TestResult, WeightMode, WeightScheme, DEFAULT_REPLICATES,
};
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_dataset, ParsedDataset};
use crate::error::{CliError, CliResult};

/// Bootstrap sizes below this trigger a warning.
pub const MIN_RECOMMENDED_B: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Estimate,
    Test,
    Ci,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightChoice {
    Proportional,
    Equal,
    Custom(Vec<f64>),
}

impl FromStr for WeightChoice {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "proportional" | "weighted" => Ok(WeightChoice::Proportional),
            "equal" | "unweighted" => Ok(WeightChoice::Equal),
            other => other
                .split(',')
                .map(|w| w.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(WeightChoice::Custom)
                .map_err(|_| CliError::Input(format!("weights must be proportional, equal or a list of numbers, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            other => Err(CliError::Input(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub input: PathBuf,
    pub group_col: String,
    /// `None` uses every non-group column.
    pub components: Option<Vec<String>>,
    pub weights: WeightChoice,
    pub alpha: f64,
    pub bootstrap: usize,
    pub seed: u64,
    pub tests: Vec<TestMethod>,
    pub intervals: Vec<CiMethod>,
    pub posthoc: bool,
    pub format: OutputFormat,
    pub mc_samples: usize,
    pub workers: Option<usize>,
    pub stage: Stage,
}

impl AnalysisConfig {
    pub fn new(input: impl Into<PathBuf>, group_col: impl Into<String>) -> Self {
        AnalysisConfig {
            input: input.into(),
            group_col: group_col.into(),
            components: None,
            weights: WeightChoice::Proportional,
            alpha: 0.05,
            bootstrap: DEFAULT_REPLICATES,
            seed: 0,
            tests: Vec::new(),
            intervals: Vec::new(),
            posthoc: false,
            format: OutputFormat::Json,
            mc_samples: McParams::default().sample_count,
            workers: None,
            stage: Stage::Estimate,
        }
    }

    /// Tests to run: the requested list, or all four for the `test` stage.
    pub fn effective_tests(&self) -> Vec<TestMethod> {
        match (self.stage, self.tests.is_empty()) {
            (Stage::Estimate, _) => Vec::new(),
            (Stage::Test, true) => TestMethod::ALL.to_vec(),
            _ => self.tests.clone(),
        }
    }

    /// Interval methods: the requested list, or all three for the `ci` stage.
    pub fn effective_intervals(&self) -> Vec<CiMethod> {
        match (self.stage, self.intervals.is_empty()) {
            (Stage::Estimate, _) => Vec::new(),
            (Stage::Ci, true) => CiMethod::ALL.to_vec(),
            _ => self.intervals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub software: String,
    pub version: String,
    pub input: String,
    pub group_column: String,
    pub components: Vec<String>,
    pub weights: WeightMode,
    pub weight_values: Vec<f64>,
    pub alpha: f64,
    pub seed: u64,
    pub bootstrap: Option<usize>,
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub variable: String,
    pub group: String,
    pub component: String,
    pub estimate: f64,
    /// Bootstrap standard deviation on the estimate scale.
    pub bootstrap_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostHocBlock {
    pub family: PostHocFamily,
    pub method: SubTestMethod,
    pub results: Vec<PostHocResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub groups: Vec<GroupSummary>,
    pub total_n: usize,
    pub estimates: Vec<EstimateRow>,
    pub tests: Vec<TestResult>,
    pub intervals: Vec<IntervalSet>,
    pub posthoc: Vec<PostHocBlock>,
    pub warnings: Vec<String>,
}

pub const SCHEMA_VERSION: u32 = 1;

fn resolve_weights(choice: &WeightChoice, parsed: &ParsedDataset) -> CliResult<WeightScheme> {
    let data = &parsed.data;
    let w = match choice {
        WeightChoice::Proportional => WeightScheme::proportional_for(data),
        WeightChoice::Equal => WeightScheme::equal(data.k())?,
        WeightChoice::Custom(v) => {
            if v.len() != data.k() {
                return Err(CliError::Input(format!("{} weights given for {} groups", v.len(), data.k())));
            }
            WeightScheme::custom(v.clone())?
        }
    };
    Ok(w)
}

/// Reads the input file and runs [`analyze`].
pub fn run_analysis(config: &AnalysisConfig) -> CliResult<AnalysisReport> {
    let parsed = parse_dataset(&config.input, &config.group_col, config.components.as_deref())?;
    analyze(&parsed, config)
}

/// Estimates, then (for the test and ci stages) bootstraps, runs the
/// requested tests and intervals and the optional post-hoc families.
pub fn analyze(parsed: &ParsedDataset, config: &AnalysisConfig) -> CliResult<AnalysisReport> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(CliError::Input(format!("alpha {} outside (0, 1)", config.alpha)));
    }
    let data = &parsed.data;
    let weights = resolve_weights(&config.weights, parsed)?;
    let est = reference_overlap(data, &weights)?;
    let labels = est.labels();
    let flat = est.flat().to_vec();
    let mut warnings = Vec::new();
    if parsed.dropped_rows > 0 {
        warnings.push(format!("{} rows with missing values were dropped", parsed.dropped_rows));
    }
    let tied = data.tied_components();
    if !tied.is_empty() {
        let names: Vec<&str> = tied.iter().map(|&s| data.component_labels()[s].as_str()).collect();
        warnings.push(format!(
            "tied values in components [{}]; estimates use the right-continuous empirical CDF",
            names.join(", ")
        ));
    }

    let tests = config.effective_tests();
    let intervals = config.effective_intervals();
    let needs_bootstrap = config.stage != Stage::Estimate;
    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            software: "overlapkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            input: config.input.display().to_string(),
            group_column: config.group_col.clone(),
            components: data.component_labels().to_vec(),
            weights: weights.mode(),
            weight_values: weights.weights().to_vec(),
            alpha: config.alpha,
            seed: config.seed,
            bootstrap: needs_bootstrap.then_some(config.bootstrap),
            mc_samples: (tests.contains(&TestMethod::MaxT) || intervals.contains(&CiMethod::Mvt))
                .then_some(config.mc_samples),
        },
        groups: data.groups().iter().map(|g| GroupSummary { label: g.label.clone(), n: g.n() }).collect(),
        total_n: data.total_n(),
        estimates: labels
            .iter()
            .zip(&flat)
            .map(|(l, &v)| EstimateRow {
                variable: l.to_string(),
                group: l.group.clone(),
                component: l.component.clone(),
                estimate: v,
                bootstrap_sd: None,
            })
            .collect(),
        tests: Vec::new(),
        intervals: Vec::new(),
        posthoc: Vec::new(),
        warnings,
    };
    if !needs_bootstrap {
        return Ok(report);
    }
    if data.k() < 2 {
        return Err(CliError::Input("tests and intervals need at least 2 groups".into()));
    }
    if config.bootstrap < 2 {
        return Err(CliError::Input("bootstrap needs at least 2 replicates".into()));
    }
    if config.bootstrap < MIN_RECOMMENDED_B {
        report.warnings.push(format!(
            "B = {} bootstrap replicates is below the recommended minimum of {MIN_RECOMMENDED_B}",
            config.bootstrap
        ));
    }
    let boot = BootstrapConfig { replicates: config.bootstrap, seed: config.seed, workers: config.workers };
    let rep = bootstrap_replicates_with(data, &Estimand::reference(weights.clone()), &boot)
        .map_err(|e| CliError::from(e).context("bootstrap"))?;
    let n_total = data.total_n();
    let cov = bootstrap_covariance(&rep, n_total)?;
    for (row, sd) in report.estimates.iter_mut().zip(&cov.component_sd) {
        row.bootstrap_sd = Some(*sd);
    }
    let degenerate: Vec<String> =
        (0..cov.dim()).filter(|&j| cov.degenerate[j]).map(|j| labels[j].to_string()).collect();
    if !degenerate.is_empty() {
        report.warnings.push(format!("zero bootstrap spread for [{}]", degenerate.join(", ")));
    }
    let mc = McParams::new(config.mc_samples, config.seed, McParams::default().target_se)?;

    for method in tests {
        let r = match method {
            TestMethod::Wald => wald_test(&flat, &cov, config.alpha, None),
            TestMethod::AnovaType => anova_type_test(&flat, &cov, config.alpha),
            TestMethod::MaxT => max_t_test(&flat, &cov, config.alpha, &mc),
            TestMethod::Percentile => percentile_test(&flat, &rep, n_total, config.alpha),
        }
        .map_err(|e| CliError::from(e).context(method.name()))?;
        if method == TestMethod::MaxT && data.k() > 2 {
            report.warnings.push(
                "max_t: the k-sample Max-T test is an extension of the two-sample procedure".into(),
            );
        }
        report.warnings.extend(r.notes.iter().map(|n| format!("{}: {n}", method.name())));
        report.tests.push(r);
    }
    for method in intervals {
        let set = match method {
            CiMethod::Bonferroni => bonferroni_sci(&flat, &rep, n_total, config.alpha),
            CiMethod::Mvt => mvt_sci(&flat, &cov, config.alpha, &mc),
            CiMethod::EllipseProjection => ellipse_projection_sci(&flat, &cov, config.alpha),
        }
        .and_then(|s| s.with_labels(labels.clone()))
        .map_err(|e| CliError::from(e).context(method.name()))?;
        report.warnings.extend(set.notes.iter().map(|n| format!("{}: {n}", method.name())));
        report.intervals.push(set);
    }
    if config.posthoc {
        let families = [
            (PostHocFamily::PerComponent, data.component_labels().to_vec()),
            (PostHocFamily::PerGroup, data.group_labels()),
        ];
        for (family, names) in families {
            for method in [SubTestMethod::Wald, SubTestMethod::AnovaType] {
                let results = closed_testing(&flat, &cov, data.k(), data.d(), family, method, config.alpha, &names)?;
                for r in &results {
                    match &r.raw {
                        Some(raw) => report.warnings.extend(raw.notes.iter().map(|n| format!("post-hoc {}: {n}", r.label))),
                        None => report.warnings.push(format!("post-hoc {}: sub-covariance is degenerate", r.label)),
                    }
                }
                report.posthoc.push(PostHocBlock { family, method, results });
            }
        }
    }
    Ok(report)
}

//! Size, power and coverage studies.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{MethodSummary, SettingReport, SimulationReport, StudyKind};
use super::sampling::lognormal_moments;
use super::scenario::{Family, ScenarioSpec, TruthSpec};
use crate::bootstrap::{bootstrap_covariance, bootstrap_replicates_with, stream_seed, BootstrapConfig};
use crate::ci::{bonferroni_sci, ellipse_projection_sci, mvt_sci, CiMethod};
use crate::empirical::GroupedDataset;
use crate::error::{OverlapError, Result};
use crate::inference::{anova_type_test, max_t_test, percentile_test, wald_test, TestMethod};
use crate::numerics::McParams;
use crate::BENCHMARK;

const BOOT_TAG: u64 = 0x626f_6f74;
const MC_TAG: u64 = 0x6d63;
const TRUTH_TAG: u64 = 0x7472_7574;

/// Per-group size of the one-off large-sample truth computation.
pub const LARGE_SAMPLE_N: usize = 1_000_000;

/// Where the coverage target came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    Equal,
    Supplied,
    LargeSample,
}

struct Fitted {
    est: Vec<f64>,
    rep: crate::bootstrap::ReplicateMatrix,
    cov: crate::bootstrap::CovarianceEstimate,
    n_scale: usize,
    mc: McParams,
}

fn fit(spec: &ScenarioSpec, data: &GroupedDataset, replication: u64) -> Result<Fitted> {
    let estimand = spec.estimand(data)?;
    let est = estimand.evaluate(data)?;
    let config = BootstrapConfig {
        replicates: spec.bootstrap,
        seed: stream_seed(spec.seed ^ BOOT_TAG, replication, 0),
        workers: Some(1),
    };
    let rep = bootstrap_replicates_with(data, &estimand, &config)?;
    let n_scale = spec.scale_n(data);
    let cov = bootstrap_covariance(&rep, n_scale)?;
    let mc = McParams::new(spec.mc_samples, stream_seed(spec.seed ^ MC_TAG, replication, 0), 5e-4)?;
    Ok(Fitted { est, rep, cov, n_scale, mc })
}

fn run_test(f: &Fitted, method: TestMethod, alpha: f64) -> Result<bool> {
    let r = match method {
        TestMethod::Wald => wald_test(&f.est, &f.cov, alpha, None)?,
        TestMethod::AnovaType => anova_type_test(&f.est, &f.cov, alpha)?,
        TestMethod::MaxT => max_t_test(&f.est, &f.cov, alpha, &f.mc)?,
        TestMethod::Percentile => percentile_test(&f.est, &f.rep, f.n_scale, alpha)?,
    };
    Ok(r.reject)
}

/// `(covered in every component, mean clipped length)`.
fn run_interval(f: &Fitted, method: CiMethod, alpha: f64, truth: &[f64]) -> Result<(bool, f64)> {
    let set = match method {
        CiMethod::Bonferroni => bonferroni_sci(&f.est, &f.rep, f.n_scale, alpha)?,
        CiMethod::Mvt => mvt_sci(&f.est, &f.cov, alpha, &f.mc)?,
        CiMethod::EllipseProjection => ellipse_projection_sci(&f.est, &f.cov, alpha)?,
    };
    if truth.len() != set.len() {
        return Err(OverlapError::DimensionMismatch { expected: set.len(), got: truth.len() });
    }
    let widths = set.widths();
    Ok((set.covers(truth), widths.iter().sum::<f64>() / widths.len() as f64))
}

type Outcome<T> = std::result::Result<T, String>;

fn replicate<T: Send>(
    spec: &ScenarioSpec,
    workers: Option<usize>,
    per_rep: impl Fn(&Fitted) -> Vec<Outcome<T>> + Sync,
    methods: usize,
) -> Result<Vec<Vec<Outcome<T>>>> {
    let one = |r: usize| -> Vec<Outcome<T>> {
        let fitted = super::scenario::generate_scenario(spec, r as u64).and_then(|data| fit(spec, &data, r as u64));
        match fitted {
            Ok(f) => per_rep(&f),
            Err(e) => (0..methods).map(|_| Err(e.to_string())).collect(),
        }
    };
    match workers {
        Some(1) => Ok((0..spec.reps).map(one).collect()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| OverlapError::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(|| (0..spec.reps).into_par_iter().map(one).collect()))
        }
        None => Ok((0..spec.reps).into_par_iter().map(one).collect()),
    }
}

fn first_error(outcomes: &[&Outcome<impl Sized>]) -> Option<String> {
    outcomes.iter().find_map(|o| o.as_ref().err().cloned())
}

fn summarize_rates(name: &str, outcomes: Vec<&Outcome<bool>>) -> MethodSummary {
    let successes = outcomes.iter().filter(|o| o.is_ok()).count();
    let hits = outcomes.iter().filter(|o| matches!(o, Ok(true))).count();
    MethodSummary::new(name, hits, successes, outcomes.len() - successes, None, first_error(&outcomes))
}

fn setting_header(spec: &ScenarioSpec, value: Option<f64>) -> SettingReport {
    SettingReport {
        sweep_parameter: spec.sweep.as_ref().map(|s| format!("{:?}", s.parameter).to_ascii_lowercase()),
        sweep_value: value,
        sizes: Vec::new(),
        truth: None,
        methods: Vec::new(),
    }
}

fn scenario_notes(spec: &ScenarioSpec) -> Vec<String> {
    let mut notes = Vec::new();
    for (i, g) in spec.groups.iter().enumerate() {
        if g.family == Family::MvnormalLognormal {
            let (mu, s2) = (g.log_mean.unwrap_or(0.0), g.log_var.unwrap_or(0.0));
            let (m, v) = lognormal_moments(mu, s2);
            notes.push(format!(
                "group {}: lognormal component read on the log scale (mu={mu}, sigma2={s2}) has mean {m:.6} and variance {v:.6}; \
                 read on the natural scale, a mean of {mu} is not attainable by a lognormal variable",
                i + 1
            ));
        }
    }
    notes
}

/// Rejection rates of the requested tests for every sweep setting.
pub fn run_size_power(spec: &ScenarioSpec, methods: &[TestMethod], workers: Option<usize>) -> Result<SimulationReport> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(OverlapError::InvalidInput("no test methods requested".into()));
    }
    let start = Instant::now();
    let mut settings = Vec::new();
    for setting in spec.settings()? {
        let s = &setting.spec;
        let outcomes = replicate(
            s,
            workers,
            |f| methods.iter().map(|&m| run_test(f, m, s.alpha).map_err(|e| e.to_string())).collect(),
            methods.len(),
        )?;
        let mut report = setting_header(spec, setting.value);
        report.sizes = s.groups.iter().map(|g| g.n).collect();
        report.methods = methods
            .iter()
            .enumerate()
            .map(|(j, m)| summarize_rates(m.name(), outcomes.iter().map(|o| &o[j]).collect()))
            .collect();
        settings.push(report);
    }
    Ok(SimulationReport {
        scenario: spec.name.clone(),
        study: StudyKind::SizePower,
        alpha: spec.alpha,
        reps: spec.reps,
        bootstrap: spec.bootstrap,
        seed: spec.seed,
        truth_source: None,
        settings,
        notes: scenario_notes(spec),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Estimate of the true overlap vector from one dataset with `n` rows per group.
pub fn large_sample_truth(spec: &ScenarioSpec, n: usize) -> Result<Vec<f64>> {
    let data = spec.generate_with_size(spec.seed ^ TRUTH_TAG, 0, Some(n))?;
    spec.estimand(&data)?.evaluate(&data)
}

/// The coverage target of a concrete scenario.
pub fn true_overlap(spec: &ScenarioSpec) -> Result<(Vec<f64>, TruthSource)> {
    let dim = match spec.design {
        super::scenario::Design::KSample => spec.k() * spec.d,
        super::scenario::Design::TwoSample => spec.d,
    };
    match &spec.truth {
        None => Err(OverlapError::InvalidInput("coverage study needs a truth entry".into())),
        Some(TruthSpec::Named(t)) if t == "equal" => Ok((vec![BENCHMARK; dim], TruthSource::Equal)),
        Some(TruthSpec::Named(_)) => Ok((large_sample_truth(spec, LARGE_SAMPLE_N)?, TruthSource::LargeSample)),
        Some(TruthSpec::Vector(v)) if v.len() == dim => Ok((v.clone(), TruthSource::Supplied)),
        Some(TruthSpec::Vector(v)) => Err(OverlapError::DimensionMismatch { expected: dim, got: v.len() }),
    }
}

/// Joint coverage of the true overlap vector and mean componentwise length
/// for the requested interval methods.
pub fn run_coverage(spec: &ScenarioSpec, methods: &[CiMethod], workers: Option<usize>) -> Result<SimulationReport> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(OverlapError::InvalidInput("no interval methods requested".into()));
    }
    let start = Instant::now();
    let mut settings = Vec::new();
    let mut source = None;
    let mut notes = scenario_notes(spec);
    for setting in spec.settings()? {
        let s = &setting.spec;
        let (truth, src) = true_overlap(s)?;
        if src == TruthSource::LargeSample && source.is_none() {
            notes.push(format!("true overlap estimated from one dataset with n = {LARGE_SAMPLE_N} per group"));
        }
        source = Some(src);
        let outcomes = replicate(
            s,
            workers,
            |f| {
                methods
                    .iter()
                    .map(|&m| run_interval(f, m, s.alpha, &truth).map_err(|e| e.to_string()))
                    .collect()
            },
            methods.len(),
        )?;
        let mut report = setting_header(spec, setting.value);
        report.sizes = s.groups.iter().map(|g| g.n).collect();
        report.methods = methods
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let col: Vec<&Outcome<(bool, f64)>> = outcomes.iter().map(|o| &o[j]).collect();
                let ok: Vec<(bool, f64)> = col.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
                let hits = ok.iter().filter(|(c, _)| *c).count();
                let mean_length = (!ok.is_empty()).then(|| pairwise_sum(&ok.iter().map(|(_, l)| *l).collect::<Vec<_>>()) / ok.len() as f64);
                MethodSummary::new(m.name(), hits, ok.len(), col.len() - ok.len(), mean_length, first_error(&col))
            })
            .collect();
        report.truth = Some(truth);
        settings.push(report);
    }
    Ok(SimulationReport {
        scenario: spec.name.clone(),
        study: StudyKind::Coverage,
        alpha: spec.alpha,
        reps: spec.reps,
        bootstrap: spec.bootstrap,
        seed: spec.seed,
        truth_source: source,
        settings,
        notes,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

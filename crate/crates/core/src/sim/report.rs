//! Simulation reports.

use serde::{Deserialize, Serialize};

use super::run::TruthSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    SizePower,
    Coverage,
}

/// Rejection or coverage rate of one method at one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// Fraction of successful replications that rejected (or covered).
    pub rate: Option<f64>,
    /// `sqrt(rate (1 - rate) / successes)`.
    pub mc_se: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl MethodSummary {
    pub fn new(
        method: &str,
        hits: usize,
        successes: usize,
        failures: usize,
        mean_length: Option<f64>,
        first_failure: Option<String>,
    ) -> Self {
        let rate = (successes > 0).then(|| hits as f64 / successes as f64);
        let mc_se = rate.map(|p| (p * (1.0 - p) / successes as f64).sqrt());
        MethodSummary { method: method.to_string(), rate, mc_se, successes, failures, mean_length, first_failure }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_value: Option<f64>,
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
    pub methods: Vec<MethodSummary>,
}

impl SettingReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub study: StudyKind,
    pub alpha: f64,
    pub reps: usize,
    pub bootstrap: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_source: Option<TruthSource>,
    pub settings: Vec<SettingReport>,
    pub notes: Vec<String>,
    /// Wall-clock time; the only field that varies between identical runs.
    pub elapsed_seconds: f64,
}

/// One flat record per method and setting, for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub scenario: String,
    pub study: StudyKind,
    pub sweep_parameter: Option<String>,
    pub sweep_value: Option<f64>,
    pub sizes: String,
    pub method: String,
    pub rate: Option<f64>,
    pub mc_se: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    pub mean_length: Option<f64>,
}

impl SimulationReport {
    /// The report with timing removed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        SimulationReport { elapsed_seconds: 0.0, ..self.clone() }
    }

    pub fn rows(&self) -> Vec<SimulationRow> {
        self.settings
            .iter()
            .flat_map(|s| {
                s.methods.iter().map(move |m| SimulationRow {
                    scenario: self.scenario.clone(),
                    study: self.study,
                    sweep_parameter: s.sweep_parameter.clone(),
                    sweep_value: s.sweep_value,
                    sizes: s.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";"),
                    method: m.method.clone(),
                    rate: m.rate,
                    mc_se: m.mc_se,
                    successes: m.successes,
                    failures: m.failures,
                    mean_length: m.mean_length,
                })
            })
            .collect()
    }
}

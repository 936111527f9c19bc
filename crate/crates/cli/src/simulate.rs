//! The `simulate` subcommand: run a scenario file.

use std::path::Path;

use overlapkit::sim::{run_coverage, run_size_power, ScenarioSpec, SimulationReport};
use serde::{Deserialize, Serialize};

use crate::analysis::OutputFormat;
use crate::error::{CliError, CliResult};
use crate::output::to_normalized_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// Size/power when the scenario lists tests, coverage when it lists
    /// intervals; both when it lists both.
    #[default]
    Auto,
    SizePower,
    Coverage,
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub study: Study,
    pub reps: Option<usize>,
    pub bootstrap: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub timing: bool,
}

pub fn load_scenario(path: &Path) -> CliResult<ScenarioSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(ScenarioSpec::from_toml_str(&text)?)
}

pub fn run_scenario(mut spec: ScenarioSpec, opts: &SimulateOptions) -> CliResult<Vec<SimulationReport>> {
    if let Some(r) = opts.reps {
        spec.reps = r;
    }
    if let Some(b) = opts.bootstrap {
        spec.bootstrap = b;
    }
    if let Some(s) = opts.seed {
        spec.seed = s;
    }
    let size = match opts.study {
        Study::Auto => !spec.tests.is_empty(),
        Study::SizePower => true,
        Study::Coverage => false,
    };
    let coverage = match opts.study {
        Study::Auto => !spec.intervals.is_empty(),
        Study::SizePower => false,
        Study::Coverage => true,
    };
    if !size && !coverage {
        return Err(CliError::Input("scenario lists neither tests nor intervals".into()));
    }
    let mut reports = Vec::new();
    if size {
        reports.push(run_size_power(&spec, &spec.tests, opts.workers)?);
    }
    if coverage {
        reports.push(run_coverage(&spec, &spec.intervals, opts.workers)?);
    }
    if !opts.timing {
        reports = reports.iter().map(SimulationReport::without_timing).collect();
    }
    Ok(reports)
}

pub fn render_simulation(reports: &[SimulationReport], format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => to_normalized_json(&reports),
        OutputFormat::Csv | OutputFormat::Table => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in reports {
                for row in r.rows() {
                    w.serialize(row)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

//! Dataset ingestion, analysis orchestration and report output for the
//! `overlapkit` command-line tool.

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod output;
pub mod simulate;

pub use analysis::{
    analyze, run_analysis, AnalysisConfig, AnalysisReport, EstimateRow, GroupSummary, OutputFormat, PostHocBlock,
    Provenance, Stage, WeightChoice,
};
pub use dataset::{parse_dataset, parse_dataset_from, ParsedDataset};
pub use error::{CliError, CliResult};
pub use output::{
    emit_ci_plot_data, read_ci_plot_data, render, report_from_json, report_to_csv, report_to_json, report_to_table,
    PlotRow,
};
pub use simulate::{load_scenario, render_simulation, run_scenario, SimulateOptions, Study};

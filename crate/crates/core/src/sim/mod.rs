//! Simulation studies: scenario files, samplers, and size, power and
//! coverage runs.

mod report;
mod run;
mod sampling;
mod scenario;

pub use report::{MethodSummary, SettingReport, SimulationReport, SimulationRow, StudyKind};
pub use run::{large_sample_truth, run_coverage, run_size_power, true_overlap, TruthSource, LARGE_SAMPLE_N};
pub use sampling::{lognormal_moments, sample_mvnormal, sample_mvnormal_lognormal, sample_mvt};
pub use scenario::{
    generate_scenario, Design, Family, GroupModel, GroupSpec, ScalarOrVector, ScenarioSpec, Setting, Sweep,
    SweepParameter, TruthSpec, WeightSpec,
};

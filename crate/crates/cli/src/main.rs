use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use overlapkit::{CiMethod, TestMethod};
use overlapkit_cli::{
    emit_ci_plot_data, load_scenario, render, render_simulation, run_analysis, run_scenario, AnalysisConfig,
    CliError, CliResult, OutputFormat, SimulateOptions, Stage, Study, WeightChoice,
};

#[derive(Parser)]
#[command(name = "overlapkit", version, about = "Nonparametric multivariate niche overlap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reference overlap estimates only.
    Estimate(Common),
    /// Global tests of equal distributions (overlap 1/2), with optional post-hoc tests.
    Test(Common),
    /// Simultaneous confidence intervals.
    Ci(Common),
    /// Run a simulation scenario file.
    Simulate(SimArgs),
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
            Format::Table => OutputFormat::Table,
        }
    }
}

#[derive(Args)]
struct Common {
    /// CSV file with one group column and numeric component columns.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    group_col: String,
    /// Comma-separated component columns (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    components: Vec<String>,
    /// proportional, equal, or comma-separated weights summing to 1.
    #[arg(long, default_value = "proportional")]
    weights: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = overlapkit::DEFAULT_REPLICATES)]
    bootstrap: usize,
    #[arg(long, env = "OVERLAPKIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of wald, anova_type, max_t, percentile.
    #[arg(long, value_delimiter = ',')]
    tests: Vec<String>,
    /// Comma-separated subset of bonferroni, mvt, ellipse_projection.
    #[arg(long, value_delimiter = ',')]
    ci: Vec<String>,
    /// Per-component and per-group sub-tests with closed-testing adjustment.
    #[arg(long)]
    posthoc: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads for the bootstrap (output does not depend on it).
    #[arg(long)]
    workers: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo sample count for multivariate normal probabilities.
    #[arg(long, default_value_t = overlapkit::McParams::default().sample_count)]
    mc_samples: usize,
    /// Also write interval plot data (CSV) to this path.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyArg {
    Auto,
    SizePower,
    Coverage,
}

#[derive(Args)]
struct SimArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    study: StudyArg,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, env = "OVERLAPKIT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

fn parse_list<T: std::str::FromStr<Err = overlapkit::OverlapError>>(items: &[String]) -> CliResult<Vec<T>> {
    items.iter().filter(|s| !s.trim().is_empty()).map(|s| s.parse::<T>().map_err(CliError::from)).collect()
}

fn write_output(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn analysis(args: Common, stage: Stage) -> CliResult<()> {
    let mut config = AnalysisConfig::new(args.input, args.group_col);
    config.components = (!args.components.is_empty()).then_some(args.components);
    config.weights = args.weights.parse::<WeightChoice>()?;
    config.alpha = args.alpha;
    config.bootstrap = args.bootstrap;
    config.seed = args.seed;
    config.tests = parse_list::<TestMethod>(&args.tests)?;
    config.intervals = parse_list::<CiMethod>(&args.ci)?;
    config.posthoc = args.posthoc;
    config.format = args.format.into();
    config.mc_samples = args.mc_samples;
    config.workers = args.workers;
    config.stage = stage;
    let report = run_analysis(&config)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.plot_data {
        emit_ci_plot_data(&report, path)?;
    }
    write_output(&render(&report, config.format)?, args.out.as_ref())
}

fn simulate(args: SimArgs) -> CliResult<()> {
    let spec = load_scenario(&args.scenario)?;
    let opts = SimulateOptions {
        study: match args.study {
            StudyArg::Auto => Study::Auto,
            StudyArg::SizePower => Study::SizePower,
            StudyArg::Coverage => Study::Coverage,
        },
        reps: args.reps,
        bootstrap: args.bootstrap,
        seed: args.seed,
        workers: args.workers,
        timing: args.timing,
    };
    let reports = run_scenario(spec, &opts)?;
    write_output(&render_simulation(&reports, args.format.into())?, args.out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => analysis(a, Stage::Estimate),
        Command::Test(a) => analysis(a, Stage::Test),
        Command::Ci(a) => analysis(a, Stage::Ci),
        Command::Simulate(a) => simulate(a),
        Command::Version => {
            println!("overlapkit {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

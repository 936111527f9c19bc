use std::path::{Path, PathBuf};
use std::process::Command;

use overlapkit::sim::{generate_scenario, ScenarioSpec};
use overlapkit::{CiMethod, GroupedDataset, TestMethod};
use overlapkit_cli::output::read_ci_plot_data;
use overlapkit_cli::{
    emit_ci_plot_data, parse_dataset, report_from_json, report_to_json, run_analysis, AnalysisConfig, CliError, Stage,
};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_overlapkit"))
}

fn null_spec(k: usize, d: usize, n: usize, seed: u64) -> ScenarioSpec {
    let mut text = format!("name = \"null\"\nd = {d}\nseed = {seed}\nreps = 1\n");
    for _ in 0..k {
        text.push_str(&format!("\n[[groups]]\nn = {n}\nmean = 1.0\nvariance = 1.0\noffdiag = 0.25\n"));
    }
    ScenarioSpec::from_toml_str(&text).unwrap()
}

fn write_csv(dir: &Path, name: &str, data: &GroupedDataset, labels: &[&str], comps: &[&str]) -> PathBuf {
    let mut out = format!("species,{}\n", comps.join(","));
    for (i, g) in data.groups().iter().enumerate() {
        for r in 0..g.n() {
            let row: Vec<String> = g.row(r).iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&format!("{},{}\n", labels[i], row.join(",")));
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, out).unwrap();
    path
}

fn four_by_three(dir: &Path) -> PathBuf {
    let data = generate_scenario(&null_spec(4, 3, 30, 5), 0).unwrap();
    write_csv(dir, "iso.csv", &data, &["ARCS", "BDWF", "LKWF", "LSCS"], &["d15N", "d13C", "d34S"])
}

fn config(path: &Path, stage: Stage) -> AnalysisConfig {
    let mut c = AnalysisConfig::new(path, "species");
    c.stage = stage;
    c.bootstrap = 300;
    c.seed = 17;
    c.mc_samples = 20_000;
    c
}

#[test]
fn json_is_byte_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    let mut c = config(&path, Stage::Test);
    c.intervals = CiMethod::ALL.to_vec();
    c.posthoc = true;
    c.workers = Some(1);
    let a = report_to_json(&run_analysis(&c).unwrap()).unwrap();
    for w in [Some(2), Some(5), None] {
        c.workers = w;
        assert_eq!(a, report_to_json(&run_analysis(&c).unwrap()).unwrap());
    }
    let run = |workers: &str| {
        let out = bin()
            .args(["ci", "--input", path.to_str().unwrap(), "--group-col", "species", "--bootstrap", "200"])
            .args(["--seed", "3", "--workers", workers, "--mc-samples", "10000"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    let run = |seed_flag: Option<&str>, env: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["ci", "--input", path.to_str().unwrap(), "--group-col", "species", "--bootstrap", "150"])
            .args(["--ci", "bonferroni"]);
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        cmd.env_remove("OVERLAPKIT_SEED");
        if let Some(e) = env {
            cmd.env("OVERLAPKIT_SEED", e);
        }
        String::from_utf8(cmd.output().unwrap().stdout).unwrap()
    };
    assert_eq!(run(Some("42"), None), run(None, Some("42")));
    assert_ne!(run(Some("42"), None), run(Some("43"), None));
}

#[test]
fn report_round_trips_through_json() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    let mut c = config(&path, Stage::Test);
    c.intervals = CiMethod::ALL.to_vec();
    c.posthoc = true;
    let report = run_analysis(&c).unwrap();
    let json = report_to_json(&report).unwrap();
    let back = report_from_json(&json).unwrap();
    assert_eq!(report_to_json(&back).unwrap(), json);
    assert_eq!(back.estimates.len(), report.estimates.len());
    for (a, b) in report.estimates.iter().zip(&back.estimates) {
        assert_eq!(a.variable, b.variable);
        assert!((a.estimate - b.estimate).abs() <= 1e-11 * a.estimate.abs().max(1e-300));
    }
    assert_eq!(back.tests.len(), 4);
    assert_eq!(back.posthoc.len(), 4);
}

#[test]
fn twelve_variables_in_group_major_order() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    let report = run_analysis(&config(&path, Stage::Estimate)).unwrap();
    let names: Vec<&str> = report.estimates.iter().map(|e| e.variable.as_str()).collect();
    assert_eq!(names.len(), 12);
    assert_eq!(names[0], "ARCS d15N");
    assert_eq!(names[1], "ARCS d13C");
    assert_eq!(names[3], "BDWF d15N");
    assert_eq!(names[11], "LSCS d34S");
    assert!(report.tests.is_empty() && report.intervals.is_empty());
    assert_eq!(report.total_n, 120);
}

#[test]
fn plot_data_has_one_row_per_variable_and_method() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    let report = run_analysis(&config(&path, Stage::Ci)).unwrap();
    let plot = dir.path().join("plot.csv");
    emit_ci_plot_data(&report, &plot).unwrap();
    let text = std::fs::read_to_string(&plot).unwrap();
    assert!(text.starts_with("# reference=0.5\n"));
    let (reference, rows) = read_ci_plot_data(&plot).unwrap();
    assert_eq!(reference, 0.5);
    assert_eq!(rows.len(), 36);
    for set in &report.intervals {
        let mine: Vec<_> = rows.iter().filter(|r| r.method == set.method.name()).collect();
        assert_eq!(mine.len(), 12);
        for (j, row) in mine.iter().enumerate() {
            assert_eq!(row.variable_label, set.labels[j].to_string());
            assert!((row.lower - set.lower[j]).abs() <= 1e-12);
            assert!((row.upper - set.upper[j]).abs() <= 1e-12);
            assert!((row.estimate - set.estimate[j]).abs() <= 1e-12);
        }
    }
    let no_ci = run_analysis(&config(&path, Stage::Estimate)).unwrap();
    assert!(emit_ci_plot_data(&no_ci, &plot).is_err());

    let out = bin()
        .args(["ci", "--input", path.to_str().unwrap(), "--group-col", "species", "--bootstrap", "150"])
        .args(["--mc-samples", "5000", "--plot-data", dir.path().join("p2.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read_ci_plot_data(&dir.path().join("p2.csv")).unwrap().1.len(), 36);
}

#[test]
fn sample_layout_and_dropped_rows() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("species,d15N,d13C,d34S\n");
    let sizes = [("LKWF", 69), ("BDWF", 71), ("ARCS", 67), ("LSCS", 70)];
    for (label, n) in sizes {
        for r in 0..n {
            text.push_str(&format!("{label},{},{},{}\n", r as f64 * 0.1, (r * 7 % 13) as f64, r as f64 * 0.01 + 1.0));
        }
    }
    text.push_str("LSCS,1.0,2.0,\n");
    let path = dir.path().join("iso.csv");
    std::fs::write(&path, text).unwrap();
    let parsed = parse_dataset(&path, "species", None).unwrap();
    assert_eq!(parsed.dropped_rows, 1);
    assert_eq!((parsed.data.k(), parsed.data.d(), parsed.data.total_n()), (4, 3, 277));
    assert_eq!(parsed.data.group_labels(), vec!["LKWF", "BDWF", "ARCS", "LSCS"]);
    let report = run_analysis(&config(&path, Stage::Estimate)).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("dropped") && w.contains('1')));
    assert!(report.warnings.iter().any(|w| w.contains("tied")));
}

#[test]
fn one_group_is_estimate_only() {
    let dir = TempDir::new().unwrap();
    let data = generate_scenario(&null_spec(1, 2, 10, 1), 0).unwrap();
    let path = write_csv(dir.path(), "one.csv", &data, &["solo"], &["a", "b"]);
    let report = run_analysis(&config(&path, Stage::Estimate)).unwrap();
    assert!(report.estimates.iter().all(|e| e.estimate == 0.5));
    let err = run_analysis(&config(&path, Stage::Test)).unwrap_err();
    assert!(matches!(err, CliError::Input(_)));
    let out = bin()
        .args(["test", "--input", path.to_str().unwrap(), "--group-col", "species"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = bin().args(["estimate", "--input", "/nonexistent.csv", "--group-col", "g"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "g,x\na,1\na,2\nb,oops\nb,4\n").unwrap();
    let out = bin().args(["estimate", "--input", bad.to_str().unwrap(), "--group-col", "g"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["estimate", "--input", bad.to_str().unwrap(), "--group-col", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "g,x\na,1\na,1\nb,1\nb,1\n").unwrap();
    let out = bin()
        .args(["test", "--input", flat.to_str().unwrap(), "--group-col", "g", "--tests", "wald", "--bootstrap", "50"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let ok = bin().arg("version").output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("overlapkit "));
}

#[test]
fn warnings_surface_in_report() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    let mut c = config(&path, Stage::Test);
    c.bootstrap = 50;
    c.tests = vec![TestMethod::Percentile, TestMethod::MaxT];
    let report = run_analysis(&c).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("100")));
    assert!(report.warnings.iter().any(|w| w.contains("increase B")));
    assert!(report.warnings.iter().any(|w| w.contains("Max-T")));
}

#[test]
fn csv_and_table_formats_render() {
    let dir = TempDir::new().unwrap();
    let path = four_by_three(dir.path());
    for fmt in ["csv", "table"] {
        let out = bin()
            .args(["test", "--input", path.to_str().unwrap(), "--group-col", "species", "--bootstrap", "120"])
            .args(["--tests", "wald,anova_type", "--format", fmt])
            .output()
            .unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("wald") && text.contains("anova_type"));
    }
}

#[test]
fn simulate_subcommand_is_deterministic() {
    let scen = format!("{}/../../scenarios/ksample_size.toml", env!("CARGO_MANIFEST_DIR"));
    let run = |workers: &str| {
        let out = bin()
            .args(["simulate", "--scenario", &scen, "--reps", "12", "--bootstrap", "60", "--workers", workers])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let a = run("1");
    assert_eq!(a, run("3"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v[0]["study"], "size_power");
    assert!(v[0].get("elapsed_seconds").map(|e| e == 0.0).unwrap_or(true));
}

/// Null data, n = 200 per group: every test accepts in at least 90% of
/// seeded runs.
#[test]
fn synthetic_null_mostly_accepts() {
    let dir = TempDir::new().unwrap();
    let runs = 30;
    let mut all_accept = 0;
    for seed in 0..runs {
        let data = generate_scenario(&null_spec(3, 2, 200, 1000 + seed), 0).unwrap();
        let path = write_csv(dir.path(), "null.csv", &data, &["a", "b", "c"], &["x", "y"]);
        let mut c = config(&path, Stage::Test);
        c.bootstrap = 500;
        c.seed = seed;
        let report = run_analysis(&c).unwrap();
        if report.tests.iter().all(|t| !t.reject) {
            all_accept += 1;
        }
    }
    println!("all tests accepted in {all_accept} of {runs} runs");
    assert!(all_accept as f64 >= 0.9 * runs as f64);
}

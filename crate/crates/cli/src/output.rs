//! Report serialization: normalized JSON, long-format CSV, plain-text
//! tables, and interval plot data.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{AnalysisReport, OutputFormat};
use crate::error::{CliError, CliResult};

/// Rounds every non-integer JSON number to 12 significant digits so that
/// reports are byte-stable and survive a JSON round trip unchanged.
pub fn normalize_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
                if let Some(num) = serde_json::Number::from_f64(rounded) {
                    *n = num;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize_floats),
        Value::Object(map) => map.values_mut().for_each(normalize_floats),
        _ => {}
    }
}

pub fn to_normalized_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut v = serde_json::to_value(value)?;
    normalize_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn report_to_json(report: &AnalysisReport) -> CliResult<String> {
    to_normalized_json(report)
}

pub fn report_from_json(text: &str) -> CliResult<AnalysisReport> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("report JSON: {e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long format: `record,method,variable,field,value`.
pub fn report_to_csv(report: &AnalysisReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["record", "method", "variable", "field", "value"])?;
    for e in &report.estimates {
        w.write_record(["estimate", "", &e.variable, "estimate", &e.estimate.to_string()])?;
        if let Some(sd) = e.bootstrap_sd {
            w.write_record(["estimate", "", &e.variable, "bootstrap_sd", &sd.to_string()])?;
        }
    }
    for t in &report.tests {
        let m = t.method.name();
        w.write_record(["test", m, "", "statistic", &t.statistic.to_string()])?;
        w.write_record(["test", m, "", "reference", &t.reference.to_string()])?;
        w.write_record(["test", m, "", "p_value", &opt(t.p_value)])?;
        w.write_record(["test", m, "", "reject", &t.reject.to_string()])?;
    }
    for set in &report.intervals {
        let m = set.method.name();
        for (j, label) in set.labels.iter().enumerate() {
            let var = label.to_string();
            w.write_record(["interval", m, &var, "lower", &set.lower[j].to_string()])?;
            w.write_record(["interval", m, &var, "upper", &set.upper[j].to_string()])?;
        }
    }
    for block in &report.posthoc {
        let m = format!("{}/{}", block.family.name(), block.method.name());
        for r in &block.results {
            w.write_record(["posthoc", &m, &r.label, "raw_p", &opt(r.raw.as_ref().and_then(|t| t.p_value))])?;
            w.write_record(["posthoc", &m, &r.label, "adjusted_p", &r.adjusted_p.to_string()])?;
        }
    }
    for warning in &report.warnings {
        w.write_record(["warning", "", "", "message", warning])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        None => "-".into(),
        Some(p) if p < 1e-4 => "<0.0001".into(),
        Some(p) => format!("{p:.4}"),
    }
}

pub fn report_to_table(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let groups: Vec<String> = report.groups.iter().map(|g| format!("{} (n={})", g.label, g.n)).collect();
    let _ = writeln!(out, "groups: {}  N={}", groups.join(", "), report.total_n);
    let _ = writeln!(out, "weights: {:?}", report.provenance.weight_values);
    let width = report.estimates.iter().map(|e| e.variable.chars().count()).max().unwrap_or(8).max(8);
    let _ = writeln!(out, "\n{:<width$}  {:>9}  {:>9}", "variable", "estimate", "sd");
    for e in &report.estimates {
        let sd = e.bootstrap_sd.map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "{:<width$}  {:>9.4}  {:>9}", e.variable, e.estimate, sd);
    }
    if !report.tests.is_empty() {
        let _ = writeln!(out, "\n{:<12} {:>12} {:>10} {:>7}  reference", "test", "statistic", "p", "reject");
        for t in &report.tests {
            let _ = writeln!(
                out,
                "{:<12} {:>12.4} {:>10} {:>7}  {}",
                t.method.name(),
                t.statistic,
                fmt_p(t.p_value),
                t.reject,
                t.reference
            );
        }
    }
    for set in &report.intervals {
        let _ = writeln!(out, "\n{} intervals ({:.0}%)", set.method.name(), 100.0 * set.level);
        for (j, label) in set.labels.iter().enumerate() {
            let mark = if set.lower[j] > 0.5 || set.upper[j] < 0.5 { "*" } else { "" };
            let _ = writeln!(
                out,
                "  {:<width$}  {:.4}  [{:.4}, {:.4}] {mark}",
                label.to_string(),
                set.estimate[j],
                set.lower[j],
                set.upper[j]
            );
        }
    }
    for block in &report.posthoc {
        let _ = writeln!(out, "\npost-hoc {} ({})", block.family.name(), block.method.name());
        for r in &block.results {
            let raw = r.raw.as_ref().and_then(|t| t.p_value);
            let _ = writeln!(
                out,
                "  {:<width$}  raw p {:>8}  adjusted p {:>8}  reject {}",
                r.label,
                fmt_p(raw),
                fmt_p(Some(r.adjusted_p)),
                r.reject
            );
        }
    }
    if !report.warnings.is_empty() {
        let _ = writeln!(out, "\nwarnings:");
        for w in &report.warnings {
            let _ = writeln!(out, "  - {w}");
        }
    }
    out
}

pub fn render(report: &AnalysisReport, format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => report_to_json(report),
        OutputFormat::Csv => report_to_csv(report),
        OutputFormat::Table => Ok(report_to_table(report)),
    }
}

/// One row of interval plot data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub variable_label: String,
    pub method: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Writes one row per (variable, method) after a `# reference=0.5` line.
pub fn emit_ci_plot_data(report: &AnalysisReport, path: &Path) -> CliResult<()> {
    if report.intervals.is_empty() {
        return Err(CliError::Input("report has no confidence intervals to plot".into()));
    }
    let mut body = format!("# reference={}\n", overlapkit::BENCHMARK);
    let mut w = csv::Writer::from_writer(Vec::new());
    for set in &report.intervals {
        for j in 0..set.len() {
            let variable_label = set.labels.get(j).map(|l| l.to_string()).unwrap_or_else(|| format!("V{}", j + 1));
            w.serialize(PlotRow {
                variable_label,
                method: set.method.name().to_string(),
                estimate: set.estimate[j],
                lower: set.lower[j],
                upper: set.upper[j],
                level: set.level,
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    body.push_str(&String::from_utf8_lossy(&bytes));
    std::fs::write(path, body).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Parses plot data written by [`emit_ci_plot_data`]; returns the
/// reference value and the rows.
pub fn read_ci_plot_data(path: &Path) -> CliResult<(f64, Vec<PlotRow>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let reference = text
        .lines()
        .find_map(|l| l.strip_prefix("# reference="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| CliError::Input("plot data lacks a reference line".into()))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows = rdr.deserialize().collect::<Result<Vec<PlotRow>, _>>()?;
    Ok((reference, rows))
}

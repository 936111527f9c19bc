//! CSV ingestion: one group-label column plus numeric component columns.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use overlapkit::{Group, GroupedDataset};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDataset {
    pub data: GroupedDataset,
    /// Rows removed because a component (or the group label) was missing.
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | ".")
}

/// Reads a dataset from any reader. `components = None` uses every column
/// except the group column, in file order.
pub fn parse_dataset_from<R: Read>(
    reader: R,
    group_col: &str,
    components: Option<&[String]>,
) -> CliResult<ParsedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("column {name:?} not found (columns: {})", headers.join(", "))))
    };
    let group_idx = find(group_col)?;
    let comp_names: Vec<String> = match components {
        Some(c) if !c.is_empty() => c.to_vec(),
        _ => headers.iter().filter(|h| h.as_str() != group_col).cloned().collect(),
    };
    if comp_names.is_empty() {
        return Err(CliError::Input("no component columns".into()));
    }
    let comp_idx = comp_names.iter().map(|c| find(c)).collect::<CliResult<Vec<_>>>()?;

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
    let mut dropped = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let label = record.get(group_idx).unwrap_or("");
        let cells: Vec<&str> = comp_idx.iter().map(|&j| record.get(j).unwrap_or("")).collect();
        if is_missing(label) || cells.iter().any(|c| is_missing(c)) {
            dropped += 1;
            continue;
        }
        let values = cells
            .iter()
            .zip(&comp_names)
            .map(|(c, name)| {
                c.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CliError::Input(format!("data row {}: column {name:?} has non-numeric value {c:?}", line + 1))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if !rows.contains_key(label) {
            order.push(label.to_string());
        }
        rows.entry(label.to_string()).or_default().push(values);
    }
    if order.is_empty() {
        return Err(CliError::Input("no complete observations".into()));
    }
    let groups = order
        .iter()
        .map(|label| {
            let r = &rows[label];
            if r.len() < 2 {
                return Err(CliError::Input(format!("group {label:?} has {} complete rows; at least 2 needed", r.len())));
            }
            Group::from_rows(label.clone(), r).map_err(CliError::from)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ParsedDataset { data: GroupedDataset::new(groups, comp_names)?, dropped_rows: dropped })
}

pub fn parse_dataset(path: &Path, group_col: &str, components: Option<&[String]>) -> CliResult<ParsedDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    parse_dataset_from(file, group_col, components)
}

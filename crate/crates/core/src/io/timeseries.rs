//! Time-series files: CSV with header `t,D_<node>...,CF_<gen>...` and `t`
//! contiguous from 1.

use crate::error::Error;
use crate::transport::{NetworkModel, TimestepData};
use crate::Result;
use std::collections::BTreeMap;
use std::path::Path;

enum Column {
    Time,
    Demand(String),
    CapacityFactor(String),
}

/// Load a time series. Structural checks (column names resolvable against a
/// network) happen later, when the data meets a [`NetworkModel`]; this parser
/// enforces the file contract itself: contiguous `t` from 1, finite numbers,
/// capacity factors inside [0, 1].
pub fn load_timeseries(path: &Path) -> Result<Vec<TimestepData>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let p = || path.display().to_string();

    let headers = reader
        .headers()
        .map_err(|e| Error::parse(p(), e.to_string()))?
        .clone();
    let mut columns = Vec::with_capacity(headers.len());
    for (i, name) in headers.iter().enumerate() {
        let col = if i == 0 {
            if name != "t" {
                return Err(Error::parse(
                    p(),
                    format!("first column must be `t`, got `{name}`"),
                ));
            }
            Column::Time
        } else if let Some(node) = name.strip_prefix("D_") {
            Column::Demand(node.to_string())
        } else if let Some(gen) = name.strip_prefix("CF_") {
            Column::CapacityFactor(gen.to_string())
        } else {
            return Err(Error::parse(
                p(),
                format!("column `{name}` is neither `t`, `D_<node>` nor `CF_<generator>`"),
            ));
        };
        columns.push(col);
    }

    let mut out = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1; // 1-based data row, equals t when contiguous
        let record = record.map_err(|e| Error::parse(p(), format!("row {row}: {e}")))?;
        if record.len() != columns.len() {
            return Err(Error::parse(
                p(),
                format!(
                    "row {row}: {} fields, expected {}",
                    record.len(),
                    columns.len()
                ),
            ));
        }
        let mut demand = BTreeMap::new();
        let mut capacity_factor = BTreeMap::new();
        for (col, raw) in columns.iter().zip(record.iter()) {
            match col {
                Column::Time => {
                    let t: usize = raw.parse().map_err(|_| {
                        Error::parse(p(), format!("row {row}: `{raw}` is not a time step"))
                    })?;
                    if t != row {
                        return Err(Error::parse(
                            p(),
                            format!("row {row}: t = {t}; time steps must be contiguous from 1"),
                        ));
                    }
                }
                Column::Demand(node) => {
                    let v = parse_value(raw, &p(), row)?;
                    demand.insert(node.clone(), v);
                }
                Column::CapacityFactor(gen) => {
                    let v = parse_value(raw, &p(), row)?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::parse(
                            p(),
                            format!("row {row}: capacity factor {v} for `{gen}` outside [0, 1]"),
                        ));
                    }
                    capacity_factor.insert(gen.clone(), v);
                }
            }
        }
        out.push(TimestepData {
            demand,
            capacity_factor,
        });
    }
    if out.is_empty() {
        return Err(Error::parse(
            p(),
            "no data rows; at least one time step is required",
        ));
    }
    Ok(out)
}

/// Write a time series with the column order derived from the network:
/// demands for every node, capacity factors for the CF-driven generators.
pub fn save_timeseries(path: &Path, net: &NetworkModel, steps: &[TimestepData]) -> Result<()> {
    let cf_gens: Vec<&str> = net
        .generators
        .iter()
        .filter(|g| g.uses_cf_series)
        .map(|g| g.id.as_str())
        .collect();
    let mut out = String::from("t");
    for n in &net.nodes {
        out.push_str(&format!(",D_{n}"));
    }
    for g in &cf_gens {
        out.push_str(&format!(",CF_{g}"));
    }
    out.push('\n');
    for (i, step) in steps.iter().enumerate() {
        out.push_str(&format!("{}", i + 1));
        for n in &net.nodes {
            out.push_str(&format!(",{}", step.demand.get(n).copied().unwrap_or(0.0)));
        }
        for g in &cf_gens {
            out.push_str(&format!(
                ",{}",
                step.capacity_factor.get(*g).copied().unwrap_or(1.0)
            ));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn parse_value(raw: &str, path: &str, row: usize) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| {
        Error::parse(
            path.to_string(),
            format!("row {row}: `{raw}` is not a number"),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::parse(
            path.to_string(),
            format!("row {row}: non-finite value {raw}"),
        ));
    }
    Ok(v)
}

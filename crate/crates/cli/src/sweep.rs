//! Grid expansion for `vmc sweep`: every array-valued key is an axis.

use anyhow::{bail, Result};
use toml::{Table, Value};
use vmc_core::experiment::RunConfig;

/// One grid point: a directory label and its config.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub label: String,
    pub config: RunConfig,
}

pub fn expand_grid(text: &str) -> Result<Vec<GridPoint>> {
    let table: Table = text.parse()?;
    let mut axes: Vec<(String, Vec<Value>)> = Vec::new();
    let mut base = Table::new();
    for (key, value) in table {
        match value {
            Value::Array(values) => {
                if values.is_empty() {
                    bail!("grid axis `{key}` is empty");
                }
                axes.push((key, values));
            }
            other => {
                base.insert(key, other);
            }
        }
    }
    let root = base
        .get("output")
        .and_then(Value::as_str)
        .unwrap_or(&RunConfig::default().output)
        .to_owned();

    let mut points = vec![(String::new(), base)];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for (label, table) in &points {
            for v in values {
                let mut t = table.clone();
                t.insert(key.clone(), v.clone());
                let part = format!("{key}={}", label_value(v));
                let label = if label.is_empty() { part } else { format!("{label}_{part}") };
                next.push((label, t));
            }
        }
        points = next;
    }

    points
        .into_iter()
        .map(|(label, mut table)| {
            let dir = if label.is_empty() { root.clone() } else { format!("{root}/{label}") };
            table.insert("output".into(), Value::String(dir));
            let config: RunConfig = Value::Table(table).try_into()?;
            config.validate()?;
            Ok(GridPoint { label, config })
        })
        .collect()
}

fn label_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

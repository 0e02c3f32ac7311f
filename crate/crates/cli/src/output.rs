//! JSON and CSV encoders. Floats use the shortest decimal that round-trips.

use std::io::Write;

use fanning_core::Mat;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Sample table with one numeric column per matrix entry.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Column names for the row-major entries of an `r x c` matrix called `name`.
    pub fn matrix_columns(name: &str, rows: usize, cols: usize) -> Vec<String> {
        (0..rows).flat_map(|i| (0..cols).map(move |j| format!("{name}_{i}_{j}"))).collect()
    }
}

pub fn row_major(m: &Mat) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub fn matrix(m: &Mat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| number(m[(i, j)])).collect())).collect())
}

pub fn opt_matrix(m: Option<&Mat>) -> Value {
    m.map(matrix).unwrap_or(Value::Null)
}

pub fn number(v: f64) -> Value {
    Value::from(v)
}

fn format_number(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite floats serialize")
    } else {
        v.to_string()
    }
}

/// Complete document for a table command: metadata plus `columns` and `rows`.
pub fn table_document(mut meta: Map<String, Value>, table: &Table) -> Value {
    meta.insert("columns".into(), json!(table.columns));
    meta.insert("rows".into(), Value::Array(table.rows.iter().map(|r| Value::Array(r.iter().map(|v| number(*v)).collect())).collect()));
    Value::Object(meta)
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push((prefix.into(), String::new())),
        Value::Bool(b) => out.push((prefix.into(), b.to_string())),
        Value::Number(n) => out.push((prefix.into(), n.to_string())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
    }
}

pub fn write_json<W: Write>(out: &mut W, doc: &Value) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    writeln!(out)
}

pub fn write_table_csv<W: Write>(out: W, table: &Table) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_number(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// `key,value` rows with dotted paths into the document.
pub fn write_document_csv<W: Write>(out: W, doc: &Value) -> csv::Result<()> {
    let mut pairs = Vec::new();
    flatten("", doc, &mut pairs);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in pairs {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

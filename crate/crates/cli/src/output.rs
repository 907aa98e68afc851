//! Tables with a reproducibility header, written as CSV or JSON.

use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(x: $t) -> Self {
                Cell::Int(x as i64)
            }
        }
    )*};
}
int_cell!(i64, u64, u32, usize);

/// Seventeen significant digits, positional for moderate exponents.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci.split('e').nth(1).unwrap().parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt17(*x),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(i) => json!(i),
            // the 17-digit text parses back to the same double
            Cell::Num(x) if x.is_finite() => serde_json::from_str(&fmt17(*x)).unwrap(),
            Cell::Num(x) => json!(x.to_string()),
        }
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Largest entry of the `tail_bound` column, if there is one.
    fn max_tail_bound(&self) -> Option<f64> {
        let j = self.columns.iter().position(|c| *c == "tail_bound")?;
        self.rows
            .iter()
            .filter_map(|r| match r[j] {
                Cell::Num(x) => Some(x),
                _ => None,
            })
            .reduce(f64::max)
    }
}

pub fn metadata(command: &str, config: &impl Serialize, table: &Table) -> Value {
    json!({
        "program": "ym2d",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "max_tail_bound": table.max_tail_bound().map(fmt17),
    })
}

pub fn write(out: &mut dyn Write, format: Format, meta: &Value, table: &Table) -> Result<()> {
    match format {
        Format::Csv => {
            for (k, v) in meta.as_object().unwrap() {
                writeln!(out, "# {k}: {v}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::text))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        table
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect(),
                    )
                })
                .collect();
            let doc = json!({ "metadata": meta, "columns": table.columns, "rows": rows });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

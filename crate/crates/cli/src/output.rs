//! Command output: a human table or one JSON record per line.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Records,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Output {
    pub table: String,
    pub records: Vec<Value>,
}

impl Output {
    pub fn new(table: impl Into<String>, records: Vec<Value>) -> Self {
        Output {
            table: table.into(),
            records,
        }
    }

    pub fn single<T: Serialize>(table: impl Into<String>, record: &T) -> Self {
        Output::new(
            table,
            vec![serde_json::to_value(record).expect("output serializes")],
        )
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table.clone(),
            Format::Records => self
                .records
                .iter()
                .map(|r| serde_json::to_string(r).expect("json value serializes"))
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.as_ref().chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![line(header.to_vec())];
    for row in rows {
        out.push(line(row.iter().map(|c| c.as_ref()).collect()));
    }
    out.join("\n")
}

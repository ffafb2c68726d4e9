//! Aligned text tables and the JSON / text writers shared by every
//! subcommand.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// A row-labelled table; the first header names the row label column.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Row labels are left aligned, values right aligned, columns separated
    /// by two spaces. No trailing whitespace.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, &w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

pub fn interval(lo: f64, hi: f64) -> String {
    format!("[{}, {}]", number(lo), number(hi))
}

/// Three decimals, with negative zero printed as zero.
pub fn number(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// A finished command: machine output, human output, exit code.
pub struct Report<T: Serialize> {
    pub name: &'static str,
    pub json: T,
    pub text: String,
    pub exit_code: u8,
}

impl<T: Serialize> Report<T> {
    /// Writes `<name>.json` and `<name>.txt` into `out` when given, and the
    /// text (or JSON) to stdout.
    pub fn emit(&self, out: Option<&Path>, json_stdout: bool) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.json)? + "\n";
        if let Some(dir) = out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (ext, body) in [("json", &json), ("txt", &self.text)] {
                let path = dir.join(format!("{}.{ext}", self.name));
                std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        print!("{}", if json_stdout { &json } else { &self.text });
        Ok(())
    }
}

//! Deterministic CSV and JSON emission: fixed column order, 12 significant
//! digits for floats, header row, LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_sig12(*v),
            Cell::Bool(b) => if *b { "1" } else { "0" }.to_string(),
        }
    }
}

/// 12 significant digits, scientific notation; stable under parse-reformat.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{v:.11e}")
}

pub fn emit_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// Write to the given path, or stdout when absent. I/O failures map to
/// exit code 5 at the call site.
pub fn write_output(out: Option<&Path>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

//! Deterministic CSV output: one header line per file, floats rendered
//! with 17 significant digits so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// 17 significant digits; round-trips every f64 exactly.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

pub struct CsvFile {
    path: PathBuf,
    buffer: String,
    columns: usize,
}

impl CsvFile {
    pub fn new(dir: &Path, name: &str, header: &[&str]) -> Self {
        let mut buffer = String::new();
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        Self {
            path: dir.join(name),
            buffer,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns, "csv row arity mismatch");
        let mut line = String::new();
        for (k, field) in fields.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(field);
        }
        let _ = writeln!(self.buffer, "{line}");
    }

    pub fn finish(self) -> std::io::Result<PathBuf> {
        std::fs::write(&self.path, self.buffer.as_bytes())?;
        Ok(self.path)
    }
}

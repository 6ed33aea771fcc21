//! CSV output with `#`-prefixed metadata lines and complex input parsing.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use outstat_core::linalg::CMat;

/// Writer that prefixes every file with tool version and config hash so any
/// output can be traced back to the exact run that produced it.
pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(config_json: &str, config_hash: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!(
            "# outstat v{} config_hash={}\n",
            env!("CARGO_PKG_VERSION"),
            config_hash
        ));
        buf.push_str(&format!("# config {config_json}\n"));
        CsvWriter { buf }
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.buf.push_str(&columns.join(","));
        self.buf.push('\n');
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self, out: Option<&Path>) -> std::io::Result<()> {
        match out {
            Some(path) => fs::write(path, self.buf),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(self.buf.as_bytes())
            }
        }
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Reads an m x b complex matrix from CSV with paired re,im columns.
/// Lines starting with `#` are ignored.
pub fn read_complex_csv(path: &Path, m: usize, b: usize) -> Result<CMat, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| format!("line {}: {e}", lineno + 1))?;
        if vals.len() != 2 * b {
            return Err(format!(
                "line {}: expected {} columns (re,im pairs for b = {b}), got {}",
                lineno + 1,
                2 * b,
                vals.len()
            ));
        }
        rows.push(vals);
    }
    if rows.len() != m {
        return Err(format!("expected {m} data rows, got {}", rows.len()));
    }
    Ok(CMat::from_fn(m, b, |i, j| {
        Complex64::new(rows[i][2 * j], rows[i][2 * j + 1])
    }))
}

//! Schema-versioned CSV files with a self-describing header block.
//!
//! ```text
//! # wellgrav <schema> v1
//! # generated_unix=<seconds>
//! # config <key> = <value>
//! # result <key> = <value>
//! col_a,col_b
//! ...
//! ```
//!
//! The timestamp is the only line that varies between identical runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub struct CsvFile {
    schema: &'static str,
    columns: &'static [&'static str],
    notes: Vec<(String, String)>,
    rows: Vec<String>,
}

/// Shortest round-trip form, so a re-read is exact; exponent form outside
/// `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x.is_nan() {
        "NaN".to_owned()
    } else if a == 0.0 || (1e-4..1e6).contains(&a) || a.is_infinite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

impl CsvFile {
    pub fn new(schema: &'static str, columns: &'static [&'static str]) -> Self {
        Self {
            schema,
            columns,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// A derived quantity recorded in the header, e.g. a fit coefficient.
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_owned(), value.to_string()));
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns.len(), "{} row width", self.schema);
        self.rows.push(fields.join(","));
    }

    pub fn render(&self, config: &RunConfig, timestamp: u64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# wellgrav {} v{SCHEMA_VERSION}", self.schema);
        let _ = writeln!(s, "# generated_unix={timestamp}");
        for (k, v) in config.recorded_entries() {
            let _ = writeln!(s, "# config {k} = {v}");
        }
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# result {k} = {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    /// Writes `<out>/<schema>.csv` and returns its path.
    pub fn write(&self, config: &RunConfig) -> std::io::Result<PathBuf> {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let path = Path::new(&config.out).join(format!("{}.csv", self.schema));
        std::fs::create_dir_all(&config.out)?;
        std::fs::write(&path, self.render(config, now))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rows() {
        let mut f = CsvFile::new("converge", &["nmax", "E_ground_E0", "rel_diff"]);
        f.note("monotone", true);
        f.row(&["20".into(), num(-1.5), String::new()]);
        let text = f.render(&RunConfig::default(), 7);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# wellgrav converge v1");
        assert_eq!(lines[1], "# generated_unix=7");
        assert!(lines.contains(&"# config physics.mass = 1e-17"));
        assert!(!text.contains("run.out"));
        assert_eq!(lines[lines.len() - 2], "nmax,E_ground_E0,rel_diff");
        assert_eq!(lines[lines.len() - 1], "20,-1.5,");
    }

    #[test]
    fn floats_round_trip() {
        for x in [1e-17, 0.1 + 0.2, -208.57650812345678, 6.02214076e23, 0.0, 5e-5] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }
}

//! Artifact emission. All floating-point values are printed with 17
//! significant digits so re-parsing reproduces the exact doubles and
//! re-running a config reproduces every file byte for byte.

use crate::error::CliError;
use logitest_core::linalg::Matrix;
use logitest_core::testing::TestOutcome;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// 17 significant digits; exact round-trip for `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::Io {
            path: root.display().to_string(),
            source: e,
        })?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| CliError::Io {
            path: p.display().to_string(),
            source: e,
        })
    }

    pub fn write_str(&self, name: &str, contents: &str) -> Result<(), CliError> {
        self.write(name, contents.as_bytes())
    }
}

/// CSV with a header row and fixed column order.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Sample matrix as CSV with x1..xd columns.
pub fn samples_csv(m: &Matrix) -> String {
    let header: Vec<String> = (1..=m.cols()).map(|i| format!("x{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for r in m.iter_rows() {
        let mut first = true;
        for v in r {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(*v));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// A calibrated test outcome, including the full permutation null for
/// histogram plots.
pub fn outcome_json(outcome: &TestOutcome) -> serde_json::Value {
    serde_json::json!({
        "method": outcome.method.label(),
        "statistic": outcome.statistic,
        "threshold": outcome.threshold,
        "p_value": outcome.p_value,
        "reject": outcome.reject,
        "null_samples": outcome.null_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for &v in &[0.1, -3.25e-17, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let t = csv_table(&["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "a,b\n1,2\n");
    }
}

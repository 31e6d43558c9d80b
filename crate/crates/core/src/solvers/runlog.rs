//! Per-run iteration log and its CSV form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_COLUMNS: &str = "k,oracle_calls,gap,f_value,gamma_k,tau_k";

/// One logged iteration. `gap` is the problem's accuracy measure at the
/// running average (NaN when the problem has none), `f_value` the clean
/// value there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub k: u64,
    pub oracle_calls: u64,
    pub gap: f64,
    pub f_value: f64,
    pub gamma_k: f64,
    pub tau_k: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    header: Vec<(String, String)>,
    rows: Vec<LogRow>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a header entry. Newlines are flattened to spaces.
    pub fn set_header(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into().replace(['\n', ':'], " ");
        let value = value.into().replace('\n', " ");
        match self.header.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.header.push((key, value)),
        }
    }

    pub fn header(&self) -> &[(String, String)] {
        &self.header
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    /// Floats use the shortest round-trip exponent form, so output is
    /// byte-identical for identical runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(CSV_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e}",
                r.k, r.oracle_calls, r.gap, r.f_value, r.gamma_k, r.tau_k
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut log = RunLog::new();
        let mut seen_columns = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim_start();
                let (k, v) = rest
                    .split_once(':')
                    .ok_or_else(|| parse_err("header line without `key: value`".into()))?;
                log.header.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if !seen_columns {
                if line.trim() != CSV_COLUMNS {
                    return Err(parse_err(format!("expected columns `{CSV_COLUMNS}`")));
                }
                seen_columns = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(parse_err(format!("expected 6 fields, got {}", f.len())));
            }
            let int = |s: &str| s.trim().parse::<u64>().map_err(|e| parse_err(format!("{s}: {e}")));
            let float = |s: &str| s.trim().parse::<f64>().map_err(|e| parse_err(format!("{s}: {e}")));
            log.rows.push(LogRow {
                k: int(f[0])?,
                oracle_calls: int(f[1])?,
                gap: float(f[2])?,
                f_value: float(f[3])?,
                gamma_k: float(f[4])?,
                tau_k: float(f[5])?,
            });
        }
        if !seen_columns {
            return Err(Error::Parse { line: 0, msg: "missing column line".into() });
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

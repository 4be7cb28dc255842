//! Reads trace directories back and cross-checks them against the summary.

use std::collections::BTreeMap;
use std::path::Path;

use rahgd_core::OracleCounters;

use crate::run::{SUMMARY_COLUMNS, SUMMARY_FILE, TRACE_COLUMNS};
use crate::HarnessError;

/// Final row of one trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTotals {
    pub rows: usize,
    pub epochs: usize,
    pub counters: OracleCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceCheck {
    pub file: String,
    pub totals: TraceTotals,
    /// Counters listed in the summary, if the run appears there.
    pub summary: Option<OracleCounters>,
}

impl TraceCheck {
    pub fn matches(&self) -> bool {
        self.summary == Some(self.totals.counters)
    }
}

fn bad(path: &Path, why: impl std::fmt::Display) -> HarnessError {
    HarnessError::Spec(format!("{}: {why}", path.display()))
}

pub fn read_trace(path: &Path) -> Result<TraceTotals, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_COLUMNS.join(",").as_str()) {
        return Err(bad(path, "unexpected trace header"));
    }
    let mut totals = TraceTotals {
        rows: 0,
        epochs: 0,
        counters: OracleCounters::default(),
    };
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != TRACE_COLUMNS.len() {
            return Err(bad(path, format!("line {}: expected {} fields", i + 2, TRACE_COLUMNS.len())));
        }
        let int = |j: usize| f[j].parse::<u64>().map_err(|_| bad(path, format!("line {}: bad integer `{}`", i + 2, f[j])));
        totals.rows += 1;
        totals.epochs = int(0)? as usize + 1;
        totals.counters = OracleCounters {
            gc_f: int(4)?,
            gc_g: int(5)?,
            jv_g: int(6)?,
            hv_g: int(7)?,
        };
    }
    Ok(totals)
}

/// Totals of every trace in `dir` next to the summary's counters for the
/// same `(solver, seed)`.
pub fn check_trace_dir(dir: &Path) -> Result<Vec<TraceCheck>, HarnessError> {
    let summary_path = dir.join(SUMMARY_FILE);
    let mut summary = BTreeMap::new();
    if summary_path.exists() {
        let text = std::fs::read_to_string(&summary_path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", summary_path.display())))?;
        let mut lines = text.lines();
        if lines.next() != Some(SUMMARY_COLUMNS.join(",").as_str()) {
            return Err(bad(&summary_path, "unexpected summary header"));
        }
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != SUMMARY_COLUMNS.len() {
                return Err(bad(&summary_path, "wrong field count"));
            }
            let counters = (|| {
                Some(OracleCounters {
                    gc_f: f[6].parse().ok()?,
                    gc_g: f[7].parse().ok()?,
                    jv_g: f[8].parse().ok()?,
                    hv_g: f[9].parse().ok()?,
                })
            })();
            if let Some(c) = counters {
                summary.insert(format!("{}_seed{}.csv", f[0], f[1]), c);
            }
        }
    }

    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") && n != SUMMARY_FILE)
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let totals = read_trace(&dir.join(&name))?;
            let summary = summary.get(&name).copied();
            Ok(TraceCheck {
                file: name,
                totals,
                summary,
            })
        })
        .collect()
}

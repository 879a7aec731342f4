//! Side-by-side comparison of predicted and empirical trajectories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::MetricSpec;
use crate::error::{Error, Result};
use crate::report::SeriesFile;

/// Floor for the denominator of relative gaps.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// A row passes when `|median − predicted| ≤ max(relative · |predicted|, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Tolerance {
    pub fn new(relative: f64, absolute: f64) -> Self {
        Tolerance { relative, absolute }
    }

    pub fn allows(&self, predicted: f64, gap: f64) -> bool {
        gap <= (self.relative * predicted.abs()).max(self.absolute)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: usize,
    pub metric: MetricSpec,
    pub predicted: Option<f64>,
    pub median: Option<f64>,
    pub p25: Option<f64>,
    pub p75: Option<f64>,
    pub abs_gap: Option<f64>,
    pub rel_gap: Option<f64>,
    /// `None` when one side is missing.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub tolerance: Tolerance,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// True when every row with both sides present passes.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    pub fn metrics(&self) -> Vec<MetricSpec> {
        let set: BTreeSet<MetricSpec> = self.rows.iter().map(|r| r.metric).collect();
        set.into_iter().collect()
    }
}

/// Compare an empirical series (aggregate, trials or another prediction) with a prediction.
pub fn compare(empirical: &SeriesFile, predicted: &SeriesFile, tolerance: Tolerance) -> Result<ComparisonReport> {
    let left = empirical.meta.config_hash().unwrap_or("");
    let right = predicted.meta.config_hash().unwrap_or("");
    if left != right {
        return Err(Error::HashMismatch {
            left: left.to_string(),
            right: right.to_string(),
        });
    }
    let keys: BTreeSet<_> = empirical.points.keys().chain(predicted.points.keys()).copied().collect();
    let rows = keys
        .into_iter()
        .map(|key @ (t, metric)| {
            let emp = empirical.points.get(&key);
            let pred = predicted.points.get(&key).map(|s| s.median);
            let (abs_gap, rel_gap, pass) = match (emp, pred) {
                (Some(e), Some(p)) => {
                    let gap = (e.median - p).abs();
                    (
                        Some(gap),
                        Some(gap / p.abs().max(RELATIVE_FLOOR)),
                        Some(tolerance.allows(p, gap)),
                    )
                }
                _ => (None, None, None),
            };
            ComparisonRow {
                t,
                metric,
                predicted: pred,
                median: emp.map(|s| s.median),
                p25: emp.map(|s| s.p25),
                p75: emp.map(|s| s.p75),
                abs_gap,
                rel_gap,
                pass,
            }
        })
        .collect();
    Ok(ComparisonReport {
        config_hash: left.to_string(),
        tolerance,
        rows,
    })
}

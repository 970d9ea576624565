use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::run::{FaultRecord, RunLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummaryError {
    #[error("run log is empty")]
    EmptyLog,
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1)·q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStat {
    pub segment: String,
    pub samples: usize,
    pub median_abs_e_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionOvershoot {
    /// Abscissa of the curvature jump (m).
    pub s_junction: f64,
    /// Largest `|e_I|` within the window (m); zero if no sample falls in it.
    pub max_abs_e_i: f64,
}

/// Statistics of `|e_I|` (ground truth) over one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub method: String,
    pub samples: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub max: f64,
    pub per_segment: Vec<SegmentStat>,
    pub overshoot: Vec<JunctionOvershoot>,
    /// Half-width of the window around each junction (m).
    pub overshoot_half_window: f64,
    /// Largest junction overshoot (m).
    pub max_overshoot: f64,
    pub fault_count: usize,
    pub fault: Option<FaultRecord>,
}

/// Summarize a run, skipping its initial convergence window.
///
/// When the run is shorter than the window every record is used.
pub fn summarize(log: &RunLog) -> Result<RunSummary, SummaryError> {
    let first = log.records.first().ok_or(SummaryError::EmptyLog)?;
    let s_from = first.s + log.exclude_initial_m;
    let mut kept: Vec<_> = log.records.iter().filter(|r| r.s >= s_from).collect();
    if kept.is_empty() {
        kept = log.records.iter().collect();
    }

    let mut abs: Vec<f64> = kept.iter().map(|r| r.e_i_exact.abs()).collect();
    abs.sort_by(f64::total_cmp);

    let mut per_segment: Vec<(String, Vec<f64>)> = Vec::new();
    for r in &kept {
        match per_segment.iter_mut().find(|(label, _)| *label == r.segment) {
            Some((_, v)) => v.push(r.e_i_exact.abs()),
            None => per_segment.push((r.segment.clone(), vec![r.e_i_exact.abs()])),
        }
    }
    let per_segment = per_segment
        .into_iter()
        .map(|(segment, mut v)| {
            v.sort_by(f64::total_cmp);
            SegmentStat {
                segment,
                samples: v.len(),
                median_abs_e_i: quantile_sorted(&v, 0.5),
            }
        })
        .collect();

    let overshoot: Vec<JunctionOvershoot> = log
        .junctions
        .iter()
        .map(|&sj| JunctionOvershoot {
            s_junction: sj,
            max_abs_e_i: kept
                .iter()
                .filter(|r| (r.s - sj).abs() <= log.overshoot_half_window)
                .map(|r| r.e_i_exact.abs())
                .fold(0.0, f64::max),
        })
        .collect();
    let max_overshoot = overshoot.iter().map(|o| o.max_abs_e_i).fold(0.0, f64::max);

    Ok(RunSummary {
        scenario: log.scenario.clone(),
        method: log.method.clone(),
        samples: abs.len(),
        median: quantile_sorted(&abs, 0.5),
        q25: quantile_sorted(&abs, 0.25),
        q75: quantile_sorted(&abs, 0.75),
        max: *abs.last().expect("non-empty"),
        per_segment,
        overshoot,
        overshoot_half_window: log.overshoot_half_window,
        max_overshoot,
        fault_count: log.fault_count(),
        fault: log.fault.clone(),
    })
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{simulate, RunLog};
use super::scenario::{Scenario, ScenarioError};
use super::summary::{summarize, RunSummary};
use crate::control::{ControlLaw, Method, OptimalParams};
use crate::path::PathSpec;
use crate::presets::{self, Placement};

/// Runs `f` over `items` on at most `jobs` threads, preserving order.
fn run_parallel<T, R, F>(items: Vec<T>, jobs: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return items.into_iter().map(f).collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
        .install(|| items.into_par_iter().map(f).collect())
}

/// Run and summarize one scenario.
pub fn run_and_summarize(scn: &Scenario) -> Result<(RunLog, RunSummary), ScenarioError> {
    let path = scn.validate()?;
    let log = simulate(scn, &path);
    let summary = summarize(&log).map_err(|e| ScenarioError::new("run", e.to_string()))?;
    Ok((log, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s_h: f64,
    pub lambda: f64,
    pub k_theta: f64,
    pub s_t: f64,
    pub n_h: usize,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Horizon with the smallest median `|e_I|`.
    pub argmin_s_h: f64,
    pub min_median: f64,
}

/// Base scenario of the horizon study: second reference path, rear
/// implement, starting with the implement on the path.
pub fn sweep_base() -> Scenario {
    let mut scn = Scenario::new(
        "exp2_sweep",
        PathSpec::exp2(),
        Placement::Rear.implement(),
        ControlLaw::Optimal(presets::table2_params()[3]),
    );
    scn.initial.lateral = super::scenario::InitialLateral::ImplementError(0.0);
    scn
}

/// One run per parameter row on `base`, ordered by horizon.
///
/// Rows that fault still produce a point; their summary carries the fault.
pub fn sweep_horizon(
    base: &Scenario,
    rows: &[OptimalParams],
    jobs: usize,
) -> Result<(SweepResult, Vec<RunLog>), ScenarioError> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.s_h.total_cmp(&b.s_h));
    let scenarios: Vec<Scenario> = rows
        .iter()
        .map(|p| Scenario {
            name: format!("{}_{}", base.name, presets::table2_name(p.s_h)),
            law: ControlLaw::Optimal(*p),
            ..base.clone()
        })
        .collect();
    for s in &scenarios {
        s.validate()?;
    }
    let runs = run_parallel(scenarios, jobs, |s| run_and_summarize(&s));
    let mut points = Vec::with_capacity(rows.len());
    let mut logs = Vec::with_capacity(rows.len());
    for (p, r) in rows.iter().zip(runs) {
        let (log, summary) = r?;
        logs.push(log);
        points.push(SweepPoint {
            s_h: p.s_h,
            lambda: p.lambda,
            k_theta: p.k_theta,
            s_t: p.s_t,
            n_h: p.n_h,
            summary,
        });
    }
    let best = points
        .iter()
        .min_by(|a, b| a.summary.median.total_cmp(&b.summary.median))
        .ok_or_else(|| ScenarioError::new("sweep", "no rows"))?;
    let result = SweepResult {
        argmin_s_h: best.s_h,
        min_median: best.summary.median,
        points,
    };
    Ok((result, logs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub preset: String,
    pub placement: Placement,
    pub method: Method,
    /// Baseline law reconstructed from its published description.
    pub reconstruction: bool,
    pub summary: RunSummary,
    /// Max junction overshoot divided by the backstepping one at the same
    /// placement; `None` when backstepping is not part of the comparison.
    pub overshoot_ratio_vs_backstepping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, placement: Placement, method: Method) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.placement == placement && r.method == method)
    }
}

/// Template shared by the comparison runs: first reference path, implement
/// starting on the path.
pub fn compare_base() -> Scenario {
    let mut scn = Scenario::new(
        "exp1",
        PathSpec::exp1(),
        Placement::Rear.implement(),
        presets::table1_law(Placement::Rear, Method::Optimal),
    );
    scn.initial.lateral = super::scenario::InitialLateral::ImplementError(0.0);
    scn
}

/// Run each `(placement, method)` preset on `template`.
///
/// All methods of one placement share the overshoot window of that
/// placement's predictive preset so overshoots compare like for like.
pub fn compare_methods(
    template: &Scenario,
    placements: &[Placement],
    methods: &[Method],
    jobs: usize,
) -> Result<(ComparisonTable, Vec<RunLog>), ScenarioError> {
    let mut configs = Vec::new();
    for &placement in placements {
        let window = presets::table1_law(placement, Method::Optimal).horizon()
            + template.summary.overshoot_margin_m;
        for &method in methods {
            let preset = presets::table1(placement, method);
            let mut scn = Scenario {
                name: format!("{}_{}", template.name, preset.name),
                implement: preset.implement,
                law: preset.law,
                ..template.clone()
            };
            scn.summary.overshoot_half_window_m = Some(template.summary.overshoot_half_window_m.unwrap_or(window));
            scn.validate()?;
            configs.push((preset.name, placement, method, scn));
        }
    }
    let runs = run_parallel(
        configs.iter().map(|c| c.3.clone()).collect(),
        jobs,
        |s| run_and_summarize(&s),
    );
    let mut rows = Vec::with_capacity(configs.len());
    let mut logs = Vec::with_capacity(configs.len());
    for ((preset, placement, method, _), r) in configs.into_iter().zip(runs) {
        let (log, summary) = r?;
        logs.push(log);
        rows.push(ComparisonRow {
            preset,
            placement,
            method,
            reconstruction: method.is_reconstruction(),
            summary,
            overshoot_ratio_vs_backstepping: None,
        });
    }
    let reference: Vec<(Placement, f64)> = rows
        .iter()
        .filter(|r| r.method == Method::Backstepping)
        .map(|r| (r.placement, r.summary.max_overshoot))
        .collect();
    for row in &mut rows {
        row.overshoot_ratio_vs_backstepping = reference
            .iter()
            .find(|(p, _)| *p == row.placement)
            .map(|(_, base)| row.summary.max_overshoot / base);
    }
    Ok((ComparisonTable { rows }, logs))
}

//! Closed-loop scenarios, run statistics and the two reference experiments.

pub mod experiments;
pub mod run;
pub mod scenario;
pub mod summary;

pub use experiments::{
    compare_base, compare_methods, run_and_summarize, sweep_base, sweep_horizon, ComparisonRow,
    ComparisonTable, SweepPoint, SweepResult,
};
pub use run::{run_scenario, segment_labels, FaultRecord, Faults, RunLog, RunRecord};
pub use scenario::{
    ErrorModel, InitialLateral, InitialState, NoiseConfig, Scenario, ScenarioError, SummaryConfig,
    DEFAULT_CONTROL_PERIOD, DEFAULT_DT,
};
pub use summary::{quantile_sorted, summarize, RunSummary, SummaryError};

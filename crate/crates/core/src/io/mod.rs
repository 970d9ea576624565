//! File formats: scenario files, CSV run logs, JSON reports and SVG plots.

pub mod csv_log;
pub mod scenario_file;
pub mod svg;

pub use csv_log::CsvLogError;
pub use scenario_file::{ScenarioFile, ScenarioFileError};
pub use svg::{Panel, PlotError, PlotKind, PlotSpec};

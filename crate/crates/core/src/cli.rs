//! The `imptrack` command line.
//!
//! Exit codes: 0 success, 1 unexpected error, 2 invalid input, 3 simulation
//! fault (outputs are still written).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::control::{ControlLaw, Method};
use crate::harness::{
    compare_base, compare_methods, run_scenario, summarize, sweep_base, sweep_horizon, ComparisonRow,
    RunLog, RunSummary, Scenario, ScenarioError, SweepResult,
};
use crate::io::scenario_file::{resolved_toml, ScenarioFile, ScenarioFileError};
use crate::io::csv_log;
use crate::io::svg::{render_figure_with_labels, Panel, PlotKind, PlotSpec};
use crate::presets::{self, Placement};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNEXPECTED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

pub const OUT_DIR_ENV: &str = "IMPTRACK_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "imptrack", version, about = "Implement-point path following simulator")]
pub struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "imptrack-out")]
    pub out_dir: PathBuf,
    /// Maximum number of concurrent runs (default: available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override measurement noise.
    #[arg(long, global = true, value_enum)]
    pub noise: Option<Switch>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlacementFilter {
    Rear,
    Front,
    Both,
}

impl PlacementFilter {
    fn placements(self) -> Vec<Placement> {
        match self {
            PlacementFilter::Rear => vec![Placement::Rear],
            PlacementFilter::Front => vec![Placement::Front],
            PlacementFilter::Both => Placement::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario file; writes run.csv and summary.json.
    Run { scenario: PathBuf },
    /// Run the six comparison configurations on the first reference path.
    Compare {
        #[arg(long, value_enum, default_value = "both")]
        placement: PlacementFilter,
        /// Scenario file supplying path, vehicle and run settings; its
        /// implement and controller are replaced by each configuration.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Sweep the prediction horizon over the horizon-study presets.
    Sweep {
        /// Subset of horizons to run, e.g. `1.0,2.0`.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<f64>,
        /// Scenario file supplying path, vehicle, implement and run settings.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Check a scenario file and print its resolved configuration.
    Validate { scenario: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Fault(String),
    #[error("{0}")]
    Unexpected(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Fault(_) => EXIT_FAULT,
            CliError::Unexpected(_) => EXIT_UNEXPECTED,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn unexpected<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Unexpected(format!("{context}: {e}"))
}

/// Run-level overrides shared by every command.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub noise: Option<Switch>,
}

impl Overrides {
    fn apply(&self, scn: &mut Scenario) {
        if let Some(seed) = self.seed {
            scn.seed = seed;
        }
        if let Some(n) = self.noise {
            scn.noise.enabled = n == Switch::On;
        }
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a str,
    reconstruction: bool,
    scenario: &'a Scenario,
    summary: &'a RunSummary,
}

#[derive(Serialize)]
struct ComparisonReportRow<'a> {
    #[serde(flatten)]
    row: &'a ComparisonRow,
    log_csv: String,
}

#[derive(Serialize)]
struct ComparisonReport<'a> {
    command: &'a str,
    template: &'a Scenario,
    junctions: Vec<f64>,
    rows: Vec<ComparisonReportRow<'a>>,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    command: &'a str,
    base: &'a Scenario,
    #[serde(flatten)]
    result: &'a SweepResult,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Unexpected(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(unexpected("json"))?;
    write_file(path, text + "\n")
}

fn write_log(path: &Path, log: &RunLog) -> Result<(), CliError> {
    write_file(path, csv_log::to_string(&log.records))
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Unexpected(format!("cannot create {}: {e}", dir.display())))
}

fn load_template(path: Option<&Path>, default: Scenario, ovr: &Overrides) -> Result<Scenario, CliError> {
    let mut scn = match path {
        Some(p) => ScenarioFile::load_scenario(p)?,
        None => default,
    };
    ovr.apply(&mut scn);
    scn.validate()?;
    Ok(scn)
}

/// `run`: simulate one scenario file.
pub fn cmd_run(scenario: &Path, out_dir: &Path, ovr: &Overrides, command_line: &str) -> Result<RunSummary, CliError> {
    let mut scn = ScenarioFile::load_scenario(scenario)?;
    ovr.apply(&mut scn);
    let log = run_scenario(&scn)?;
    let summary = summarize(&log).map_err(unexpected("summary"))?;
    prepare_out_dir(out_dir)?;
    write_log(&out_dir.join("run.csv"), &log)?;
    write_json(
        &out_dir.join("summary.json"),
        &RunReport {
            command: command_line,
            reconstruction: scn.law.method().is_reconstruction(),
            scenario: &scn,
            summary: &summary,
        },
    )?;
    match &log.fault {
        Some(f) => Err(CliError::Fault(format!(
            "simulation fault at t = {} s, s = {} m ({}): {}",
            f.t, f.s, f.kind, f.message
        ))),
        None => Ok(summary),
    }
}

/// `compare`: the comparison configurations on one template.
pub fn cmd_compare(
    placement: PlacementFilter,
    scenario: Option<&Path>,
    out_dir: &Path,
    jobs: usize,
    ovr: &Overrides,
    command_line: &str,
) -> Result<Vec<ComparisonRow>, CliError> {
    let template = load_template(scenario, compare_base(), ovr)?;
    let placements = placement.placements();
    let (table, logs) = compare_methods(&template, &placements, &Method::ALL, jobs)?;
    prepare_out_dir(out_dir)?;

    let mut files = Vec::with_capacity(logs.len());
    for (row, log) in table.rows.iter().zip(&logs) {
        let name = format!("{}.csv", row.preset);
        write_log(&out_dir.join(&name), log)?;
        files.push(name);
    }
    let junctions = logs.first().map(|l| l.junctions.clone()).unwrap_or_default();
    write_json(
        &out_dir.join("comparison.json"),
        &ComparisonReport {
            command: command_line,
            template: &template,
            junctions: junctions.clone(),
            rows: table
                .rows
                .iter()
                .zip(&files)
                .map(|(row, f)| ComparisonReportRow { row, log_csv: f.clone() })
                .collect(),
        },
    )?;

    let mut panels = Vec::new();
    for &p in &placements {
        let (inputs, labels): (Vec<_>, Vec<_>) = table
            .rows
            .iter()
            .zip(&files)
            .filter(|(r, _)| r.placement == p)
            .map(|(r, f)| (out_dir.join(f), r.method.to_string()))
            .unzip();
        let spec = PlotSpec {
            kind: PlotKind::ErrorVsS,
            inputs,
            labels,
            output: out_dir.join("figure4.svg"),
            title: format!("{p} implement"),
            x_label: "s (m)".into(),
            y_label: "|e_I| (m)".into(),
        };
        match spec.load().map_err(unexpected("figure4"))? {
            Panel::ErrorVsS { title, series, .. } => panels.push(Panel::ErrorVsS {
                title,
                series,
                markers: junctions.clone(),
            }),
            _ => unreachable!("error_vs_s spec yields an error_vs_s panel"),
        }
    }
    panels.push(Panel::Boxplot {
        title: "|e_I| after the initial window".into(),
        boxes: table
            .rows
            .iter()
            .map(|r| (format!("{} {}", r.placement, r.method), r.summary.clone()))
            .collect(),
    });
    let labelled: Vec<_> = panels
        .iter()
        .map(|p| match p {
            Panel::Boxplot { .. } => (p, "", "|e_I| (m)"),
            _ => (p, "s (m)", "|e_I| (m)"),
        })
        .collect();
    write_file(&out_dir.join("figure4.svg"), render_figure_with_labels(&labelled, command_line))?;

    let faulted: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.summary.fault.is_some())
        .map(|r| r.preset.clone())
        .collect();
    if faulted.is_empty() {
        Ok(table.rows)
    } else {
        Err(CliError::Fault(format!("simulation fault in {}", faulted.join(", "))))
    }
}

/// Horizon-study rows, optionally restricted to the given horizons.
pub fn sweep_rows(horizons: &[f64]) -> Result<Vec<crate::control::OptimalParams>, CliError> {
    let all = presets::table2_params();
    if horizons.is_empty() {
        return Ok(all);
    }
    horizons
        .iter()
        .map(|&h| {
            all.iter().copied().find(|p| (p.s_h - h).abs() < 1e-9).ok_or_else(|| {
                let known: Vec<String> = all.iter().map(|p| p.s_h.to_string()).collect();
                CliError::Validation(format!(
                    "--horizons: no preset for s_h = {h} (available: {})",
                    known.join(", ")
                ))
            })
        })
        .collect()
}

/// `sweep`: one run per horizon-study row.
pub fn cmd_sweep(
    horizons: &[f64],
    scenario: Option<&Path>,
    out_dir: &Path,
    jobs: usize,
    ovr: &Overrides,
    command_line: &str,
) -> Result<SweepResult, CliError> {
    let rows = sweep_rows(horizons)?;
    let base = load_template(scenario, sweep_base(), ovr)?;
    let (result, _) = sweep_horizon(&base, &rows, jobs)?;
    prepare_out_dir(out_dir)?;
    let json_path = out_dir.join("sweep.json");
    write_json(
        &json_path,
        &SweepReport {
            command: command_line,
            base: &base,
            result: &result,
        },
    )?;
    PlotSpec {
        kind: PlotKind::SweepCurve,
        inputs: vec![json_path],
        labels: vec![],
        output: out_dir.join("figure6.svg"),
        title: "Median |e_I| against prediction horizon".into(),
        x_label: "s_h (m)".into(),
        y_label: "|e_I| (m)".into(),
    }
    .render(command_line)
    .map_err(unexpected("figure6"))?;

    let faulted: Vec<String> = result
        .points
        .iter()
        .filter(|p| p.summary.fault.is_some())
        .map(|p| p.s_h.to_string())
        .collect();
    if faulted.is_empty() {
        Ok(result)
    } else {
        Err(CliError::Fault(format!("simulation fault at s_h = {}", faulted.join(", "))))
    }
}

/// `validate`: resolved configuration as TOML plus a path synopsis.
pub fn cmd_validate(scenario: &Path, ovr: &Overrides) -> Result<String, CliError> {
    let mut scn = ScenarioFile::load_scenario(scenario)?;
    ovr.apply(&mut scn);
    let path = scn.validate()?;
    let mut out = resolved_toml(&scn);
    out.push_str(&format!(
        "\n# path: {} segments, {:.6} m, curvature jumps at {:?} m\n",
        path.segments().len(),
        path.total_length(),
        path.curvature_discontinuities()
    ));
    if let ControlLaw::Optimal(p) = scn.law {
        out.push_str(&format!("# horizon samples n_h = {}\n", p.n_h));
    }
    Ok(out)
}

fn quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./=,:+@".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

pub fn command_line<I: IntoIterator<Item = S>, S: AsRef<str>>(args: I) -> String {
    args.into_iter().map(|a| quote(a.as_ref())).collect::<Vec<_>>().join(" ")
}

/// Parse `args` (including the program name), execute, return the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let line = command_line(args.iter().map(|a| a.to_string_lossy().into_owned()));
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);
    let ovr = Overrides {
        seed: cli.seed,
        noise: cli.noise,
    };
    let result = match &cli.command {
        Command::Run { scenario } => cmd_run(scenario, &cli.out_dir, &ovr, &line).map(|s| {
            println!(
                "{}: median |e_I| {:.4} m, q75 {:.4} m, max {:.4} m, max junction overshoot {:.4} m",
                s.scenario, s.median, s.q75, s.max, s.max_overshoot
            );
        }),
        Command::Compare { placement, scenario } => {
            cmd_compare(*placement, scenario.as_deref(), &cli.out_dir, jobs, &ovr, &line).map(|rows| {
                for r in rows {
                    println!(
                        "{:28} median {:.4} m  max overshoot {:.4} m  ratio vs backstepping {}",
                        r.preset,
                        r.summary.median,
                        r.summary.max_overshoot,
                        r.overshoot_ratio_vs_backstepping
                            .map(|v| format!("{v:.3}"))
                            .unwrap_or_else(|| "n/a".into())
                    );
                }
            })
        }
        Command::Sweep { horizons, scenario } => {
            cmd_sweep(horizons, scenario.as_deref(), &cli.out_dir, jobs, &ovr, &line).map(|r| {
                for p in &r.points {
                    println!(
                        "s_h {:4} m  median {:.4} m  q25 {:.4} m  q75 {:.4} m",
                        p.s_h, p.summary.median, p.summary.q25, p.summary.q75
                    );
                }
                println!("argmin s_h = {} m (median {:.4} m)", r.argmin_s_h, r.min_median);
            })
        }
        Command::Validate { scenario } => cmd_validate(scenario, &ovr).map(|text| print!("{text}")),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("imptrack: {e}");
            e.exit_code()
        }
    }
}

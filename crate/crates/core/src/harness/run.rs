use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scenario::{ErrorModel, Scenario, ScenarioError};
use crate::control::{ControlError, Controller};
use crate::path::{FrenetState, ReferencePath, SegmentKind};
use crate::vehicle::{
    self, implement_error_exact, implement_error_measured, implement_error_osculating,
    yaw_rate_from_steer, KinematicsError, Measurements, VehiclePose,
};

/// Per-record event flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct Faults(u16);

impl Faults {
    pub const NONE: Faults = Faults(0);
    /// Controller hit the `1 - c·y` singularity and held its last command.
    pub const CTRL_CURVATURE: Faults = Faults(1 << 0);
    /// Controller hit the `1 - γ·I_y` singularity and held its last command.
    pub const CTRL_OFFSET: Faults = Faults(1 << 1);
    /// Heading deviation outside the model domain; last command held.
    pub const CTRL_DOMAIN: Faults = Faults(1 << 2);
    pub const CTRL_OTHER: Faults = Faults(1 << 3);
    /// Plant state at the osculating-circle center; run aborted.
    pub const PLANT_SINGULARITY: Faults = Faults(1 << 4);
    pub const PLANT_NONFINITE: Faults = Faults(1 << 5);
    /// Travel budget exhausted before reaching the run length.
    pub const TIMEOUT: Faults = Faults(1 << 6);
    /// Rear-axle projection had several closest points.
    pub const ROBOT_AMBIGUOUS: Faults = Faults(1 << 7);
    /// Implement projection had several closest points.
    pub const IMPLEMENT_AMBIGUOUS: Faults = Faults(1 << 8);
    /// Implement projected beyond a path end.
    pub const IMPLEMENT_CLAMPED: Faults = Faults(1 << 9);

    const NAMES: [(Faults, &'static str); 10] = [
        (Faults::CTRL_CURVATURE, "ctrl_curvature"),
        (Faults::CTRL_OFFSET, "ctrl_offset"),
        (Faults::CTRL_DOMAIN, "ctrl_domain"),
        (Faults::CTRL_OTHER, "ctrl_other"),
        (Faults::PLANT_SINGULARITY, "plant_singularity"),
        (Faults::PLANT_NONFINITE, "plant_nonfinite"),
        (Faults::TIMEOUT, "timeout"),
        (Faults::ROBOT_AMBIGUOUS, "robot_ambiguous"),
        (Faults::IMPLEMENT_AMBIGUOUS, "implement_ambiguous"),
        (Faults::IMPLEMENT_CLAMPED, "implement_clamped"),
    ];

    /// Flags that count as faults; the rest are informational.
    const FAULT_MASK: u16 = 0b111_1111;

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn contains(self, other: Faults) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: Faults) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_fault(self) -> bool {
        self.0 & Self::FAULT_MASK != 0
    }

    fn from_control(e: &ControlError) -> Faults {
        match e {
            ControlError::CurvatureSingularity(_) => Faults::CTRL_CURVATURE,
            ControlError::OffsetSingularity(_) => Faults::CTRL_OFFSET,
            ControlError::Domain(_) => Faults::CTRL_DOMAIN,
            ControlError::Parameter(_) => Faults::CTRL_OTHER,
        }
    }
}

impl std::ops::BitOr for Faults {
    type Output = Faults;
    fn bitor(self, rhs: Faults) -> Faults {
        Faults(self.0 | rhs.0)
    }
}

impl fmt::Display for Faults {
    /// `|`-separated flag names; empty when no flag is set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in Self::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for Faults {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Faults::NONE;
        for token in s.split('|').filter(|t| !t.is_empty()) {
            let (flag, _) = Self::NAMES
                .iter()
                .find(|(_, n)| *n == token)
                .ok_or_else(|| format!("unknown fault flag '{token}'"))?;
            out.insert(*flag);
        }
        Ok(out)
    }
}

/// One plant step of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: f64,
    pub s: f64,
    pub y: f64,
    pub theta_tilde: f64,
    pub e_i_exact: f64,
    /// Controller-side estimate evaluated on the true Frenet state.
    pub e_i_measured: f64,
    pub delta_cmd: f64,
    pub delta_actual: f64,
    pub theta_desired: f64,
    pub segment: String,
    pub faults: Faults,
}

/// First fault that ended or degraded a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub t: f64,
    pub s: f64,
    pub kind: String,
    pub message: String,
    /// The run stopped at this fault.
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub scenario: String,
    pub method: String,
    /// Abscissae where the path curvature jumps.
    pub junctions: Vec<f64>,
    /// Half-width of the overshoot window around each junction (m).
    pub overshoot_half_window: f64,
    /// Distance excluded from statistics at the start of the run (m).
    pub exclude_initial_m: f64,
    pub records: Vec<RunRecord>,
    pub fault: Option<FaultRecord>,
}

impl RunLog {
    pub fn aborted(&self) -> bool {
        self.fault.as_ref().is_some_and(|f| f.aborted)
    }

    pub fn fault_count(&self) -> usize {
        self.records.iter().filter(|r| r.faults.is_fault()).count()
    }
}

/// Labels such as `L1`, `C2`: one counter per segment kind, in path order.
pub fn segment_labels(path: &ReferencePath) -> Vec<String> {
    let (mut lines, mut arcs) = (0, 0);
    path.segments()
        .iter()
        .map(|seg| match seg.kind {
            SegmentKind::Line => {
                lines += 1;
                format!("L{lines}")
            }
            SegmentKind::Arc => {
                arcs += 1;
                format!("C{arcs}")
            }
        })
        .collect()
}

struct NoiseSource {
    rng: ChaCha8Rng,
    y: Normal<f64>,
    theta: Normal<f64>,
    omega: Normal<f64>,
}

impl NoiseSource {
    fn new(scn: &Scenario) -> Option<Self> {
        let n = &scn.noise;
        if !n.enabled {
            return None;
        }
        Some(Self {
            rng: ChaCha8Rng::seed_from_u64(scn.seed),
            y: Normal::new(0.0, n.y_std).expect("validated std-dev"),
            theta: Normal::new(0.0, n.theta_std).expect("validated std-dev"),
            omega: Normal::new(0.0, n.omega_std).expect("validated std-dev"),
        })
    }
}

fn estimate_e_i(model: ErrorModel, frenet: &FrenetState, scn: &Scenario, curvature: f64) -> f64 {
    match model {
        ErrorModel::LocalAxis => implement_error_measured(frenet, &scn.implement),
        ErrorModel::Osculating => implement_error_osculating(frenet, &scn.implement, curvature),
    }
}

fn measure(
    truth: &FrenetState,
    pose: &VehiclePose,
    path: &ReferencePath,
    scn: &Scenario,
    horizon: f64,
    noise: Option<&mut NoiseSource>,
) -> Result<Measurements, KinematicsError> {
    let mut frenet = *truth;
    let mut omega_noise = 0.0;
    if let Some(n) = noise {
        frenet.y += n.y.sample(&mut n.rng);
        frenet.theta_tilde += n.theta.sample(&mut n.rng);
        omega_noise = n.omega.sample(&mut n.rng);
    }
    let curvature_now = path.curvature_at_clamped(frenet.s);
    let omega_bar = yaw_rate_from_steer(pose.steer, &frenet, curvature_now, &scn.vehicle)? + omega_noise;
    Ok(Measurements {
        frenet,
        steer: pose.steer,
        omega_bar,
        e_i: estimate_e_i(scn.error_model, &frenet, scn, curvature_now),
        curvature_now,
        curvature_ahead: path.curvature_at_clamped(frenet.s + horizon),
    })
}

/// Simulate a scenario in closed loop.
///
/// The controller runs every control period on fresh measurements; the
/// command is held between invocations while the plant advances every
/// `dt`. A plant fault truncates the log and is reported in
/// [`RunLog::fault`]; controller faults hold the last command and are
/// flagged on the affected records.
pub fn run_scenario(scn: &Scenario) -> Result<RunLog, ScenarioError> {
    let path = scn.validate()?;
    Ok(simulate(scn, &path))
}

pub(crate) fn simulate(scn: &Scenario, path: &ReferencePath) -> RunLog {
    let labels = segment_labels(path);
    let label_at = |s: f64| labels[path.segment_index(s.clamp(0.0, path.total_length())).expect("clamped")].clone();
    let horizon = scn.law.horizon();
    let run_length = scn.resolved_run_length(path);
    let s_end = scn.initial.s + run_length;
    let steps_per_control = scn.steps_per_control();
    // generous travel budget; a stalled or circling vehicle times out
    let max_steps = ((3.0 * run_length / scn.vehicle.speed + 30.0) / scn.dt).ceil() as usize;
    let half_window = scn
        .summary
        .overshoot_half_window_m
        .unwrap_or(horizon + scn.summary.overshoot_margin_m);

    let mut log = RunLog {
        scenario: scn.name.clone(),
        method: scn.law.method().to_string(),
        junctions: path.curvature_discontinuities(),
        overshoot_half_window: half_window,
        exclude_initial_m: scn.summary.exclude_initial_m,
        records: Vec::with_capacity(max_steps.min(1 << 20)),
        fault: None,
    };

    let mut noise = NoiseSource::new(scn);
    let mut controller = Controller::new(scn.law, scn.implement, scn.vehicle);

    let start = scn.initial.frenet(&scn.implement);
    let world = path.frenet_to_world(&start).expect("validated initial abscissa");
    let mut pose = VehiclePose {
        position: world.position,
        heading: world.heading,
        steer: 0.0,
    };
    let mut truth = path.project(pose.position, pose.heading);
    if let Err(e) = vehicle::alpha(path.curvature_at_clamped(truth.frenet.s), truth.frenet.y) {
        let imp = implement_error_exact(&pose, &scn.implement, path);
        let mut flags = Faults::PLANT_SINGULARITY;
        if truth.ambiguous {
            flags.insert(Faults::ROBOT_AMBIGUOUS);
        }
        log.records.push(RunRecord {
            t: 0.0,
            s: truth.frenet.s,
            y: truth.frenet.y,
            theta_tilde: truth.frenet.theta_tilde,
            e_i_exact: imp.frenet.y,
            e_i_measured: estimate_e_i(scn.error_model, &truth.frenet, scn, path.curvature_at_clamped(truth.frenet.s)),
            delta_cmd: 0.0,
            delta_actual: pose.steer,
            theta_desired: 0.0,
            segment: label_at(truth.frenet.s),
            faults: flags,
        });
        note_fault(&mut log, 0.0, truth.frenet.s, Faults::PLANT_SINGULARITY, e.to_string(), true);
        return log;
    }

    let mut delta_cmd = 0.0;
    let mut theta_desired = 0.0;
    let mut t = 0.0;
    let mut step_index: usize = 0;
    loop {
        let mut flags = Faults::NONE;
        if truth.ambiguous {
            flags.insert(Faults::ROBOT_AMBIGUOUS);
        }
        if step_index.is_multiple_of(steps_per_control) {
            match measure(&truth.frenet, &pose, path, scn, horizon, noise.as_mut()) {
                Ok(meas) => {
                    let out = controller.step(&meas);
                    delta_cmd = out.command.delta_desired;
                    theta_desired = out.command.theta_desired;
                    if let Some(e) = out.fault {
                        flags.insert(Faults::from_control(&e));
                        note_fault(&mut log, t, truth.frenet.s, Faults::from_control(&e), e.to_string(), false);
                    }
                }
                Err(e) => {
                    flags.insert(Faults::CTRL_CURVATURE);
                    note_fault(&mut log, t, truth.frenet.s, Faults::CTRL_CURVATURE, e.to_string(), false);
                }
            }
        }

        let imp = implement_error_exact(&pose, &scn.implement, path);
        if imp.ambiguous {
            flags.insert(Faults::IMPLEMENT_AMBIGUOUS);
        }
        if imp.clamped {
            flags.insert(Faults::IMPLEMENT_CLAMPED);
        }
        let curvature = path.curvature_at_clamped(truth.frenet.s);
        log.records.push(RunRecord {
            t,
            s: truth.frenet.s,
            y: truth.frenet.y,
            theta_tilde: truth.frenet.theta_tilde,
            e_i_exact: imp.frenet.y,
            e_i_measured: estimate_e_i(scn.error_model, &truth.frenet, scn, curvature),
            delta_cmd,
            delta_actual: pose.steer,
            theta_desired,
            segment: label_at(truth.frenet.s),
            faults: flags,
        });

        if truth.frenet.s >= s_end {
            break;
        }
        if step_index >= max_steps {
            mark_last(&mut log, Faults::TIMEOUT);
            note_fault(&mut log, t, truth.frenet.s, Faults::TIMEOUT, "travel budget exhausted".into(), true);
            break;
        }

        match vehicle::step(&pose, delta_cmd, scn.dt, path, &scn.vehicle) {
            Ok((next, proj)) => {
                pose = next;
                truth = proj;
            }
            Err(e) => {
                let kind = match e {
                    KinematicsError::Singularity(_) => Faults::PLANT_SINGULARITY,
                    KinematicsError::NonFinite => Faults::PLANT_NONFINITE,
                };
                mark_last(&mut log, kind);
                note_fault(&mut log, t + scn.dt, truth.frenet.s, kind, e.to_string(), true);
                break;
            }
        }
        step_index += 1;
        t = step_index as f64 * scn.dt;
    }
    log
}

fn mark_last(log: &mut RunLog, flag: Faults) {
    if let Some(r) = log.records.last_mut() {
        r.faults.insert(flag);
    }
}

fn note_fault(log: &mut RunLog, t: f64, s: f64, kind: Faults, message: String, aborted: bool) {
    match &mut log.fault {
        None => {
            log.fault = Some(FaultRecord {
                t,
                s,
                kind: kind.to_string(),
                message,
                aborted,
            })
        }
        // an abort always wins over an earlier held-command fault
        Some(f) if aborted && !f.aborted => {
            *f = FaultRecord {
                t,
                s,
                kind: kind.to_string(),
                message,
                aborted,
            }
        }
        Some(_) => {}
    }
}

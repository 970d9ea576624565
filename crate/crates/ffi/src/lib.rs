//! C ABI for imptrack.
//!
//! Objects are opaque handles created by `imp_*_new`/`imp_*_from_*`/
//! `imp_*_preset` functions and released with the matching `imp_*_free`.
//! Every fallible function returns an [`ImpStatus`]; on failure a
//! description is available from [`imp_last_error_message`] on the same
//! thread. Results are written through out-pointers, which are left
//! untouched on failure unless stated otherwise.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use imptrack::control::{ControlError, Controller};
use imptrack::harness::{run_scenario, summarize, RunLog, Scenario};
use imptrack::io::{csv_log, ScenarioFile, ScenarioFileError};
use imptrack::path::{
    build_experiment_path, FrenetState, PathError, PathSpec, ReferencePath, SegmentDescriptor, SegmentKind,
    StartPose,
};
use imptrack::geometry::Vec2;
use imptrack::presets;
use imptrack::vehicle::{Measurements, VehicleConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument was malformed (bad UTF-8, unknown name, bad enum value).
    InvalidArgument = 2,
    /// A scenario or path failed validation.
    Validation = 3,
    /// A query fell outside the path.
    OutOfRange = 4,
    /// Model singularity (`1 - c y` or `1 - gamma I_y` near zero).
    Singularity = 5,
    /// Heading deviation outside (-pi/2, pi/2).
    Domain = 6,
    /// The simulation recorded a fault; results are still available.
    Fault = 7,
    /// File could not be read or written.
    Io = 8,
    /// An internal error was caught at the boundary.
    Panic = 9,
}

/// Segment kind codes for [`ImpSegment::kind`].
pub const IMP_SEGMENT_LINE: u32 = 0;
pub const IMP_SEGMENT_ARC: u32 = 1;

/// Bits of [`ImpRecord::fault_bits`]; names match the CSV `fault` column.
pub const IMP_FAULT_CTRL_CURVATURE: u32 = 1 << 0;
pub const IMP_FAULT_CTRL_OFFSET: u32 = 1 << 1;
pub const IMP_FAULT_CTRL_DOMAIN: u32 = 1 << 2;
pub const IMP_FAULT_CTRL_OTHER: u32 = 1 << 3;
pub const IMP_FAULT_PLANT_SINGULARITY: u32 = 1 << 4;
pub const IMP_FAULT_PLANT_NONFINITE: u32 = 1 << 5;
pub const IMP_FAULT_TIMEOUT: u32 = 1 << 6;
pub const IMP_FAULT_ROBOT_AMBIGUOUS: u32 = 1 << 7;
pub const IMP_FAULT_IMPLEMENT_AMBIGUOUS: u32 = 1 << 8;
pub const IMP_FAULT_IMPLEMENT_CLAMPED: u32 = 1 << 9;

/// Opaque reference path.
pub struct ImpPath {
    inner: ReferencePath,
}

/// Opaque, validated scenario.
pub struct ImpScenario {
    inner: Scenario,
}

/// Opaque result of a simulation run.
pub struct ImpRunLog {
    inner: RunLog,
}

/// Opaque controller with fail-safe command hold.
pub struct ImpController {
    inner: Controller,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpStartPose {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpSegment {
    /// `IMP_SEGMENT_LINE` or `IMP_SEGMENT_ARC`.
    pub kind: u32,
    pub length_m: f64,
    /// Signed curvature, positive turning left; 0 for lines.
    pub curvature_per_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpPathPoint {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    pub curvature_per_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpProjection {
    pub s_m: f64,
    pub y_m: f64,
    pub theta_tilde_rad: f64,
    pub distance_m: f64,
    pub ambiguous: bool,
    pub clamped: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpMeasurements {
    pub s_m: f64,
    pub y_m: f64,
    pub theta_tilde_rad: f64,
    pub steer_rad: f64,
    pub omega_bar_rad_s: f64,
    pub e_i_m: f64,
    pub curvature_now_per_m: f64,
    pub curvature_ahead_per_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpCommand {
    pub delta_desired_rad: f64,
    pub theta_desired_rad: f64,
    pub xi_desired: f64,
    pub clamped: bool,
    /// The law failed and the previous command was repeated.
    pub held: bool,
    pub e_i_prime: f64,
    pub e_i_second_per_m: f64,
    pub alpha: f64,
    pub gamma_per_m: f64,
    pub j_residual: f64,
    pub n_h: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpRecord {
    pub t_s: f64,
    pub s_m: f64,
    pub y_m: f64,
    pub theta_tilde_rad: f64,
    pub e_i_exact_m: f64,
    pub e_i_measured_m: f64,
    pub delta_cmd_rad: f64,
    pub delta_actual_rad: f64,
    pub theta_d_rad: f64,
    /// `IMP_FAULT_*` bits.
    pub fault_bits: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ImpSummary {
    pub samples: usize,
    pub median_m: f64,
    pub q25_m: f64,
    pub q75_m: f64,
    pub max_m: f64,
    pub max_overshoot_m: f64,
    pub fault_count: usize,
    /// A fault record exists.
    pub has_fault: bool,
    /// The run stopped at that fault.
    pub aborted: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type FfiResult<T = ()> = Result<T, (ImpStatus, String)>;

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult) -> ImpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ImpStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            ImpStatus::Panic
        }
    }
}

fn null(name: &str) -> (ImpStatus, String) {
    (ImpStatus::NullPointer, format!("{name} is NULL"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (ImpStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn path_error(e: PathError) -> (ImpStatus, String) {
    let status = match e {
        PathError::OutOfRange { .. } => ImpStatus::OutOfRange,
        _ => ImpStatus::Validation,
    };
    (status, e.to_string())
}

fn scenario_file_error(e: ScenarioFileError) -> (ImpStatus, String) {
    let status = match e {
        ScenarioFileError::Io { .. } => ImpStatus::Io,
        _ => ImpStatus::Validation,
    };
    (status, e.to_string())
}

fn control_status(e: &ControlError) -> ImpStatus {
    match e {
        ControlError::CurvatureSingularity(_) | ControlError::OffsetSingularity(_) => ImpStatus::Singularity,
        ControlError::Domain(_) => ImpStatus::Domain,
        ControlError::Parameter(_) => ImpStatus::InvalidArgument,
    }
}

/// Message of the last failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn imp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn imp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a named path preset (`"exp1"` or `"exp2"`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_path_preset(name: *const c_char, out: *mut *mut ImpPath) -> ImpStatus {
    guard(|| {
        let name = string(name, "name")?;
        let out = deref_mut(out, "out")?;
        let spec = PathSpec::preset(name)
            .ok_or_else(|| (ImpStatus::InvalidArgument, format!("unknown path preset '{name}'")))?;
        let inner = build_experiment_path(&spec).map_err(path_error)?;
        *out = Box::into_raw(Box::new(ImpPath { inner }));
        Ok(())
    })
}

/// Chain `count` segments from `start` (NULL means the origin, heading 0).
///
/// # Safety
/// `segments` must point to `count` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_path_new(
    start: *const ImpStartPose,
    segments: *const ImpSegment,
    count: usize,
    out: *mut *mut ImpPath,
) -> ImpStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        if segments.is_null() && count > 0 {
            return Err(null("segments"));
        }
        let start = start.as_ref().copied().unwrap_or_default();
        let segs = if count == 0 { &[][..] } else { std::slice::from_raw_parts(segments, count) };
        let descriptors = segs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let kind = match s.kind {
                    IMP_SEGMENT_LINE => SegmentKind::Line,
                    IMP_SEGMENT_ARC => SegmentKind::Arc,
                    k => return Err((ImpStatus::InvalidArgument, format!("segment {i}: unknown kind {k}"))),
                };
                Ok(SegmentDescriptor {
                    kind,
                    length_m: s.length_m,
                    curvature_per_m: s.curvature_per_m,
                    start: None,
                })
            })
            .collect::<FfiResult<Vec<_>>>()?;
        let spec = PathSpec {
            start: StartPose {
                x_m: start.x_m,
                y_m: start.y_m,
                heading_rad: start.heading_rad,
            },
            segments: descriptors,
        };
        let inner = build_experiment_path(&spec).map_err(path_error)?;
        *out = Box::into_raw(Box::new(ImpPath { inner }));
        Ok(())
    })
}

/// # Safety
/// `path` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn imp_path_free(path: *mut ImpPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_path_total_length(path: *const ImpPath, out: *mut f64) -> ImpStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(path, "path")?.inner.total_length();
        Ok(())
    })
}

/// Position, heading and curvature at abscissa `s`.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_path_point_at(path: *const ImpPath, s: f64, out: *mut ImpPathPoint) -> ImpStatus {
    guard(|| {
        let p = deref(path, "path")?.inner.point_at(s).map_err(path_error)?;
        *deref_mut(out, "out")? = ImpPathPoint {
            x_m: p.position.x,
            y_m: p.position.y,
            heading_rad: p.heading,
            curvature_per_m: p.curvature,
        };
        Ok(())
    })
}

/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_path_curvature_at(path: *const ImpPath, s: f64, out: *mut f64) -> ImpStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(path, "path")?.inner.curvature_at(s).map_err(path_error)?;
        Ok(())
    })
}

/// Closest-point projection of a world pose.
///
/// # Safety
/// `path` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_path_project(
    path: *const ImpPath,
    x_m: f64,
    y_m: f64,
    heading_rad: f64,
    out: *mut ImpProjection,
) -> ImpStatus {
    guard(|| {
        let path = deref(path, "path")?;
        let out = deref_mut(out, "out")?;
        if !(x_m.is_finite() && y_m.is_finite() && heading_rad.is_finite()) {
            return Err((ImpStatus::InvalidArgument, "pose must be finite".into()));
        }
        let p = path.inner.project(Vec2::new(x_m, y_m), heading_rad);
        *out = ImpProjection {
            s_m: p.frenet.s,
            y_m: p.frenet.y,
            theta_tilde_rad: p.frenet.theta_tilde,
            distance_m: p.distance,
            ambiguous: p.ambiguous,
            clamped: p.clamped,
        };
        Ok(())
    })
}

fn scenario_out(scn: Scenario, out: &mut *mut ImpScenario) -> FfiResult {
    scn.validate().map_err(|e| (ImpStatus::Validation, e.to_string()))?;
    *out = Box::into_raw(Box::new(ImpScenario { inner: scn }));
    Ok(())
}

/// Parse and validate a scenario document (TOML text).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_scenario_from_toml(text: *const c_char, out: *mut *mut ImpScenario) -> ImpStatus {
    guard(|| {
        let text = string(text, "text")?;
        let out = deref_mut(out, "out")?;
        let scn = ScenarioFile::parse(text)
            .and_then(|f| f.resolve("scenario").map_err(Into::into))
            .map_err(scenario_file_error)?;
        scenario_out(scn, out)
    })
}

/// Load and validate a scenario file.
///
/// # Safety
/// `file` must be a NUL-terminated path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_scenario_load(file: *const c_char, out: *mut *mut ImpScenario) -> ImpStatus {
    guard(|| {
        let file = string(file, "file")?;
        let out = deref_mut(out, "out")?;
        let scn = ScenarioFile::load_scenario(Path::new(file)).map_err(scenario_file_error)?;
        scenario_out(scn, out)
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn imp_scenario_free(scenario: *mut ImpScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn imp_scenario_set_seed(scenario: *mut ImpScenario, seed: u64) -> ImpStatus {
    guard(|| {
        deref_mut(scenario, "scenario")?.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn imp_scenario_set_noise(scenario: *mut ImpScenario, enabled: bool) -> ImpStatus {
    guard(|| {
        deref_mut(scenario, "scenario")?.inner.noise.enabled = enabled;
        Ok(())
    })
}

/// Simulate a scenario. On `IMP_STATUS_OK` or `IMP_STATUS_FAULT` a run log
/// is written to `out` and must be freed; a fault still yields the
/// truncated log.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_run(scenario: *const ImpScenario, out: *mut *mut ImpRunLog) -> ImpStatus {
    guard(|| {
        let scn = deref(scenario, "scenario")?;
        let out = deref_mut(out, "out")?;
        let log = run_scenario(&scn.inner).map_err(|e| (ImpStatus::Validation, e.to_string()))?;
        let fault = log.fault.clone();
        *out = Box::into_raw(Box::new(ImpRunLog { inner: log }));
        match fault {
            Some(f) => Err((ImpStatus::Fault, format!("{} at s = {} m: {}", f.kind, f.s, f.message))),
            None => Ok(()),
        }
    })
}

/// # Safety
/// `log` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn imp_run_log_free(log: *mut ImpRunLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_run_log_len(log: *const ImpRunLog, out: *mut usize) -> ImpStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(log, "log")?.inner.records.len();
        Ok(())
    })
}

/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_run_log_record(log: *const ImpRunLog, index: usize, out: *mut ImpRecord) -> ImpStatus {
    guard(|| {
        let log = deref(log, "log")?;
        let out = deref_mut(out, "out")?;
        let r = log.inner.records.get(index).ok_or_else(|| {
            (
                ImpStatus::OutOfRange,
                format!("record {index} out of range (len {})", log.inner.records.len()),
            )
        })?;
        *out = ImpRecord {
            t_s: r.t,
            s_m: r.s,
            y_m: r.y,
            theta_tilde_rad: r.theta_tilde,
            e_i_exact_m: r.e_i_exact,
            e_i_measured_m: r.e_i_measured,
            delta_cmd_rad: r.delta_cmd,
            delta_actual_rad: r.delta_actual,
            theta_d_rad: r.theta_desired,
            fault_bits: u32::from(r.faults.bits()),
        };
        Ok(())
    })
}

/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_run_log_summary(log: *const ImpRunLog, out: *mut ImpSummary) -> ImpStatus {
    guard(|| {
        let log = deref(log, "log")?;
        let out = deref_mut(out, "out")?;
        let s = summarize(&log.inner).map_err(|e| (ImpStatus::InvalidArgument, e.to_string()))?;
        *out = ImpSummary {
            samples: s.samples,
            median_m: s.median,
            q25_m: s.q25,
            q75_m: s.q75,
            max_m: s.max,
            max_overshoot_m: s.max_overshoot,
            fault_count: s.fault_count,
            has_fault: s.fault.is_some(),
            aborted: s.fault.as_ref().is_some_and(|f| f.aborted),
        };
        Ok(())
    })
}

/// Write the log as CSV.
///
/// # Safety
/// `log` must be a live handle; `file` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn imp_run_log_write_csv(log: *const ImpRunLog, file: *const c_char) -> ImpStatus {
    guard(|| {
        let log = deref(log, "log")?;
        let file = string(file, "file")?;
        std::fs::write(file, csv_log::to_string(&log.inner.records))
            .map_err(|e| (ImpStatus::Io, format!("cannot write {file}: {e}")))
    })
}

/// Controller for a named preset (e.g. `"table1_rear_optimal"`) with the
/// preset's implement and the default vehicle.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_controller_from_preset(name: *const c_char, out: *mut *mut ImpController) -> ImpStatus {
    guard(|| {
        let name = string(name, "name")?;
        let out = deref_mut(out, "out")?;
        let preset = presets::lookup(name)
            .ok_or_else(|| (ImpStatus::InvalidArgument, format!("unknown controller preset '{name}'")))?;
        let inner = Controller::new(preset.law, preset.implement, VehicleConfig::default());
        *out = Box::into_raw(Box::new(ImpController { inner }));
        Ok(())
    })
}

/// Controller configured like a scenario's closed loop.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn imp_controller_from_scenario(
    scenario: *const ImpScenario,
    out: *mut *mut ImpController,
) -> ImpStatus {
    guard(|| {
        let scn = &deref(scenario, "scenario")?.inner;
        let out = deref_mut(out, "out")?;
        let inner = Controller::new(scn.law, scn.implement, scn.vehicle);
        *out = Box::into_raw(Box::new(ImpController { inner }));
        Ok(())
    })
}

/// # Safety
/// `controller` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn imp_controller_free(controller: *mut ImpController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

/// One control step. When the law fails (singularity, domain), `out`
/// still receives the previously emitted command with `held = true` and
/// the matching error status is returned.
///
/// # Safety
/// `controller` must be a live handle; `meas` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn imp_controller_step(
    controller: *mut ImpController,
    meas: *const ImpMeasurements,
    out: *mut ImpCommand,
) -> ImpStatus {
    guard(|| {
        let ctl = deref_mut(controller, "controller")?;
        let m = deref(meas, "meas")?;
        let out = deref_mut(out, "out")?;
        let meas = Measurements {
            frenet: FrenetState {
                s: m.s_m,
                y: m.y_m,
                theta_tilde: m.theta_tilde_rad,
            },
            steer: m.steer_rad,
            omega_bar: m.omega_bar_rad_s,
            e_i: m.e_i_m,
            curvature_now: m.curvature_now_per_m,
            curvature_ahead: m.curvature_ahead_per_m,
        };
        let res = ctl.inner.step(&meas);
        let c = res.command;
        *out = ImpCommand {
            delta_desired_rad: c.delta_desired,
            theta_desired_rad: c.theta_desired,
            xi_desired: c.xi_desired,
            clamped: c.clamped,
            held: res.fault.is_some(),
            e_i_prime: c.diagnostics.e_i_prime,
            e_i_second_per_m: c.diagnostics.e_i_second,
            alpha: c.diagnostics.alpha,
            gamma_per_m: c.diagnostics.gamma,
            j_residual: c.diagnostics.j_residual,
            n_h: u32::try_from(c.diagnostics.n_h).unwrap_or(u32::MAX),
        };
        match res.fault {
            Some(e) => Err((control_status(&e), e.to_string())),
            None => Ok(()),
        }
    })
}

//! Bicycle-model plant, implement placement and implement error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Vec2};
use crate::path::{FrenetState, Projection, ReferencePath};

/// Guard on `|1 - c·y|`: below this the robot sits on the osculating-circle
/// center and the curvilinear model is undefined.
pub const SINGULARITY_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum KinematicsError {
    #[error("curvilinear singularity: |1 - c*y| = {0:.3e} (robot at osculating-circle center)")]
    Singularity(f64),
    #[error("non-finite vehicle state")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid {field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    #[serde(rename = "wheelbase_m")]
    pub wheelbase: f64,
    #[serde(rename = "steer_limit_rad")]
    pub steer_limit: f64,
    #[serde(rename = "steer_rate_limit_rad_s")]
    pub steer_rate_limit: f64,
    #[serde(rename = "speed_m_s")]
    pub speed: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            wheelbase: 1.2,
            steer_limit: 0.55,
            steer_rate_limit: 0.8,
            speed: 1.0,
        }
    }
}

impl VehicleConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.wheelbase > 0.0 && self.wheelbase.is_finite()) {
            return Err(ConfigError::new("wheelbase_m", "must be > 0"));
        }
        if !(self.steer_limit > 0.0 && self.steer_limit < std::f64::consts::FRAC_PI_2) {
            return Err(ConfigError::new("steer_limit_rad", "must lie in (0, pi/2)"));
        }
        if !(self.steer_rate_limit > 0.0 && self.steer_rate_limit.is_finite()) {
            return Err(ConfigError::new("steer_rate_limit_rad_s", "must be > 0"));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(ConfigError::new("speed_m_s", "must be > 0"));
        }
        Ok(())
    }
}

/// Rigid offset of the implement point from the rear-axle center, in the
/// robot frame (x forward, y left).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplementConfig {
    #[serde(rename = "I_s_m")]
    pub offset_s: f64,
    #[serde(rename = "I_y_m")]
    pub offset_y: f64,
}

impl ImplementConfig {
    pub const fn new(offset_s: f64, offset_y: f64) -> Self {
        Self { offset_s, offset_y }
    }

    /// The lateral offset must stay below the smallest arc radius of the path.
    pub fn validate(&self, path: &ReferencePath) -> Result<(), ConfigError> {
        if !(self.offset_s.is_finite() && self.offset_y.is_finite()) {
            return Err(ConfigError::new("implement", "offsets must be finite"));
        }
        let r_min = path.min_radius();
        if self.offset_y.abs() >= r_min {
            return Err(ConfigError::new(
                "I_y_m",
                format!("|I_y| = {} must be below the minimum path radius {r_min}", self.offset_y.abs()),
            ));
        }
        Ok(())
    }
}

/// World pose of the rear-axle center plus the current steering angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehiclePose {
    pub position: Vec2,
    pub heading: f64,
    pub steer: f64,
}

/// What the controllers see at each control instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurements {
    pub frenet: FrenetState,
    /// Measured steering angle (rad).
    pub steer: f64,
    /// Yaw rate of the angular deviation derived from the measured steer (rad/s).
    pub omega_bar: f64,
    /// Implement lateral error estimate (m).
    pub e_i: f64,
    pub curvature_now: f64,
    /// Curvature at the end of the prediction horizon.
    pub curvature_ahead: f64,
}

/// `1 - c·y`, guarded against the osculating-circle singularity.
pub fn alpha(curvature: f64, y: f64) -> Result<f64, KinematicsError> {
    let a = 1.0 - curvature * y;
    if a.abs() < SINGULARITY_EPS || !a.is_finite() {
        Err(KinematicsError::Singularity(a.abs()))
    } else {
        Ok(a)
    }
}

/// Clamp the command to the steering range, then slew toward it.
pub fn actuate_steer(current: f64, command: f64, dt: f64, cfg: &VehicleConfig) -> f64 {
    let target = command.clamp(-cfg.steer_limit, cfg.steer_limit);
    let max_step = cfg.steer_rate_limit * dt;
    current + (target - current).clamp(-max_step, max_step)
}

/// One RK4 step of the world-frame bicycle model with the steer held.
pub fn integrate_pose(pose: &VehiclePose, dt: f64, cfg: &VehicleConfig) -> VehiclePose {
    let v = cfg.speed;
    let yaw_rate = v * pose.steer.tan() / cfg.wheelbase;
    let f = |heading: f64| (v * heading.cos(), v * heading.sin());

    let h0 = pose.heading;
    let k1 = f(h0);
    let k2 = f(h0 + 0.5 * dt * yaw_rate);
    let k3 = k2;
    let k4 = f(h0 + dt * yaw_rate);
    let dx = dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let dy = dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    VehiclePose {
        position: pose.position + Vec2::new(dx, dy),
        heading: wrap_angle(h0 + dt * yaw_rate),
        steer: pose.steer,
    }
}

/// Advance the plant by `dt` under `steer_command`.
///
/// The steer is clamped and rate-limited first, then the pose is integrated
/// and the ground-truth Frenet state recovered by projection.
pub fn step(
    pose: &VehiclePose,
    steer_command: f64,
    dt: f64,
    path: &ReferencePath,
    cfg: &VehicleConfig,
) -> Result<(VehiclePose, Projection), KinematicsError> {
    let steered = VehiclePose {
        steer: actuate_steer(pose.steer, steer_command, dt, cfg),
        ..*pose
    };
    let next = integrate_pose(&steered, dt, cfg);
    if !(next.position.x.is_finite() && next.position.y.is_finite() && next.heading.is_finite()) {
        return Err(KinematicsError::NonFinite);
    }
    let proj = path.project(next.position, next.heading);
    alpha(path.curvature_at_clamped(proj.frenet.s), proj.frenet.y)?;
    Ok((next, proj))
}

pub fn implement_world_position(pose: &VehiclePose, imp: &ImplementConfig) -> Vec2 {
    pose.position + Vec2::new(imp.offset_s, imp.offset_y).rotate(pose.heading)
}

/// Ground-truth implement error: signed distance of the implement point to
/// the path, by projection. The returned projection carries the tie/clamp
/// flags.
pub fn implement_error_exact(
    pose: &VehiclePose,
    imp: &ImplementConfig,
    path: &ReferencePath,
) -> Projection {
    path.project(implement_world_position(pose, imp), pose.heading)
}

/// Controller-side implement error: the lateral coordinate of the implement
/// along the path normal at the robot's abscissa.
pub fn implement_error_measured(frenet: &FrenetState, imp: &ImplementConfig) -> f64 {
    let (sin_t, cos_t) = frenet.theta_tilde.sin_cos();
    frenet.y + imp.offset_s * sin_t + imp.offset_y * (cos_t - 1.0) + imp.offset_y
}

/// Implement error against the osculating circle of the path at the robot's
/// abscissa. Reduces to [`implement_error_measured`] on straight paths.
pub fn implement_error_osculating(frenet: &FrenetState, imp: &ImplementConfig, curvature: f64) -> f64 {
    let (sin_t, cos_t) = frenet.theta_tilde.sin_cos();
    let x = imp.offset_s * cos_t - imp.offset_y * sin_t;
    let y = frenet.y + imp.offset_s * sin_t + imp.offset_y * cos_t;
    // (1 - D) / c rewritten without cancellation for small c
    let d = (curvature * x).hypot(1.0 - curvature * y);
    (2.0 * y - curvature * (x * x + y * y)) / (1.0 + d)
}

/// Rate of the angular deviation given the steering angle and path curvature.
pub fn yaw_rate_from_steer(
    steer: f64,
    frenet: &FrenetState,
    curvature: f64,
    cfg: &VehicleConfig,
) -> Result<f64, KinematicsError> {
    let a = alpha(curvature, frenet.y)?;
    Ok(cfg.speed * (steer.tan() / cfg.wheelbase - curvature * frenet.theta_tilde.cos() / a))
}

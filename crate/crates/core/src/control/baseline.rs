//! Non-predictive reference controllers.
//!
//! Both are reconstructions of earlier offset-point laws: a backstepping
//! controller that picks the desired heading from the current implement
//! error alone, and a lateral servo that steers the rear-axle center to the
//! offset that puts the implement on the path.

use serde::{Deserialize, Serialize};

use super::optimal::{alpha_gamma, clamp_steer, e_i_prime, e_i_second, steering_command};
use super::{ControlCommand, ControlError, Diagnostics, SINGULARITY_EPS};
use crate::vehicle::{ImplementConfig, Measurements, VehicleConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    /// Lateral gain.
    pub k_y: f64,
    /// Heading gain (1/m).
    pub k_theta: f64,
}

impl BaselineParams {
    pub fn new(k_y: f64, k_theta: f64) -> Result<Self, ControlError> {
        for (name, v) in [("k_y", k_y), ("k_theta", k_theta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::Parameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self { k_y, k_theta })
    }
}

fn diagnostics(
    meas: &Measurements,
    alpha: f64,
    gamma: f64,
    imp: &ImplementConfig,
    vehicle: &VehicleConfig,
) -> Result<Diagnostics, ControlError> {
    let theta = meas.frenet.theta_tilde;
    Ok(Diagnostics {
        e_i: meas.e_i,
        e_i_prime: e_i_prime(theta, alpha, gamma, imp)?,
        e_i_second: e_i_second(theta, alpha, meas.steer, meas.curvature_now, vehicle.wheelbase)?,
        alpha,
        gamma,
        j_residual: 0.0,
        n_h: 0,
    })
}

/// Desired heading making `e_I' = -k_y e_I` with no look-ahead.
pub fn backstepping_desired_heading(
    e_i: f64,
    alpha: f64,
    gamma: f64,
    k_y: f64,
    imp: &ImplementConfig,
) -> Result<f64, ControlError> {
    let lever = 1.0 - gamma * imp.offset_y;
    if lever.abs() < SINGULARITY_EPS || !lever.is_finite() {
        return Err(ControlError::OffsetSingularity(lever.abs()));
    }
    Ok(((-k_y * e_i / alpha - gamma * imp.offset_s) / lever).atan())
}

/// Backstepping step. The first stage uses the measured implement error
/// only (no yaw-rate feed-forward): feeding the measured `γ` back through
/// `I_s` makes the closed loop unstable whenever `1 + k_theta·I_s < 0`, which
/// holds for a rear implement at the usual gains.
pub fn backstepping_control_step(
    meas: &Measurements,
    params: &BaselineParams,
    imp: &ImplementConfig,
    vehicle: &VehicleConfig,
) -> Result<ControlCommand, ControlError> {
    let (alpha, gamma) = alpha_gamma(meas, vehicle.speed)?;
    let theta_desired = backstepping_desired_heading(meas.e_i, alpha, 0.0, params.k_y, imp)?;
    let (delta, clamped) = steering_command(
        meas.frenet.theta_tilde,
        theta_desired,
        meas.curvature_now,
        meas.frenet.y,
        params.k_theta,
        vehicle,
    )?;
    Ok(ControlCommand {
        delta_desired: delta,
        theta_desired,
        xi_desired: alpha * (1.0 - gamma * imp.offset_y) * theta_desired.tan(),
        clamped,
        diagnostics: diagnostics(meas, alpha, gamma, imp, vehicle)?,
    })
}

/// Lateral reference for the rear-axle center that places the implement on
/// the path: `y_d = y - e_I`.
pub fn center_reference(meas: &Measurements) -> f64 {
    meas.frenet.y - meas.e_i
}

/// Chained-form lateral servo of the rear-axle center toward
/// [`center_reference`].
///
/// Exactly linearizes the center dynamics in arc length to
/// `y'' = -k_theta y' - k_y (y - y_d)`.
pub fn lateral_servoing_control_step(
    meas: &Measurements,
    params: &BaselineParams,
    imp: &ImplementConfig,
    vehicle: &VehicleConfig,
) -> Result<ControlCommand, ControlError> {
    let (alpha, gamma) = alpha_gamma(meas, vehicle.speed)?;
    let theta = meas.frenet.theta_tilde;
    if theta.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(ControlError::Domain(theta));
    }
    let c = meas.curvature_now;
    let (sin_t, cos_t) = theta.sin_cos();
    let tan_t = sin_t / cos_t;
    let lateral_error = meas.frenet.y - center_reference(meas);
    let slope = alpha * tan_t;
    let curvature_cmd = cos_t.powi(3) / (alpha * alpha)
        * (-params.k_theta * slope - params.k_y * lateral_error + c * alpha * tan_t * tan_t)
        + c * cos_t / alpha;
    let (delta, clamped) = clamp_steer((vehicle.wheelbase * curvature_cmd).atan(), vehicle);
    Ok(ControlCommand {
        delta_desired: delta,
        theta_desired: (-params.k_y * lateral_error / params.k_theta).atan(),
        xi_desired: 0.0,
        clamped,
        diagnostics: diagnostics(meas, alpha, gamma, imp, vehicle)?,
    })
}

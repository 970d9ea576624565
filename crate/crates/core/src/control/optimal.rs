//! Two-stage predictive controller for the implement point.
//!
//! Stage one predicts the implement error over a look-ahead distance with a
//! second-order expansion in arc length and picks the heading deviation
//! whose prediction best matches an exponential decay profile. Because the
//! prediction is affine in `ξ = α(1 - γ I_y) tan θ̃`, the least-squares
//! problem has a closed-form minimizer built from four power sums. Stage two
//! turns the desired heading deviation into a steering angle.

use serde::{Deserialize, Serialize};

use super::{ControlCommand, ControlError, Diagnostics, SINGULARITY_EPS};
use crate::vehicle::{ImplementConfig, Measurements, VehicleConfig};

/// Tuning of the predictive controller. Distances in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalParams {
    /// Decay rate of the reference error profile (1/m).
    pub lambda: f64,
    /// Heading convergence gain (1/m).
    pub k_theta: f64,
    /// Prediction horizon length.
    pub s_h: f64,
    /// Sampling step along the horizon.
    pub s_t: f64,
    /// Number of horizon samples, `round(s_h / s_t)`.
    pub n_h: usize,
}

impl OptimalParams {
    pub fn new(lambda: f64, k_theta: f64, s_h: f64, s_t: f64) -> Result<Self, ControlError> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ControlError::Parameter(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("lambda", lambda)?;
        positive("k_theta", k_theta)?;
        positive("s_h_m", s_h)?;
        positive("s_t_m", s_t)?;
        if s_t > s_h {
            return Err(ControlError::Parameter(format!(
                "s_t_m ({s_t}) must not exceed s_h_m ({s_h})"
            )));
        }
        let n_h = (s_h / s_t).round() as usize;
        if n_h == 0 {
            return Err(ControlError::Parameter("horizon has no samples".into()));
        }
        Ok(Self {
            lambda,
            k_theta,
            s_h,
            s_t,
            n_h,
        })
    }
}

/// Power sums over the horizon samples `k·s_t`, `k = 0..=n_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaTerms {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub sigma_e: f64,
}

pub fn sigma_terms(params: &OptimalParams) -> SigmaTerms {
    let mut sig = SigmaTerms {
        sigma1: 0.0,
        sigma2: 0.0,
        sigma3: 0.0,
        sigma_e: 0.0,
    };
    for k in 0..=params.n_h {
        let ds = k as f64 * params.s_t;
        sig.sigma1 += ds;
        sig.sigma2 += ds * ds;
        sig.sigma3 += ds * ds * ds;
        sig.sigma_e += ds * (-params.lambda * ds).exp();
    }
    sig
}

/// `α = 1 - c(s)·y` and `γ = ω̄ / v`.
pub fn alpha_gamma(meas: &Measurements, speed: f64) -> Result<(f64, f64), ControlError> {
    if !(speed > 0.0) {
        return Err(ControlError::Parameter(format!("speed must be > 0, got {speed}")));
    }
    let alpha = 1.0 - meas.curvature_now * meas.frenet.y;
    if alpha.abs() < SINGULARITY_EPS || !alpha.is_finite() {
        return Err(ControlError::CurvatureSingularity(alpha.abs()));
    }
    Ok((alpha, meas.omega_bar / speed))
}

fn check_heading(theta: f64) -> Result<(), ControlError> {
    if theta.abs() < std::f64::consts::FRAC_PI_2 {
        Ok(())
    } else {
        Err(ControlError::Domain(theta))
    }
}

/// Spatial derivative of the implement error.
pub fn e_i_prime(
    theta: f64,
    alpha: f64,
    gamma: f64,
    imp: &ImplementConfig,
) -> Result<f64, ControlError> {
    check_heading(theta)?;
    let t = theta.tan();
    Ok(alpha * (t + gamma * (imp.offset_s - imp.offset_y * t)))
}

/// Second spatial derivative of the implement error, neglecting yaw
/// acceleration and squared yaw rate. `curvature` is the look-ahead value.
pub fn e_i_second(
    theta: f64,
    alpha: f64,
    steer: f64,
    curvature: f64,
    wheelbase: f64,
) -> Result<f64, ControlError> {
    check_heading(theta)?;
    if alpha.abs() < SINGULARITY_EPS {
        return Err(ControlError::CurvatureSingularity(alpha.abs()));
    }
    let cos_t = theta.cos();
    Ok(alpha * alpha / cos_t * (steer.tan() / wheelbase - curvature * cos_t / alpha))
}

/// Closed-form minimizer of the horizon cost in the `ξ` variable.
pub fn xi_optimal(
    e_i: f64,
    alpha: f64,
    gamma: f64,
    imp: &ImplementConfig,
    e_i_second: f64,
    sig: &SigmaTerms,
) -> Result<f64, ControlError> {
    if !(sig.sigma2 > 0.0) {
        return Err(ControlError::Parameter("sigma2 must be > 0 (empty horizon)".into()));
    }
    Ok(-(e_i * sig.sigma1 + alpha * gamma * imp.offset_s * sig.sigma2 + e_i_second * sig.sigma3
        - e_i * sig.sigma_e)
        / sig.sigma2)
}

/// Horizon cost as a function of `ξ`, summed over `k = 1..=n_h`.
pub fn horizon_cost(
    xi: f64,
    e_i: f64,
    alpha: f64,
    gamma: f64,
    imp: &ImplementConfig,
    e_i_second: f64,
    params: &OptimalParams,
) -> f64 {
    (1..=params.n_h)
        .map(|k| {
            let ds = k as f64 * params.s_t;
            let predicted = e_i + (xi + alpha * gamma * imp.offset_s) * ds + e_i_second * ds * ds;
            let r = predicted - e_i * (-params.lambda * ds).exp();
            r * r
        })
        .sum()
}

/// Undo the change of variable: heading deviation realizing `ξ`.
pub fn desired_heading(
    xi: f64,
    alpha: f64,
    gamma: f64,
    imp: &ImplementConfig,
) -> Result<f64, ControlError> {
    let lever = 1.0 - gamma * imp.offset_y;
    if lever.abs() < SINGULARITY_EPS || !lever.is_finite() {
        return Err(ControlError::OffsetSingularity(lever.abs()));
    }
    if alpha.abs() < SINGULARITY_EPS {
        return Err(ControlError::CurvatureSingularity(alpha.abs()));
    }
    Ok((xi / (alpha * lever)).atan())
}

/// Steering law driving `θ̃` toward `theta_desired`. Returns the clamped
/// angle and whether clamping was applied.
pub fn steering_command(
    theta: f64,
    theta_desired: f64,
    curvature: f64,
    y: f64,
    k_theta: f64,
    vehicle: &VehicleConfig,
) -> Result<(f64, bool), ControlError> {
    let alpha = 1.0 - curvature * y;
    if alpha.abs() < SINGULARITY_EPS || !alpha.is_finite() {
        return Err(ControlError::CurvatureSingularity(alpha.abs()));
    }
    let e_theta = theta - theta_desired;
    let raw = (vehicle.wheelbase * (-k_theta * e_theta + curvature) * theta.cos() / alpha).atan();
    Ok(clamp_steer(raw, vehicle))
}

pub(crate) fn clamp_steer(raw: f64, vehicle: &VehicleConfig) -> (f64, bool) {
    let clamped = raw.clamp(-vehicle.steer_limit, vehicle.steer_limit);
    (clamped, clamped != raw)
}

pub fn optimal_control_step(
    meas: &Measurements,
    params: &OptimalParams,
    imp: &ImplementConfig,
    vehicle: &VehicleConfig,
) -> Result<ControlCommand, ControlError> {
    let theta = meas.frenet.theta_tilde;
    let (alpha, gamma) = alpha_gamma(meas, vehicle.speed)?;
    let slope = e_i_prime(theta, alpha, gamma, imp)?;
    let curvature_term = e_i_second(theta, alpha, meas.steer, meas.curvature_ahead, vehicle.wheelbase)?;
    let sig = sigma_terms(params);
    let xi = xi_optimal(meas.e_i, alpha, gamma, imp, curvature_term, &sig)?;
    let theta_desired = desired_heading(xi, alpha, gamma, imp)?;
    let (delta, clamped) = steering_command(
        theta,
        theta_desired,
        meas.curvature_now,
        meas.frenet.y,
        params.k_theta,
        vehicle,
    )?;
    Ok(ControlCommand {
        delta_desired: delta,
        theta_desired,
        xi_desired: xi,
        clamped,
        diagnostics: Diagnostics {
            e_i: meas.e_i,
            e_i_prime: slope,
            e_i_second: curvature_term,
            alpha,
            gamma,
            j_residual: horizon_cost(xi, meas.e_i, alpha, gamma, imp, curvature_term, params),
            n_h: params.n_h,
        },
    })
}

//! Steering controllers for the implement point.
//!
//! Every controller maps [`Measurements`] to a [`ControlCommand`] through a
//! pure function of the measurements and its parameters. [`Controller`]
//! wraps one of them with the fail-safe hold used in closed loop.

pub mod baseline;
pub mod optimal;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{
    backstepping_control_step, lateral_servoing_control_step, BaselineParams,
};
pub use optimal::{
    alpha_gamma, desired_heading, e_i_prime, e_i_second, horizon_cost, optimal_control_step,
    sigma_terms, steering_command, xi_optimal, OptimalParams, SigmaTerms,
};

pub use crate::vehicle::SINGULARITY_EPS;
use crate::vehicle::{ImplementConfig, Measurements, VehicleConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("curvilinear singularity: |1 - c*y| = {0:.3e}")]
    CurvatureSingularity(f64),
    #[error("implement lever singularity: |1 - gamma*I_y| = {0:.3e}")]
    OffsetSingularity(f64),
    #[error("heading deviation {0} rad outside (-pi/2, pi/2)")]
    Domain(f64),
    #[error("invalid controller parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub e_i: f64,
    pub e_i_prime: f64,
    pub e_i_second: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Horizon cost at the chosen `ξ` (zero for the baselines).
    pub j_residual: f64,
    /// Horizon sample count actually used (zero for the baselines).
    pub n_h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub delta_desired: f64,
    pub theta_desired: f64,
    pub xi_desired: f64,
    /// The raw steering law exceeded the steering limit.
    pub clamped: bool,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Optimal,
    Backstepping,
    LateralServoing,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::LateralServoing, Method::Backstepping, Method::Optimal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Backstepping => "backstepping",
            Method::LateralServoing => "lateral_servoing",
        }
    }

    /// Baselines whose exact laws are reconstructions.
    pub fn is_reconstruction(&self) -> bool {
        !matches!(self, Method::Optimal)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fully parameterized control law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ControlLaw {
    Optimal(OptimalParams),
    Backstepping(BaselineParams),
    LateralServoing(BaselineParams),
}

impl ControlLaw {
    pub fn method(&self) -> Method {
        match self {
            ControlLaw::Optimal(_) => Method::Optimal,
            ControlLaw::Backstepping(_) => Method::Backstepping,
            ControlLaw::LateralServoing(_) => Method::LateralServoing,
        }
    }

    /// Look-ahead distance for the horizon curvature query.
    pub fn horizon(&self) -> f64 {
        match self {
            ControlLaw::Optimal(p) => p.s_h,
            _ => 0.0,
        }
    }

    pub fn compute(
        &self,
        meas: &Measurements,
        imp: &ImplementConfig,
        vehicle: &VehicleConfig,
    ) -> Result<ControlCommand, ControlError> {
        match self {
            ControlLaw::Optimal(p) => optimal_control_step(meas, p, imp, vehicle),
            ControlLaw::Backstepping(p) => backstepping_control_step(meas, p, imp, vehicle),
            ControlLaw::LateralServoing(p) => lateral_servoing_control_step(meas, p, imp, vehicle),
        }
    }
}

/// Output of one closed-loop control invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub command: ControlCommand,
    /// Set when the law failed and the previous command was held.
    pub fault: Option<ControlError>,
}

/// A control law plus the last valid command, for fail-safe hold.
#[derive(Debug, Clone)]
pub struct Controller {
    law: ControlLaw,
    imp: ImplementConfig,
    vehicle: VehicleConfig,
    last: ControlCommand,
}

impl Controller {
    pub fn new(law: ControlLaw, imp: ImplementConfig, vehicle: VehicleConfig) -> Self {
        Self {
            law,
            imp,
            vehicle,
            last: ControlCommand::default(),
        }
    }

    pub fn law(&self) -> &ControlLaw {
        &self.law
    }

    pub fn step(&mut self, meas: &Measurements) -> ControlOutput {
        let result = self
            .law
            .compute(meas, &self.imp, &self.vehicle)
            .and_then(|cmd| {
                if cmd.delta_desired.is_finite() && cmd.theta_desired.is_finite() {
                    Ok(cmd)
                } else {
                    Err(ControlError::Parameter("non-finite command".into()))
                }
            });
        match result {
            Ok(cmd) => {
                self.last = cmd;
                ControlOutput {
                    command: cmd,
                    fault: None,
                }
            }
            Err(e) => ControlOutput {
                command: self.last,
                fault: Some(e),
            },
        }
    }
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlError, ControlLaw};
use crate::path::{build_experiment_path, FrenetState, PathError, PathSpec, ReferencePath};
use crate::vehicle::{ConfigError, ImplementConfig, VehicleConfig};

/// A scenario that failed validation. `key` names the offending setting in
/// `block.key` form.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{key}: {message}")]
pub struct ScenarioError {
    pub key: String,
    pub message: String,
}

impl ScenarioError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<PathError> for ScenarioError {
    fn from(e: PathError) -> Self {
        let key = match &e {
            PathError::Discontinuity { junction, .. } => format!("path.segment[{}]", junction + 1),
            PathError::InvalidSegment { index, .. } => format!("path.segment[{index}]"),
            _ => "path".to_string(),
        };
        Self::new(key, e.to_string())
    }
}

fn config_err(block: &str) -> impl Fn(ConfigError) -> ScenarioError + '_ {
    move |e| ScenarioError::new(format!("{block}.{}", e.field), e.reason)
}

/// Optional zero-mean Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "NoiseConfig::default_y", rename = "y_std_m")]
    pub y_std: f64,
    #[serde(default = "NoiseConfig::default_theta", rename = "theta_std_rad")]
    pub theta_std: f64,
    #[serde(default = "NoiseConfig::default_omega", rename = "omega_std_rad_s")]
    pub omega_std: f64,
}

impl NoiseConfig {
    fn default_y() -> f64 {
        0.01
    }
    fn default_theta() -> f64 {
        0.005
    }
    fn default_omega() -> f64 {
        0.01
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            y_std: Self::default_y(),
            theta_std: Self::default_theta(),
            omega_std: Self::default_omega(),
        }
    }
}

/// How the controller estimates the implement error from `(y, θ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Lateral coordinate along the path normal at the robot's abscissa.
    LocalAxis,
    /// Distance to the osculating circle at the robot's abscissa.
    #[default]
    Osculating,
}

/// Initial lateral placement: either the rear-axle offset or the implement
/// error it should produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLateral {
    CenterOffset(f64),
    ImplementError(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub s: f64,
    pub lateral: InitialLateral,
    pub theta_tilde: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            s: 0.0,
            lateral: InitialLateral::ImplementError(0.5),
            theta_tilde: 0.0,
        }
    }
}

impl InitialState {
    /// Frenet state of the rear-axle center.
    pub fn frenet(&self, imp: &ImplementConfig) -> FrenetState {
        let y = match self.lateral {
            InitialLateral::CenterOffset(y) => y,
            InitialLateral::ImplementError(e) => {
                let (sin_t, cos_t) = self.theta_tilde.sin_cos();
                e - imp.offset_s * sin_t - imp.offset_y * cos_t
            }
        };
        FrenetState {
            s: self.s,
            y,
            theta_tilde: self.theta_tilde,
        }
    }
}

/// Settings that shape the summary statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    /// Distance travelled before statistics start (m).
    pub exclude_initial_m: f64,
    /// Half-width of the window around each curvature jump is this plus
    /// the controller horizon (m).
    pub overshoot_margin_m: f64,
    /// Override for the overshoot half-window (m).
    pub overshoot_half_window_m: Option<f64>,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            exclude_initial_m: 5.0,
            overshoot_margin_m: 3.0,
            overshoot_half_window_m: None,
        }
    }
}

/// A fully resolved closed-loop simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub path: PathSpec,
    pub vehicle: VehicleConfig,
    pub implement: ImplementConfig,
    pub law: ControlLaw,
    pub initial: InitialState,
    /// Distance to travel; `None` runs to half a meter before the path end.
    pub run_length: Option<f64>,
    pub dt: f64,
    pub control_period: f64,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub error_model: ErrorModel,
    pub summary: SummaryConfig,
}

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_CONTROL_PERIOD: f64 = 0.1;
const END_MARGIN: f64 = 0.5;

impl Scenario {
    pub fn new(name: impl Into<String>, path: PathSpec, implement: ImplementConfig, law: ControlLaw) -> Self {
        Self {
            name: name.into(),
            path,
            vehicle: VehicleConfig::default(),
            implement,
            law,
            initial: InitialState::default(),
            run_length: None,
            dt: DEFAULT_DT,
            control_period: DEFAULT_CONTROL_PERIOD,
            seed: 0,
            noise: NoiseConfig::default(),
            error_model: ErrorModel::default(),
            summary: SummaryConfig::default(),
        }
    }

    /// Plant steps per control invocation.
    pub fn steps_per_control(&self) -> usize {
        (self.control_period / self.dt).round() as usize
    }

    pub fn resolved_run_length(&self, path: &ReferencePath) -> f64 {
        self.run_length
            .unwrap_or(path.total_length() - self.initial.s - END_MARGIN)
    }

    /// Check every scenario invariant and build the path.
    pub fn validate(&self) -> Result<ReferencePath, ScenarioError> {
        let path = build_experiment_path(&self.path)?;
        self.vehicle.validate().map_err(config_err("vehicle"))?;
        self.implement.validate(&path).map_err(config_err("implement"))?;
        validate_law(&self.law)?;

        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ScenarioError::new("run.dt_s", "must be > 0"));
        }
        if !(self.control_period >= self.dt) {
            return Err(ScenarioError::new("run.control_period_s", "must be >= dt_s"));
        }
        let ratio = self.control_period / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(ScenarioError::new(
                "run.control_period_s",
                format!("must be an integer multiple of dt_s (ratio {ratio})"),
            ));
        }
        let total = path.total_length();
        if !(0.0..total).contains(&self.initial.s) {
            return Err(ScenarioError::new("run.initial_s_m", format!("must lie in [0, {total})")));
        }
        if !(self.initial.theta_tilde.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(ScenarioError::new("run.initial_theta_rad", "must lie in (-pi/2, pi/2)"));
        }
        let run = self.resolved_run_length(&path);
        if !(run > 0.0) {
            return Err(ScenarioError::new("run.length_m", format!("must be > 0, got {run}")));
        }
        if self.initial.s + run > total + 1e-9 {
            return Err(ScenarioError::new(
                "run.length_m",
                format!("run of {run} m from s = {} exceeds path length {total}", self.initial.s),
            ));
        }
        let n = &self.noise;
        for (key, v) in [
            ("noise.y_std_m", n.y_std),
            ("noise.theta_std_rad", n.theta_std),
            ("noise.omega_std_rad_s", n.omega_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ScenarioError::new(key, "must be >= 0"));
            }
        }
        let s = &self.summary;
        if !(s.exclude_initial_m >= 0.0 && s.overshoot_margin_m >= 0.0) {
            return Err(ScenarioError::new("summary", "windows must be >= 0"));
        }
        Ok(path)
    }
}

fn validate_law(law: &ControlLaw) -> Result<(), ScenarioError> {
    let check = |key: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ScenarioError::new(format!("controller.{key}"), format!("must be > 0, got {v}")))
        }
    };
    match law {
        ControlLaw::Optimal(p) => {
            check("lambda", p.lambda)?;
            check("k_theta", p.k_theta)?;
            check("s_h_m", p.s_h)?;
            check("s_t_m", p.s_t)?;
            crate::control::OptimalParams::new(p.lambda, p.k_theta, p.s_h, p.s_t)
                .map_err(|e: ControlError| ScenarioError::new("controller.s_t_m", e.to_string()))?;
        }
        ControlLaw::Backstepping(p) | ControlLaw::LateralServoing(p) => {
            check("k_y", p.k_y)?;
            check("k_theta", p.k_theta)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::BaselineParams;

    fn base() -> Scenario {
        Scenario::new(
            "t",
            PathSpec::preset("exp1").unwrap(),
            ImplementConfig::new(-2.0, -0.5),
            ControlLaw::Backstepping(BaselineParams::new(0.2, 0.6).unwrap()),
        )
    }

    #[test]
    fn initial_implement_error_maps_to_axle_offset() {
        let imp = ImplementConfig::new(-2.0, -0.5);
        let init = InitialState { s: 0.0, lateral: InitialLateral::ImplementError(0.5), theta_tilde: 0.0 };
        assert_eq!(init.frenet(&imp).y, 1.0);
        let tilted = InitialState { theta_tilde: 0.1, ..init };
        let f = tilted.frenet(&imp);
        assert!((f.y - 0.5 - 2.0 * 0.1f64.sin() - 0.5 * 0.1f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn defaults_validate() {
        let scn = base();
        let path = scn.validate().unwrap();
        assert_eq!(scn.steps_per_control(), 10);
        assert!((scn.resolved_run_length(&path) - (path.total_length() - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn validation_names_the_key() {
        type Mutation = Box<dyn Fn(&mut Scenario)>;
        let cases: Vec<(Mutation, &str)> = vec![
            (Box::new(|s| s.control_period = 0.105), "run.control_period_s"),
            (Box::new(|s| s.control_period = 0.001), "run.control_period_s"),
            (Box::new(|s| s.initial.s = 1e4), "run.initial_s_m"),
            (Box::new(|s| s.initial.theta_tilde = 2.0), "run.initial_theta_rad"),
            (Box::new(|s| s.run_length = Some(1e4)), "run.length_m"),
            (Box::new(|s| s.noise.y_std = -1.0), "noise.y_std_m"),
            (Box::new(|s| s.summary.exclude_initial_m = -1.0), "summary"),
            (
                Box::new(|s| s.law = ControlLaw::Backstepping(BaselineParams { k_y: 0.0, k_theta: 1.0 })),
                "controller.k_y",
            ),
        ];
        for (mutate, key) in cases {
            let mut scn = base();
            mutate(&mut scn);
            assert_eq!(scn.validate().unwrap_err().key, key);
        }
    }
}

//! Scenario files: TOML documents with the blocks `path`, `vehicle`,
//! `implement`, `controller`, `run` and `noise`.
//!
//! ```toml
//! format_version = 1
//! name = "exp1_rear_optimal"
//!
//! [path]
//! preset = "exp1"
//!
//! [controller]
//! preset = "table1_rear_optimal"
//! ```
//!
//! Unknown keys are rejected. Every block except `controller` is optional:
//! the path defaults to `exp1`, the vehicle to the built-in defaults, the
//! implement to the controller preset's placement (rear when the controller
//! is given inline), and `run`/`noise` to the harness defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{BaselineParams, ControlLaw, Method, OptimalParams};
use crate::harness::{
    ErrorModel, InitialLateral, InitialState, NoiseConfig, Scenario, ScenarioError, SummaryConfig,
    DEFAULT_CONTROL_PERIOD, DEFAULT_DT,
};
use crate::path::{PathSpec, SegmentDescriptor, StartPose};
use crate::presets::{self, Placement};
use crate::vehicle::{ImplementConfig, VehicleConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartPose>,
    #[serde(default, rename = "segment", skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleBlock {
    pub wheelbase_m: Option<f64>,
    pub steer_limit_rad: Option<f64>,
    pub steer_rate_limit_rad_s: Option<f64>,
    pub speed_m_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplementBlock {
    pub placement: Option<Placement>,
    #[serde(rename = "I_s_m")]
    pub i_s_m: Option<f64>,
    #[serde(rename = "I_y_m")]
    pub i_y_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerBlock {
    pub preset: Option<String>,
    pub method: Option<Method>,
    pub lambda: Option<f64>,
    pub k_theta: Option<f64>,
    pub k_y: Option<f64>,
    pub s_h_m: Option<f64>,
    pub s_t_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub length_m: Option<f64>,
    pub dt_s: Option<f64>,
    pub control_period_s: Option<f64>,
    pub seed: Option<u64>,
    pub initial_s_m: Option<f64>,
    /// Initial implement error; exclusive with `initial_y_m`.
    #[serde(rename = "initial_e_I_m")]
    pub initial_e_i_m: Option<f64>,
    /// Initial rear-axle lateral offset; exclusive with `initial_e_I_m`.
    pub initial_y_m: Option<f64>,
    pub initial_theta_rad: Option<f64>,
    pub error_model: Option<ErrorModel>,
    pub exclude_initial_m: Option<f64>,
    pub overshoot_margin_m: Option<f64>,
    pub overshoot_half_window_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub enabled: Option<bool>,
    pub y_std_m: Option<f64>,
    pub theta_std_rad: Option<f64>,
    pub omega_std_rad_s: Option<f64>,
}

/// A parsed, not yet resolved, scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: u32,
    pub name: Option<String>,
    #[serde(default)]
    pub path: PathBlock,
    #[serde(default)]
    pub vehicle: VehicleBlock,
    #[serde(default)]
    pub implement: ImplementBlock,
    pub controller: ControllerBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioFileError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioFileError::Parse(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(ScenarioError::new(
                "format_version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", file.format_version),
            )
            .into());
        }
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Fill in defaults and presets. The result still needs
    /// [`Scenario::validate`].
    pub fn resolve(&self, fallback_name: &str) -> Result<Scenario, ScenarioError> {
        let path = resolve_path(&self.path)?;
        let (law, preset_placement) = resolve_law(&self.controller)?;

        let d = VehicleConfig::default();
        let v = &self.vehicle;
        let vehicle = VehicleConfig {
            wheelbase: v.wheelbase_m.unwrap_or(d.wheelbase),
            steer_limit: v.steer_limit_rad.unwrap_or(d.steer_limit),
            steer_rate_limit: v.steer_rate_limit_rad_s.unwrap_or(d.steer_rate_limit),
            speed: v.speed_m_s.unwrap_or(d.speed),
        };

        let base = self
            .implement
            .placement
            .or(preset_placement)
            .unwrap_or(Placement::Rear)
            .implement();
        let implement = ImplementConfig::new(
            self.implement.i_s_m.unwrap_or(base.offset_s),
            self.implement.i_y_m.unwrap_or(base.offset_y),
        );

        let r = &self.run;
        let lateral = match (r.initial_e_i_m, r.initial_y_m) {
            (Some(_), Some(_)) => {
                return Err(ScenarioError::new(
                    "run.initial_y_m",
                    "give either initial_e_I_m or initial_y_m, not both",
                ))
            }
            (Some(e), None) => InitialLateral::ImplementError(e),
            (None, Some(y)) => InitialLateral::CenterOffset(y),
            (None, None) => InitialState::default().lateral,
        };
        let initial = InitialState {
            s: r.initial_s_m.unwrap_or(0.0),
            lateral,
            theta_tilde: r.initial_theta_rad.unwrap_or(0.0),
        };
        let ds = SummaryConfig::default();
        let dn = NoiseConfig::default();
        let n = &self.noise;
        let name = self.name.clone().unwrap_or_else(|| fallback_name.to_string());

        Ok(Scenario {
            name,
            path,
            vehicle,
            implement,
            law,
            initial,
            run_length: r.length_m,
            dt: r.dt_s.unwrap_or(DEFAULT_DT),
            control_period: r.control_period_s.unwrap_or(DEFAULT_CONTROL_PERIOD),
            seed: r.seed.unwrap_or(0),
            noise: NoiseConfig {
                enabled: n.enabled.unwrap_or(dn.enabled),
                y_std: n.y_std_m.unwrap_or(dn.y_std),
                theta_std: n.theta_std_rad.unwrap_or(dn.theta_std),
                omega_std: n.omega_std_rad_s.unwrap_or(dn.omega_std),
            },
            error_model: r.error_model.unwrap_or_default(),
            summary: SummaryConfig {
                exclude_initial_m: r.exclude_initial_m.unwrap_or(ds.exclude_initial_m),
                overshoot_margin_m: r.overshoot_margin_m.unwrap_or(ds.overshoot_margin_m),
                overshoot_half_window_m: r.overshoot_half_window_m.or(ds.overshoot_half_window_m),
            },
        })
    }

    /// Parse, resolve and validate in one go.
    pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, ScenarioFileError> {
        let file = Self::load(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        let scn = file.resolve(&stem)?;
        scn.validate()?;
        Ok(scn)
    }
}

fn resolve_path(block: &PathBlock) -> Result<PathSpec, ScenarioError> {
    match (&block.preset, block.segments.is_empty()) {
        (Some(_), false) => Err(ScenarioError::new(
            "path.preset",
            "give either a preset or a segment list, not both",
        )),
        (Some(name), true) => {
            let mut spec = PathSpec::preset(name)
                .ok_or_else(|| ScenarioError::new("path.preset", format!("unknown path preset '{name}'")))?;
            if let Some(start) = block.start {
                spec.start = start;
            }
            Ok(spec)
        }
        (None, false) => Ok(PathSpec {
            start: block.start.unwrap_or_default(),
            segments: block.segments.clone(),
        }),
        (None, true) => Ok(PathSpec::exp1()),
    }
}

/// Control law plus the placement implied by a named preset.
fn resolve_law(block: &ControllerBlock) -> Result<(ControlLaw, Option<Placement>), ScenarioError> {
    let (base, placement) = match &block.preset {
        Some(name) => {
            let p = presets::lookup(name).ok_or_else(|| {
                ScenarioError::new("controller.preset", format!("unknown controller preset '{name}'"))
            })?;
            (Some(p.law), p.placement)
        }
        None => (None, None),
    };
    let method = match (block.method, base) {
        (Some(m), Some(law)) if m != law.method() => {
            return Err(ScenarioError::new(
                "controller.method",
                format!("'{m}' contradicts preset method '{}'", law.method()),
            ))
        }
        (Some(m), _) => m,
        (None, Some(law)) => law.method(),
        (None, None) => {
            return Err(ScenarioError::new("controller.method", "missing (give a method or a preset)"))
        }
    };
    let missing = |key: &str| ScenarioError::new(format!("controller.{key}"), "missing");
    let unused = |key: &str| {
        ScenarioError::new(format!("controller.{key}"), format!("not used by method '{method}'"))
    };

    let law = match method {
        Method::Optimal => {
            if block.k_y.is_some() {
                return Err(unused("k_y"));
            }
            let b = match base {
                Some(ControlLaw::Optimal(p)) => Some(p),
                _ => None,
            };
            let lambda = block.lambda.or(b.map(|p| p.lambda)).ok_or_else(|| missing("lambda"))?;
            let k_theta = block.k_theta.or(b.map(|p| p.k_theta)).ok_or_else(|| missing("k_theta"))?;
            let s_h = block.s_h_m.or(b.map(|p| p.s_h)).ok_or_else(|| missing("s_h_m"))?;
            let s_t = block.s_t_m.or(b.map(|p| p.s_t)).ok_or_else(|| missing("s_t_m"))?;
            // range checks happen in Scenario::validate so errors name the key
            ControlLaw::Optimal(OptimalParams {
                lambda,
                k_theta,
                s_h,
                s_t,
                n_h: if s_t > 0.0 { (s_h / s_t).round().max(0.0) as usize } else { 0 },
            })
        }
        Method::Backstepping | Method::LateralServoing => {
            for (key, v) in [("lambda", block.lambda), ("s_h_m", block.s_h_m), ("s_t_m", block.s_t_m)] {
                if v.is_some() {
                    return Err(unused(key));
                }
            }
            let b = match base {
                Some(ControlLaw::Backstepping(p)) | Some(ControlLaw::LateralServoing(p)) => Some(p),
                _ => None,
            };
            let p = BaselineParams {
                k_y: block.k_y.or(b.map(|p| p.k_y)).ok_or_else(|| missing("k_y"))?,
                k_theta: block.k_theta.or(b.map(|p| p.k_theta)).ok_or_else(|| missing("k_theta"))?,
            };
            if method == Method::Backstepping {
                ControlLaw::Backstepping(p)
            } else {
                ControlLaw::LateralServoing(p)
            }
        }
    };
    Ok((law, placement))
}

/// Fully resolved configuration, as echoed by `validate`.
pub fn resolved_toml(scn: &Scenario) -> String {
    let controller = match scn.law {
        ControlLaw::Optimal(p) => ControllerBlock {
            method: Some(Method::Optimal),
            lambda: Some(p.lambda),
            k_theta: Some(p.k_theta),
            s_h_m: Some(p.s_h),
            s_t_m: Some(p.s_t),
            ..Default::default()
        },
        ControlLaw::Backstepping(p) | ControlLaw::LateralServoing(p) => ControllerBlock {
            method: Some(scn.law.method()),
            k_y: Some(p.k_y),
            k_theta: Some(p.k_theta),
            ..Default::default()
        },
    };
    let (initial_e_i_m, initial_y_m) = match scn.initial.lateral {
        InitialLateral::ImplementError(e) => (Some(e), None),
        InitialLateral::CenterOffset(y) => (None, Some(y)),
    };
    let file = ScenarioFile {
        format_version: FORMAT_VERSION,
        name: Some(scn.name.clone()),
        path: PathBlock {
            preset: None,
            start: Some(scn.path.start),
            segments: scn.path.segments.clone(),
        },
        vehicle: VehicleBlock {
            wheelbase_m: Some(scn.vehicle.wheelbase),
            steer_limit_rad: Some(scn.vehicle.steer_limit),
            steer_rate_limit_rad_s: Some(scn.vehicle.steer_rate_limit),
            speed_m_s: Some(scn.vehicle.speed),
        },
        implement: ImplementBlock {
            placement: None,
            i_s_m: Some(scn.implement.offset_s),
            i_y_m: Some(scn.implement.offset_y),
        },
        controller,
        run: RunBlock {
            length_m: scn.run_length,
            dt_s: Some(scn.dt),
            control_period_s: Some(scn.control_period),
            seed: Some(scn.seed),
            initial_s_m: Some(scn.initial.s),
            initial_e_i_m,
            initial_y_m,
            initial_theta_rad: Some(scn.initial.theta_tilde),
            error_model: Some(scn.error_model),
            exclude_initial_m: Some(scn.summary.exclude_initial_m),
            overshoot_margin_m: Some(scn.summary.overshoot_margin_m),
            overshoot_half_window_m: scn.summary.overshoot_half_window_m,
        },
        noise: NoiseBlock {
            enabled: Some(scn.noise.enabled),
            y_std_m: Some(scn.noise.y_std),
            theta_std_rad: Some(scn.noise.theta_std),
            omega_std_rad_s: Some(scn.noise.omega_std),
        },
    };
    toml::to_string(&file).expect("scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, ScenarioFileError> {
        let scn = ScenarioFile::parse(text)?.resolve("t")?;
        scn.validate()?;
        Ok(scn)
    }

    fn key_of(e: ScenarioFileError) -> String {
        match e {
            ScenarioFileError::Invalid(e) => e.key,
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn preset_only_file() {
        let scn = parse(
            "format_version = 1\n[path]\npreset = \"exp1\"\n[controller]\npreset = \"table1_front_optimal\"\n",
        )
        .unwrap();
        assert_eq!(scn.implement, ImplementConfig::new(2.0, -0.5));
        assert_eq!(scn.law, presets::table1_law(Placement::Front, Method::Optimal));
        assert_eq!(scn.name, "t");
    }

    #[test]
    fn inline_controller_with_segments() {
        let scn = parse(
            r#"
format_version = 1
[path]
start = { x_m = 1.0, y_m = 2.0, heading_rad = 0.5 }
[[path.segment]]
kind = "line"
length_m = 30.0
[implement]
I_s_m = -1.5
I_y_m = 0.0
[controller]
method = "backstepping"
k_y = 0.3
k_theta = 0.7
[run]
initial_y_m = 0.2
seed = 9
"#,
        )
        .unwrap();
        assert_eq!(scn.law, ControlLaw::Backstepping(BaselineParams { k_y: 0.3, k_theta: 0.7 }));
        assert_eq!(scn.initial.lateral, InitialLateral::CenterOffset(0.2));
        assert_eq!(scn.seed, 9);
        assert_eq!(scn.path.start.heading_rad, 0.5);
    }

    #[test]
    fn preset_values_can_be_overridden() {
        let scn = parse(
            "format_version = 1\n[controller]\npreset = \"table1_rear_optimal\"\ns_h_m = 3.0\n",
        )
        .unwrap();
        match scn.law {
            ControlLaw::Optimal(p) => assert_eq!((p.s_h, p.lambda, p.n_h), (3.0, 0.1, 20)),
            _ => panic!("wrong law"),
        }
    }

    #[test]
    fn negative_horizon_names_the_key() {
        let e = parse("format_version = 1\n[controller]\npreset = \"table1_rear_optimal\"\ns_h_m = -1.0\n")
            .unwrap_err();
        assert_eq!(key_of(e), "controller.s_h_m");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse("format_version = 1\n[controller]\npreset = \"table1_rear_optimal\"\nhorizon = 2\n")
            .unwrap_err();
        assert!(matches!(e, ScenarioFileError::Parse(ref m) if m.contains("horizon")), "{e}");
        let e = parse("format_version = 1\nbogus = 1\n[controller]\nmethod = \"optimal\"\n").unwrap_err();
        assert!(matches!(e, ScenarioFileError::Parse(_)));
    }

    #[test]
    fn version_is_checked() {
        let e = parse("format_version = 2\n[controller]\npreset = \"table1_rear_optimal\"\n").unwrap_err();
        assert_eq!(key_of(e), "format_version");
    }

    #[test]
    fn discontinuous_path_names_the_junction() {
        let e = parse(
            r#"
format_version = 1
[[path.segment]]
kind = "line"
length_m = 10.0
[[path.segment]]
kind = "line"
length_m = 10.0
start = { x_m = 10.0, y_m = 1.0, heading_rad = 0.0 }
[controller]
preset = "table1_rear_optimal"
"#,
        )
        .unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("junction 0"), "{msg}");
    }

    #[test]
    fn method_specific_keys() {
        let e = parse("format_version = 1\n[controller]\nmethod = \"backstepping\"\nk_y = 0.1\nk_theta = 0.1\ns_h_m = 1.0\n")
            .unwrap_err();
        assert_eq!(key_of(e), "controller.s_h_m");
        let e = parse("format_version = 1\n[controller]\nmethod = \"optimal\"\nlambda = 0.1\n").unwrap_err();
        assert_eq!(key_of(e), "controller.k_theta");
    }

    #[test]
    fn resolved_echo_parses_back_to_the_same_scenario() {
        let scn = parse("format_version = 1\n[path]\npreset = \"exp2\"\n[controller]\npreset = \"table2_sh_1_5\"\n")
            .unwrap();
        let echo = resolved_toml(&scn);
        let again = ScenarioFile::parse(&echo).unwrap().resolve("other").unwrap();
        assert_eq!(again, scn);
    }
}

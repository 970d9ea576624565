//! Named controller configurations for the two reference experiments.
//!
//! The curvature-transition comparison uses six configurations: three
//! methods, each with the implement mounted behind or ahead of the rear axle.
//! The horizon study uses seven predictive configurations with the implement
//! at the rear.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::control::{BaselineParams, ControlLaw, Method, OptimalParams};
use crate::vehicle::ImplementConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Rear,
    Front,
}

impl Placement {
    pub const ALL: [Placement; 2] = [Placement::Rear, Placement::Front];

    pub fn as_str(&self) -> &'static str {
        match self {
            Placement::Rear => "rear",
            Placement::Front => "front",
        }
    }

    pub fn implement(&self) -> ImplementConfig {
        match self {
            Placement::Rear => ImplementConfig::new(-2.0, -0.5),
            Placement::Front => ImplementConfig::new(2.0, -0.5),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Placement {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rear" => Ok(Placement::Rear),
            "front" => Ok(Placement::Front),
            other => Err(format!("unknown placement '{other}' (expected rear|front)")),
        }
    }
}

/// A named implement placement plus control law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: String,
    pub placement: Option<Placement>,
    pub implement: ImplementConfig,
    pub law: ControlLaw,
}

fn optimal(lambda: f64, k_theta: f64, s_h: f64, s_t: f64) -> ControlLaw {
    ControlLaw::Optimal(OptimalParams::new(lambda, k_theta, s_h, s_t).expect("preset parameters are valid"))
}

fn baseline(method: Method, k_y: f64, k_theta: f64) -> ControlLaw {
    let p = BaselineParams::new(k_y, k_theta).expect("preset gains are valid");
    match method {
        Method::Backstepping => ControlLaw::Backstepping(p),
        Method::LateralServoing => ControlLaw::LateralServoing(p),
        Method::Optimal => unreachable!(),
    }
}

/// Control law of one comparison configuration.
///
/// The lateral servo has no published gains; its gains give the closed loop
/// roughly 0.7 damping or more for each placement.
pub fn table1_law(placement: Placement, method: Method) -> ControlLaw {
    match (placement, method) {
        (Placement::Rear, Method::LateralServoing) => baseline(method, 0.2, 1.0),
        (Placement::Rear, Method::Backstepping) => baseline(method, 0.2, 0.6),
        (Placement::Rear, Method::Optimal) => optimal(0.1, 0.6, 2.0, 0.15),
        (Placement::Front, Method::LateralServoing) => baseline(method, 0.1, 0.5),
        (Placement::Front, Method::Backstepping) => baseline(method, 0.1, 0.5),
        (Placement::Front, Method::Optimal) => optimal(0.25, 0.3, 1.5, 0.15),
    }
}

pub fn table1(placement: Placement, method: Method) -> Preset {
    Preset {
        name: format!("table1_{placement}_{method}"),
        placement: Some(placement),
        implement: placement.implement(),
        law: table1_law(placement, method),
    }
}

/// All six comparison configurations, rear first.
pub fn table1_all() -> Vec<Preset> {
    Placement::ALL
        .iter()
        .flat_map(|&p| Method::ALL.iter().map(move |&m| table1(p, m)))
        .collect()
}

/// `(s_h, lambda, k_theta)` rows of the horizon study; `s_t = 0.10 m`.
pub const TABLE2_ROWS: [(f64, f64, f64); 7] = [
    (0.5, 0.15, 0.35),
    (1.0, 0.15, 0.35),
    (1.5, 0.175, 0.35),
    (2.0, 0.175, 0.4),
    (2.5, 0.2, 0.4),
    (3.0, 0.2, 0.6),
    (3.5, 0.2, 0.6),
];

pub const TABLE2_STEP: f64 = 0.10;

pub fn table2_params() -> Vec<OptimalParams> {
    TABLE2_ROWS
        .iter()
        .map(|&(s_h, lambda, k_theta)| {
            OptimalParams::new(lambda, k_theta, s_h, TABLE2_STEP).expect("preset parameters are valid")
        })
        .collect()
}

/// Preset name of a horizon-study row, e.g. `table2_sh_2_0`.
pub fn table2_name(s_h: f64) -> String {
    format!("table2_sh_{}", format!("{s_h:.1}").replace('.', "_"))
}

pub fn table2_all() -> Vec<Preset> {
    table2_params()
        .into_iter()
        .map(|p| Preset {
            name: table2_name(p.s_h),
            placement: Some(Placement::Rear),
            implement: Placement::Rear.implement(),
            law: ControlLaw::Optimal(p),
        })
        .collect()
}

pub fn all() -> Vec<Preset> {
    let mut v = table1_all();
    v.extend(table2_all());
    v
}

pub fn lookup(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

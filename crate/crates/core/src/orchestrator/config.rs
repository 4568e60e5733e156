//! Scenario files: world layout, domain, controller and schedule.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::aip::{Condition, Domain, Thresholds};
use crate::cost::CostWeights;
use crate::error::{Error, Result};
use crate::model::ControllerConfig;
use crate::world::geometry::Aabb3;
use crate::world::{
    DynamicObstacle, Disturbance, GripperParams, GripperWorld, PlanarParams, PlanarWorld, StaticObstacle, WorldState,
};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Which alternatives survive the plan-list filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Push,
    Pull,
    #[default]
    Multimodal,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "push" => Ok(Mode::Push),
            "pull" => Ok(Mode::Pull),
            "multimodal" => Ok(Mode::Multimodal),
            other => Err(Error::config(format!("unknown mode {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesiredValue {
    pub factor: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledDisturbance {
    /// Simulated time in seconds.
    pub time: f64,
    pub event: Disturbance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDef {
    pub center: [f64; 3],
    pub half: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleDef {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldConfig {
    Planar {
        #[serde(default)]
        params: PlanarParams,
        robot: [f64; 2],
        object: [f64; 2],
        #[serde(default)]
        object_yaw: f64,
        goal: [f64; 2],
        #[serde(default)]
        goal_yaw: f64,
        #[serde(default)]
        static_obstacles: Vec<StaticObstacle>,
        #[serde(default)]
        dynamic_obstacles: Vec<ObstacleDef>,
    },
    Gripper {
        #[serde(default)]
        params: GripperParams,
        ee: [f64; 3],
        object: [f64; 3],
        target: [f64; 3],
        #[serde(default)]
        object_yaw: f64,
        #[serde(default)]
        boxes: Vec<BoxDef>,
    },
}

fn default_controller_rate() -> f64 {
    25.0
}
fn default_planner_rate() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    1.0
}
fn default_hold_ticks() -> usize {
    10
}
fn default_trials() -> usize {
    1
}
fn default_psi() -> Vec<f64> {
    vec![0.0, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format_version: u32,
    pub name: String,
    /// Domain file, relative to the scenario file.
    pub domain: PathBuf,
    pub desired: Vec<DesiredValue>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_controller_rate")]
    pub controller_rate: f64,
    #[serde(default = "default_planner_rate")]
    pub planner_rate: f64,
    /// Seconds of simulated time before a trial counts as failed.
    pub timeout: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Belief update confidence.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Ticks the success predicate must hold.
    #[serde(default = "default_hold_ticks")]
    pub success_hold_ticks: usize,
    /// Half width of the per-trial uniform jitter on the robot start.
    #[serde(default)]
    pub start_jitter: f64,
    /// Grasp tilts the reach action expands into.
    #[serde(default = "default_psi")]
    pub grasp_psi: Vec<f64>,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub world: WorldConfig,
    #[serde(default)]
    pub disturbances: Vec<ScheduledDisturbance>,
}

/// A scenario with its domain loaded and desired state resolved.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub domain: Domain,
    pub desired: Vec<Condition>,
    pub source: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn build_world(&self) -> WorldState {
        match &self.world {
            WorldConfig::Planar {
                params,
                robot,
                object,
                object_yaw,
                goal,
                goal_yaw,
                static_obstacles,
                dynamic_obstacles,
            } => {
                let mut w = PlanarWorld::new(params.clone(), *robot, *object, *object_yaw, *goal, *goal_yaw);
                w.static_obstacles = static_obstacles.clone();
                w.dynamic_obstacles = dynamic_obstacles
                    .iter()
                    .map(|d| DynamicObstacle {
                        position: d.position.into(),
                        velocity: d.velocity.into(),
                        radius: d.radius,
                    })
                    .collect();
                WorldState::Planar(w)
            }
            WorldConfig::Gripper {
                params,
                ee,
                object,
                target,
                object_yaw,
                boxes,
            } => {
                let mut w = GripperWorld::new(params.clone(), *ee, *object, *target);
                w.cubes[0].rotation = crate::world::gripper::yaw_rotation(*object_yaw);
                w.boxes = boxes
                    .iter()
                    .map(|b| Aabb3 {
                        center: Vector3::from(b.center),
                        half: Vector3::from(b.half),
                    })
                    .collect();
                WorldState::Gripper(w)
            }
        }
    }

    /// Controller ticks per planner refresh.
    pub fn tick_ratio(&self) -> u64 {
        ((self.controller_rate / self.planner_rate).round() as u64).max(1)
    }

    pub fn max_ticks(&self) -> u64 {
        (self.timeout * self.controller_rate).ceil() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported scenario format_version {} (expected {SCENARIO_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(Error::config("timeout must be positive"));
        }
        if !(self.controller_rate > 0.0 && self.planner_rate > 0.0) {
            return Err(Error::config("rates must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.desired.is_empty() {
            return Err(Error::config("desired state is empty"));
        }
        if !(self.lambda > 0.5 && self.lambda <= 1.0) {
            return Err(Error::config("lambda must lie in (0.5, 1]"));
        }
        if !(self.start_jitter >= 0.0) {
            return Err(Error::config("start_jitter must be non-negative"));
        }
        if self.grasp_psi.is_empty() || self.grasp_psi.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("grasp_psi must be non-empty values in [0, 1]"));
        }
        let mut last = f64::NEG_INFINITY;
        for d in &self.disturbances {
            if !(d.time >= last) || !d.time.is_finite() {
                return Err(Error::config("disturbance times must be finite and nondecreasing"));
            }
            last = d.time;
        }
        self.controller.validate()?;
        let world = self.build_world();
        if self.controller.control_dim() != world.control_dim() {
            return Err(Error::config(format!(
                "noise_scale has {} entries but the world takes {} controls",
                self.controller.control_dim(),
                world.control_dim()
            )));
        }
        if !world.within_bounds() {
            return Err(Error::config("initial layout lies outside the world bounds"));
        }
        Ok(())
    }
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig, domain: Domain, source: Option<PathBuf>) -> Result<Self> {
        config.validate()?;
        let desired = config
            .desired
            .iter()
            .map(|d| domain.condition(&d.factor, &d.value))
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            config,
            domain,
            desired,
            source,
        };
        super::interface::check_cost_keys(&scenario)?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config = ScenarioConfig::from_toml_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let domain = Domain::load(&base.join(&config.domain))?;
        Self::from_config(config, domain, Some(path.to_path_buf()))
    }
}

//! Experiment configuration. Every key has a default, so an empty file is a
//! valid configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::idwa::DwaConfig;
use crate::navigability::ClassMap;
use crate::sim::{default_class_map, EnvSpec};
use crate::subgoal::HogWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Povnav,
    Idwa,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Povnav => "povnav",
            Self::Idwa => "idwa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub planners: Vec<PlannerKind>,
    pub levels: Vec<u8>,
    pub trials: usize,
    /// Seeds worlds and start/goal draws.
    pub seed: u64,
    /// Episode timeout as a multiple of the straight-line time at `v_max`.
    pub timeout_factor: f64,
    /// Consecutive seconds of blocked frames that end an episode.
    pub blocked_timeout: f64,
    pub control_dt: f64,
    pub reach_radius: f64,
    /// Extra clearance around sampled start and goal positions.
    pub sample_clearance: f64,
    /// Start/goal positions keep this far from the arena border.
    pub sample_border: f64,
    /// Minimum start-goal separation as a fraction of the arena diagonal.
    pub min_separation: f64,
    /// Write full path waypoints into traces.
    pub trace_paths: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            planners: vec![PlannerKind::Povnav, PlannerKind::Idwa],
            levels: vec![1, 2, 3, 4, 5],
            trials: 20,
            seed: 1,
            timeout_factor: 4.0,
            blocked_timeout: 13.0,
            control_dt: 0.1,
            reach_radius: 0.25,
            sample_clearance: 0.05,
            sample_border: 0.5,
            min_separation: 0.5,
            trace_paths: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Overrides the level's grid spacing when set.
    pub spacing: Option<f64>,
    pub jitter: f64,
    pub arena_size: f64,
    pub obstacle_radius: f64,
    pub obstacle_height: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let s = EnvSpec::new(1, 0);
        Self {
            spacing: None,
            jitter: s.jitter,
            arena_size: s.arena_size,
            obstacle_radius: s.obstacle_radius,
            obstacle_height: s.obstacle_height,
        }
    }
}

impl EnvConfig {
    pub fn spec(&self, level: u8, seed: u64) -> EnvSpec {
        EnvSpec {
            level,
            spacing: self.spacing.unwrap_or(EnvSpec::level_spacing(level)),
            seed,
            jitter: self.jitter,
            arena_size: self.arena_size,
            obstacle_radius: self.obstacle_radius,
            obstacle_height: self.obstacle_height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub mount_height: f64,
    /// Downward tilt in degrees.
    pub pitch_deg: f64,
    /// Camera position left of the body origin, meters.
    pub lateral_offset: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            hfov_deg: 90.0,
            mount_height: 0.5,
            pitch_deg: 38.0,
            lateral_offset: 0.0,
        }
    }
}

impl CameraConfig {
    pub fn model(&self) -> Result<CameraModel> {
        self.model_for(self.width, self.height)
    }

    /// Same optics at another resolution.
    pub fn model_for(&self, width: usize, height: usize) -> Result<CameraModel> {
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(Error::Config("hfov must lie in (0, 180) degrees".into()));
        }
        CameraModel::from_hfov(
            width,
            height,
            self.hfov_deg.to_radians(),
            self.mount_height,
            self.pitch_deg.to_radians(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Depth returns beyond this range are dropped.
    pub max_range: f64,
    pub label_flip_probability: f64,
    /// Labels drawn by flips; empty means every class in the class map.
    pub flip_classes: Vec<u8>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            max_range: 4.0,
            label_flip_probability: 0.0,
            flip_classes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotConfig {
    pub radius: f64,
    /// Safety margin added on each side when inflating obstacles.
    pub margin: f64,
    pub v_max: f64,
    pub w_max: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            radius: 0.12,
            margin: 0.04,
            v_max: 1.0,
            w_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PovnavConfig {
    pub weights: HogWeights,
    /// Lookahead arc length for the alignment feature, as a fraction of the
    /// image height.
    pub lookahead_fraction: f64,
    /// Ground distance that sets the proximity setpoint.
    pub setpoint_distance: f64,
    /// Ground distance at which forward motion stops.
    pub stop_distance: f64,
    /// Start pixels inside the inflated region snap within this radius.
    pub snap_radius: i32,
    pub k_v: f64,
    pub k_w: f64,
}

impl Default for PovnavConfig {
    fn default() -> Self {
        Self {
            weights: HogWeights::default(),
            lookahead_fraction: 0.25,
            setpoint_distance: 1.0,
            stop_distance: 0.25,
            snap_radius: 20,
            k_v: 0.02,
            k_w: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub experiment: ExperimentConfig,
    pub env: EnvConfig,
    pub camera: CameraConfig,
    pub sensor: SensorConfig,
    pub robot: RobotConfig,
    pub povnav: PovnavConfig,
    pub idwa: DwaConfig,
    pub classes: ClassMap,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig::default(),
            env: EnvConfig::default(),
            camera: CameraConfig::default(),
            sensor: SensorConfig::default(),
            robot: RobotConfig::default(),
            povnav: PovnavConfig::default(),
            idwa: DwaConfig::default(),
            classes: default_class_map(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.levels.iter().any(|l| !(1..=5).contains(l)) {
            return Err(Error::Config("levels must lie in 1..=5".into()));
        }
        if !(e.control_dt > 0.0 && e.timeout_factor > 0.0 && e.reach_radius > 0.0) {
            return Err(Error::Config("control_dt, timeout_factor and reach_radius must be positive".into()));
        }
        if !(0.0..1.0).contains(&e.min_separation) {
            return Err(Error::Config("min_separation must lie in [0, 1)".into()));
        }
        let r = &self.robot;
        if !(r.radius > 0.0 && r.margin >= 0.0 && r.v_max > 0.0 && r.w_max > 0.0) {
            return Err(Error::Config("invalid robot geometry or limits".into()));
        }
        if !(0.0..=1.0).contains(&self.sensor.label_flip_probability) || !(self.sensor.max_range > 0.0) {
            return Err(Error::Config("invalid sensor settings".into()));
        }
        let p = &self.povnav;
        p.weights.validate()?;
        if !(p.lookahead_fraction > 0.0 && p.stop_distance > 0.0 && p.setpoint_distance > p.stop_distance) {
            return Err(Error::Config("povnav needs setpoint_distance > stop_distance > 0".into()));
        }
        if p.snap_radius < 0 {
            return Err(Error::Config("snap_radius must be non-negative".into()));
        }
        self.classes.validate()?;
        self.camera.model()?;
        self.dwa().validate()?;
        Ok(())
    }

    /// DWA settings with the robot's radius and limits filled in.
    pub fn dwa(&self) -> DwaConfig {
        DwaConfig {
            robot_radius: self.robot.radius,
            v_max: self.robot.v_max,
            w_max: self.robot.w_max,
            ..self.idwa
        }
    }

    /// Applies `section.key=value` overrides. Values parse as TOML, falling
    /// back to a bare string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut root = toml::Value::try_from(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            let value = parse_value(raw.trim());
            let mut node = &mut root;
            let parts: Vec<&str> = key.trim().split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let table = node
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("`{key}` does not name a table entry")))?;
                if i + 1 == parts.len() {
                    table.insert(part.to_string(), value.clone());
                    break;
                }
                node = table
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()));
            }
        }
        let cfg: Self = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn round_trip() {
        let cfg = Config::default();
        assert_eq!(Config::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_sections() {
        let cfg = Config::from_toml("[experiment]\ntrials = 3\n[povnav.weights]\nw1 = 0.7\n").unwrap();
        assert_eq!(cfg.experiment.trials, 3);
        assert_eq!(cfg.povnav.weights.w1, 0.7);
        assert_eq!(cfg.povnav.weights.w2, 0.5);
        assert_eq!(cfg.camera, CameraConfig::default());
    }

    #[test]
    fn overrides() {
        let cfg = Config::default()
            .with_overrides(&["experiment.trials=4", "experiment.planners=[\"idwa\"]", "env.spacing=1.8"])
            .unwrap();
        assert_eq!(cfg.experiment.trials, 4);
        assert_eq!(cfg.experiment.planners, vec![PlannerKind::Idwa]);
        assert_eq!(cfg.env.spec(1, 0).spacing, 1.8);
        assert!(Config::default().with_overrides(&["experiment.trials"]).is_err());
        assert!(Config::default().with_overrides(&["robot.radius=-1"]).is_err());
        assert!(Config::default().with_overrides(&["experiment.levels=[9]"]).is_err());
    }

    #[test]
    fn dwa_takes_robot_limits() {
        let cfg = Config::default().with_overrides(&["robot.radius=0.2", "robot.v_max=0.5"]).unwrap();
        assert_eq!(cfg.dwa().robot_radius, 0.2);
        assert_eq!(cfg.dwa().v_max, 0.5);
    }
}

//! Observation-to-command planners sharing one interface.

use serde::{Deserialize, Serialize};

use crate::config::{Config, PlannerKind};
use crate::control::{blocked_command, camera_to_body, servo, CommandStatus, ControlCommand, ServoGains};
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, FrameBPoint};
use crate::idwa::{dynamic_window, evaluate, obstacle_points, DwaConfig, RelativeGoal, Scene};
use crate::navigability::{binarize, build_navigability_image, ClassMap, NavigabilityImage, SegmentedImage};
use crate::pathplan::{
    alignment_feature, inflate_with, plan_path, proximity_feature, snap_start, FootprintProfile,
    NavFeatures, PathOutcome, SafeRegion, VisualPath,
};
use crate::sim::DepthImage;
use crate::subgoal::{map_pog, select_subgoal, SubgoalResult};

pub struct Observation<'a> {
    pub labels: &'a SegmentedImage,
    pub depth: &'a DepthImage,
    pub goal: RelativeGoal,
    /// Command applied during the previous control period.
    pub velocity: (f64, f64),
}

pub trait Planner {
    fn kind(&self) -> PlannerKind;
    fn plan(&mut self, obs: &Observation) -> Result<PlanRecord>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    NoFeasibleSubgoal,
    StartBlocked,
    /// The horizon is inside the stop distance; forward motion is unsafe.
    TooClose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovnavFrame {
    pub pog: FrameBPoint,
    pub front_size: usize,
    pub hog: Option<FrameBPoint>,
    pub hog_f1: Option<f64>,
    pub hog_f2: Option<f64>,
    pub features: Option<NavFeatures>,
    pub path_end: Option<FrameBPoint>,
    pub path_cost: Option<f64>,
    pub path_waypoints: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<Vec<FrameBPoint>>,
    pub blocked: Option<BlockReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdwaFrame {
    pub candidates: usize,
    pub admissible: usize,
    pub best_score: Option<f64>,
    pub cloud_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "planner", rename_all = "snake_case")]
pub enum PlanDetail {
    Povnav(PovnavFrame),
    Idwa(IdwaFrame),
}

/// One planning step, shared by episode traces and offline processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub goal_bearing: f64,
    pub command: ControlCommand,
    pub detail: PlanDetail,
}

/// Every intermediate product of one POVNav step.
#[derive(Debug, Clone)]
pub struct PovnavOutput {
    pub nav: NavigabilityImage,
    pub subgoal: Option<SubgoalResult>,
    pub safe: Option<SafeRegion>,
    pub path: Option<VisualPath>,
    pub features: Option<NavFeatures>,
    pub command: ControlCommand,
    pub blocked: Option<BlockReason>,
}

impl PovnavOutput {
    pub fn frame(&self, with_path: bool) -> PovnavFrame {
        let sub = self.subgoal.as_ref();
        PovnavFrame {
            pog: match sub {
                Some(s) => s.pog.point,
                None => FrameBPoint::ORIGIN,
            },
            front_size: sub.map_or(0, |s| s.pareto_set.len()),
            hog: sub.map(|s| s.hog.point),
            hog_f1: sub.map(|s| s.hog.objectives.f1),
            hog_f2: sub.map(|s| s.hog.objectives.f2),
            features: self.features,
            path_end: self.path.as_ref().map(|p| p.end),
            path_cost: self.path.as_ref().map(|p| p.cost.value()),
            path_waypoints: self.path.as_ref().map_or(0, |p| p.waypoints.len()),
            path: if with_path {
                self.path.as_ref().map(|p| p.waypoints.clone())
            } else {
                None
            },
            blocked: self.blocked,
        }
    }
}

/// Navigability image, sub-goal, safe path, features and servo command.
#[derive(Debug, Clone)]
pub struct PovnavPipeline {
    pub cam: CameraModel,
    pub classes: ClassMap,
    pub weights: crate::subgoal::HogWeights,
    pub gains: ServoGains,
    pub profile: FootprintProfile,
    pub lookahead: f64,
    pub snap_radius: i32,
    pub lateral_offset: f64,
}

impl PovnavPipeline {
    pub fn new(cfg: &Config, cam: CameraModel) -> Result<Self> {
        let p = &cfg.povnav;
        let lambda0 = cam
            .frameb_x_for_ground_distance(p.setpoint_distance)
            .ok_or_else(|| Error::Config("setpoint distance must be positive".into()))?;
        let lambda_stop = cam
            .frameb_x_for_ground_distance(p.stop_distance)
            .ok_or_else(|| Error::Config("stop distance must be positive".into()))?;
        let gains = ServoGains {
            k_v: p.k_v,
            k_w: p.k_w,
            v_max: cfg.robot.v_max,
            w_max: cfg.robot.w_max,
            lambda0,
            lambda_stop,
        };
        gains.validate()?;
        p.weights.validate()?;
        Ok(Self {
            cam,
            classes: cfg.classes.clone(),
            weights: p.weights,
            gains,
            profile: FootprintProfile::new(&cam, 2.0 * (cfg.robot.radius + cfg.robot.margin)),
            lookahead: p.lookahead_fraction * cam.height as f64,
            snap_radius: p.snap_radius,
            lateral_offset: cfg.camera.lateral_offset,
        })
    }

    pub fn process(&self, labels: &SegmentedImage, goal_bearing: f64) -> Result<PovnavOutput> {
        if (labels.width, labels.height) != (self.cam.width, self.cam.height) {
            return Err(Error::DimensionMismatch {
                expected: (self.cam.width, self.cam.height),
                got: (labels.width, labels.height),
                context: "label image vs camera".into(),
            });
        }
        let nav = build_navigability_image(&binarize(labels, &self.classes)?);
        let blocked = |nav, subgoal, safe, reason| PovnavOutput {
            nav,
            subgoal,
            safe,
            path: None,
            features: None,
            command: blocked_command(goal_bearing, &self.gains),
            blocked: Some(reason),
        };
        let subgoal = match select_subgoal(&nav, goal_bearing, &self.weights) {
            Ok(s) => s,
            Err(Error::NoFeasibleSubgoal) => {
                return Ok(blocked(nav, None, None, BlockReason::NoFeasibleSubgoal))
            }
            Err(e) => return Err(e),
        };
        let safe = inflate_with(&nav, &self.profile);
        let Some(start) = snap_start(&safe, FrameBPoint::ORIGIN, self.snap_radius) else {
            return Ok(blocked(nav, Some(subgoal), Some(safe), BlockReason::StartBlocked));
        };
        let path = match plan_path(&safe, start, subgoal.hog.point) {
            PathOutcome::Found(p) => p,
            PathOutcome::Blocked => {
                return Ok(blocked(nav, Some(subgoal), Some(safe), BlockReason::StartBlocked))
            }
        };
        let features = NavFeatures::new(
            proximity_feature(&nav),
            alignment_feature(&path, self.lookahead),
            self.gains.lambda0,
        );
        let too_close = features.lambda <= self.gains.lambda_stop;
        let command = if too_close {
            blocked_command(goal_bearing, &self.gains)
        } else {
            camera_to_body(&servo(&features.error, &self.gains), self.lateral_offset)
        };
        Ok(PovnavOutput {
            nav,
            subgoal: Some(subgoal),
            safe: Some(safe),
            path: Some(path),
            features: Some(features),
            command,
            blocked: too_close.then_some(BlockReason::TooClose),
        })
    }

    pub fn record(&self, labels: &SegmentedImage, goal_bearing: f64, with_path: bool) -> Result<PlanRecord> {
        let out = self.process(labels, goal_bearing)?;
        Ok(PlanRecord {
            goal_bearing,
            command: out.command,
            detail: PlanDetail::Povnav(out.frame(with_path)),
        })
    }

    /// Border pixel the goal bearing maps to.
    pub fn pog(&self, goal_bearing: f64) -> FrameBPoint {
        map_pog(goal_bearing, self.cam.width, self.cam.height).point
    }
}

pub struct PovnavPlanner {
    pub pipeline: PovnavPipeline,
    pub trace_paths: bool,
    /// Turn direction of the recovery spin in progress, if any.
    spin: Option<f64>,
}

impl PovnavPlanner {
    pub fn new(pipeline: PovnavPipeline, trace_paths: bool) -> Self {
        Self {
            pipeline,
            trace_paths,
            spin: None,
        }
    }
}

impl Planner for PovnavPlanner {
    fn kind(&self) -> PlannerKind {
        PlannerKind::Povnav
    }

    /// A recovery spin keeps its first direction until the blockage clears,
    /// so a goal straight ahead cannot flip it back and forth.
    fn plan(&mut self, obs: &Observation) -> Result<PlanRecord> {
        let mut rec = self.pipeline.record(obs.labels, obs.goal.bearing, self.trace_paths)?;
        if rec.command.status == CommandStatus::StoppedBlocked {
            let dir = *self.spin.get_or_insert(rec.command.w.signum());
            rec.command.w = dir * rec.command.w.abs();
        } else {
            self.spin = None;
        }
        Ok(rec)
    }
}

pub struct IdwaPlanner {
    pub cam: CameraModel,
    pub classes: ClassMap,
    pub cfg: DwaConfig,
}

impl Planner for IdwaPlanner {
    fn kind(&self) -> PlannerKind {
        PlannerKind::Idwa
    }

    fn plan(&mut self, obs: &Observation) -> Result<PlanRecord> {
        let bin = binarize(obs.labels, &self.classes)?;
        let nav = build_navigability_image(&bin);
        let points = obstacle_points(&self.cam, &bin, obs.depth);
        let scene = Scene {
            cam: &self.cam,
            nav: &nav,
            points: &points,
        };
        let window = dynamic_window(obs.velocity, &self.cfg);
        let d = evaluate(&window, &scene, &obs.goal, &self.cfg);
        Ok(PlanRecord {
            goal_bearing: obs.goal.bearing,
            command: d.command,
            detail: PlanDetail::Idwa(IdwaFrame {
                candidates: d.candidates,
                admissible: d.admissible,
                best_score: d.best_score,
                cloud_points: points.len(),
            }),
        })
    }
}

pub fn build_planner(kind: PlannerKind, cfg: &Config, cam: CameraModel) -> Result<Box<dyn Planner>> {
    Ok(match kind {
        PlannerKind::Povnav => Box::new(PovnavPlanner::new(
            PovnavPipeline::new(cfg, cam)?,
            cfg.experiment.trace_paths,
        )),
        PlannerKind::Idwa => Box::new(IdwaPlanner {
            cam,
            classes: cfg.classes.clone(),
            cfg: cfg.dwa(),
        }),
    })
}

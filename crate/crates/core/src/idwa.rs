//! Dynamic Window Approach with candidate arcs checked in image space and
//! against the depth point cloud.

use serde::{Deserialize, Serialize};

use crate::control::{CommandStatus, ControlCommand};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, CameraModel, RobotPose};
use crate::navigability::{BinaryImage, NavigabilityImage};
use crate::sim::{step, DepthImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DwaConfig {
    pub v_samples: usize,
    pub w_samples: usize,
    /// Linear acceleration limit, m/s^2; also the braking rate.
    pub acc_v: f64,
    /// Angular acceleration limit, rad/s^2.
    pub acc_w: f64,
    /// Time the window spans, normally the control period.
    pub window_dt: f64,
    /// Arc simulation horizon.
    pub horizon: f64,
    /// Arc integration step.
    pub sim_dt: f64,
    pub heading_weight: f64,
    pub clearance_weight: f64,
    pub velocity_weight: f64,
    /// Speed limits and radius come from the robot settings.
    #[serde(skip, default = "unit")]
    pub v_max: f64,
    #[serde(skip, default = "unit")]
    pub w_max: f64,
    #[serde(skip, default = "default_radius")]
    pub robot_radius: f64,
    /// Clearance at which the clearance term saturates.
    /// Free distance along a candidate's curvature saturates here.
    pub clearance_cap: f64,
    pub clearance_step: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_radius() -> f64 {
    0.12
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self {
            v_samples: 11,
            w_samples: 21,
            acc_v: 1.0,
            acc_w: 3.0,
            window_dt: 0.1,
            horizon: 0.5,
            sim_dt: 0.1,
            heading_weight: 0.8,
            clearance_weight: 0.1,
            velocity_weight: 0.1,
            v_max: unit(),
            w_max: unit(),
            robot_radius: default_radius(),
            clearance_cap: 4.0,
            clearance_step: 0.05,
        }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.v_samples < 2 || self.w_samples < 2 {
            return Err(Error::Config("DWA sample counts must be at least 2".into()));
        }
        if !(self.horizon > self.sim_dt && self.sim_dt > 0.0 && self.window_dt > 0.0) {
            return Err(Error::Config("DWA needs horizon > sim_dt > 0".into()));
        }
        let positive = [self.acc_v, self.acc_w, self.v_max, self.w_max, self.clearance_cap, self.clearance_step];
        if positive.iter().any(|&x| !(x > 0.0)) || self.robot_radius < 0.0 {
            return Err(Error::Config("DWA limits must be positive".into()));
        }
        Ok(())
    }
}

/// Velocity ranges reachable within one window step, before clamping.
pub fn window_bounds(current: (f64, f64), cfg: &DwaConfig) -> ([f64; 2], [f64; 2]) {
    let (v, w) = current;
    let dv = cfg.acc_v * cfg.window_dt;
    let dw = cfg.acc_w * cfg.window_dt;
    ([v - dv, v + dv], [w - dw, w + dw])
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Uniform `v_samples x w_samples` grid over the window clamped to
/// `[0, v_max] x [-w_max, w_max]`.
pub fn dynamic_window(current: (f64, f64), cfg: &DwaConfig) -> Vec<(f64, f64)> {
    let ([v0, v1], [w0, w1]) = window_bounds(current, cfg);
    let (v0, v1) = (v0.clamp(0.0, cfg.v_max), v1.clamp(0.0, cfg.v_max));
    let (w0, w1) = (w0.clamp(-cfg.w_max, cfg.w_max), w1.clamp(-cfg.w_max, cfg.w_max));
    linspace(v0, v1, cfg.v_samples)
        .flat_map(|v| linspace(w0, w1, cfg.w_samples).map(move |w| (v, w)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrajectory {
    pub v: f64,
    pub w: f64,
    /// Body-frame poses at each integration step, excluding the start.
    pub poses: Vec<RobotPose>,
    /// Image pixels `(col, row)` of the poses that project into the image.
    pub pixels: Vec<(usize, usize)>,
    /// Smallest gap between the robot disc and the point cloud.
    pub clearance: f64,
    pub admissible: bool,
    pub score: Option<f64>,
}

pub fn rollout(v: f64, w: f64, cfg: &DwaConfig) -> Vec<RobotPose> {
    let steps = (cfg.horizon / cfg.sim_dt).round() as usize;
    let cmd = ControlCommand {
        v,
        w,
        status: CommandStatus::Running,
    };
    let mut pose = RobotPose::new(0.0, 0.0, 0.0);
    (0..steps)
        .map(|_| {
            pose = step(&pose, &cmd, cfg.sim_dt);
            pose
        })
        .collect()
}

/// Body-frame planar points of every non-navigable pixel with a depth return.
pub fn obstacle_points(cam: &CameraModel, classes: &BinaryImage, depth: &DepthImage) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for row in 0..classes.height {
        for col in 0..classes.width {
            if classes.is_navigable(row, col) {
                continue;
            }
            if let Some(r) = depth.get(row, col) {
                let p = cam.unproject(col, row, r);
                out.push([p[0], p[1]]);
            }
        }
    }
    out
}

/// Goal as seen from the robot: bearing and planar distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeGoal {
    pub bearing: f64,
    pub distance: f64,
}

#[derive(Clone, Copy)]
pub struct Scene<'a> {
    pub cam: &'a CameraModel,
    pub nav: &'a NavigabilityImage,
    pub points: &'a [[f64; 2]],
}

/// Checks and scores one arc. Arc length travelled before the first pose
/// in contact must allow braking, and no navigability violation may show up
/// within the braking distance plus the robot radius.
fn arc_point(kappa: f64, heading: f64, s: f64) -> (f64, f64) {
    if kappa.abs() < 1e-9 {
        (s * heading.cos(), s * heading.sin())
    } else {
        let th = heading + kappa * s;
        ((th.sin() - heading.sin()) / kappa, (heading.cos() - th.cos()) / kappa)
    }
}

/// Arc length the robot can travel along the candidate's curvature before
/// its disc touches a point: the last contact-free sample, taken every
/// `clearance_step` and capped at `clearance_cap`. A candidate that does not translate is measured along
/// the straight line it faces after turning for the horizon.
pub fn free_distance(v: f64, w: f64, points: &[[f64; 2]], cfg: &DwaConfig) -> f64 {
    let (kappa, heading) = if v > 0.0 { (w / v, 0.0) } else { (0.0, w * cfg.horizon) };
    let r2 = cfg.robot_radius * cfg.robot_radius;
    let n = (cfg.clearance_cap / cfg.clearance_step).ceil() as usize;
    let mut free = 0.0;
    for k in 0..=n {
        let s = (k as f64 * cfg.clearance_step).min(cfg.clearance_cap);
        let (x, y) = arc_point(kappa, heading, s);
        if points.iter().any(|q| (q[0] - x).powi(2) + (q[1] - y).powi(2) <= r2) {
            return free;
        }
        free = s;
    }
    cfg.clearance_cap
}

pub fn assess(v: f64, w: f64, scene: &Scene, goal: &RelativeGoal, cfg: &DwaConfig) -> CandidateTrajectory {
    let poses = rollout(v, w, cfg);
    let step_len = v * cfg.sim_dt;
    let braking = v * v / (2.0 * cfg.acc_v);
    let check_len = braking + cfg.robot_radius;

    let mut pixels = Vec::new();
    let mut admissible = true;
    for (k, p) in poses.iter().enumerate() {
        let travelled = step_len * (k + 1) as f64;
        if let Some((c, r)) = scene.cam.project_ground(p.x, p.y) {
            if let Some(px) = scene.cam.in_image(c, r) {
                pixels.push((px.col, px.row));
                if travelled <= check_len && !scene.nav.is_navigable(px.row, px.col) {
                    admissible = false;
                }
            }
        }
    }
    // one more control period passes at v before braking can start
    let clearance = free_distance(v, w, scene.points, cfg);
    if v > 0.0 && v * cfg.window_dt + braking >= clearance {
        admissible = false;
    }

    let score = admissible.then(|| {
        let end = poses.last().copied().unwrap_or(RobotPose::new(0.0, 0.0, 0.0));
        let (gx, gy) = (goal.distance * goal.bearing.cos(), goal.distance * goal.bearing.sin());
        let to_goal = normalize_angle((gy - end.y).atan2(gx - end.x) - end.theta);
        let heading = 1.0 - to_goal.abs() / std::f64::consts::PI;
        let speed = v / cfg.v_max;
        cfg.heading_weight * heading + cfg.clearance_weight * clearance / cfg.clearance_cap + cfg.velocity_weight * speed
    });

    CandidateTrajectory {
        v,
        w,
        poses,
        pixels,
        clearance,
        admissible,
        score,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwaDecision {
    pub command: ControlCommand,
    pub candidates: usize,
    pub admissible: usize,
    pub best_score: Option<f64>,
}

/// Highest-scoring admissible arc; ties go to the smaller `|w|`, then the
/// smaller `v`, then the smaller `w`. Without an admissible arc, stop and turn toward the goal.
pub fn evaluate(
    candidates: &[(f64, f64)],
    scene: &Scene,
    goal: &RelativeGoal,
    cfg: &DwaConfig,
) -> DwaDecision {
    // points beyond reach of any measured arc cannot change a result
    let reach = (cfg.clearance_cap + cfg.robot_radius).powi(2);
    let near: Vec<[f64; 2]> = scene.points.iter().copied().filter(|q| q[0] * q[0] + q[1] * q[1] <= reach).collect();
    let scene = Scene { points: &near, ..*scene };
    let assessed: Vec<CandidateTrajectory> = candidates
        .iter()
        .map(|&(v, w)| assess(v, w, &scene, goal, cfg))
        .collect();
    let best = assessed
        .iter()
        .filter_map(|c| c.score.map(|s| (s, c)))
        .max_by(|(sa, a), (sb, b)| {
            sa.total_cmp(sb)
                .then(b.w.abs().total_cmp(&a.w.abs()))
                .then(b.v.total_cmp(&a.v))
                .then(b.w.total_cmp(&a.w))
        });
    let command = match best {
        Some((_, c)) => ControlCommand {
            v: c.v,
            w: c.w,
            status: CommandStatus::Running,
        },
        None => ControlCommand {
            v: 0.0,
            w: if goal.bearing < 0.0 { -cfg.w_max / 2.0 } else { cfg.w_max / 2.0 },
            status: CommandStatus::StoppedBlocked,
        },
    };
    DwaDecision {
        command,
        candidates: assessed.len(),
        admissible: assessed.iter().filter(|c| c.admissible).count(),
        best_score: best.map(|(s, _)| s),
    }
}

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::control::{goal_check, CommandStatus};
use crate::error::{Error, Result};
use crate::geometry::{goal_bearing, GoalSpec, RobotPose};
use crate::idwa::RelativeGoal;
use crate::navigability::SegmentedImage;
use crate::planner::{Observation, PlanRecord, Planner};
use crate::sim::{collision, step, LabelNoise, Renderer, WorldModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Success,
    Collision,
    Timeout,
    Blocked,
}

impl EpisodeStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Collision => "collision",
            Self::Timeout => "timeout",
            Self::Blocked => "blocked",
        }
    }
}

/// State before acting and the planner's output for one control period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub time: f64,
    pub pose: RobotPose,
    pub goal_distance: f64,
    pub plan: PlanRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub status: EpisodeStatus,
    pub path_length: f64,
    pub frames: usize,
    pub final_pose: RobotPose,
    /// Seconds spent inside the planner per action; not reproducible.
    pub action_time_mean: f64,
    pub action_time_max: f64,
    pub trace: Vec<FrameRecord>,
}

fn noise_model(cfg: &Config) -> LabelNoise {
    let classes = if cfg.sensor.flip_classes.is_empty() {
        cfg.classes.entries.iter().map(|e| e.id).collect()
    } else {
        cfg.sensor.flip_classes.clone()
    };
    LabelNoise {
        flip_probability: cfg.sensor.label_flip_probability,
        classes,
    }
}

/// Runs render, plan and step at a fixed period until the goal is reached,
/// the robot collides, it stays blocked too long, or time runs out.
/// `on_frame` sees each frame's labels and plan.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    cfg: &Config,
    renderer: &Renderer,
    world: &WorldModel,
    planner: &mut dyn Planner,
    start: RobotPose,
    goal: GoalSpec,
    noise_seed: u64,
    on_frame: &mut dyn FnMut(&FrameRecord, &SegmentedImage),
) -> Result<EpisodeResult> {
    let radius = cfg.robot.radius;
    if collision(world, &start, radius) {
        return Err(Error::Episode(format!(
            "start ({:.3}, {:.3}) is in collision; draw another start",
            start.x, start.y
        )));
    }
    let dt = cfg.experiment.control_dt;
    let straight = start.distance_to(goal.x, goal.y);
    let max_frames = (cfg.experiment.timeout_factor * straight / cfg.robot.v_max / dt).ceil() as usize;
    let blocked_frames = (cfg.experiment.blocked_timeout / dt).ceil().max(1.0) as usize;
    let noise = noise_model(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);

    let mut pose = start;
    let mut velocity = (0.0, 0.0);
    let mut path_length = 0.0;
    let mut trace = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut blocked_run = 0;

    let status = loop {
        if goal_check(&pose, &goal) {
            break EpisodeStatus::Success;
        }
        if trace.len() >= max_frames {
            break EpisodeStatus::Timeout;
        }
        let (mut labels, depth) = renderer.render(world, &pose);
        noise.apply(&mut labels, &mut rng);
        let goal_distance = pose.distance_to(goal.x, goal.y);
        let obs = Observation {
            labels: &labels,
            depth: &depth,
            goal: RelativeGoal {
                bearing: goal_bearing(&pose, &goal),
                distance: goal_distance,
            },
            velocity,
        };
        let t0 = Instant::now();
        let plan = planner.plan(&obs)?;
        times.push(t0.elapsed().as_secs_f64());

        let record = FrameRecord {
            frame: trace.len(),
            time: trace.len() as f64 * dt,
            pose,
            goal_distance,
            plan,
        };
        on_frame(&record, &labels);
        let cmd = record.plan.command;
        trace.push(record);

        let next = step(&pose, &cmd, dt);
        path_length += pose.distance_to(next.x, next.y);
        pose = next;
        velocity = (cmd.v, cmd.w);
        blocked_run = if cmd.status == CommandStatus::StoppedBlocked {
            blocked_run + 1
        } else {
            0
        };
        if collision(world, &pose, radius) {
            break EpisodeStatus::Collision;
        }
        if blocked_run >= blocked_frames && !goal_check(&pose, &goal) {
            break EpisodeStatus::Blocked;
        }
    };

    let (mean, max) = if times.is_empty() {
        (0.0, 0.0)
    } else {
        (
            times.iter().sum::<f64>() / times.len() as f64,
            times.iter().copied().fold(0.0, f64::max),
        )
    };
    Ok(EpisodeResult {
        status,
        path_length,
        frames: trace.len(),
        final_pose: pose,
        action_time_mean: mean,
        action_time_max: max,
        trace,
    })
}

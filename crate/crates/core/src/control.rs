//! Proportional visual-servo law, camera-to-body velocity transfer and goal
//! termination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GoalSpec, RobotPose};
use crate::pathplan::ServoError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoGains {
    /// Forward gain, (m/s) per pixel of clearance beyond `lambda_stop`.
    pub k_v: f64,
    /// Turn gain, (rad/s) per radian of alignment error.
    pub k_w: f64,
    pub v_max: f64,
    pub w_max: f64,
    /// Proximity setpoint in pixels.
    pub lambda0: f64,
    /// Proximity at or below which forward motion stops.
    pub lambda_stop: f64,
}

impl ServoGains {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.k_v, self.k_w, self.v_max, self.w_max, self.lambda_stop]
            .iter()
            .all(|&g| g > 0.0);
        if !all_positive {
            return Err(Error::Config("servo gains and limits must be positive".into()));
        }
        if !(self.lambda_stop < self.lambda0) {
            return Err(Error::Config(format!(
                "lambda_stop ({}) must be below lambda0 ({})",
                self.lambda_stop, self.lambda0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandStatus {
    Running,
    StoppedBlocked,
    GoalReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub v: f64,
    pub w: f64,
    pub status: CommandStatus,
}

impl ControlCommand {
    pub fn stop(status: CommandStatus) -> Self {
        Self { v: 0.0, w: 0.0, status }
    }
}

pub fn servo(e: &ServoError, gains: &ServoGains) -> ControlCommand {
    let lambda = e.proximity + gains.lambda0;
    let phi = e.alignment;
    let w = (-gains.k_w * phi).clamp(-gains.w_max, gains.w_max);
    let v = (gains.k_v * (lambda - gains.lambda_stop).max(0.0)).clamp(0.0, gains.v_max)
        * phi.cos().max(0.0);
    ControlCommand {
        v,
        w,
        status: CommandStatus::Running,
    }
}

/// Recovery spin in place toward the goal side at half the turn limit.
pub fn blocked_command(goal_bearing: f64, gains: &ServoGains) -> ControlCommand {
    let side = if goal_bearing < 0.0 { -1.0 } else { 1.0 };
    ControlCommand {
        v: 0.0,
        w: side * gains.w_max / 2.0,
        status: CommandStatus::StoppedBlocked,
    }
}

/// Body-origin command for a camera mounted `lateral_offset` meters to the
/// left of the body origin and facing forward.
pub fn camera_to_body(cmd: &ControlCommand, lateral_offset: f64) -> ControlCommand {
    ControlCommand {
        v: cmd.v + cmd.w * lateral_offset,
        ..*cmd
    }
}

/// Inclusive planar reach test.
pub fn goal_check(pose: &RobotPose, goal: &GoalSpec) -> bool {
    pose.distance_to(goal.x, goal.y) <= goal.reach_radius
}

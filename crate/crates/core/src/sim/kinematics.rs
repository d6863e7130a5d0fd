use crate::control::ControlCommand;
use crate::geometry::RobotPose;

const STRAIGHT_EPS: f64 = 1e-9;

/// Exact unicycle integration of a constant command over `dt`.
pub fn step(pose: &RobotPose, cmd: &ControlCommand, dt: f64) -> RobotPose {
    debug_assert!(dt > 0.0);
    let (v, w) = (cmd.v, cmd.w);
    let th = pose.theta;
    if w.abs() < STRAIGHT_EPS {
        return RobotPose::new(pose.x + v * dt * th.cos(), pose.y + v * dt * th.sin(), th);
    }
    let th1 = th + w * dt;
    let r = v / w;
    RobotPose::new(
        pose.x + r * (th1.sin() - th.sin()),
        pose.y - r * (th1.cos() - th.cos()),
        th1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::CommandStatus;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cmd(v: f64, w: f64) -> ControlCommand {
        ControlCommand {
            v,
            w,
            status: CommandStatus::Running,
        }
    }

    #[test]
    fn straight_step() {
        let p = step(&RobotPose::new(0.0, 0.0, 0.0), &cmd(1.0, 0.0), 1.0);
        assert_eq!((p.x, p.y, p.theta), (1.0, 0.0, 0.0));
    }

    #[test]
    fn spin_in_place() {
        let p = step(&RobotPose::new(0.0, 0.0, 0.0), &cmd(0.0, PI), 1.0);
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert_abs_diff_eq!(p.theta, PI, epsilon = 1e-12);
    }

    #[test]
    fn quarter_arc() {
        let p = step(&RobotPose::new(0.0, 0.0, 0.0), &cmd(1.0, 1.0), FRAC_PI_2);
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta, FRAC_PI_2, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn displacement_bounded_by_speed(
            x in -5.0f64..5.0, y in -5.0f64..5.0, th in -3.1f64..3.1,
            v in 0.0f64..2.0, w in -2.0f64..2.0, dt in 0.01f64..1.0,
        ) {
            let p0 = RobotPose::new(x, y, th);
            let p1 = step(&p0, &cmd(v, w), dt);
            let moved = p0.distance_to(p1.x, p1.y);
            prop_assert!(moved <= v * dt + 1e-9);
            if w.abs() > 1e-3 && v > 1e-3 {
                prop_assert!(moved < v * dt);
            }
            // many small steps land on the same arc
            let mut q = p0;
            for _ in 0..8 {
                q = step(&q, &cmd(v, w), dt / 8.0);
            }
            prop_assert!((q.x - p1.x).abs() < 1e-9 && (q.y - p1.y).abs() < 1e-9);
        }
    }
}

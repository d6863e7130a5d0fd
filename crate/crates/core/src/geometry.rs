//! Image/planning-frame conventions and the pinhole ground-plane camera.
//!
//! Images are stored row-major with row 0 at the top. The planning frame B
//! has its origin at the bottom-center pixel `p^s`, `x` counting rows upward
//! and `y = col - floor(w/2)`, so `y` grows toward the right edge of the
//! image. World bearings follow the planar robot convention: positive angles
//! are counter-clockwise (to the robot's left).

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RasterIndex {
    pub row: usize,
    pub col: usize,
}

impl RasterIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// A pixel expressed in the planning frame B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrameBPoint {
    pub x: i32,
    pub y: i32,
}

impl FrameBPoint {
    pub const ORIGIN: FrameBPoint = FrameBPoint { x: 0, y: 0 };

    pub fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        f64::from(self.x).hypot(f64::from(self.y))
    }

    pub fn distance(self, other: FrameBPoint) -> f64 {
        f64::from(self.x - other.x).hypot(f64::from(self.y - other.y))
    }

    /// Angle of the pixel seen from `p^s`, measured from the x axis.
    pub fn angle(self) -> f64 {
        f64::from(self.y).atan2(f64::from(self.x))
    }
}

pub fn raster_to_frameb(idx: RasterIndex, width: usize, height: usize) -> Result<FrameBPoint> {
    if idx.row >= height || idx.col >= width {
        return Err(Error::OutOfImage {
            row: idx.row as i64,
            col: idx.col as i64,
            width,
            height,
        });
    }
    Ok(FrameBPoint {
        x: (height - 1 - idx.row) as i32,
        y: idx.col as i32 - (width / 2) as i32,
    })
}

pub fn frameb_to_raster(p: FrameBPoint, width: usize, height: usize) -> Result<RasterIndex> {
    let row = height as i64 - 1 - i64::from(p.x);
    let col = i64::from(p.y) + (width / 2) as i64;
    if row < 0 || col < 0 || row >= height as i64 || col >= width as i64 {
        return Err(Error::OutOfImage {
            row,
            col,
            width,
            height,
        });
    }
    Ok(RasterIndex {
        row: row as usize,
        col: col as usize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub x: f64,
    pub y: f64,
    pub reach_radius: f64,
}

impl GoalSpec {
    pub fn new(x: f64, y: f64, reach_radius: f64) -> Result<Self> {
        if !(reach_radius > 0.0) {
            return Err(Error::Config(format!(
                "goal reach radius must be positive, got {reach_radius}"
            )));
        }
        Ok(Self { x, y, reach_radius })
    }
}

/// Bearing of the goal relative to the robot heading, in `(-pi, pi]`.
/// Positive means the goal lies to the robot's left. A goal coincident with
/// the robot has no bearing and yields 0.
pub fn goal_bearing(pose: &RobotPose, goal: &GoalSpec) -> f64 {
    let dx = goal.x - pose.x;
    let dy = goal.y - pose.y;
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    normalize_angle(dy.atan2(dx) - pose.theta)
}

/// Ideal pinhole camera with zero roll, pitched down by `pitch`, mounted
/// `mount_height` above a flat ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub mount_height: f64,
    pub pitch: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraModel {
    /// Square pixels with the principal point on the `p^s` column and the
    /// vertical image center.
    pub fn from_hfov(
        width: usize,
        height: usize,
        hfov: f64,
        mount_height: f64,
        pitch: f64,
    ) -> Result<Self> {
        let fx = (width as f64 / 2.0) / (hfov / 2.0).tan();
        let cam = Self {
            fx,
            fy: fx,
            cx: (width / 2) as f64,
            cy: height as f64 / 2.0,
            mount_height,
            pitch,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        if !(self.mount_height > 0.0) {
            return Err(Error::Config("camera mount height must be positive".into()));
        }
        if self.width < 3 || self.height < 2 {
            return Err(Error::Config(format!(
                "image of {}x{} is too small",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Continuous row where rays run parallel to the ground. Rows at or
    /// above it never meet the ground; may be negative.
    pub fn horizon_row(&self) -> f64 {
        self.cy - self.fy * self.pitch.tan()
    }

    /// Body-frame direction (x forward, y left, z up) of the ray through a
    /// pixel, scaled so its optical-axis component is 1.
    pub fn ray_body(&self, col: f64, row: f64) -> [f64; 3] {
        let xn = (col - self.cx) / self.fx;
        let yn = (row - self.cy) / self.fy;
        let (sp, cp) = self.pitch.sin_cos();
        // optical axis (cp, 0, -sp), image down (-sp, 0, -cp), image right (0, -1, 0)
        [cp - yn * sp, -xn, -sp - yn * cp]
    }

    /// Forward ground distance seen along `(row, cx)`, or `None` when the
    /// ray does not meet the ground in front of the camera.
    pub fn ground_depth_at_row(&self, row: usize) -> Option<f64> {
        debug_assert!(row < self.height);
        self.ground_depth_at(row as f64)
    }

    fn ground_depth_at(&self, row: f64) -> Option<f64> {
        let [dx, _, dz] = self.ray_body(self.cx, row);
        if dz >= 0.0 {
            return None;
        }
        let t = self.mount_height / -dz;
        let z = t * dx;
        (z > 0.0).then_some(z)
    }

    /// Footprint width in pixels of an object `width_m` wide lying on the
    /// ground at the given row, scaled by the ground point's depth along the
    /// optical axis.
    pub fn footprint_pixel_width(&self, row: usize, width_m: f64) -> Result<u32> {
        let d = self
            .ground_depth_at_row(row)
            .ok_or(Error::BeyondHorizon { row })?;
        let (sp, cp) = self.pitch.sin_cos();
        let depth = d * cp + self.mount_height * sp;
        Ok((self.fx * width_m / depth).ceil() as u32)
    }

    /// Planning-frame height `x` (rows above the bottom row) at which the
    /// ground lies `distance` meters ahead.
    pub fn frameb_x_for_ground_distance(&self, distance: f64) -> Option<f64> {
        if !(distance > 0.0) {
            return None;
        }
        let angle = (self.mount_height / distance).atan() - self.pitch;
        let row = self.cy + self.fy * angle.tan();
        Some(self.height as f64 - 1.0 - row)
    }

    /// Projects a body-frame ground point onto the image as continuous
    /// `(col, row)`. Returns `None` for points behind the image plane.
    pub fn project_ground(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        self.project_body([x, y, 0.0])
    }

    pub fn project_body(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        let (sp, cp) = self.pitch.sin_cos();
        let v = [p[0], p[1], p[2] - self.mount_height];
        let xc = -v[1];
        let yc = -v[0] * sp - v[2] * cp;
        let zc = v[0] * cp - v[2] * sp;
        if zc <= 1e-9 {
            return None;
        }
        Some((self.cx + self.fx * xc / zc, self.cy + self.fy * yc / zc))
    }

    /// Body-frame 3-D point at `range` meters along the ray through a pixel.
    pub fn unproject(&self, col: usize, row: usize, range: f64) -> [f64; 3] {
        let d = self.ray_body(col as f64, row as f64);
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let s = range / n;
        [d[0] * s, d[1] * s, self.mount_height + d[2] * s]
    }

    pub fn in_image(&self, col: f64, row: f64) -> Option<RasterIndex> {
        let c = col.round();
        let r = row.round();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some(RasterIndex::new(r as usize, c as usize))
    }
}

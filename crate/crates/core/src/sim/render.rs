use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, RobotPose};
use crate::navigability::SegmentedImage;

use super::world::{Obstacle, ObstacleShape, WorldModel};

/// Per-pixel Euclidean range from the camera center, `None` for no return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub max_range: f64,
    pub range: Vec<Option<f64>>,
}

impl DepthImage {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.range[row * self.width + col]
    }
}

/// Replaces each label, with probability `flip_probability`, by one drawn
/// uniformly from `classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelNoise {
    pub flip_probability: f64,
    pub classes: Vec<u8>,
}

impl LabelNoise {
    pub fn apply<R: Rng>(&self, seg: &mut SegmentedImage, rng: &mut R) {
        if self.flip_probability <= 0.0 || self.classes.is_empty() {
            return;
        }
        for label in seg.labels.iter_mut() {
            if rng.gen::<f64>() < self.flip_probability {
                *label = self.classes[rng.gen_range(0..self.classes.len())];
            }
        }
    }
}

const BEARING_BINS: usize = 1024;

enum Hit {
    Sky,
    Ground,
    Obstacle(usize),
}

/// Ray caster with the per-pixel ray table of one camera.
#[derive(Debug, Clone)]
pub struct Renderer {
    pub cam: CameraModel,
    pub max_range: f64,
    rays: Vec<[f64; 3]>,
    norms: Vec<f64>,
    bins: Vec<Option<usize>>,
}

fn bin_of(bearing: f64) -> usize {
    let u = (bearing + PI).rem_euclid(TAU) / TAU;
    ((u * BEARING_BINS as f64) as usize).min(BEARING_BINS - 1)
}

impl Renderer {
    pub fn new(cam: CameraModel, max_range: f64) -> Self {
        let mut rays = Vec::with_capacity(cam.width * cam.height);
        for row in 0..cam.height {
            for col in 0..cam.width {
                rays.push(cam.ray_body(col as f64, row as f64));
            }
        }
        let norms = rays
            .iter()
            .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
            .collect();
        let bins = rays
            .iter()
            .map(|d| (d[0] != 0.0 || d[1] != 0.0).then(|| bin_of(d[1].atan2(d[0]))))
            .collect();
        Self {
            cam,
            max_range,
            rays,
            norms,
            bins,
        }
    }

    /// Obstacles per body-frame bearing bin, sorted by nearest possible
    /// planar distance.
    fn bin_obstacles(&self, world: &WorldModel, pose: &RobotPose) -> Vec<Vec<(f64, usize)>> {
        let mut bins: Vec<Vec<(f64, usize)>> = vec![Vec::new(); BEARING_BINS];
        let width = TAU / BEARING_BINS as f64;
        for (k, o) in world.obstacles.iter().enumerate() {
            let (dx, dy) = (o.x - pose.x, o.y - pose.y);
            let dist = dx.hypot(dy);
            let r = o.bounding_radius();
            if dist <= r {
                bins.iter_mut().for_each(|b| b.push((0.0, k)));
                continue;
            }
            let half = (r / dist).asin() + width;
            let center = dy.atan2(dx) - pose.theta;
            let first = bin_of(center - half);
            let count = ((2.0 * half / width).ceil() as usize + 1).min(BEARING_BINS);
            for i in 0..count {
                bins[(first + i) % BEARING_BINS].push((dist - r, k));
            }
        }
        for b in bins.iter_mut() {
            b.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        }
        bins
    }

    pub fn render(&self, world: &WorldModel, pose: &RobotPose) -> (SegmentedImage, DepthImage) {
        let cam = &self.cam;
        let h = cam.mount_height;
        let (s, c) = pose.theta.sin_cos();
        let bins = self.bin_obstacles(world, pose);
        let n = cam.width * cam.height;
        let mut labels = Vec::with_capacity(n);
        let mut range = Vec::with_capacity(n);
        for i in 0..n {
            let [bx, by, dz] = self.rays[i];
            let d = [c * bx - s * by, s * bx + c * by, dz];
            let (mut best_t, mut hit) = if dz < 0.0 {
                (h / -dz, Hit::Ground)
            } else {
                (f64::INFINITY, Hit::Sky)
            };
            if let Some(b) = self.bins[i] {
                let planar = d[0].hypot(d[1]);
                for &(near, k) in &bins[b] {
                    if near >= best_t * planar {
                        break;
                    }
                    if let Some(t) = intersect(&world.obstacles[k], pose, h, d) {
                        if t < best_t {
                            best_t = t;
                            hit = Hit::Obstacle(k);
                        }
                    }
                }
            }
            let (label, r) = match hit {
                Hit::Sky => (world.sky_class, None),
                Hit::Ground => (
                    world.ground_class_at(pose.x + best_t * d[0], pose.y + best_t * d[1]),
                    Some(best_t * self.norms[i]),
                ),
                Hit::Obstacle(k) => (world.obstacles[k].class_id, Some(best_t * self.norms[i])),
            };
            labels.push(label);
            range.push(r.filter(|&r| r <= self.max_range));
        }
        (
            SegmentedImage {
                width: cam.width,
                height: cam.height,
                labels,
            },
            DepthImage {
                width: cam.width,
                height: cam.height,
                max_range: self.max_range,
                range,
            },
        )
    }
}

/// Entry parameter of the ray `(pose.xy, h) + t * d` into an obstacle prism.
fn intersect(o: &Obstacle, pose: &RobotPose, h: f64, d: [f64; 3]) -> Option<f64> {
    let (px, py) = (pose.x - o.x, pose.y - o.y);
    let (t0, t1) = match o.shape {
        ObstacleShape::Circle { radius } => {
            let a = d[0] * d[0] + d[1] * d[1];
            if a == 0.0 {
                return None;
            }
            let b = 2.0 * (px * d[0] + py * d[1]);
            let cc = px * px + py * py - radius * radius;
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a))
        }
        ObstacleShape::Box { half_x, half_y, yaw } => {
            let (s, c) = yaw.sin_cos();
            let p = [c * px + s * py, -s * px + c * py];
            let q = [c * d[0] + s * d[1], -s * d[0] + c * d[1]];
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (pi, (qi, half)) in p.into_iter().zip(q.into_iter().zip([half_x, half_y])) {
                if qi == 0.0 {
                    if pi.abs() > half {
                        return None;
                    }
                } else {
                    let (a, b) = ((-half - pi) / qi, (half - pi) / qi);
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                }
            }
            (lo, hi)
        }
    };
    let (z0, z1) = if d[2] < 0.0 {
        ((h - o.height) / -d[2], h / -d[2])
    } else if d[2] > 0.0 {
        (f64::NEG_INFINITY, (o.height - h) / d[2])
    } else if h <= o.height {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        return None;
    };
    let entry = t0.max(z0).max(0.0);
    let exit = t1.min(z1);
    (entry <= exit).then_some(entry)
}

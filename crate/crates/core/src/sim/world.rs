use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RobotPose;
use crate::navigability::{ClassEntry, ClassMap};

pub mod class_ids {
    pub const SKY: u8 = 0;
    pub const GRASS: u8 = 1;
    pub const TREE: u8 = 2;
    pub const ROAD: u8 = 3;
    pub const SNOW: u8 = 4;
    pub const BOUNDARY: u8 = 5;
}

/// Classes the simulator emits. Grass, road and snow are navigable.
pub fn default_class_map() -> ClassMap {
    use class_ids::*;
    let entry = |id, name: &str, navigable| ClassEntry {
        id,
        name: name.to_string(),
        navigable,
    };
    ClassMap::new(vec![
        entry(SKY, "sky", false),
        entry(GRASS, "grass", true),
        entry(TREE, "tree", false),
        entry(ROAD, "road", true),
        entry(SNOW, "snow", true),
        entry(BOUNDARY, "boundary", false),
    ])
    .expect("built-in class map is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Whether a disc lies entirely inside.
    pub fn contains_disc(&self, x: f64, y: f64, r: f64) -> bool {
        x - r >= self.min_x && x + r <= self.max_x && y - r >= self.min_y && y + r <= self.max_y
    }

    pub fn diagonal(&self) -> f64 {
        (self.max_x - self.min_x).hypot(self.max_y - self.min_y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObstacleShape {
    Circle { radius: f64 },
    /// Rectangle with half extents along its own axes, rotated by `yaw`.
    Box { half_x: f64, half_y: f64, yaw: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub shape: ObstacleShape,
    pub class_id: u8,
    pub height: f64,
}

impl Obstacle {
    /// Signed planar distance from a point to the footprint (negative inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.x, y - self.y);
        match self.shape {
            ObstacleShape::Circle { radius } => dx.hypot(dy) - radius,
            ObstacleShape::Box { half_x, half_y, yaw } => {
                let (s, c) = yaw.sin_cos();
                let lx = (c * dx + s * dy).abs() - half_x;
                let ly = (-s * dx + c * dy).abs() - half_y;
                let outside = lx.max(0.0).hypot(ly.max(0.0));
                outside + lx.max(ly).min(0.0)
            }
        }
    }

    /// Radius of the smallest centered circle holding the footprint.
    pub fn bounding_radius(&self) -> f64 {
        match self.shape {
            ObstacleShape::Circle { radius } => radius,
            ObstacleShape::Box { half_x, half_y, .. } => half_x.hypot(half_y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTile {
    /// Simple polygon vertices, either orientation.
    pub polygon: Vec<[f64; 2]>,
    pub class_id: u8,
}

impl GroundTile {
    pub fn rect(min_x: f64, min_y: f64, max_x: f64, max_y: f64, class_id: u8) -> Self {
        Self {
            polygon: vec![[min_x, min_y], [max_x, min_y], [max_x, max_y], [min_x, max_y]],
            class_id,
        }
    }

    /// Even-odd rule; points on the lower/left edges count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.polygon.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let [xi, yi] = self.polygon[i];
            let [xj, yj] = self.polygon[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub bounds: Bounds,
    /// Ground class wherever no tile applies.
    pub ground_class: u8,
    /// Ground class beyond the bounds.
    pub boundary_class: u8,
    pub sky_class: u8,
    /// Later tiles paint over earlier ones.
    #[serde(default)]
    pub tiles: Vec<GroundTile>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl WorldModel {
    pub fn empty(bounds: Bounds) -> Self {
        Self {
            bounds,
            ground_class: class_ids::GRASS,
            boundary_class: class_ids::BOUNDARY,
            sky_class: class_ids::SKY,
            tiles: Vec::new(),
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self, classes: &ClassMap) -> Result<()> {
        let b = &self.bounds;
        if !(b.min_x < b.max_x && b.min_y < b.max_y) {
            return Err(Error::Config("world bounds are empty".into()));
        }
        let mut ids = vec![self.ground_class, self.boundary_class, self.sky_class];
        ids.extend(self.tiles.iter().map(|t| t.class_id));
        ids.extend(self.obstacles.iter().map(|o| o.class_id));
        if let Some(id) = ids.iter().find(|&&id| classes.is_navigable(id).is_none()) {
            return Err(Error::Config(format!("world uses class {id} missing from the class map")));
        }
        if self.tiles.iter().any(|t| t.polygon.len() < 3) {
            return Err(Error::Config("ground tiles need at least 3 vertices".into()));
        }
        for o in &self.obstacles {
            if !(o.height > 0.0 && o.bounding_radius() > 0.0) {
                return Err(Error::Config("obstacles need positive size".into()));
            }
            if !b.contains_disc(o.x, o.y, o.bounding_radius()) {
                return Err(Error::Config(format!(
                    "obstacle at ({}, {}) leaves the bounds",
                    o.x, o.y
                )));
            }
        }
        Ok(())
    }

    pub fn ground_class_at(&self, x: f64, y: f64) -> u8 {
        if !self.bounds.contains(x, y) {
            return self.boundary_class;
        }
        self.tiles
            .iter()
            .rev()
            .find(|t| t.contains(x, y))
            .map_or(self.ground_class, |t| t.class_id)
    }

    /// Planar distance from a point to the nearest obstacle footprint.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.distance(x, y))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Robot disc touches an obstacle (inclusive) or leaves the bounds.
pub fn collision(world: &WorldModel, pose: &RobotPose, robot_radius: f64) -> bool {
    !world.bounds.contains_disc(pose.x, pose.y, robot_radius)
        || world.clearance(pose.x, pose.y) <= robot_radius
}

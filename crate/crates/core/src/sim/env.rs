use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::world::{class_ids, Bounds, GroundTile, Obstacle, ObstacleShape, WorldModel};

/// Obstacle field of one difficulty level: a jittered square grid of
/// cylinders centered in a square arena.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub level: u8,
    /// Center-to-center grid spacing in meters.
    pub spacing: f64,
    pub seed: u64,
    /// Each center moves uniformly within this many meters per axis.
    pub jitter: f64,
    /// Side length of the square arena.
    pub arena_size: f64,
    pub obstacle_radius: f64,
    pub obstacle_height: f64,
}

impl EnvSpec {
    /// 3.0 m spacing at level 1 down to 1.0 m at level 5.
    pub fn level_spacing(level: u8) -> f64 {
        3.0 - 0.5 * (f64::from(level) - 1.0)
    }

    pub fn new(level: u8, seed: u64) -> Self {
        Self {
            level,
            spacing: Self::level_spacing(level),
            seed,
            jitter: 0.05,
            arena_size: 10.0,
            obstacle_radius: 0.3,
            obstacle_height: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.level) {
            return Err(Error::Config(format!("level must be 1..=5, got {}", self.level)));
        }
        if !(self.spacing > 2.0 * self.obstacle_radius && self.obstacle_radius > 0.0) {
            return Err(Error::Config("spacing must exceed the obstacle diameter".into()));
        }
        if !(self.jitter >= 0.0 && self.arena_size > 2.0 * self.spacing && self.obstacle_height > 0.0) {
            return Err(Error::Config("invalid arena, jitter or obstacle height".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        let half = self.arena_size / 2.0;
        Bounds {
            min_x: -half,
            max_x: half,
            min_y: -half,
            max_y: half,
        }
    }
}

pub fn make_env(spec: &EnvSpec) -> Result<WorldModel> {
    spec.validate()?;
    let mut world = WorldModel::empty(spec.bounds());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let reach = spec.arena_size / 2.0 - spec.obstacle_radius - spec.jitter;
    let k = (reach / spec.spacing).floor() as i64;
    for i in -k..=k {
        for j in -k..=k {
            let (jx, jy) = if spec.jitter > 0.0 {
                (
                    rng.gen_range(-spec.jitter..=spec.jitter),
                    rng.gen_range(-spec.jitter..=spec.jitter),
                )
            } else {
                (0.0, 0.0)
            };
            world.obstacles.push(Obstacle {
                x: i as f64 * spec.spacing + jx,
                y: j as f64 * spec.spacing + jy,
                shape: ObstacleShape::Circle {
                    radius: spec.obstacle_radius,
                },
                class_id: class_ids::TREE,
                height: spec.obstacle_height,
            });
        }
    }
    Ok(world)
}

fn band(a: [f64; 2], b: [f64; 2], half_width: f64, class_id: u8) -> GroundTile {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    let (ux, uy) = (dx / len, dy / len);
    let (nx, ny) = (-uy * half_width, ux * half_width);
    // extended past both ends so consecutive bands overlap at bends
    let (ex, ey) = (ux * half_width, uy * half_width);
    GroundTile {
        polygon: vec![
            [a[0] - ex - nx, a[1] - ey - ny],
            [b[0] + ex - nx, b[1] + ey - ny],
            [b[0] + ex + nx, b[1] + ey + ny],
            [a[0] - ex + nx, a[1] - ey + ny],
        ],
        class_id,
    }
}

/// Centerline of the road in [`selective_arena`].
pub const ROAD_CENTERLINE: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [3.0, 0.0],
    [7.0, 3.5],
    [11.0, 3.5],
    [15.0, 0.0],
    [18.0, 0.0],
];
pub const ROAD_HALF_WIDTH: f64 = 1.25;

/// Snow field crossed by a road that bends around a tree. The straight
/// line along the road's ends runs into the tree.
pub fn selective_arena() -> WorldModel {
    let mut world = WorldModel::empty(Bounds {
        min_x: 0.0,
        max_x: 18.0,
        min_y: -7.0,
        max_y: 7.0,
    });
    world.ground_class = class_ids::SNOW;
    world.tiles = ROAD_CENTERLINE
        .windows(2)
        .map(|s| band(s[0], s[1], ROAD_HALF_WIDTH, class_ids::ROAD))
        .collect();
    world.obstacles.push(Obstacle {
        x: 9.0,
        y: 0.3,
        shape: ObstacleShape::Circle { radius: 1.2 },
        class_id: class_ids::TREE,
        height: 3.0,
    });
    world
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::default_class_map;

    #[test]
    fn spacing_schedule() {
        let s: Vec<f64> = (1..=5).map(EnvSpec::level_spacing).collect();
        assert_eq!(s, vec![3.0, 2.5, 2.0, 1.5, 1.0]);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = EnvSpec::new(1, 7);
        assert_eq!(make_env(&spec).unwrap(), make_env(&spec).unwrap());
        assert_ne!(make_env(&spec).unwrap(), make_env(&EnvSpec::new(1, 8)).unwrap());
    }

    #[test]
    fn denser_levels_hold_more_obstacles() {
        let count = |l| make_env(&EnvSpec::new(l, 1)).unwrap().obstacles.len();
        assert!(count(5) > count(1));
        for l in 1..5 {
            assert!(count(l + 1) >= count(l));
        }
    }

    #[test]
    fn level_three_neighbour_spacing() {
        let spec = EnvSpec::new(3, 11);
        let w = make_env(&spec).unwrap();
        let max_shift = 2.0 * spec.jitter * 2f64.sqrt();
        for (i, a) in w.obstacles.iter().enumerate() {
            let nearest = w
                .obstacles
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| (a.x - b.x).hypot(a.y - b.y))
                .fold(f64::INFINITY, f64::min);
            assert!((nearest - 2.0).abs() <= max_shift, "{nearest}");
        }
    }

    #[test]
    fn generated_worlds_validate() {
        let classes = default_class_map();
        for l in 1..=5 {
            make_env(&EnvSpec::new(l, 3)).unwrap().validate(&classes).unwrap();
        }
        selective_arena().validate(&classes).unwrap();
        assert!(make_env(&EnvSpec::new(6, 0)).is_err());
    }

    #[test]
    fn road_covers_centerline() {
        let w = selective_arena();
        for seg in ROAD_CENTERLINE.windows(2) {
            for k in 0..=20 {
                let t = k as f64 / 20.0;
                let x = seg[0][0] + t * (seg[1][0] - seg[0][0]);
                let y = seg[0][1] + t * (seg[1][1] - seg[0][1]);
                if w.bounds.contains(x, y) && x < 18.0 {
                    assert_eq!(w.ground_class_at(x, y), class_ids::ROAD, "({x}, {y})");
                }
            }
        }
        assert_eq!(w.ground_class_at(9.0, -4.0), class_ids::SNOW);
    }
}

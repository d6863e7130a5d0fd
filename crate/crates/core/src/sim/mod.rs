//! Synthetic planar world with a pinhole renderer and unicycle kinematics.

mod env;
mod kinematics;
mod render;
mod world;

pub use env::{make_env, selective_arena, EnvSpec};
pub use kinematics::step;
pub use render::{DepthImage, LabelNoise, Renderer};
pub use world::{
    class_ids, default_class_map, collision, Bounds, GroundTile, Obstacle, ObstacleShape,
    WorldModel,
};

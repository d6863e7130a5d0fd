//! Mapless visual navigation from a semantically segmented camera image.

pub mod config;
pub mod control;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod idwa;
pub mod navigability;
pub mod pathplan;
pub mod planner;
pub mod sim;
pub mod subgoal;

pub use error::{Error, Result};

//! Scene-level 6-DOF pose estimation.
//!
//! Candidate poses come from congruent 4-point registration ranked by LCP,
//! are compressed by two-level SE(3) clustering, and are combined by a
//! physics-constrained Monte Carlo Tree Search that maximizes agreement between
//! the observed depth image and a software render of the hypothesized scene.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod dependency;
mod error;
pub mod geometry;
pub mod par;
pub mod physics;
pub mod registration;
pub mod render;
pub mod scene;
pub mod search;
pub mod seeds;
pub mod sensing;

pub use error::{Error, Result};
pub use geometry::{Pose, PointCloud, SymmetryGroup, TriMesh};

use serde::{Deserialize, Serialize};

/// Identifier of an object instance in a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl std::fmt::Display for ObjectId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

//! Candidate pose generation and local refinement.

mod congruent;
mod grid;
mod icp;
mod kabsch;
mod lcp;
mod sampling;

use serde::{Deserialize, Serialize};

pub use congruent::{generate_candidates, Budget, RegistrationConfig};
pub use grid::GridIndex;
pub use icp::{trimmed_icp, trimmed_icp_indexed, IcpConfig, IcpResult, IcpTarget};
pub use kabsch::rigid_fit;
pub use lcp::{lcp_indexed, lcp_score};
pub use sampling::{sample_model_cloud, sample_surface, MIN_MODEL_POINTS};

use crate::geometry::Pose;
use crate::ObjectId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPose {
    pub pose: Pose,
    /// Largest-common-pointset fraction in `[0, 1]`.
    pub lcp: f64,
}

/// Raw registration output for one object, sorted by LCP descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub object_id: ObjectId,
    pub candidates: Vec<ScoredPose>,
    /// Wall-clock seconds spent.
    pub budget_used: f64,
    /// Base trials attempted.
    pub trials: usize,
}

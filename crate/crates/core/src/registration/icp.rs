//! Trimmed ICP: nearest-neighbor correspondences, keep the best fraction by
//! residual, closed-form rigid update.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{rigid_fit, GridIndex};
use crate::geometry::{PointCloud, Pose};

const CONVERGENCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    /// Fraction of model points kept each iteration, in `(0, 1]`.
    pub overlap: f64,
    pub max_iters: usize,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self { overlap: 0.7, max_iters: 30 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    pub pose: Pose,
    pub iterations: usize,
    /// Trimmed mean squared residual at the pose entering each iteration,
    /// followed by the value at the returned pose.
    pub mse_trace: Vec<f64>,
    pub converged: bool,
    /// The segment was empty; `pose` is the initial pose.
    pub empty_segment: bool,
}

impl IcpResult {
    pub fn final_mse(&self) -> f64 {
        self.mse_trace.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Indexed segment reused across ICP calls.
pub struct IcpTarget {
    grid: GridIndex,
}

impl IcpTarget {
    pub fn new(segment: &PointCloud) -> Self {
        let cell = (segment.diameter() / 32.0).max(1e-3);
        Self { grid: GridIndex::new(&segment.points, cell) }
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

struct Trimmed {
    mse: f64,
    src: Vec<Vector3<f64>>,
    dst: Vec<Vector3<f64>>,
}

fn correspond(model: &[Vector3<f64>], target: &IcpTarget, pose: &Pose, keep: usize) -> Trimmed {
    let pairs = pairs(model, target, pose);
    trim(pairs, target, keep)
}

fn pairs(model: &[Vector3<f64>], target: &IcpTarget, pose: &Pose) -> Vec<(f64, Vector3<f64>, usize)> {
    let mut pairs: Vec<(f64, Vector3<f64>, usize)> = model
        .iter()
        .map(|m| {
            let q = pose.transform_point(m);
            let (idx, d2) = target.grid.nearest(&q).expect("non-empty target");
            (d2, q, idx)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn trim(mut pairs: Vec<(f64, Vector3<f64>, usize)>, target: &IcpTarget, keep: usize) -> Trimmed {
    pairs.truncate(keep);
    let mse = pairs.iter().map(|p| p.0).sum::<f64>() / keep as f64;
    let pts = target.grid.points();
    Trimmed {
        mse,
        src: pairs.iter().map(|p| p.1).collect(),
        dst: pairs.iter().map(|p| pts[p.2]).collect(),
    }
}

/// Plain trimmed descent from `pose`; returns the final pose, its trimmed set,
/// the per-iteration residual trace and whether the update fell below tolerance.
fn descend(model: &[Vector3<f64>], target: &IcpTarget, pose: Pose, keep: usize, max_iters: usize, trace: &mut Vec<f64>) -> (Pose, Trimmed, bool) {
    let mut pose = pose;
    let mut current = correspond(model, target, &pose, keep);
    for _ in 0..max_iters {
        trace.push(current.mse);
        let Some(step) = rigid_fit(&current.src, &current.dst) else { break };
        let candidate = step.compose(&pose);
        let next = correspond(model, target, &candidate, keep);
        if next.mse > current.mse {
            // rounding-level increase at the optimum; keep the better pose
            return (pose, current, true);
        }
        pose = candidate;
        current = next;
        let (angle, shift) = step.magnitude();
        if angle + shift < CONVERGENCE {
            return (pose, current, true);
        }
    }
    (pose, current, false)
}

const MAX_ESCAPES: usize = 3;

pub fn trimmed_icp_indexed(init: &Pose, model: &PointCloud, target: &IcpTarget, cfg: &IcpConfig) -> IcpResult {
    if target.is_empty() || model.is_empty() {
        return IcpResult { pose: *init, iterations: 0, mse_trace: vec![], converged: false, empty_segment: target.is_empty() };
    }
    let overlap = cfg.overlap.clamp(f64::MIN_POSITIVE, 1.0);
    let n = model.len();
    let keep = ((overlap * n as f64).ceil() as usize).clamp(3.min(n), n);
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    let (mut pose, mut current, mut converged) = descend(&model.points, target, *init, keep, cfg.max_iters, &mut trace);
    // A trimmed fixed point can sit where the rejected points would pull the
    // pose elsewhere (sliding along a face). Re-descend with larger kept sets
    // and accept the result only if it lowers the trimmed residual.
    let wider: Vec<usize> = [keep + (n - keep) / 2, n].into_iter().filter(|&k| k > keep).collect();
    for _ in 0..MAX_ESCAPES {
        if trace.len() >= cfg.max_iters {
            break;
        }
        let best = wider
            .iter()
            .map(|&k| {
                let (p, _, _) = descend(&model.points, target, pose, k, cfg.max_iters, &mut Vec::new());
                let t = correspond(&model.points, target, &p, keep);
                (p, t)
            })
            .min_by(|a, b| a.1.mse.total_cmp(&b.1.mse));
        let Some((p, t)) = best else { break };
        if t.mse >= current.mse * (1.0 - 1e-6) {
            break;
        }
        trace.push(current.mse);
        let budget = cfg.max_iters.saturating_sub(trace.len());
        let (q, c, conv) = descend(&model.points, target, p, keep, budget, &mut trace);
        (pose, current, converged) = (q, c, conv);
    }
    let iterations = trace.len();
    trace.push(current.mse);
    IcpResult { pose, iterations, mse_trace: trace, converged, empty_segment: false }
}

pub fn trimmed_icp(init: &Pose, model: &PointCloud, segment: &PointCloud, overlap: f64, max_iters: usize) -> IcpResult {
    trimmed_icp_indexed(init, model, &IcpTarget::new(segment), &IcpConfig { overlap, max_iters })
}

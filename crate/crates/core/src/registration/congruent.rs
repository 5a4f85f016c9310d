//! Congruent 4-point candidate generation ranked by LCP.

use std::time::Instant;

use nalgebra::Vector3;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{lcp_indexed, rigid_fit, CandidateSet, GridIndex, ScoredPose};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Pose};
use crate::{par, seeds, ObjectId};

/// Amount of work for candidate generation. `Iterations` counts base trials
/// and is fully deterministic; `Seconds` is a wall-clock limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Iterations(usize),
    Seconds(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistrationConfig {
    /// LCP inlier radius, meters.
    pub delta: f64,
    /// Pair-distance tolerance as a multiple of `delta`.
    pub distance_factor: f64,
    /// Tolerance on the two diagonal-intersection ratios.
    pub ratio_tolerance: f64,
    /// Tolerance on the cosine of the angle between the two base pairs.
    pub angle_tolerance: f64,
    /// Preferred minimum base pair length as a fraction of the segment diameter.
    pub base_spread: f64,
    /// Congruent sets scored per base; larger sets are subsampled.
    pub max_sets_per_base: usize,
    /// Model points used to rank the congruent sets of one base.
    pub lcp_sample: usize,
    /// Model points searched for congruent sets; LCP uses the full cloud.
    pub match_points: usize,
    /// Collection of congruent sets for one base stops at this many.
    pub max_sets_collected: usize,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            delta: 0.005,
            distance_factor: 1.5,
            ratio_tolerance: 0.02,
            angle_tolerance: 0.1,
            base_spread: 0.5,
            max_sets_per_base: 200,
            lcp_sample: 128,
            match_points: 160,
            max_sets_collected: 1000,
        }
    }
}

impl RegistrationConfig {
    pub fn distance_tolerance(&self) -> f64 {
        self.distance_factor * self.delta
    }
}

/// Parameters of the closest approach between lines `a + s(b − a)` and `c + t(d − c)`.
fn line_params(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, f64)> {
    let u = b - a;
    let v = d - c;
    let w = a - c;
    let (uu, uv, vv, uw, vw) = (u.dot(&u), u.dot(&v), v.dot(&v), u.dot(&w), v.dot(&w));
    let den = uu * vv - uv * uv;
    if den <= 1e-12 * uu * vv {
        return None;
    }
    Some(((uv * vw - vv * uw) / den, (uu * vw - uv * uw) / den))
}

/// Coplanar 4-point base split into two pairs `(p0, p1)` and `(p2, p3)` whose
/// lines cross at fractions `r1` and `r2` along each pair.
#[derive(Clone, Copy, Debug)]
struct Base {
    pts: [Vector3<f64>; 4],
    r1: f64,
    r2: f64,
}

fn pick_farthest<R: rand::Rng>(
    pts: &[Vector3<f64>],
    tries: usize,
    rng: &mut R,
    score: impl Fn(&Vector3<f64>) -> Option<f64>,
) -> Option<(Vector3<f64>, f64)> {
    let mut best: Option<(Vector3<f64>, f64)> = None;
    for _ in 0..tries {
        let p = pts[rng.random_range(0..pts.len())];
        if let Some(s) = score(&p) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((p, s));
            }
        }
    }
    best
}

/// Picks a wide coplanar base. No two base points may be farther apart than
/// `reach`, the longest model pair, since such a base has no congruent set.
fn select_base<R: rand::Rng>(pts: &[Vector3<f64>], diameter: f64, reach: f64, cfg: &RegistrationConfig, rng: &mut R) -> Option<Base> {
    let diameter = diameter.min(reach);
    let near = |p: &Vector3<f64>, q: &Vector3<f64>| (p - q).norm() <= reach;
    let p0 = pts[rng.random_range(0..pts.len())];
    let (p1, d01) = pick_farthest(pts, 32, rng, |p| near(p, &p0).then(|| (p - p0).norm()))?;
    if d01 < 0.5 * cfg.base_spread * diameter {
        return None;
    }
    let axis = (p1 - p0) / d01;
    let (p2, h) = pick_farthest(pts, 32, rng, |p| (near(p, &p0) && near(p, &p1)).then(|| (p - p0 - axis * (p - p0).dot(&axis)).norm()))?;
    if h < 0.2 * cfg.base_spread * diameter {
        return None;
    }
    let normal = (p1 - p0).cross(&(p2 - p0)).normalize();
    let (p3, spread) = pick_farthest(pts, 64, rng, |p| {
        ((p - p0).dot(&normal).abs() < cfg.delta && near(p, &p0) && near(p, &p1) && near(p, &p2))
            .then(|| (p - p0).norm().min((p - p1).norm()).min((p - p2).norm()))
    })?;
    if spread < 0.2 * cfg.base_spread * diameter {
        return None;
    }
    // choose the pairing whose crossing lies inside both pairs (the quadrilateral diagonals)
    let quad = [p0, p1, p2, p3];
    let pairings = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]];
    let mut best: Option<(f64, Base)> = None;
    for idx in pairings {
        let pts = idx.map(|k| quad[k]);
        let Some((r1, r2)) = line_params(&pts[0], &pts[1], &pts[2], &pts[3]) else { continue };
        let outside = |r: f64| (-r).max(r - 1.0).max(0.0);
        let penalty = outside(r1) + outside(r2);
        if best.as_ref().is_none_or(|(b, _)| penalty < *b) {
            best = Some((penalty, Base { pts, r1, r2 }));
        }
    }
    best.map(|(_, b)| b)
}

/// All model point pairs sorted by length.
struct PairTable {
    pairs: Vec<(f64, u32, u32)>,
}

impl PairTable {
    fn new(points: &[Vector3<f64>]) -> Self {
        let n = points.len();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push(((points[i] - points[j]).norm(), i as u32, j as u32));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { pairs }
    }

    fn longest(&self) -> f64 {
        self.pairs.last().map_or(0.0, |p| p.0)
    }

    fn band(&self, d: f64, tol: f64) -> &[(f64, u32, u32)] {
        let lo = self.pairs.partition_point(|p| p.0 < d - tol);
        let hi = self.pairs.partition_point(|p| p.0 <= d + tol);
        &self.pairs[lo..hi]
    }
}

struct Matcher<'a> {
    model: &'a [Vector3<f64>],
    full_model: &'a [Vector3<f64>],
    lcp_model: Vec<Vector3<f64>>,
    table: PairTable,
    segment: &'a [Vector3<f64>],
    segment_grid: GridIndex,
    diameter: f64,
    cfg: RegistrationConfig,
    seed: u64,
}

impl Matcher<'_> {
    fn trial(&self, index: usize) -> Option<(ScoredPose, usize)> {
        let mut rng = seeds::rng(seeds::child(self.seed, index as u64));
        let tol = self.cfg.distance_tolerance();
        let base = select_base(self.segment, self.diameter, self.table.longest() + tol, &self.cfg, &mut rng)?;
        let [b0, b1, b2, b3] = base.pts;
        let d1 = (b1 - b0).norm();
        let d2 = (b3 - b2).norm();
        let base_cos = (b1 - b0).dot(&(b3 - b2)) / (d1 * d2);

        let mut second: Vec<(u32, u32)> = Vec::new();
        let mut mids: Vec<Vector3<f64>> = Vec::new();
        for &(_, k, l) in self.table.band(d2, tol) {
            for (a, b) in [(k, l), (l, k)] {
                let (qa, qb) = (self.model[a as usize], self.model[b as usize]);
                second.push((a, b));
                mids.push(qa + (qb - qa) * base.r2);
            }
        }
        if second.is_empty() {
            return None;
        }
        let mid_grid = GridIndex::new(&mids, tol);
        let mut sets: Vec<[u32; 4]> = Vec::new();
        let band = self.table.band(d1, tol);
        let offset = if band.is_empty() { 0 } else { rng.random_range(0..band.len()) };
        for &(_, i, j) in band[offset..].iter().chain(&band[..offset]) {
            if sets.len() >= self.cfg.max_sets_collected {
                break;
            }
            for (a, b) in [(i, j), (j, i)] {
                let (qa, qb) = (self.model[a as usize], self.model[b as usize]);
                let e = qa + (qb - qa) * base.r1;
                mid_grid.for_each_within(&e, tol, |m| {
                    let (c, d) = second[m];
                    if c == a || c == b || d == a || d == b {
                        return;
                    }
                    let (qc, qd) = (self.model[c as usize], self.model[d as usize]);
                    let cos = (qb - qa).dot(&(qd - qc)) / ((qb - qa).norm() * (qd - qc).norm());
                    if (cos - base_cos).abs() > self.cfg.angle_tolerance {
                        return;
                    }
                    let Some((s, t)) = line_params(&qa, &qb, &qc, &qd) else { return };
                    if (s - base.r1).abs() <= self.cfg.ratio_tolerance && (t - base.r2).abs() <= self.cfg.ratio_tolerance {
                        sets.push([a, b, c, d]);
                    }
                });
            }
        }
        if sets.is_empty() {
            return None;
        }
        let found = sets.len();
        if sets.len() > self.cfg.max_sets_per_base {
            for k in 0..self.cfg.max_sets_per_base {
                let r = rng.random_range(k..sets.len());
                sets.swap(k, r);
            }
            sets.truncate(self.cfg.max_sets_per_base);
        }

        let mut best: Option<(f64, Pose)> = None;
        for set in &sets {
            let src = set.map(|k| self.model[k as usize]);
            let Some(pose) = rigid_fit(&src, &base.pts) else { continue };
            let rms = (src.iter().zip(&base.pts).map(|(s, d)| (pose.transform_point(s) - d).norm_squared()).sum::<f64>() / 4.0).sqrt();
            if rms > tol {
                continue;
            }
            let score = lcp_indexed(&self.lcp_model, &self.segment_grid, &pose, self.cfg.delta);
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, pose));
            }
        }
        let (_, pose) = best?;
        let lcp = lcp_indexed(self.full_model, &self.segment_grid, &pose, self.cfg.delta);
        Some((ScoredPose { pose, lcp }, found))
    }
}

/// Samples coplanar 4-point bases from the segment, finds approximately
/// congruent 4-point sets in the model, fits a rigid transform to each and
/// keeps the best-LCP transform per base. Candidates are sorted by LCP.
pub fn generate_candidates(
    object_id: ObjectId,
    model: &PointCloud,
    segment: &PointCloud,
    budget: Budget,
    cfg: &RegistrationConfig,
    seed: u64,
) -> Result<CandidateSet> {
    if segment.len() < 4 {
        return Err(Error::DegenerateSegment(format!("{} points", segment.len())));
    }
    let diameter = segment.diameter();
    if !(diameter > 2.0 * cfg.delta) {
        return Err(Error::DegenerateSegment(format!("diameter {diameter:.4} m")));
    }
    if model.len() < 4 {
        return Err(Error::InvalidArgument("model cloud too small".into()));
    }
    let stride = (model.len() / cfg.lcp_sample.max(1)).max(1);
    let match_stride = (model.len() / cfg.match_points.max(4)).max(1);
    let match_model: Vec<Vector3<f64>> = model.points.iter().step_by(match_stride).copied().collect();
    let matcher = Matcher {
        table: PairTable::new(&match_model),
        model: &match_model,
        full_model: &model.points,
        lcp_model: model.points.iter().step_by(stride).copied().collect(),
        segment: &segment.points,
        segment_grid: GridIndex::new(&segment.points, cfg.delta),
        diameter,
        cfg: *cfg,
        seed,
    };

    let start = Instant::now();
    let mut results: Vec<(usize, ScoredPose)> = Vec::new();
    let mut trials = 0usize;
    match budget {
        Budget::Iterations(n) => {
            let out = par::map_range(n, |i| matcher.trial(i));
            results.extend(out.into_iter().enumerate().filter_map(|(i, r)| r.map(|(c, _)| (i, c))));
            trials = n;
        }
        Budget::Seconds(limit) => {
            const CHUNK: usize = 64;
            while start.elapsed().as_secs_f64() < limit {
                let out = par::map_range(CHUNK, |i| matcher.trial(trials + i));
                results.extend(out.into_iter().enumerate().filter_map(|(i, r)| r.map(|(c, _)| (trials + i, c))));
                trials += CHUNK;
            }
        }
    }
    if results.is_empty() {
        return Err(Error::NoCandidates);
    }
    results.sort_by(|a, b| b.1.lcp.total_cmp(&a.1.lcp).then(a.0.cmp(&b.0)));
    Ok(CandidateSet {
        object_id,
        candidates: results.into_iter().map(|(_, c)| c).collect(),
        budget_used: start.elapsed().as_secs_f64(),
        trials,
    })
}

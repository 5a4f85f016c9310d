//! Two-level compression of a candidate pool: K-Means on translations, then
//! kernel K-Means on rotations within each translation cluster.

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_distance, SymmetryGroup};
use crate::registration::{CandidateSet, ScoredPose};
use crate::{par, seeds, ObjectId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k_tr: usize,
    pub k_rot: usize,
    /// Gaussian kernel bandwidth on the rotation distance, radians.
    pub sigma: f64,
    pub max_iters: usize,
    pub max_representatives: usize,
    /// Rotation clusters larger than this are clustered on a random subset and
    /// the remaining members are assigned to the nearest resulting cluster.
    pub kernel_sample_cap: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_tr: 5,
            k_rot: 5,
            sigma: 30f64.to_radians(),
            max_iters: 50,
            max_representatives: 25,
            kernel_sample_cap: 1500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationCluster {
    pub center: Vector3<f64>,
    /// Indices into the clustered slice.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationCluster {
    /// Index of the medoid in the clustered slice.
    pub medoid: usize,
    pub members: Vec<usize>,
    /// Largest rotation distance from a member to the medoid, radians.
    pub max_distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Index of the medoid candidate in the input candidate set.
    pub source: usize,
    pub members: usize,
    /// Coverage bound: largest member-to-medoid rotation distance, radians.
    pub max_rotation_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSet {
    pub object_id: ObjectId,
    /// Sorted by LCP descending.
    pub representatives: Vec<ScoredPose>,
    /// Parallel to `representatives`.
    pub provenance: Vec<Provenance>,
}

impl HypothesisSet {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

/// Weighted draw proportional to `weights`; `None` if they sum to zero.
fn weighted_pick<R: rand::Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            if r < *w {
                return Some(i);
            }
            r -= w;
        }
    }
    weights.iter().rposition(|w| *w > 0.0)
}

/// K-Means with k-means++ seeding on candidate translations. Empty clusters are
/// dropped; with fewer candidates than `k` each candidate is its own cluster.
pub fn cluster_translations(candidates: &[ScoredPose], k: usize, seed: u64, max_iters: usize) -> Vec<TranslationCluster> {
    let pts: Vec<Vector3<f64>> = candidates.iter().map(|c| c.pose.translation).collect();
    if pts.is_empty() {
        return vec![];
    }
    if pts.len() <= k {
        return pts
            .iter()
            .enumerate()
            .map(|(i, p)| TranslationCluster { center: *p, members: vec![i] })
            .collect();
    }
    let mut rng = seeds::rng(seed);
    let mut centers = vec![pts[rng.random_range(0..pts.len())]];
    let mut d2: Vec<f64> = pts.iter().map(|p| (p - centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let Some(i) = weighted_pick(&d2, &mut rng) else { break };
        let c = pts[i];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(&pts) {
            *d = d.min((p - c).norm_squared());
        }
    }
    let nearest = |p: &Vector3<f64>, centers: &[Vector3<f64>]| {
        centers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, (p - c).norm_squared()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            .0
    };
    let mut assign: Vec<usize> = pts.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..max_iters {
        let mut sums = vec![Vector3::zeros(); centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &a) in pts.iter().zip(&assign) {
            sums[a] += p;
            counts[a] += 1;
        }
        for j in 0..centers.len() {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = pts.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    let mut clusters: Vec<TranslationCluster> = centers
        .iter()
        .map(|c| TranslationCluster { center: *c, members: vec![] })
        .collect();
    for (i, &a) in assign.iter().enumerate() {
        clusters[a].members.push(i);
    }
    clusters.retain(|c| !c.members.is_empty());
    for c in &mut clusters {
        c.center = c.members.iter().map(|&i| pts[i]).sum::<Vector3<f64>>() / c.members.len() as f64;
    }
    clusters
}

/// Gaussian kernel on the symmetry-aware rotation distance.
pub fn rotation_kernel(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, sym: &SymmetryGroup, sigma: f64) -> f64 {
    let d = rotation_distance(a, b, sym);
    (-(d * d) / (sigma * sigma)).exp()
}

struct KernelMatrix {
    n: usize,
    k: Vec<f64>,
}

impl KernelMatrix {
    fn new(rots: &[UnitQuaternion<f64>], sym: &SymmetryGroup, sigma: f64) -> Self {
        let n = rots.len();
        // upper triangle only; the kernel is symmetric
        let rows = par::map_range(n, |i| (i + 1..n).map(|j| rotation_kernel(&rots[i], &rots[j], sym, sigma)).collect::<Vec<f64>>());
        let mut k = vec![1.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Self { n, k }
    }

    /// `(1/|m|²) Σ_{j,l∈m} K_jl` over positions `m`.
    fn mean_block(&self, m: &[usize]) -> f64 {
        if m.is_empty() {
            return 0.0;
        }
        let s: f64 = m.iter().map(|&j| m.iter().map(|&l| self.at(j, l)).sum::<f64>()).sum();
        s / (m.len() * m.len()) as f64
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }
}

/// Kernel K-Means assignment over the points of `km`; returns the cluster label per point.
fn kernel_kmeans(km: &KernelMatrix, k: usize, seed: u64, max_iters: usize) -> Vec<usize> {
    let n = km.n;
    let mut rng = seeds::rng(seed);
    let mut seeds_idx = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| (2.0 - 2.0 * km.at(i, seeds_idx[0])).max(0.0)).collect();
    while seeds_idx.len() < k {
        let Some(i) = weighted_pick(&d2, &mut rng) else { break };
        seeds_idx.push(i);
        for (j, d) in d2.iter_mut().enumerate() {
            *d = d.min((2.0 - 2.0 * km.at(j, i)).max(0.0));
        }
    }
    let mut assign: Vec<usize> = (0..n)
        .map(|i| {
            (0..seeds_idx.len())
                .max_by(|&a, &b| km.at(i, seeds_idx[a]).total_cmp(&km.at(i, seeds_idx[b])).then(b.cmp(&a)))
                .unwrap_or(0)
        })
        .collect();
    let kk = seeds_idx.len();
    for _ in 0..max_iters {
        let mut members: Vec<Vec<usize>> = vec![vec![]; kk];
        for (i, &a) in assign.iter().enumerate() {
            members[a].push(i);
        }
        // within-cluster kernel sums: (1/|c|²) Σ_{j,l∈c} K_jl
        let self_terms: Vec<f64> = members.iter().map(|m| km.mean_block(m)).collect();
        let next: Vec<usize> = par::map_range(n, |i| {
            let mut best = (usize::MAX, f64::INFINITY);
            for (c, m) in members.iter().enumerate() {
                if m.is_empty() {
                    continue;
                }
                let cross: f64 = m.iter().map(|&j| km.at(i, j)).sum::<f64>() / m.len() as f64;
                let dist = 1.0 - 2.0 * cross + self_terms[c];
                if dist < best.1 {
                    best = (c, dist);
                }
            }
            best.0
        });
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

/// Member minimizing the summed squared kernel-induced distance `2 − 2k` to the
/// other members, searched over `candidates` (a subset of `members`).
fn medoid(rots: &[UnitQuaternion<f64>], candidates: &[usize], members: &[usize], sym: &SymmetryGroup, sigma: f64) -> usize {
    let costs = par::map(candidates, |&c| {
        members
            .iter()
            .map(|&m| if m == c { 0.0 } else { 2.0 - 2.0 * rotation_kernel(&rots[c], &rots[m], sym, sigma) })
            .sum::<f64>()
    });
    argmin(candidates, costs)
}

/// Same as [`medoid`] when every member is in the kernel matrix.
fn medoid_in(km: &KernelMatrix, m: &[usize]) -> usize {
    let costs = par::map(m, |&c| m.iter().map(|&j| 2.0 - 2.0 * km.at(c, j)).sum::<f64>());
    argmin(m, costs)
}

fn argmin(items: &[usize], costs: Vec<f64>) -> usize {
    items
        .iter()
        .zip(costs)
        .fold((usize::MAX, f64::INFINITY), |best, (&c, cost)| if cost < best.1 { (c, cost) } else { best })
        .0
}

/// Kernel K-Means on member rotations with medoid representatives.
pub fn cluster_rotations(
    members: &[ScoredPose],
    k_rot: usize,
    sym: &SymmetryGroup,
    sigma: f64,
    seed: u64,
    cfg: &ClusterConfig,
) -> Vec<RotationCluster> {
    let n = members.len();
    if n == 0 {
        return vec![];
    }
    let rots: Vec<UnitQuaternion<f64>> = members.iter().map(|m| m.pose.rotation).collect();
    let cap = cfg.kernel_sample_cap.max(k_rot).max(1);
    let sample: Vec<usize> = if n > cap {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = seeds::rng(seeds::child(seed, 1));
        for i in 0..cap {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        idx.truncate(cap);
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    let sample_rots: Vec<UnitQuaternion<f64>> = sample.iter().map(|&i| rots[i]).collect();
    let km = KernelMatrix::new(&sample_rots, sym, sigma);
    let labels = kernel_kmeans(&km, k_rot.max(1), seed, cfg.max_iters);
    let kk = labels.iter().copied().max().unwrap_or(0) + 1;
    // positions into `sample` per cluster
    let mut groups: Vec<Vec<usize>> = vec![vec![]; kk];
    for (pos, &l) in labels.iter().enumerate() {
        groups[l].push(pos);
    }
    groups.retain(|g| !g.is_empty());

    let mut full: Vec<Vec<usize>> = groups.iter().map(|g| g.iter().map(|&p| sample[p]).collect()).collect();
    if sample.len() < n {
        let in_sample: std::collections::HashSet<usize> = sample.iter().copied().collect();
        let rest: Vec<usize> = (0..n).filter(|i| !in_sample.contains(i)).collect();
        let self_terms: Vec<f64> = groups.iter().map(|g| km.mean_block(g)).collect();
        let labels = par::map(&rest, |&i| {
            let mut best = (0usize, f64::INFINITY);
            for (c, g) in groups.iter().enumerate() {
                let cross = g.iter().map(|&p| rotation_kernel(&rots[i], &sample_rots[p], sym, sigma)).sum::<f64>() / g.len() as f64;
                let d = 1.0 - 2.0 * cross + self_terms[c];
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        });
        for (i, l) in rest.into_iter().zip(labels) {
            full[l].push(i);
        }
        for m in &mut full {
            m.sort_unstable();
        }
    }

    full.into_iter()
        .zip(&groups)
        .map(|(members, g)| {
            let med = if sample.len() == n {
                sample[medoid_in(&km, g)]
            } else {
                let candidates: Vec<usize> = g.iter().map(|&p| sample[p]).collect();
                medoid(&rots, &candidates, &members, sym, sigma)
            };
            let max_distance = members
                .iter()
                .map(|&m| rotation_distance(&rots[med], &rots[m], sym))
                .fold(0.0, f64::max);
            RotationCluster { medoid: med, members, max_distance }
        })
        .collect()
}

/// Translation clusters, then rotation clusters inside each; a representative
/// pairs the translation center with the rotation medoid and carries the
/// largest LCP of its rotation cluster.
pub fn build_hypothesis_set(candidates: &CandidateSet, sym: &SymmetryGroup, cfg: &ClusterConfig, seed: u64) -> Result<HypothesisSet> {
    let cands = &candidates.candidates;
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut reps: Vec<(ScoredPose, Provenance)> = Vec::new();
    if cands.len() <= cfg.max_representatives {
        reps.extend(cands.iter().enumerate().map(|(i, c)| {
            (*c, Provenance { source: i, members: 1, max_rotation_distance: 0.0 })
        }));
    } else {
        let tr = cluster_translations(cands, cfg.k_tr, seeds::child(seed, 0), cfg.max_iters);
        for (ci, cluster) in tr.iter().enumerate() {
            let members: Vec<ScoredPose> = cluster.members.iter().map(|&i| cands[i]).collect();
            let rot = cluster_rotations(&members, cfg.k_rot, sym, cfg.sigma, seeds::child(seed, 1 + ci as u64), cfg);
            for rc in rot {
                let lcp = rc.members.iter().map(|&m| members[m].lcp).fold(0.0, f64::max);
                let medoid = members[rc.medoid];
                let mut pose = medoid.pose;
                pose.translation = cluster.center;
                reps.push((
                    ScoredPose { pose, lcp },
                    Provenance {
                        source: cluster.members[rc.medoid],
                        members: rc.members.len(),
                        max_rotation_distance: rc.max_distance,
                    },
                ));
            }
        }
    }
    reps.sort_by(|a, b| b.0.lcp.total_cmp(&a.0.lcp).then(a.1.source.cmp(&b.1.source)));
    reps.truncate(cfg.max_representatives);
    Ok(HypothesisSet {
        object_id: candidates.object_id,
        representatives: reps.iter().map(|r| r.0).collect(),
        provenance: reps.iter().map(|r| r.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use nalgebra::Unit;

    fn sp(t: Vector3<f64>, r: UnitQuaternion<f64>, lcp: f64) -> ScoredPose {
        ScoredPose { pose: Pose::new(r, t), lcp }
    }

    fn rz(deg: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), deg.to_radians())
    }

    #[test]
    fn translations_single_point() {
        let c: Vec<_> = (0..10).map(|_| sp(Vector3::new(0.1, 0.2, 0.3), rz(0.0), 0.5)).collect();
        let cl = cluster_translations(&c, 3, 1, 50);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].members.len(), 10);
        assert!((cl[0].center - Vector3::new(0.1, 0.2, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn translations_two_blobs() {
        let mut rng = seeds::rng(4);
        let mut c = vec![];
        let mut sums = [Vector3::zeros(); 2];
        for i in 0..200 {
            let base = if i % 2 == 0 { Vector3::zeros() } else { Vector3::new(0.1, 0.0, 0.0) };
            let p = base + Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.01;
            sums[i % 2] += p;
            c.push(sp(p, rz(0.0), 0.5));
        }
        let means = [sums[0] / 100.0, sums[1] / 100.0];
        let cl = cluster_translations(&c, 2, 7, 50);
        assert_eq!(cl.len(), 2);
        for m in means {
            assert!(cl.iter().any(|c| (c.center - m).norm() < 0.002));
        }
    }

    #[test]
    fn translations_k_equals_n() {
        let c: Vec<_> = (0..4).map(|i| sp(Vector3::new(i as f64, 0.0, 0.0), rz(0.0), 0.5)).collect();
        let cl = cluster_translations(&c, 4, 1, 50);
        assert_eq!(cl.len(), 4);
        assert!(cl.iter().all(|c| c.members.len() == 1));
    }

    #[test]
    fn rotations_equal_up_to_symmetry() {
        let sym = SymmetryGroup::cyclic(Vector3::z(), 4);
        let m: Vec<_> = (0..12).map(|i| sp(Vector3::zeros(), rz(90.0 * (i % 4) as f64), 0.5)).collect();
        let cl = cluster_rotations(&m, 3, &sym, 0.5, 3, &ClusterConfig::default());
        assert_eq!(cl.len(), 1);
        assert!(cl[0].max_distance < 1e-9);
    }

    fn brute_medoid(rots: &[UnitQuaternion<f64>], idx: &[usize], sym: &SymmetryGroup, sigma: f64) -> usize {
        let mut best = (usize::MAX, f64::INFINITY);
        for &c in idx {
            let mut cost = 0.0;
            for &m in idx {
                let d = rotation_distance(&rots[c], &rots[m], sym);
                cost += 2.0 - 2.0 * (-(d * d) / (sigma * sigma)).exp();
            }
            if cost < best.1 - 1e-12 {
                best = (c, cost);
            }
        }
        best.0
    }

    #[test]
    fn two_rotation_groups() {
        let mut rng = seeds::rng(2);
        let sym = SymmetryGroup::trivial();
        let mut m = vec![];
        for i in 0..40 {
            let mode = if i % 2 == 0 { 0.0 } else { 120.0 };
            let axis = Unit::new_normalize(Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let jitter = UnitQuaternion::from_axis_angle(&axis, (rng.random::<f64>() * 6.0).to_radians());
            m.push(sp(Vector3::zeros(), rz(mode) * jitter, 0.5));
        }
        let sigma = 30f64.to_radians();
        let cl = cluster_rotations(&m, 2, &sym, sigma, 5, &ClusterConfig::default());
        assert_eq!(cl.len(), 2);
        let rots: Vec<_> = m.iter().map(|s| s.pose.rotation).collect();
        for mode in [0.0, 120.0] {
            let near = cl.iter().any(|c| crate::geometry::geodesic_angle(&rots[c.medoid], &rz(mode)).to_degrees() < 10.0);
            assert!(near, "no representative near {mode}");
        }
        for c in &cl {
            assert_eq!(c.medoid, brute_medoid(&rots, &c.members, &sym, sigma));
        }
    }

    #[test]
    fn single_cluster_is_global_medoid() {
        let mut rng = seeds::rng(8);
        let sym = SymmetryGroup::dihedral(Vector3::z(), 2);
        let m: Vec<_> = (0..30)
            .map(|_| {
                let axis = Unit::new_normalize(Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                sp(Vector3::zeros(), UnitQuaternion::from_axis_angle(&axis, rng.random::<f64>()), 0.5)
            })
            .collect();
        let sigma = 0.5;
        let cl = cluster_rotations(&m, 1, &sym, sigma, 1, &ClusterConfig::default());
        assert_eq!(cl.len(), 1);
        let rots: Vec<_> = m.iter().map(|s| s.pose.rotation).collect();
        let all: Vec<usize> = (0..30).collect();
        assert_eq!(cl[0].medoid, brute_medoid(&rots, &all, &sym, sigma));
    }

    fn pool(n: usize, seed: u64) -> CandidateSet {
        let mut rng = seeds::rng(seed);
        let candidates = (0..n)
            .map(|_| {
                let axis = Unit::new_normalize(Vector3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let t = Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()) * 0.05;
                sp(t, UnitQuaternion::from_axis_angle(&axis, rng.random::<f64>() * 3.0), rng.random::<f64>())
            })
            .collect();
        CandidateSet { object_id: ObjectId(3), candidates, budget_used: 0.0, trials: n }
    }

    #[test]
    fn hypothesis_set_bounds_and_medoids() {
        let cs = pool(3000, 1);
        let sym = SymmetryGroup::dihedral(Vector3::z(), 4);
        let cfg = ClusterConfig { kernel_sample_cap: 300, ..Default::default() };
        let h = build_hypothesis_set(&cs, &sym, &cfg, 9).unwrap();
        assert!(h.len() <= 25 && h.len() >= 5);
        assert_eq!(h.provenance.iter().map(|p| p.members).sum::<usize>(), 3000);
        for (r, p) in h.representatives.iter().zip(&h.provenance) {
            assert_eq!(r.pose.rotation, cs.candidates[p.source].pose.rotation);
        }
        assert!(h.representatives.windows(2).all(|w| w[0].lcp >= w[1].lcp));
        assert_eq!(h, build_hypothesis_set(&cs, &sym, &cfg, 9).unwrap());
    }

    #[test]
    fn small_pool_passthrough() {
        let cs = pool(20, 2);
        let h = build_hypothesis_set(&cs, &SymmetryGroup::trivial(), &ClusterConfig::default(), 0).unwrap();
        assert_eq!(h.len(), 20);
        let empty = CandidateSet { candidates: vec![], ..cs };
        assert!(build_hypothesis_set(&empty, &SymmetryGroup::trivial(), &ClusterConfig::default(), 0).is_err());
    }

    #[test]
    fn symmetry_shift_leaves_representatives() {
        let cs = pool(600, 5);
        let sym = SymmetryGroup::dihedral(Vector3::z(), 4);
        let s = sym.rotations()[3];
        let mut shifted = cs.clone();
        for c in &mut shifted.candidates {
            c.pose.rotation *= s;
        }
        let cfg = ClusterConfig::default();
        let a = build_hypothesis_set(&cs, &sym, &cfg, 2).unwrap();
        let b = build_hypothesis_set(&shifted, &sym, &cfg, 2).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.representatives.iter().zip(&b.representatives) {
            assert!(rotation_distance(&x.pose.rotation, &y.pose.rotation, &sym) < 1e-6);
            assert!((x.pose.translation - y.pose.translation).norm() < 1e-12);
        }
    }

    #[test]
    fn coverage_bound_holds() {
        let cs = pool(400, 6);
        let sym = SymmetryGroup::cyclic(Vector3::z(), 3);
        let tr = cluster_translations(&cs.candidates, 5, 1, 50);
        for c in tr {
            let members: Vec<ScoredPose> = c.members.iter().map(|&i| cs.candidates[i]).collect();
            for rc in cluster_rotations(&members, 5, &sym, 0.5, 3, &ClusterConfig::default()) {
                for &m in &rc.members {
                    let d = rotation_distance(&members[rc.medoid].pose.rotation, &members[m].pose.rotation, &sym);
                    assert!(d <= rc.max_distance + 1e-12);
                }
            }
        }
    }

    #[test]
    fn near_truth_survives_compression() {
        let mut cs = pool(2000, 7);
        let truth = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.4);
        let near = truth * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 2f64.to_radians());
        for i in 0..40 {
            let jitter = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), (i as f64 * 0.1).to_radians());
            cs.candidates[i * 50] = sp(Vector3::new(0.02, 0.02, 0.02), near * jitter, 0.9);
        }
        let sym = SymmetryGroup::trivial();
        let min_pool = cs.candidates.iter().map(|c| crate::geometry::geodesic_angle(&c.pose.rotation, &truth)).fold(f64::INFINITY, f64::min);
        let h = build_hypothesis_set(&cs, &sym, &ClusterConfig::default(), 4).unwrap();
        let min_rep = h.representatives.iter().map(|c| crate::geometry::geodesic_angle(&c.pose.rotation, &truth)).fold(f64::INFINITY, f64::min);
        assert!(min_rep <= 3.0 * min_pool, "{} vs {}", min_rep.to_degrees(), min_pool.to_degrees());
    }
}

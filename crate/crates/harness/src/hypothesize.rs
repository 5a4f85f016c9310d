//! Per-object hypothesis generation: detection, segment, congruent-set
//! registration and clustering, with candidate-quality bookkeeping.

use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use scenepose::clustering::{build_hypothesis_set, ClusterConfig, HypothesisSet};
use scenepose::geometry::{rotation_error, translation_error, Pose, SymmetryGroup};
use scenepose::registration::{generate_candidates, sample_model_cloud, Budget, RegistrationConfig, ScoredPose};
use scenepose::{seeds, ObjectId};

use crate::scenario::{observe_scene, SceneRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesizeConfig {
    /// Registration base trials per object.
    pub budget: usize,
    /// Model cloud size used by registration.
    pub model_points: usize,
    pub registration: RegistrationConfig,
    pub cluster: ClusterConfig,
}

impl Default for HypothesizeConfig {
    fn default() -> Self {
        Self {
            budget: 200,
            model_points: 1000,
            registration: RegistrationConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub lcp: f64,
    pub rotation_deg: f64,
    pub translation_cm: f64,
}

/// Errors of three ways of picking one candidate from a pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolQuality {
    pub size: usize,
    pub max_lcp: Selection,
    pub min_rotation: Selection,
    pub min_translation: Selection,
}

impl PoolQuality {
    pub fn measure(pool: &[ScoredPose], truth: &Pose, sym: &SymmetryGroup) -> Option<Self> {
        let sel: Vec<Selection> = pool
            .iter()
            .map(|c| Selection {
                lcp: c.lcp,
                rotation_deg: rotation_error(&c.pose, truth, sym),
                translation_cm: translation_error(&c.pose, truth),
            })
            .collect();
        let pick = |key: fn(&Selection) -> f64, max: bool| {
            sel.iter().copied().reduce(|a, b| {
                let better = if max { key(&b) > key(&a) } else { key(&b) < key(&a) };
                if better { b } else { a }
            })
        };
        Some(Self {
            size: pool.len(),
            max_lcp: pick(|s| s.lcp, true)?,
            min_rotation: pick(|s| s.rotation_deg, false)?,
            min_translation: pick(|s| s.translation_cm, false)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectHypotheses {
    pub object_id: ObjectId,
    pub model: String,
    pub segment_points: usize,
    pub trials: usize,
    pub registration_seconds: f64,
    /// Best raw candidate by LCP, before clustering.
    pub max_lcp: ScoredPose,
    pub hypotheses: HypothesisSet,
    /// Quality of the raw pool and of the representatives.
    pub pre_clustering: Option<PoolQuality>,
    pub post_clustering: Option<PoolQuality>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFile {
    pub scene_id: String,
    pub seed: u64,
    pub config: HypothesizeConfig,
    pub objects: Vec<ObjectHypotheses>,
}

impl HypothesisFile {
    pub fn object(&self, id: ObjectId) -> Option<&ObjectHypotheses> {
        self.objects.iter().find(|o| o.object_id == id)
    }
}

/// Runs registration and clustering for every object of the scene.
pub fn hypothesize(rec: &SceneRecord, cfg: &HypothesizeConfig) -> Result<HypothesisFile> {
    let lib = rec.library()?;
    let obs = observe_scene(rec, &lib)?;
    let reg_seed = rec.stream("registration");
    let cluster_seed = rec.stream("clustering");
    let mut objects = Vec::with_capacity(rec.ground_truth.objects.len());
    for o in &rec.ground_truth.objects {
        let model = &lib[&o.model];
        let segment = &obs.segments[&o.id];
        let cloud = sample_model_cloud(&model.mesh, cfg.model_points, seeds::derive(reg_seed, &o.model))?;
        let start = Instant::now();
        let cands = generate_candidates(
            o.id,
            &cloud,
            segment,
            Budget::Iterations(cfg.budget),
            &cfg.registration,
            seeds::child(reg_seed, o.id.0 as u64),
        )
        .with_context(|| format!("registering object {} of {}", o.id, rec.id))?;
        let registration_seconds = start.elapsed().as_secs_f64();
        let max_lcp = *cands.candidates.first().context("registration produced no candidates")?;
        let hypotheses = build_hypothesis_set(&cands, &model.symmetry, &cfg.cluster, seeds::child(cluster_seed, o.id.0 as u64))?;
        objects.push(ObjectHypotheses {
            object_id: o.id,
            model: o.model.clone(),
            segment_points: segment.len(),
            trials: cands.trials,
            registration_seconds,
            max_lcp,
            pre_clustering: PoolQuality::measure(&cands.candidates, &o.pose, &model.symmetry),
            post_clustering: PoolQuality::measure(&hypotheses.representatives, &o.pose, &model.symmetry),
            hypotheses,
        });
    }
    Ok(HypothesisFile { scene_id: rec.id.clone(), seed: rec.seed, config: *cfg, objects })
}

//! Physics-constrained Monte Carlo Tree Search over per-object hypotheses.

mod pipeline;
mod tree;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use pipeline::{camera_facing, place, score_scene, Pipeline, PipelineParams, PipelineStats, Placement, SearchContext, SearchObject};
pub use tree::{ucb, NodeId, SearchNode, SearchTree};

use crate::clustering::HypothesisSet;
use crate::dependency::{build_dependency_graph, ordered_lists, DependencyGraph};
use crate::error::{Error, Result};
use crate::geometry::{rotation_error, translation_error, PointCloud, Pose, SurfaceSamples};
use crate::render::{CameraModel, DepthImage, Score};
use crate::scene::ObjectModel;
use crate::sensing::Detection;
use crate::{par, seeds, ObjectId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// `score / support`, in `[0, 1]`.
    Normalized,
    /// The integer score.
    Raw,
}

impl RewardMode {
    pub fn reward(self, s: &Score) -> f64 {
        match self {
            RewardMode::Normalized => s.normalized(),
            RewardMode::Raw => s.score as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Mcts,
    /// Depth-first over representatives in descending LCP order.
    DepthFirstLcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub alpha: f64,
    /// Iterations; each expands at most one tree node and emits one trace row.
    pub max_expansions: usize,
    /// Optional wall-clock cap, seconds.
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub reward_mode: RewardMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { alpha: 0.7, max_expansions: 250, time_limit: None, seed: 0, reward_mode: RewardMode::Normalized }
    }
}

impl SearchConfig {
    /// Raw-score rewards with the matching large exploration constant.
    pub fn raw() -> Self {
        Self { alpha: 5000.0, reward_mode: RewardMode::Raw, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || self.max_expansions == 0 {
            return Err(Error::InvalidArgument("alpha must be ≥ 0 and max_expansions ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectError {
    pub object_id: ObjectId,
    pub rotation_deg: f64,
    pub translation_cm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub expansion_index: usize,
    pub best_score: f64,
    /// Mean over objects; absent without ground truth.
    pub rotation_error_deg: Option<f64>,
    pub translation_error_cm: Option<f64>,
    pub wall_ms: f64,
    pub object_errors: Vec<ObjectError>,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "expansion_index,best_score,rotation_error_deg,translation_error_cm,wall_ms";

    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        format!(
            "{},{:.6},{},{},{:.3}",
            self.expansion_index,
            self.best_score,
            opt(self.rotation_error_deg),
            opt(self.translation_error_cm),
            self.wall_ms
        )
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TraceRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: Vec<(ObjectId, Pose)>,
    pub best_path: Vec<usize>,
    /// Placements along `best_path`, in placement order.
    pub placements: Vec<Placement>,
    pub best_reward: f64,
    pub best_score: Score,
    pub trace: Vec<TraceRow>,
    pub tree: SearchTree,
    pub stats: PipelineStats,
}

/// Creates the child of `s` reached by placing representative `choice` of the
/// next object. `Ok(None)` when `s` is already complete.
pub fn expand(tree: &mut SearchTree, s: NodeId, choice: usize, pipe: &mut Pipeline) -> Result<Option<NodeId>> {
    let depth = tree.node(s).depth;
    if depth >= pipe.depth() {
        return Ok(None);
    }
    let n_hyp = pipe.ctx.objects[depth].hypotheses.len();
    if choice >= n_hyp {
        return Err(Error::InvalidArgument(format!("hypothesis {choice} of {n_hyp}")));
    }
    let mut path = tree.node(s).path.clone();
    path.push(choice);
    pipe.placement(&path);
    let untried = if depth + 1 < pipe.depth() { (0..pipe.ctx.objects[depth + 1].hypotheses.len()).collect() } else { vec![] };
    Ok(Some(tree.add_child(s, choice, untried)))
}

/// Descends by UCB to the first node with an untried hypothesis and expands
/// its best-LCP one; a complete node reached on the way is returned as is.
pub fn select(tree: &mut SearchTree, root: NodeId, alpha: f64, pipe: &mut Pipeline) -> Result<NodeId> {
    let mut s = root;
    loop {
        if tree.node(s).depth >= pipe.depth() {
            return Ok(s);
        }
        if !tree.node(s).untried.is_empty() {
            let choice = tree.nodes[s].untried.remove(0);
            return Ok(expand(tree, s, choice, pipe)?.expect("depth checked"));
        }
        s = tree.best_child(s, alpha)?;
    }
}

/// Completes the scene from `s` with uniformly random representatives and
/// returns the path and its score.
pub fn random_rollout<R: rand::Rng>(tree: &SearchTree, s: NodeId, pipe: &mut Pipeline, rng: &mut R) -> (Vec<usize>, Score) {
    let mut path = tree.node(s).path.clone();
    while path.len() < pipe.depth() {
        let n = pipe.ctx.objects[path.len()].hypotheses.len();
        path.push(rng.random_range(0..n));
        pipe.placement(&path);
    }
    let score = pipe.score(&path);
    (path, score)
}

struct Best {
    path: Vec<usize>,
    reward: f64,
    score: Score,
}

impl Best {
    fn offer(&mut self, path: &[usize], score: Score, mode: RewardMode) {
        let r = mode.reward(&score);
        if self.path.is_empty() || r > self.reward {
            self.path = path.to_vec();
            self.reward = r;
            self.score = score;
        }
    }
}

fn errors_for(ctx: &SearchContext, poses: &[Pose]) -> Vec<ObjectError> {
    ctx.objects
        .iter()
        .zip(poses)
        .filter_map(|(o, p)| {
            o.truth.map(|t| ObjectError {
                object_id: o.id,
                rotation_deg: rotation_error(p, &t, &o.model.symmetry),
                translation_cm: translation_error(p, &t),
            })
        })
        .collect()
}

fn row(pipe: &mut Pipeline, best: &Best, index: usize, start: &Instant) -> TraceRow {
    let poses = pipe.poses(&best.path);
    let errs = errors_for(pipe.ctx, &poses);
    let mean = |f: fn(&ObjectError) -> f64| (!errs.is_empty()).then(|| errs.iter().map(f).sum::<f64>() / errs.len() as f64);
    TraceRow {
        expansion_index: index,
        best_score: best.reward,
        rotation_error_deg: mean(|e| e.rotation_deg),
        translation_error_cm: mean(|e| e.translation_cm),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        object_errors: errs,
    }
}

fn finish(ctx: &SearchContext, mut pipe: Pipeline, best: Best, trace: Vec<TraceRow>, tree: SearchTree) -> SearchOutcome {
    let placements: Vec<Placement> = (1..=best.path.len()).map(|d| pipe.placement(&best.path[..d])).collect();
    SearchOutcome {
        best: ctx.objects.iter().map(|o| o.id).zip(placements.iter().map(|p| p.pose)).collect(),
        placements,
        best_path: best.path,
        best_reward: best.reward,
        best_score: best.score,
        trace,
        tree,
        stats: pipe.stats,
    }
}

fn root_untried(ctx: &SearchContext) -> Vec<usize> {
    (0..ctx.objects[0].hypotheses.len()).collect()
}

/// Select, roll out and back up for `max_expansions` iterations, tracking the
/// best complete scene seen anywhere.
pub fn mcts(ctx: &SearchContext, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let mut pipe = Pipeline::new(ctx)?;
    let mut tree = SearchTree::new(root_untried(ctx));
    let mut rng = seeds::rng(cfg.seed);
    let mut best = Best { path: vec![], reward: f64::NEG_INFINITY, score: Score { score: 0, support: 0 } };
    let mut trace = Vec::with_capacity(cfg.max_expansions);
    let start = Instant::now();
    for i in 0..cfg.max_expansions {
        if cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() > t) {
            break;
        }
        let s = select(&mut tree, SearchTree::ROOT, cfg.alpha, &mut pipe)?;
        let (path, score) = random_rollout(&tree, s, &mut pipe, &mut rng);
        best.offer(&path, score, cfg.reward_mode);
        tree.backup(s, cfg.reward_mode.reward(&score));
        trace.push(row(&mut pipe, &best, i, &start));
    }
    Ok(finish(ctx, pipe, best, trace, tree))
}

/// Depth-first search taking representatives in descending LCP order; each
/// iteration expands one node and complete scenes are scored on creation.
pub fn depth_first(ctx: &SearchContext, cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let mut pipe = Pipeline::new(ctx)?;
    let mut tree = SearchTree::new(root_untried(ctx));
    let mut best = Best { path: vec![], reward: f64::NEG_INFINITY, score: Score { score: 0, support: 0 } };
    let mut trace = Vec::with_capacity(cfg.max_expansions);
    let start = Instant::now();
    let mut cur = Some(SearchTree::ROOT);
    for i in 0..cfg.max_expansions {
        if cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() > t) {
            break;
        }
        // climb to the nearest ancestor with an untried representative
        while let Some(c) = cur {
            if !tree.node(c).untried.is_empty() {
                break;
            }
            cur = tree.node(c).parent;
        }
        if let Some(c) = cur {
            let choice = tree.nodes[c].untried.remove(0);
            let child = expand(&mut tree, c, choice, &mut pipe)?.expect("incomplete node");
            if tree.node(child).depth == pipe.depth() {
                let path = tree.node(child).path.clone();
                let score = pipe.score(&path);
                best.offer(&path, score, cfg.reward_mode);
                tree.backup(child, cfg.reward_mode.reward(&score));
                cur = Some(c);
            } else {
                cur = Some(child);
            }
        }
        if best.path.is_empty() {
            // nothing complete yet: report the greedy completion of the current branch
            let mut path = tree.node(cur.unwrap_or(SearchTree::ROOT)).path.clone();
            path.resize(pipe.depth(), 0);
            let score = pipe.score(&path);
            best.offer(&path, score, cfg.reward_mode);
        }
        trace.push(row(&mut pipe, &best, i, &start));
    }
    Ok(finish(ctx, pipe, best, trace, tree))
}

pub fn run_policy(ctx: &SearchContext, cfg: &SearchConfig, policy: Policy) -> Result<SearchOutcome> {
    match policy {
        Policy::Mcts => mcts(ctx, cfg),
        Policy::DepthFirstLcp => depth_first(ctx, cfg),
    }
}

/// Per-object inputs to a full scene search.
#[derive(Clone, Debug)]
pub struct ObjectInput {
    pub id: ObjectId,
    pub model: ObjectModel,
    pub samples: SurfaceSamples,
    pub segment: PointCloud,
    pub detection: Detection,
    pub hypotheses: HypothesisSet,
    pub truth: Option<Pose>,
}

#[derive(Clone, Debug)]
pub struct SceneInput {
    pub observed: DepthImage,
    pub camera: CameraModel,
    pub table_z: f64,
    pub objects: Vec<ObjectInput>,
    pub params: PipelineParams,
}

#[derive(Clone, Debug)]
pub struct ComponentResult {
    pub objects: Vec<ObjectId>,
    pub outcome: SearchOutcome,
}

#[derive(Clone, Debug)]
pub struct SceneResult {
    pub poses: BTreeMap<ObjectId, Pose>,
    pub graph: DependencyGraph,
    pub components: Vec<ComponentResult>,
    /// Components merged by iteration index: summed best scores, errors
    /// averaged over all objects, wall time of the slowest component.
    pub trace: Vec<TraceRow>,
}

impl SceneResult {
    pub fn stats(&self) -> PipelineStats {
        self.components.iter().fold(PipelineStats::default(), |mut a, c| {
            let s = &c.outcome.stats;
            a.expansions += s.expansions;
            a.expansion_seconds += s.expansion_seconds;
            a.renders += s.renders;
            a.render_seconds += s.render_seconds;
            a.settle_violations += s.settle_violations;
            a
        })
    }
}

/// Observation restricted to the union of the given boxes.
pub fn mask_to_boxes(observed: &DepthImage, boxes: &[Detection]) -> DepthImage {
    let (w, h) = observed.dims();
    let mut out = DepthImage::zeros(w, h);
    for v in 0..h {
        for u in 0..w {
            if boxes.iter().any(|d| d.bbox.contains(u, v)) {
                out.set(u, v, observed.get(u, v));
            }
        }
    }
    out
}

/// Builds the dependency graph and runs one independent search per ordered
/// component, each against the observation inside its own detection boxes.
pub fn compute_pose(input: &SceneInput, cfg: &SearchConfig, policy: Policy) -> Result<SceneResult> {
    cfg.validate()?;
    let by_id: BTreeMap<ObjectId, &ObjectInput> = input.objects.iter().map(|o| (o.id, o)).collect();
    if by_id.len() != input.objects.len() {
        return Err(Error::InvalidArgument("duplicate object id".into()));
    }
    let segments: BTreeMap<ObjectId, PointCloud> = input.objects.iter().map(|o| (o.id, o.segment.clone())).collect();
    let detections: BTreeMap<ObjectId, Detection> = input.objects.iter().map(|o| (o.id, o.detection)).collect();
    let graph = build_dependency_graph(&segments, &detections, &input.camera)?;
    let lists = ordered_lists(&graph)?;
    let outcomes = par::map(&lists, |list| -> Result<SearchOutcome> {
        let objs: Vec<&ObjectInput> = list.iter().map(|id| by_id[id]).collect();
        let boxes: Vec<Detection> = objs.iter().map(|o| o.detection).collect();
        let ctx = SearchContext {
            objects: objs
                .iter()
                .map(|o| SearchObject {
                    id: o.id,
                    model: o.model.clone(),
                    samples: o.samples.clone(),
                    segment: o.segment.clone(),
                    hypotheses: o.hypotheses.representatives.clone(),
                    truth: o.truth,
                })
                .collect(),
            observed: mask_to_boxes(&input.observed, &boxes),
            camera: input.camera.clone(),
            table_z: input.table_z,
            params: input.params,
        };
        let cfg = SearchConfig { seed: seeds::child(cfg.seed, list[0].0 as u64), ..*cfg };
        run_policy(&ctx, &cfg, policy)
    });
    let mut components = Vec::with_capacity(lists.len());
    for (list, o) in lists.into_iter().zip(outcomes) {
        components.push(ComponentResult { objects: list, outcome: o? });
    }
    let poses: BTreeMap<ObjectId, Pose> = components.iter().flat_map(|c| c.outcome.best.iter().copied()).collect();
    let trace = merge_traces(&components);
    Ok(SceneResult { poses, graph, components, trace })
}

fn merge_traces(components: &[ComponentResult]) -> Vec<TraceRow> {
    let len = components.iter().map(|c| c.outcome.trace.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            // a component that stopped early keeps its last row
            let rows: Vec<&TraceRow> =
                components.iter().filter_map(|c| c.outcome.trace.get(i).or(c.outcome.trace.last())).collect();
            let errs: Vec<ObjectError> = rows.iter().flat_map(|r| r.object_errors.iter().copied()).collect();
            let mean = |f: fn(&ObjectError) -> f64| (!errs.is_empty()).then(|| errs.iter().map(f).sum::<f64>() / errs.len() as f64);
            TraceRow {
                expansion_index: i,
                best_score: rows.iter().map(|r| r.best_score).sum(),
                rotation_error_deg: mean(|e| e.rotation_deg),
                translation_error_cm: mean(|e| e.translation_cm),
                wall_ms: rows.iter().map(|r| r.wall_ms).fold(0.0, f64::max),
                object_errors: errs,
            }
        })
        .collect()
}

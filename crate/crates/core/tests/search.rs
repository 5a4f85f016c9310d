mod common;

use common::*;
use nalgebra::Vector3;
use scenepose::geometry::{rotation_error, translation_error, Pose};
use scenepose::search::{
    compute_pose, depth_first, expand, mcts, random_rollout, score_scene, select, Pipeline, Policy, SearchConfig, SearchTree,
};
use scenepose::seeds;
use scenepose::ObjectId;

fn cfg(n: usize, seed: u64) -> SearchConfig {
    SearchConfig { max_expansions: n, seed, ..SearchConfig::default() }
}

#[test]
fn expand_at_full_depth_is_null() {
    let gt = scene(&[("box", 0.0, 0.0, 0.02, 20.0)]);
    let input = scene_input(&gt, &library(), &[hypotheses(&gt.objects[0].pose, 3, 0)], 0.0);
    let ctx = context(&input);
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let mut tree = SearchTree::new(vec![0, 1, 2]);
    let child = expand(&mut tree, SearchTree::ROOT, 0, &mut pipe).unwrap().unwrap();
    assert_eq!(tree.node(child).depth, 1);
    assert!(expand(&mut tree, child, 0, &mut pipe).unwrap().is_none());
}

#[test]
fn expand_truth_is_fixed_point() {
    let gt = scene(&[("box", 0.01, 0.02, 0.02, 35.0)]);
    let truth = gt.objects[0].pose;
    let input = scene_input(&gt, &library(), &[hypotheses(&truth, 3, 0)], 0.0);
    let ctx = context(&input);
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let p = pipe.placement(&[0]);
    let sym = &ctx.objects[0].model.symmetry;
    assert!(rotation_error(&p.pose, &truth, sym) < 0.5, "{}", rotation_error(&p.pose, &truth, sym));
    assert!(translation_error(&p.pose, &truth) < 0.2);
    assert!(!p.settle_violation);
}

#[test]
fn expansion_removes_bleed_onto_placed_object() {
    // the cube in front partly hides the box; with bleed its box swallows cube pixels
    let gt = scene(&[("cube", 0.0, -0.06, 0.025, 10.0), ("box", 0.03, 0.0, 0.02, 0.0)]);
    let lib = library();
    let truths: Vec<Pose> = gt.objects.iter().map(|o| o.pose).collect();
    let input = scene_input(&gt, &lib, &[hypotheses(&truths[0], 2, 0), hypotheses(&truths[1], 2, 0)], 0.5);
    let ctx = context(&input);
    let cube = &lib["cube"];
    let raw = &ctx.objects[1].segment;
    // oracle: points lying on the true cube surface
    let bleed: Vec<Vector3<f64>> = raw.points.iter().copied().filter(|p| cube.bvh.distance(&truths[0].inverse().transform_point(p)) < 1e-6).collect();
    assert!(bleed.len() >= 20, "scene must produce bleed, got {}", bleed.len());
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let placed = pipe.placement(&[0]).pose;
    let reduced = scenepose::sensing::subtract_explained_with(raw, &[(cube.bvh.as_ref(), placed)], ctx.params.subtract_eps);
    let kept = bleed.iter().filter(|b| reduced.points.contains(b)).count();
    assert!(kept as f64 <= 0.05 * bleed.len() as f64, "{kept} of {} bleed points survive", bleed.len());
    let p = pipe.placement(&[0, 0]);
    assert_eq!(p.reduced_points, reduced.len());
}

fn two_object_input(n_hyp: usize) -> scenepose::search::SceneInput {
    let gt = scene(&[("box", -0.04, 0.0, 0.02, 30.0), ("cube", 0.05, 0.03, 0.025, 0.0)]);
    let hyps: Vec<_> = gt.objects.iter().enumerate().map(|(i, o)| hypotheses(&o.pose, n_hyp, (i + 1) % n_hyp)).collect();
    scene_input(&gt, &library(), &hyps, 0.0)
}

#[test]
fn select_expands_best_lcp_first_then_descends_by_ucb() {
    let input = two_object_input(3);
    let ctx = context(&input);
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let mut tree = SearchTree::new(vec![0, 1, 2]);
    let first = select(&mut tree, SearchTree::ROOT, 0.5, &mut pipe).unwrap();
    assert_eq!(tree.node(first).path, vec![0]);
    tree.backup(first, 0.5);
    let second = select(&mut tree, SearchTree::ROOT, 0.5, &mut pipe).unwrap();
    assert_eq!(tree.node(second).path, vec![1]);
    tree.backup(second, 0.1);
    let third = select(&mut tree, SearchTree::ROOT, 0.5, &mut pipe).unwrap();
    tree.backup(third, 0.2);
    // root fully expanded: next select goes under the UCB-max child
    let best = tree.best_child(SearchTree::ROOT, 0.5).unwrap();
    let next = select(&mut tree, SearchTree::ROOT, 0.5, &mut pipe).unwrap();
    assert_eq!(tree.node(next).parent, Some(best));
    assert_eq!(tree.node(next).path[0], tree.node(best).path[0]);
}

#[test]
fn select_returns_terminal_when_tree_is_complete() {
    let gt = scene(&[("box", 0.0, 0.0, 0.02, 0.0)]);
    let input = scene_input(&gt, &library(), &[hypotheses(&gt.objects[0].pose, 1, 0)], 0.0);
    let ctx = context(&input);
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let mut tree = SearchTree::new(vec![0]);
    let leaf = select(&mut tree, SearchTree::ROOT, 0.7, &mut pipe).unwrap();
    tree.backup(leaf, 1.0);
    let len = tree.len();
    assert_eq!(select(&mut tree, SearchTree::ROOT, 0.7, &mut pipe).unwrap(), leaf);
    assert_eq!(tree.len(), len);
}

#[test]
fn rollout_rewards() {
    let gt = scene(&[("box", 0.0, 0.0, 0.02, 25.0)]);
    let truth = gt.objects[0].pose;
    let mut hyps = hypotheses(&truth, 2, 0);
    hyps[1].pose = Pose::new(truth.rotation, truth.translation + Vector3::new(0.1, 0.0, 0.0));
    let input = scene_input(&gt, &library(), &[hyps], 0.0);
    let ctx = context(&input);
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let mut tree = SearchTree::new(vec![0, 1]);
    let good = expand(&mut tree, SearchTree::ROOT, 0, &mut pipe).unwrap().unwrap();
    let bad = expand(&mut tree, SearchTree::ROOT, 1, &mut pipe).unwrap().unwrap();
    let mut rng = seeds::rng(0);
    let (_, sg) = random_rollout(&tree, good, &mut pipe, &mut rng);
    let (_, sb) = random_rollout(&tree, bad, &mut pipe, &mut rng);
    // terminal nodes score themselves
    assert_eq!(sg, score_scene(&ctx, &pipe.poses(&[0])));
    assert!(sg.normalized() > sb.normalized());
    // the settled truth renders back the observation
    assert!(sg.normalized() > 0.97, "{}", sg.normalized());
    let perfect = score_scene(&ctx, &[truth]);
    assert_eq!(perfect.score, perfect.support);
    assert_eq!(perfect.normalized(), 1.0);
}

#[test]
fn single_object_finds_truth_among_25() {
    let gt = scene(&[("box", 0.02, 0.01, 0.02, 40.0)]);
    let truth = gt.objects[0].pose;
    let input = scene_input(&gt, &library(), &[hypotheses(&truth, 25, 17)], 0.0);
    let ctx = context(&input);
    let out = mcts(&ctx, &cfg(25, 1)).unwrap();
    let sym = &ctx.objects[0].model.symmetry;
    let pose = out.best[0].1;
    assert!(rotation_error(&pose, &truth, sym) < 1.0);
    assert!(translation_error(&pose, &truth) < 0.5);
    assert_eq!(out.trace.len(), 25);
}

#[test]
fn one_expansion_returns_its_rollout() {
    let input = two_object_input(3);
    let ctx = context(&input);
    let out = mcts(&ctx, &cfg(1, 9)).unwrap();
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.tree.reward_log.len(), 1);
    assert_eq!(out.best_path.len(), 2);
    assert_eq!(out.best_path[0], 0);
    assert!((out.best_reward - out.tree.reward_log[0].1).abs() < 1e-15);
}

#[test]
fn tree_ledger_determinism_and_anytime_trace() {
    let input = two_object_input(5);
    let ctx = context(&input);
    let a = mcts(&ctx, &cfg(200, 4)).unwrap();
    a.tree.check_ledger(1e-9).unwrap();
    assert_eq!(a.tree.node(SearchTree::ROOT).n, 200);
    assert!(a.tree.reward_log.iter().all(|r| (0.0..=1.0).contains(&r.1)));
    assert!(a.tree.nodes.iter().all(|n| n.h <= n.n as f64 + 1e-9));
    assert!(a.trace.windows(2).all(|w| w[1].best_score >= w[0].best_score));
    let b = mcts(&ctx, &cfg(200, 4)).unwrap();
    assert_eq!(a.tree, b.tree);
    assert_eq!(a.best_path, b.best_path);
    let strip = |t: &[scenepose::search::TraceRow]| t.iter().map(|r| (r.best_score, r.rotation_error_deg)).collect::<Vec<_>>();
    assert_eq!(strip(&a.trace), strip(&b.trace));
}

#[test]
fn exhaustive_equivalence_on_two_objects() {
    let input = two_object_input(3);
    let ctx = context(&input);
    let out = mcts(&ctx, &cfg(12, 2)).unwrap();
    let mut pipe = Pipeline::new(&ctx).unwrap();
    let mut all = vec![];
    for i in 0..3 {
        for j in 0..3 {
            all.push(([i, j], pipe.score(&[i, j]).normalized()));
        }
    }
    let max = all.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.best_reward, max);
    let argmax: Vec<_> = all.iter().filter(|a| a.1 == max).map(|a| a.0.to_vec()).collect();
    assert!(argmax.contains(&out.best_path));
    let poses = pipe.poses(&out.best_path);
    assert_eq!(out.best.iter().map(|b| b.1).collect::<Vec<_>>(), poses);
}

#[test]
fn depth_first_walks_lcp_order() {
    let input = two_object_input(3);
    let ctx = context(&input);
    let out = depth_first(&ctx, &cfg(4, 0)).unwrap();
    let paths: Vec<Vec<usize>> = out.tree.nodes.iter().skip(1).map(|n| n.path.clone()).collect();
    assert_eq!(paths, vec![vec![0], vec![0, 0], vec![0, 1], vec![0, 2]]);
    assert_eq!(out.trace.len(), 4);
}

#[test]
fn components_get_independent_trees() {
    let gt = scene(&[("box", -0.08, 0.0, 0.02, 0.0), ("cube", 0.0, 0.06, 0.025, 0.0), ("box", 0.08, -0.02, 0.02, 60.0)]);
    let hyps: Vec<_> = gt.objects.iter().map(|o| hypotheses(&o.pose, 4, 0)).collect();
    let input = scene_input(&gt, &library(), &hyps, 0.0);
    let res = compute_pose(&input, &cfg(10, 3), Policy::Mcts).unwrap();
    assert_eq!(res.components.len(), 3);
    for c in &res.components {
        assert_eq!(c.objects.len(), 1);
        assert!(c.outcome.tree.nodes.iter().all(|n| n.depth <= 1));
    }
    let ids: Vec<ObjectId> = res.poses.keys().copied().collect();
    assert_eq!(ids, vec![ObjectId(0), ObjectId(1), ObjectId(2)]);
    assert_eq!(res.trace.len(), 10);
    for o in &gt.objects {
        assert!(translation_error(&res.poses[&o.id], &o.pose) < 0.5);
    }
}

#[test]
fn stack_forms_one_tree_of_depth_two() {
    let gt = scene(&[("box", 0.0, 0.0, 0.02, 0.0), ("cube", 0.005, 0.0, 0.065, 15.0), ("box", 0.12, 0.05, 0.02, 0.0)]);
    let hyps: Vec<_> = gt.objects.iter().map(|o| hypotheses(&o.pose, 3, 0)).collect();
    let input = scene_input(&gt, &library(), &hyps, 0.0);
    let res = compute_pose(&input, &cfg(6, 3), Policy::Mcts).unwrap();
    let mut shapes: Vec<Vec<ObjectId>> = res.components.iter().map(|c| c.objects.clone()).collect();
    shapes.sort();
    assert_eq!(shapes, vec![vec![ObjectId(0), ObjectId(1)], vec![ObjectId(2)]]);
    let total: usize = res.components.iter().map(|c| c.objects.len()).sum();
    assert_eq!(total, res.poses.len());
}

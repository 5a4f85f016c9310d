use scenepose::clustering::HypothesisSet;
use scenepose::geometry::Pose;
use scenepose::registration::{RegistrationConfig, ScoredPose};
use scenepose::search::{PipelineStats, TraceRow};
use scenepose::ObjectId;
use scenepose_harness::evaluate::{evaluate, RunReport};
use scenepose_harness::hypothesize::{HypothesisFile, HypothesizeConfig, ObjectHypotheses, PoolQuality, Selection};
use scenepose_harness::methods::{Method, MethodConfig, MethodRun, ObjectResult};
use scenepose_harness::scenario::Level;

fn obj(id: u32, rot: f64, trans: f64) -> ObjectResult {
    ObjectResult { object_id: ObjectId(id), pose: Pose::identity(), rotation_deg: rot, translation_cm: trans }
}

fn row(i: usize, score: f64, rot: f64) -> TraceRow {
    TraceRow {
        expansion_index: i,
        best_score: score,
        rotation_error_deg: Some(rot),
        translation_error_cm: Some(0.0),
        wall_ms: 0.0,
        object_errors: vec![],
    }
}

fn run(scene: &str, level: Level, method: Method, objects: Vec<ObjectResult>, trace: Vec<TraceRow>) -> MethodRun {
    MethodRun {
        scene_id: scene.into(),
        level,
        method,
        seed: 0,
        config: MethodConfig::default(),
        objects,
        trace,
        stats: PipelineStats::default(),
        wall_seconds: 0.0,
        graph: None,
        components: vec![],
        physics: vec![],
    }
}

fn report(scene: &str, level: Level, runs: Vec<MethodRun>, hypotheses: Option<HypothesisFile>) -> RunReport {
    RunReport { scene_id: scene.into(), level, seed: 0, hypotheses, runs }
}

fn sel(rot: f64, trans: f64) -> Selection {
    Selection { lcp: 0.5, rotation_deg: rot, translation_cm: trans }
}

fn hyp_file(scene: &str, pre: [(f64, f64); 3], post: [(f64, f64); 3]) -> HypothesisFile {
    let q = |v: [(f64, f64); 3], size| PoolQuality {
        size,
        max_lcp: sel(v[0].0, v[0].1),
        min_rotation: sel(v[1].0, v[1].1),
        min_translation: sel(v[2].0, v[2].1),
    };
    HypothesisFile {
        scene_id: scene.into(),
        seed: 0,
        config: HypothesizeConfig { registration: RegistrationConfig::default(), ..Default::default() },
        objects: vec![ObjectHypotheses {
            object_id: ObjectId(0),
            model: "box".into(),
            segment_points: 100,
            trials: 10,
            registration_seconds: 0.0,
            max_lcp: ScoredPose { pose: Pose::identity(), lcp: 0.5 },
            hypotheses: HypothesisSet { object_id: ObjectId(0), representatives: vec![], provenance: vec![] },
            pre_clustering: Some(q(pre, 100)),
            post_clustering: Some(q(post, 10)),
        }],
    }
}

#[test]
fn single_perfect_run_has_zero_means() {
    let r = report("s", Level::TwoObject, vec![run("s", Level::TwoObject, Method::Mcts, vec![obj(0, 0.0, 0.0), obj(1, 0.0, 0.0)], vec![row(0, 1.0, 0.0)])], None);
    let s = evaluate(&[r]).unwrap();
    for level in ["two_object", "all"] {
        let m = s.method(level, Method::Mcts).unwrap();
        assert_eq!((m.mean_rotation_deg, m.mean_translation_cm, m.objects, m.scenes), (0.0, 0.0, 2, 1));
    }
    assert!(s.method("two_object", Method::MaxLcpIcp).is_none());
    assert!(s.anytime.iter().all(|a| a.mean_rotation_deg == 0.0));
}

#[test]
fn means_match_hand_computed_averages() {
    let reports = vec![
        report(
            "a",
            Level::TwoObject,
            vec![
                run("a", Level::TwoObject, Method::Mcts, vec![obj(0, 1.0, 0.5), obj(1, 3.0, 1.5)], vec![row(0, 0.5, 4.0), row(1, 0.7, 2.0)]),
                run("a", Level::TwoObject, Method::MaxLcpIcp, vec![obj(0, 10.0, 2.0), obj(1, 20.0, 4.0)], vec![]),
            ],
            None,
        ),
        report(
            "b",
            Level::ThreeObject,
            vec![run("b", Level::ThreeObject, Method::Mcts, vec![obj(0, 2.0, 1.0), obj(1, 4.0, 0.0), obj(2, 6.0, 2.0)], vec![row(0, 0.9, 6.0)])],
            None,
        ),
    ];
    let s = evaluate(&reports).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let m = s.method("two_object", Method::Mcts).unwrap();
    assert!(close(m.mean_rotation_deg, 2.0) && close(m.mean_translation_cm, 1.0));
    let m = s.method("three_object", Method::Mcts).unwrap();
    assert!(close(m.mean_rotation_deg, 4.0) && close(m.mean_translation_cm, 1.0));
    // five objects pooled: (1+3+2+4+6)/5 and (0.5+1.5+1+0+2)/5
    let m = s.method("all", Method::Mcts).unwrap();
    assert!(close(m.mean_rotation_deg, 3.2) && close(m.mean_translation_cm, 1.0));
    let m = s.method("all", Method::MaxLcpIcp).unwrap();
    assert!(close(m.mean_rotation_deg, 15.0) && close(m.mean_translation_cm, 3.0));

    // scene b's single row carries over to index 1
    let at = |i: usize| s.anytime.iter().find(|a| a.method == "mcts" && a.level == "all" && a.expansion_index == i).unwrap();
    assert!(close(at(0).mean_rotation_deg, 5.0) && close(at(0).mean_best_score, 0.7));
    assert!(close(at(1).mean_rotation_deg, 4.0) && close(at(1).mean_best_score, 0.8));
    assert!(!s.anytime.iter().any(|a| a.method == "max_lcp_icp"));
}

#[test]
fn quality_table_averages_each_selection() {
    let reports = vec![
        report("a", Level::TwoObject, vec![], Some(hyp_file("a", [(10.0, 1.0), (2.0, 2.0), (6.0, 0.2)], [(12.0, 1.0), (4.0, 2.0), (8.0, 0.4)]))),
        report("b", Level::TwoObject, vec![], Some(hyp_file("b", [(20.0, 3.0), (4.0, 1.0), (9.0, 0.4)], [(20.0, 3.0), (6.0, 1.0), (9.0, 0.6)]))),
    ];
    let s = evaluate(&reports).unwrap();
    let q = |stage: &str, sel: &str| s.quality("all", stage, sel).unwrap();
    assert_eq!(q("pre_clustering", "max_lcp").mean_rotation_deg, 15.0);
    assert_eq!(q("pre_clustering", "min_rotation").mean_rotation_deg, 3.0);
    assert!((q("post_clustering", "min_translation").mean_translation_cm - 0.5).abs() < 1e-12);
    assert_eq!(q("post_clustering", "max_lcp").mean_pool_size, 10.0);
    assert_eq!(q("pre_clustering", "max_lcp").objects, 2);
    for stage in ["pre_clustering", "post_clustering"] {
        assert!(q(stage, "min_rotation").mean_rotation_deg <= q(stage, "max_lcp").mean_rotation_deg);
    }
}

#[test]
fn nothing_to_evaluate_is_an_error() {
    assert!(evaluate(&[]).is_err());
}

#[test]
fn aggregates_recompute_from_shipped_rows() {
    let r = report("a", Level::TwoObject, vec![run("a", Level::TwoObject, Method::DepthFirstLcp, vec![obj(0, 1.5, 0.25), obj(1, 2.5, 0.75)], vec![])], None);
    let text = serde_json::to_string(&r).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    let m = evaluate(std::slice::from_ref(&back)).unwrap();
    let raw = back.run(Method::DepthFirstLcp).unwrap();
    let mean = raw.objects.iter().map(|o| o.rotation_deg).sum::<f64>() / raw.objects.len() as f64;
    assert_eq!(m.method("two_object", Method::DepthFirstLcp).unwrap().mean_rotation_deg, mean);
}

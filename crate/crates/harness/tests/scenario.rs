mod common;

use scenepose::dependency::EdgeKind;
use scenepose::physics::penetration_depth;
use scenepose_harness::methods::scene_physics;
use scenepose_harness::scenario::{dependency_graph, gen_scene, observe_scene, visibility, Pattern, ScenarioSpec};

use common::{noisy, spec};

#[test]
fn independent_boxes_rest_on_the_table_without_overlap() {
    let s = ScenarioSpec { models: vec!["box".into()], objects: 3, ..spec(Pattern::Independent, 4) };
    for i in 0..4 {
        let rec = gen_scene(&s, i).unwrap();
        let lib = rec.library().unwrap();
        let objs = &rec.ground_truth.objects;
        assert_eq!(objs.len(), 3);
        for c in scene_physics(&rec, &lib) {
            assert!(c.penetration <= 1e-3 && c.support_gap <= 2e-3, "{c:?}");
        }
        for a in 0..3 {
            let bottom = lib["box"].mesh.vertices().iter().map(|v| (objs[a].pose.transform_point(v)).z).fold(f64::INFINITY, f64::min);
            assert!(bottom.abs() <= 2e-3, "object {a} floats at {bottom}");
            for b in a + 1..3 {
                let d = penetration_depth((&lib["box"].mesh, objs[a].pose), (&lib["box"].mesh, objs[b].pose));
                assert!(d <= 1e-3, "objects {a} and {b} overlap by {d}");
            }
        }
        let obs = observe_scene(&rec, &lib).unwrap();
        assert!(dependency_graph(&obs, &rec.ground_truth.camera).unwrap().edges.is_empty());
    }
}

#[test]
fn stack_produces_a_support_edge() {
    for i in 0..5 {
        let rec = gen_scene(&spec(Pattern::Stack2, 8), i).unwrap();
        let lib = rec.library().unwrap();
        let g = dependency_graph(&observe_scene(&rec, &lib).unwrap(), &rec.ground_truth.camera).unwrap();
        let ids: Vec<_> = rec.ground_truth.objects.iter().map(|o| o.id).collect();
        assert!(g.has_edge(ids[0], ids[1], EdgeKind::Support), "{:?}", g.edges);
        let top = rec.ground_truth.objects[1].pose.translation.z;
        assert!(top > rec.ground_truth.objects[0].pose.translation.z);
    }
}

#[test]
fn every_object_is_visible_enough() {
    for p in [Pattern::Occlusion2, Pattern::Three] {
        for i in 0..4 {
            let rec = gen_scene(&noisy(p, 21), i).unwrap();
            let vis = visibility(&rec.ground_truth, &rec.library().unwrap()).unwrap();
            assert!(vis.iter().all(|v| *v >= 0.05), "{p:?} {i}: {vis:?}");
        }
    }
}

#[test]
fn fixed_seed_gives_identical_scene_json() {
    let s = noisy(Pattern::Three, 5);
    let a = serde_json::to_string(&gen_scene(&s, 2).unwrap()).unwrap();
    let b = serde_json::to_string(&gen_scene(&s, 2).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = serde_json::to_string(&gen_scene(&s, 3).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn retries_exhausted_is_an_error() {
    // nothing can be 100% visible behind an occluder
    let s = ScenarioSpec { min_visibility: 1.0, max_retries: 3, ..spec(Pattern::Occlusion2, 1) };
    assert!(gen_scene(&s, 0).is_err());
}

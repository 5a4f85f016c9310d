//! Registration and clustering on one worker versus the whole pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{UnitQuaternion, Vector3};

use scenepose::clustering::{build_hypothesis_set, ClusterConfig};
use scenepose::geometry::{transform_points, Pose, SymmetryGroup, TriMesh};
use scenepose::registration::{generate_candidates, sample_model_cloud, Budget, RegistrationConfig};
use scenepose::ObjectId;

fn pools() -> Vec<(String, usize)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut v = vec![("sequential".to_string(), 1)];
    if cfg!(feature = "parallel") && all > 1 {
        v.push((format!("parallel_{all}"), all));
    }
    v
}

#[cfg(feature = "parallel")]
fn on_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool").install(f)
}

#[cfg(not(feature = "parallel"))]
fn on_pool<R>(_threads: usize, f: impl FnOnce() -> R) -> R {
    f()
}

fn bench(c: &mut Criterion) {
    let mesh = TriMesh::cuboid(0.08, 0.05, 0.04).unwrap();
    let model = sample_model_cloud(&mesh, 1000, 1).unwrap();
    let truth = Pose::new(UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1), Vector3::new(0.02, 0.05, 0.03));
    let segment = transform_points(&truth, &sample_model_cloud(&mesh, 2000, 2).unwrap());
    let cfg = RegistrationConfig::default();
    let sym = SymmetryGroup::dihedral(Vector3::z(), 2);
    let pool = generate_candidates(ObjectId(0), &model, &segment, Budget::Iterations(100), &cfg, 3).unwrap();

    let mut g = c.benchmark_group("registration");
    g.sample_size(10);
    for (name, threads) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(&name), &threads, |b, &t| {
            b.iter(|| on_pool(t, || generate_candidates(ObjectId(0), &model, &segment, Budget::Iterations(40), &cfg, 3).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("clustering");
    g.sample_size(10);
    for (name, threads) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(&name), &threads, |b, &t| {
            b.iter(|| on_pool(t, || build_hypothesis_set(&pool, &sym, &ClusterConfig::default(), 4).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

//! One worker thread against the full pool. Built without the `parallel`
//! feature, both variants run the sequential fallback.

use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use anthro_layout::anthropometry::{AnthropometricProfile, DimensionMap, Mode};
use anthro_layout::cli::pipeline::SceneFile;
use anthro_layout::config::LayoutConfig;
use anthro_layout::constraints::{compile, ConstraintProgram};
use anthro_layout::geometry::Room;
use anthro_layout::metrics::{mean_speed_heatmap, Sample, TrajectoryEpisode};
use anthro_layout::optimizer::select_candidate;
use anthro_layout::par;
use anthro_layout::relations::{infer_relations, Lexicon, RuleBackend};

fn read(rel: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)).unwrap()
}

fn office(config: &LayoutConfig) -> ConstraintProgram {
    let scene = SceneFile::from_json(&read("data/scenes/office10.json")).unwrap();
    let profile = AnthropometricProfile::from_json(&read("data/profile.example.json")).unwrap();
    let inf = infer_relations(&scene.assets, &scene.room, &scene.criteria, &RuleBackend::new(Lexicon::bundled())).unwrap();
    compile(&scene.assets, &inf, &scene.room, Mode::Ho, Some(&profile), &DimensionMap::bundled(), config).unwrap()
}

fn walk(id: usize) -> TrajectoryEpisode {
    let samples = (0..600)
        .map(|k| {
            let t = k as f64 / 30.0;
            let a = t * 0.3 + id as f64;
            Sample::new(t, 3.0 + 2.0 * a.cos(), 2.5 + 1.5 * a.sin())
        })
        .collect();
    TrajectoryEpisode::new(&format!("p{id}"), 30.0, samples)
}

fn pools() -> [(&'static str, Option<usize>); 2] {
    [("1-thread", Some(1)), ("default", None)]
}

fn bench_candidates(c: &mut Criterion) {
    let config = LayoutConfig::default();
    let program = office(&config);
    let mut g = c.benchmark_group("select_candidate");
    g.sample_size(10);
    for (name, jobs) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, jobs| {
            b.iter(|| par::with_jobs(*jobs, || select_candidate(&program, &config).unwrap()))
        });
    }
    g.finish();
}

fn bench_heatmap(c: &mut Criterion) {
    let room = Room::new(6.0, 5.0, 2.7);
    let episodes: Vec<_> = (0..6).map(walk).collect();
    let mut g = c.benchmark_group("heatmap_1024");
    g.sample_size(10);
    for (name, jobs) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, jobs| {
            b.iter(|| par::with_jobs(*jobs, || mean_speed_heatmap(&episodes, &room, 1024, 0.05).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_candidates, bench_heatmap);
criterion_main!(benches);

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anthro_layout::anthropometry::{DimensionMap, Mode};
use anthro_layout::cli::explain::render;
use anthro_layout::config::LayoutConfig;
use anthro_layout::constraints::compile;
use anthro_layout::constraints::dump::dump;
use anthro_layout::geometry::Room;
use anthro_layout::relations::{ObjectAsset, Relation, RelationKind, SceneInference, SemanticGroup};
use proptest::prelude::*;
use serde_json::{json, Value};

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anthro-layout"))
        .current_dir(crate_dir())
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_block(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error block");
    serde_json::from_str(line).expect("error block is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const OFFICE: &str = "data/scenes/office10.json";
const PROFILE: &str = "data/profile.example.json";

#[test]
fn office_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("office.json");
    ok(&run(&["generate", OFFICE, "--mode", "ho", "--profile", PROFILE, "--seed", "0", "-o", s(&out)]));
    let golden = crate_dir().join("tests/golden");
    let pairs = [
        (out.clone(), golden.join("office10_ho_seed0.json")),
        (dir.path().join("office.program.json"), golden.join("office10_ho_seed0.program.json")),
    ];
    for (got, want) in pairs {
        let got = std::fs::read(got).unwrap();
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&want, &got).unwrap();
        }
        assert!(got == std::fs::read(&want).unwrap(), "{} differs", want.display());
    }
}

#[test]
fn po_without_profile_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["generate", OFFICE, "--mode", "po", "-o", s(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_block(&out);
    assert!(e["error"]["message"].as_str().unwrap().contains("profile required"));
    assert_eq!(e["error"]["kind"], "config");
    assert!(!dir.path().join("x.json").exists());
}

#[test]
fn baseline_ignores_profile_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("b.json");
    let out = run(&[
        "generate", OFFICE, "--mode", "baseline", "--profile", PROFILE, "--iterations", "50", "-o", s(&out_path),
    ]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ignores the supplied anthropometric profile"));
    let layout: Value = serde_json::from_slice(&std::fs::read(out_path).unwrap()).unwrap();
    assert_eq!(layout["diagnostics"]["mode"], "baseline");
    assert_eq!(layout["diagnostics"]["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn replay_is_byte_identical_and_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    std::fs::copy(crate_dir().join("data/scenes/synthetic6.json"), &scene).unwrap();
    let first = dir.path().join("a.json");
    ok(&run(&["generate", s(&scene), "--profile", PROFILE, "--seed", "7", "--iterations", "120", "-o", s(&first)]));
    let second = dir.path().join("b.json");
    ok(&run(&["--jobs", "1", "generate", "--replay", s(&first), "-o", s(&second)]));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let again = dir.path().join("c.json");
    ok(&run(&["generate", "--replay", s(&dir.path().join("a.program.json")), "-o", s(&again)]));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&again).unwrap());

    let mut text = std::fs::read_to_string(&scene).unwrap();
    text.push(' ');
    std::fs::write(&scene, text).unwrap();
    let out = run(&["generate", "--replay", s(&first), "-o", s(&dir.path().join("d.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_block(&out)["error"]["message"].as_str().unwrap().contains("changed since"));
}

fn layout_file(dir: &Path, name: &str, room: (f64, f64), assets: Value) -> PathBuf {
    let v = json!({
        "format": "anthro-layout/layout",
        "version": 1,
        "room": {"width": room.0, "depth": room.1, "height": 2.5},
        "assets": assets,
    });
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn asset(id: &str, category: &str, x: f64, y: f64, w: f64, d: f64) -> Value {
    json!({"id": id, "category": category, "width": w, "depth": d, "height": 0.8,
           "x": x, "y": y, "z_base": 0.0, "yaw": 0.0})
}

fn evaluate(args: &[&str]) -> Value {
    let out = run(args);
    ok(&out);
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn planted_overlaps_match_hand_count() {
    let dir = tempfile::tempdir().unwrap();
    // a-b circles overlap (radii 0.5 each, centers 0.8 apart); c is far from both
    // and d pokes out of the room: 1 colliding pair of 6, 1 of 4 outside.
    let p = layout_file(
        dir.path(),
        "planted.json",
        (5.0, 5.0),
        json!([
            asset("a", "desk", 1.0, 1.0, 0.6, 0.8),
            asset("b", "desk", 1.8, 1.0, 0.6, 0.8),
            asset("c", "plant", 4.0, 4.0, 0.4, 0.4),
            asset("d", "plant", 4.9, 1.0, 0.4, 0.4),
        ]),
    );
    let r = evaluate(&["evaluate", s(&p)]);
    assert_eq!(r["collision_free"].as_f64().unwrap(), 5.0 / 6.0);
    assert_eq!(r["in_boundary"].as_f64().unwrap(), 0.75);
    assert_eq!(r["colliding_pairs"], json!([["a", "b"]]));
    assert_eq!(r["outside_room"], json!(["d"]));
    assert!(r.get("behavior").is_none());
}

#[test]
fn empty_room_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = layout_file(dir.path(), "empty.json", (3.0, 3.0), json!([]));
    let r = evaluate(&["evaluate", s(&p)]);
    assert_eq!(r["collision_free"].as_f64(), Some(1.0));
    assert_eq!(r["in_boundary"].as_f64(), Some(1.0));
}

fn csv_episode(dir: &Path, name: &str, fps: f64, speed: f64) -> PathBuf {
    let mut text = format!("# participant={name} fps={fps}\nt,x,y\n");
    for k in 0..60 {
        let t = k as f64 / fps;
        text.push_str(&format!("{t},{},{}\n", 0.5 + speed * t, 2.5));
    }
    let p = dir.join(format!("{name}.csv"));
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn trajectories_add_behavior_sections() {
    let dir = tempfile::tempdir().unwrap();
    let p = layout_file(
        dir.path(),
        "room.json",
        (5.0, 5.0),
        json!([asset("desk", "desk", 3.5, 2.9, 1.2, 0.6), asset("chest", "chest", 1.5, 1.0, 0.8, 0.45)]),
    );
    let t1 = csv_episode(dir.path(), "p1", 30.0, 1.0);
    let t2 = csv_episode(dir.path(), "p2", 30.0, 2.0);
    let prefix = dir.path().join("heat");
    let r = evaluate(&[
        "evaluate", s(&p), "--trajectory", s(&t1), "--trajectory", s(&t2), "--profile", PROFILE,
        "--heatmap", s(&prefix),
    ]);
    let b = &r["behavior"];
    assert_eq!(b["episodes"].as_array().unwrap().len(), 2);
    assert_eq!(b["distinct_trajectories"].as_u64(), Some(1));
    let occ = &b["episodes"][0]["occupancy"];
    assert_eq!(occ["target"], "desk");
    assert!((0.0..=1.0).contains(&occ["ratio"].as_f64().unwrap()));
    assert!(b["heatmap"]["visited_cells"].as_u64().unwrap() > 0);
    let pgm = std::fs::read(prefix.with_extension("pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n1024 1024\n255\n"));
    assert!(std::fs::read(prefix.with_extension("raw")).unwrap().starts_with(b"ANTHRO-HEATMAP 1\n"));
}

#[test]
fn fps_mismatch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = layout_file(dir.path(), "room.json", (5.0, 5.0), json!([]));
    let t1 = csv_episode(dir.path(), "p1", 30.0, 1.0);
    let t2 = csv_episode(dir.path(), "p2", 25.0, 1.0);
    let out = run(&["evaluate", s(&p), "--trajectory", s(&t1), "--trajectory", s(&t2)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_block(&out)["error"]["message"].as_str().unwrap().contains("fps"));
}

#[test]
fn explain_lists_every_term_and_the_exact_total() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    ok(&run(&["generate", OFFICE, "--profile", PROFILE, "--iterations", "60", "-o", s(&out)]));
    let dump_path = dir.path().join("o.program.json");
    let dumped: Value = serde_json::from_slice(&std::fs::read(&dump_path).unwrap()).unwrap();
    let terms = dumped["terms"].as_array().unwrap();

    for input in [&out, &dump_path] {
        let res = run(&["explain", s(input)]);
        ok(&res);
        let text = String::from_utf8(res.stdout).unwrap();
        let rows = text.lines().filter(|l| l.trim_start().chars().next().is_some_and(|c| c.is_ascii_digit()));
        assert_eq!(rows.count(), terms.len());
        let total_line = text.lines().last().unwrap();
        let total: f64 = total_line.rsplit(' ').next().unwrap().parse().unwrap();
        assert_eq!(total, dumped["total"].as_f64().unwrap());
        let weighted: f64 = terms.iter().map(|t| t["weighted"].as_f64().unwrap()).sum();
        assert_eq!(weighted, total);

        let res = run(&["explain", "--json", s(input)]);
        ok(&res);
        let again: Value = serde_json::from_slice(&res.stdout).unwrap();
        assert_eq!(again["terms"], dumped["terms"]);
    }
}

#[test]
fn explain_rejects_other_versions() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("future.json");
    std::fs::write(&p, json!({"format": "anthro-layout/program", "version": 2, "terms": []}).to_string()).unwrap();
    let out = run(&["explain", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_block(&out);
    assert_eq!(e["error"]["kind"], "format");
    assert!(e["error"]["message"].as_str().unwrap().contains("v2"));
}

#[test]
fn explain_reports_quadratic_residual() {
    let assets = vec![
        ObjectAsset::new("chair", "office_chair", 0.5, 0.5, 0.9),
        ObjectAsset::new("desk", "desk", 1.2, 0.6, 0.75),
    ];
    let mut g = SemanticGroup::new("work", vec!["chair".into(), "desk".into()]);
    g.intra_relations.push(Relation::between(RelationKind::FacingAccess, "chair", "desk"));
    let inference = SceneInference {
        groups: vec![g],
        ..Default::default()
    };
    let room = Room::new(6.0, 6.0, 2.5);
    let program = compile(
        &assets,
        &inference,
        &room,
        Mode::Baseline,
        None,
        &DimensionMap::bundled(),
        &LayoutConfig::default(),
    )
    .unwrap();
    let band = match &program.terms[0].params {
        anthro_layout::constraints::TermParams::Distance { band } => band.clone(),
        other => panic!("{other:?}"),
    };
    let d = band.d_min - 0.1;
    // chair faces +y toward the desk, so only the distance term is violated
    // among relation terms.
    let poses = [3.0, 3.0 - d, 0.0, 3.0, 3.0, 0.0];
    let dumped = dump(&program, &poses).unwrap();
    assert!((dumped.terms[0].value - 0.01).abs() < 1e-12, "{}", dumped.terms[0].value);
    assert!(dumped.terms[1..].iter().all(|t| t.kind == "collision" || t.value < 1e-12));
    let text = render(&dumped);
    assert_eq!(text.lines().count(), dumped.terms.len() + 3);

    let at_band = [3.0, 3.0 - band.d_min, 0.0, 3.0, 3.0, 0.0];
    let clean = dump(&program, &at_band).unwrap();
    assert!(clean.terms.iter().all(|t| t.value == 0.0), "{:?}", clean.terms);
}

#[test]
fn sample_profile_is_seeded() {
    let a = run(&["sample-profile", "data/percentiles.example.json", "--seed", "3"]);
    let b = run(&["sample-profile", "data/percentiles.example.json", "--seed", "3"]);
    let c = run(&["sample-profile", "data/percentiles.example.json", "--seed", "4"]);
    ok(&a);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["stature"].as_f64().unwrap() > 1.0);
}

const CATEGORIES: [(&str, f64, f64); 8] = [
    ("desk", 1.2, 0.6),
    ("office_chair", 0.55, 0.55),
    ("chest", 0.8, 0.45),
    ("bookshelf", 1.0, 0.35),
    ("plant", 0.4, 0.4),
    ("sofa", 1.8, 0.85),
    ("tv", 1.0, 0.1),
    ("bed", 1.6, 2.0),
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn generate_then_evaluate_never_crashes(
        picks in prop::collection::vec((0usize..CATEGORIES.len(), 0.7f64..1.2), 1..7),
        side in 4.0f64..7.0,
        mode in 0usize..3,
        seed in 0u64..1000,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let assets: Vec<Value> = picks.iter().enumerate().map(|(i, &(k, scale))| {
            let (cat, w, d) = CATEGORIES[k];
            json!({"id": format!("{cat}_{i}"), "category": cat, "width": w * scale, "depth": d * scale, "height": 0.8})
        }).collect();
        let scene = dir.path().join("scene.json");
        std::fs::write(&scene, json!({"room": {"width": side, "depth": side, "height": 2.5}, "assets": assets}).to_string()).unwrap();
        let out = dir.path().join("l.json");
        let mode = ["baseline", "po", "ho"][mode];
        let seed = seed.to_string();
        let gen = run(&["generate", s(&scene), "--mode", mode, "--profile", PROFILE, "--seed", &seed,
                        "--iterations", "40", "--candidates", "2", "-o", s(&out)]);
        prop_assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
        let traj = csv_episode(dir.path(), "p", 30.0, 0.05);
        let ev = run(&["evaluate", s(&out), "--trajectory", s(&traj), "--profile", PROFILE]);
        prop_assert!(ev.status.success(), "{}", String::from_utf8_lossy(&ev.stderr));
        let r: Value = serde_json::from_slice(&ev.stdout).unwrap();
        prop_assert!((0.0..=1.0).contains(&r["collision_free"].as_f64().unwrap()));
    }
}

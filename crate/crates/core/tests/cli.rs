//! The `shapecraft` binary, driven with scripted transcripts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shapecraft::geometry::io::write_obj;
use shapecraft::geometry::primitives::cube;
use shapecraft::geometry::{Transform, Vec3};
use shapecraft::gps::{parse_graph_jsonl, GpsGraph};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn shapecraft(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapecraft"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SHAPECRAFT_API_KEY")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn graph(path: &Path) -> GpsGraph {
    parse_graph_jsonl(&std::fs::read_to_string(path).unwrap()).unwrap().0
}

fn router_run(tmp: &Path) -> PathBuf {
    let fx = fixture("router.jsonl");
    let o = shapecraft(
        &["generate", "a router", "--m", "1", "--t", "2", "--n-bootstrap", "1", "--img-size", "48",
          "--scripted", fx.to_str().unwrap(), "--out", "run"],
        tmp,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    tmp.join("run")
}

#[test]
fn lamp_minimal_run() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixture("lamp.jsonl");
    let o = shapecraft(
        &["generate", "a desk lamp", "--m", "1", "--t", "1", "--n-bootstrap", "0", "--img-size", "48",
          "--scripted", fx.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = tmp.path().join("run");
    let obj = std::fs::read_to_string(run.join("assembled.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("o ")).count(), 1);
    for cam in ["front_left", "front_right", "rear_top"] {
        assert!(run.join(format!("render_{cam}.png")).exists());
    }
    assert_eq!(std::fs::read_to_string(run.join("run_log.jsonl")).unwrap().lines().count(), 5);
    assert_eq!(std::fs::read_to_string(run.join("prompt.txt")).unwrap().trim(), "a desk lamp");
    let g = graph(&run.join("graph.gps.jsonl"));
    assert_eq!(g.names(), ["lamp"]);
    assert!(g.nodes[0].code.is_some());
}

#[test]
fn missing_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shapecraft(&["generate", "a chair"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("SHAPECRAFT_API_KEY"));
}

#[test]
fn usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&shapecraft(&["fly"], tmp.path())), 2);
    assert_eq!(code(&shapecraft(&["model", "nowhere"], tmp.path())), 2);
    assert_eq!(code(&shapecraft(&["generate", "x", "--m", "many"], tmp.path())), 2);
    std::fs::write(tmp.path().join("shapecraft.json"), "{\"paths\": 2}").unwrap();
    assert_eq!(code(&shapecraft(&["generate", "x", "--scripted", "none.jsonl"], tmp.path())), 2);
}

#[test]
fn edits() {
    let tmp = tempfile::tempdir().unwrap();
    let run = router_run(tmp.path());
    let before = graph(&run.join("graph.gps.jsonl"));
    let run_s = run.to_str().unwrap();

    let fx = fixture("router_edit.jsonl");
    let o = shapecraft(&["edit", run_s, "make the antennas shorter", "--scripted", fx.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("assembled.v2.obj").exists());
    assert!(run.join("assembled.obj").exists());
    let after = graph(&run.join("graph.gps.jsonl"));
    assert_eq!(after, graph(&run.join("graph.v2.gps.jsonl")));
    let changed: Vec<_> = before.nodes.iter().zip(&after.nodes).filter(|(a, b)| a.code != b.code).map(|(a, _)| a.name.clone()).collect();
    assert_eq!(changed, ["antennas"]);

    let bad = fixture("router_edit_bad.jsonl");
    let o = shapecraft(&["edit", run_s, "round the body", "--scripted", bad.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line "));
    assert_eq!(graph(&run.join("graph.gps.jsonl")), after);
}

#[test]
fn assemble_and_render_run_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let run = router_run(tmp.path());
    let first = std::fs::read(run.join("assembled.obj")).unwrap();
    std::fs::remove_file(run.join("assembled.obj")).unwrap();
    assert_eq!(code(&shapecraft(&["assemble", run.to_str().unwrap()], tmp.path())), 0);
    assert_eq!(std::fs::read(run.join("assembled.obj")).unwrap(), first);
    let o = shapecraft(&["render", run.to_str().unwrap(), "--img-size", "40"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("bboxes_rear_top.png").exists());
    let legend = std::fs::read_to_string(run.join("bboxes_legend.txt")).unwrap();
    assert_eq!(legend.lines().count(), 3);
}

fn write_box(path: &Path, center: [f64; 3], half: [f64; 3]) {
    let m = cube().transformed(&Transform::new(Vec3::from_array(center), Vec3::ZERO, Vec3::from_array(half)));
    std::fs::write(path, write_obj(&[m])).unwrap();
}

fn metrics(tmp: &Path, a: &str, b: &str) -> serde_json::Value {
    let o = shapecraft(&["metrics", a, b, "--voxel-res", "32", "--sample-points", "2000"], tmp);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn metrics_command() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    write_box(&t.join("gt.obj"), [0.0; 3], [1.0; 3]);
    write_box(&t.join("far.obj"), [5.0, 0.0, 0.0], [1.0; 3]);
    write_box(&t.join("half.obj"), [0.0, 0.0, -0.5], [1.0, 1.0, 0.5]);

    let same = metrics(t, "gt.obj", "gt.obj");
    // The two meshes are sampled with different seeds.
    assert!(same["hausdorff"].as_f64().unwrap() < 0.3);
    assert_eq!(same["iogt"], 1.0);
    assert_eq!(same["clip"], "unavailable");
    assert_eq!(same["voxel_res"], 32);

    let far = metrics(t, "far.obj", "gt.obj");
    assert_eq!(far["iogt"], 0.0);
    assert!(far["hausdorff"].as_f64().unwrap() > 3.0);

    let half = metrics(t, "half.obj", "gt.obj");
    assert!((half["iogt"].as_f64().unwrap() - 0.5).abs() <= 2.0 / 32.0);

    let o = shapecraft(&["metrics", "gt.obj", "gt.obj", "--out", "m.json"], t);
    assert_eq!(code(&o), 0);
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(t.join("m.json")).unwrap()).unwrap();
    assert_eq!(saved["iogt"], 1.0);

    assert_eq!(code(&shapecraft(&["metrics", "gt.obj", "missing.obj"], t)), 2);
}

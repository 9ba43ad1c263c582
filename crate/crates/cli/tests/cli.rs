use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use motif::projection::Raster;
use motif::raster::{write_pgm, LinearScale};
use motif::synth::CylinderScene;
use motif::wire::{encode_frame, SensorFrame};
use serde_json::{json, Value};

fn motif() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_motif"));
    c.env_remove("MOTIF_CONFIG");
    c
}

fn run(args: &[&str], dir: &Path) -> Output {
    motif().args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load_schema(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(schema_dir().join(name)).unwrap()).unwrap()
}

fn assert_valid(schema: &str, doc: &Value) {
    let mut opts = jsonschema::options();
    for dep in ["denoise-report.schema.json"] {
        let uri = format!("https://motif.invalid/schemas/{dep}");
        opts = opts.with_resource(uri, jsonschema::Resource::from_contents(load_schema(dep)).unwrap());
    }
    let validator = opts.build(&load_schema(schema)).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["pipeline", "flick", "--synth"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_reports_file_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["denoise", "missing.ply"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FileNotFound"));

    let out = run(&["--json", "denoise", "missing.ply"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let envelope: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(envelope["error"]["code"], "FileNotFound");
    assert_valid("error.schema.json", &envelope);
}

#[test]
fn flick_pipeline_golden_run() {
    let dir = tempfile::tempdir().unwrap();
    let report = stdout_json(&run(&["pipeline", "flick", "--synth", "--seed", "42"], dir.path()));
    assert_valid("flick-report.schema.json", &report);
    assert_eq!(report["samples"], 150);
    assert_eq!(report["class_labels"], json!(["125g", "219g", "82g"]));
    assert_eq!(report["confusion"], json!([[48, 2, 0], [0, 50, 0], [3, 0, 47]]));
    let ev: Vec<f64> = serde_json::from_value(report["explained_variance"].clone()).unwrap();
    assert!((ev[0] - 0.96270680594283).abs() < 1e-9 && (ev[0] + ev[1] - 1.0).abs() < 1e-9);
    assert!((report["accuracy"].as_f64().unwrap() - 145.0 / 150.0).abs() < 1e-12);
}

#[test]
fn flick_pipeline_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&["pipeline", "flick", "--synth", "--seed", "7", "--out-dir", "a"], dir.path());
    let b = run(&["pipeline", "flick", "--synth", "--seed", "7", "--out-dir", "b"], dir.path());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    for f in ["features.csv", "model.json", "report.json"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn flick_chain_through_files_matches_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"synth": {"trials_per_mass": 12}}"#).unwrap();
    let ok = |args: &[&str]| {
        let out = motif().args(args).current_dir(d).env("MOTIF_CONFIG", &cfg).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    ok(&["synth", "flicks", "-o", "traces", "--seed", "5"]);
    assert_eq!(std::fs::read_dir(d.join("traces")).unwrap().count(), 72, "36 CSVs plus sidecars");
    ok(&["features", "traces", "-o", "features.csv"]);
    ok(&["lda", "fit", "features.csv", "-o", "model.json"]);
    let classify = ok(&["--json", "lda", "classify", "--model", "model.json", "features.csv", "-o", "pred.csv"]);
    let acc = stdout_json(&classify)["accuracy"].as_f64().unwrap();
    assert!(acc > 0.8, "resubstitution accuracy {acc}");
    let report = stdout_json(&ok(&["lda", "report", "features.csv"]));
    assert_valid("flick-report.schema.json", &report);
    let direct = stdout_json(&ok(&["pipeline", "flick", "--synth", "--seed", "5"]));
    assert_eq!(report["explained_variance"], direct["explained_variance"]);
    assert_eq!(report["confusion"], direct["confusion"]);
    let preds = std::fs::read_to_string(d.join("pred.csv")).unwrap();
    assert!(preds.starts_with("row,predicted,label,LD1,LD2\n"));
    assert_eq!(preds.lines().count(), 37);
}

#[test]
fn config_errors_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"denoise": {"slice_hieght": 0.01}}"#).unwrap();
    let out = run(&["--json", "--config", cfg.to_str().unwrap(), "synth", "cylinder", "-o", "c.ply"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let envelope: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(envelope["error"]["code"], "InvalidConfig");
    assert!(!dir.path().join("c.ply").exists());
}

#[test]
fn shipped_config_schema_accepts_defaults() {
    let defaults = json!({
        "denoise": {"slice_height": 0.005, "hot_side": "below", "axis": [0, 0, 1]},
        "stream": {"tick_interval_us": 2000, "baud": 115200},
        "lda": {"ridge_scale": 1e-6, "std_divisor": "population"},
        "synth": {"cylinder": {"anomaly_count": 40}, "trial_jitter": 0.35}
    });
    assert_valid("config.schema.json", &defaults);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, defaults.to_string()).unwrap();
    let out = run(&["--json", "--config", cfg.to_str().unwrap(), "synth", "cylinder", "-o", "c.ply"], dir.path());
    assert_eq!(stdout_json(&out)["anomaly_indices"].as_array().unwrap().len(), 40);
}

#[test]
fn synth_then_denoise_recovers_injected_anomalies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth_out = run(&["synth", "cylinder", "-o", "c.ply", "--seed", "3", "--anomalies", "120", "--truth", "truth.json"], d);
    assert!(truth_out.status.success());
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(d.join("truth.json")).unwrap()).unwrap();
    let out = run(&["--json", "denoise", "c.ply", "-o", "clean.ply", "--report", "r.json"], d);
    let report = stdout_json(&out);
    assert_valid("denoise-report.schema.json", &report);
    assert_eq!(report["anomalies"], truth["anomaly_indices"]);
    assert_eq!(report["qualified"], true);
    assert!((report["boundary_height"].as_f64().unwrap() - 0.07).abs() < 1e-9);
    // Denoising the output again changes nothing.
    let again = stdout_json(&run(&["--json", "denoise", "clean.ply", "-o", "clean2.ply"], d));
    assert_eq!(again["anomaly_count"], 0);
    assert_eq!(std::fs::read(d.join("clean.ply")).unwrap(), std::fs::read(d.join("clean2.ply")).unwrap());

    // Without -o the cloud goes to stdout.
    let piped = run(&["denoise", "c.ply"], d);
    assert!(piped.status.success());
    assert_eq!(piped.stdout, std::fs::read(d.join("clean.ply")).unwrap());
}

#[test]
fn decode_ingests_a_capture_for_feature_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut bytes = Vec::new();
    for k in 0..1000u32 {
        let t = 2000 * k;
        for unit in [0u8, 4] {
            let z = if unit == 4 { 9.81 - (k % 50) as f32 * 0.1 } else { 9.81 };
            bytes.extend(encode_frame(&SensorFrame::imu(unit, t, [0.0, 0.1, z], [0.01, 0.0, 0.0], [20.0, -5.0, -38.0])));
        }
        if k % 97 == 0 {
            bytes.extend([0xAA, 0x55, 0x07, 0x00, 0x13]);
        }
    }
    std::fs::write(d.join("cap.bin"), &bytes).unwrap();

    let all = stdout_json(&run(&["--json", "decode", "cap.bin", "-o", "frames.csv"], d));
    assert_eq!(all["frames"], 2000);
    assert_eq!(all["units"], json!({"0": 1000, "4": 1000}));
    assert!(all["dropped"].as_u64().unwrap() >= 1);
    let frames = std::fs::read_to_string(d.join("frames.csv")).unwrap();
    assert_eq!(frames.lines().count(), 2001);

    std::fs::create_dir(d.join("traces")).unwrap();
    let one = run(
        &["decode", "cap.bin", "-o", "traces/flick.csv", "--unit", "4", "--trigger-us", "600000", "--label", "82g"],
        d,
    );
    assert!(one.status.success());
    let feats = stdout_json(&run(&["--json", "features", "traces", "-o", "f.csv"], d));
    assert_eq!(feats["traces"], 1);
    assert_eq!(feats["filled_ticks"], 0);
    let table = std::fs::read_to_string(d.join("f.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("82g,"));
}

/// Thermal camera at (0.35, 0, 0.06) facing the cylinder axis.
fn write_scene(d: &Path) {
    let scene = CylinderScene { hot_rgb: [128; 3], cool_rgb: [128; 3], ..CylinderScene::default() };
    let (cloud, _) = motif::synth::gen_cylinder(&scene).unwrap();
    motif::cloud::write_ply(&d.join("cloud.ply"), &cloud).unwrap();
    let camera = json!({
        "K": [400.0, 0.0, 160.0, 0.0, 400.0, 120.0, 0.0, 0.0, 1.0],
        "R": [0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0],
        "t": [0.35, 0.0, 0.06],
        "width": 320,
        "height": 240
    });
    std::fs::write(d.join("camera.json"), camera.to_string()).unwrap();

    let mut depth = Raster::filled(320, 240, 0.0);
    let mut thermal = Raster::filled(320, 240, 22.0);
    for row in 0..240 {
        for col in 0..320 {
            let (u, v) = ((col as f64 - 160.0) / 400.0, (row as f64 - 120.0) / 400.0);
            // Ray (-1, u, -v) from the camera center; its parameter is the depth.
            let (a, b, c) = (1.0 + u * u, -0.7, 0.35 * 0.35 - scene.radius * scene.radius);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                continue;
            }
            let s = (-b - disc.sqrt()) / (2.0 * a);
            let z = 0.06 - s * v;
            if (0.0..=scene.height).contains(&z) {
                depth.set(col, row, s);
                // Warm liquid up to 7 cm, plus a specular glint higher up.
                let glint = (66..=73).contains(&row) && (156..=164).contains(&col);
                thermal.set(col, row, if z < 0.07 || glint { 60.0 } else { 22.0 });
            }
        }
    }
    write_pgm(&d.join("depth.pgm"), &depth, LinearScale { scale: 1e-5, offset: 0.0 }).unwrap();
    write_pgm(&d.join("thermal.pgm"), &thermal, LinearScale::spanning(0.0, 100.0)).unwrap();

    let grasps = json!([
        {"pose": {"R": [1, 0, 0, 0, 1, 0, 0, 0, 1], "t": [0.1, 0, 0.02]}, "contacts": [[0.034, 0.0, 0.02], [-0.034, 0.0, 0.02]]},
        {"pose": {"R": [1, 0, 0, 0, 1, 0, 0, 0, 1], "t": [0.1, 0, 0.10]}, "contacts": [[0.034, 0.0, 0.10]]},
        {"pose": {"R": [1, 0, 0, 0, 1, 0, 0, 0, 1], "t": [0.1, 0, 0.11]}, "contacts": [[0.0, 0.034, 0.11]]}
    ]);
    std::fs::write(d.join("grasps.json"), grasps.to_string()).unwrap();
}

fn thermal_args(out_dir: &str) -> Vec<String> {
    [
        "pipeline", "thermal", "--cloud", "cloud.ply", "--camera", "camera.json", "--thermal", "thermal.pgm", "--depth",
        "depth.pgm", "--grasps", "grasps.json", "--out-dir", out_dir,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn thermal_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_scene(d);
    let args = thermal_args("out");
    let report = stdout_json(&motif().args(&args).current_dir(d).output().unwrap());
    assert_valid("thermal-report.schema.json", &report);

    let painted = report["paint"]["painted"].as_u64().unwrap();
    assert!(painted > 2000 && painted < 7680, "painted {painted}");
    let den = &report["denoise"];
    assert_eq!(den["qualified"], true);
    assert!((den["boundary_height"].as_f64().unwrap() - 0.07).abs() < 1e-9, "{den}");
    assert!(den["anomaly_count"].as_u64().unwrap() > 0, "the glint should be removed");

    // The glint no longer blocks the grasp at 10 cm; the one in the warm band is dropped.
    assert_eq!(report["filter"]["kept"], json!([1, 2]));
    assert_eq!(report["filter"]["rejected"][0]["candidate"], 0);
    let kept: Value = serde_json::from_str(&std::fs::read_to_string(d.join("out/grasps.json")).unwrap()).unwrap();
    assert_eq!(kept.as_array().unwrap().len(), 2);

    // The standalone filter agrees when run on the denoised cloud.
    let alone = stdout_json(&run(
        &["--json", "filter-grasps", "--cloud", "out/denoised.ply", "--grasps", "grasps.json", "-o", "alone.json"],
        d,
    ));
    assert_eq!(alone["kept"], report["filter"]["kept"]);
    assert_eq!(std::fs::read(d.join("alone.json")).unwrap(), std::fs::read(d.join("out/grasps.json")).unwrap());

    let again = motif().args(thermal_args("out2")).current_dir(d).output().unwrap();
    assert!(again.status.success());
    for f in ["painted.ply", "denoised.ply", "grasps.json", "report.json"] {
        assert_eq!(std::fs::read(d.join("out").join(f)).unwrap(), std::fs::read(d.join("out2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn paint_rejects_mismatched_images() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_scene(d);
    write_pgm(&d.join("small.pgm"), &Raster::filled(160, 120, 0.3), LinearScale { scale: 1e-5, offset: 0.0 }).unwrap();
    let out = run(
        &["--json", "paint", "--cloud", "cloud.ply", "--camera", "camera.json", "--thermal", "thermal.pgm", "--depth", "small.pgm", "-o", "p.ply"],
        d,
    );
    assert_eq!(out.status.code(), Some(1));
    let envelope: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(envelope["error"]["code"], "DimensionMismatch");
}

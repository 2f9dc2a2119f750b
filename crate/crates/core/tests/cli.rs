use std::path::Path;
use std::process::{Command, Output};

fn monosil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monosil")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = monosil(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_track_writes_loadable_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("track.json");
    let msg = ok(&["generate-track", "--seed", "7", "--out", p(&spec)]);
    assert!(msg.contains("track seed 7"));
    let text = std::fs::read_to_string(&spec).unwrap();
    assert!(text.contains("harmonics"));

    // a config can point at the file relative to itself
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"duration": 1.0, "track": {"file": "track.json"}}"#).unwrap();
    let run = dir.path().join("run");
    let msg = ok(&["run", "--config", p(&cfg), "--out-dir", p(&run), "--dump-frames", "10"]);
    assert!(msg.contains("termination duration"), "{msg}");
    for f in [
        "log.csv",
        "metrics.json",
        "trajectory.svg",
        "speed.svg",
        "angular_velocity.svg",
    ] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert!(run.join("frames/frame_00000.pgm").is_file());
    assert!(run.join("frames/mask_00010.pgm").is_file());
    assert!(!run.join("frames/frame_00005.pgm").exists());
}

#[test]
fn detect_reports_lanes_or_failure() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"duration": 0.1}"#).unwrap();
    ok(&["run", "--config", p(&cfg), "--out-dir", p(&run), "--dump-frames", "1"]);
    let json = ok(&["detect", "--image", p(&run.join("frames/frame_00000.pgm"))]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["status"], "ok");
    let c = v["lanes"]["center"]["coeffs"][0].as_f64().unwrap();
    assert!(c.abs() < 0.05, "{c}");

    // an all-black image has no lanes
    let blank = dir.path().join("blank.pgm");
    let mut bytes = b"P5\n640 480\n255\n".to_vec();
    bytes.resize(bytes.len() + 640 * 480, 0);
    std::fs::write(&blank, bytes).unwrap();
    let v: serde_json::Value = serde_json::from_str(&ok(&["detect", "--image", p(&blank)])).unwrap();
    assert_eq!(v["status"], "failed");
}

#[test]
fn calib_demo_rectifies() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["calib-demo", "--out", p(dir.path())]);
    let after = text.lines().find(|l| l.starts_with("spacing after")).unwrap();
    let dev: f64 = after.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev < 1e-9, "{after}");
    for f in ["board.pgm", "distorted.pgm", "rectified.pgm"] {
        assert!(dir.path().join(f).is_file());
    }

    let pairs = dir.path().join("pairs.txt");
    std::fs::write(&pairs, "0 0 10 20\n1 0 11 20\n0 1 10 21\n1 1 11 21\n").unwrap();
    let text = ok(&["calib-demo", "--pairs", p(&pairs)]);
    assert!(text.contains("4 correspondences"));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"durration": 1.0}"#).unwrap();
    let out = monosil(&["run", "--config", p(&cfg), "--out-dir", p(dir.path())]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!monosil(&["compare", "--seeds", "5..1", "--out-dir", p(dir.path())])
        .status
        .success());
}

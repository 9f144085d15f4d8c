use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retarget2d::motiondata::{export_pose_json, parse_pose_json, Dataset};
use retarget2d::network::ArchConfig;
use serde_json::json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_retarget2d"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A config file with a tiny network and short epochs.
fn small_config(dir: &Path, extra: serde_json::Value) -> PathBuf {
    let mut trainer = json!({
        "arch": ArchConfig::tiny(15),
        "pairs_per_epoch": 4,
        "batch_size": 2,
        "unlabeled_per_epoch": 2,
    });
    if let Some(m) = extra.as_object() {
        for (k, v) in m {
            trainer[k] = v.clone();
        }
    }
    let path = dir.join("config.json");
    let cfg = json!({"gen-data": {"motions": 6, "skeletons": 6, "views": 2, "frames": 64, "seed": 4},
                     "train": {"trainer": trainer, "unlabeled-clips": 2}});
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn metrics_rows(run_dir: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(run_dir.join("metrics.csv")).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_config(d, json!({}));
    let data = d.join("data");
    let run_dir = d.join("run");
    ok(&["--config", s(&cfg), "gen-data", "--out", s(&data)]);
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&run_dir), "--epochs", "2"]);
    assert_eq!(metrics_rows(&run_dir).len(), 3);
    let ckpt = run_dir.join("best.ckpt");
    assert!(ckpt.exists() && run_dir.join("last.ckpt").exists());

    // Pose files from dataset windows.
    let ds = Dataset::load(&data).unwrap();
    let keys = ds.val_keys();
    let mut poses = Vec::new();
    for (n, k) in keys.iter().take(3).enumerate() {
        let p = d.join(format!("clip{n}.json"));
        std::fs::write(&p, export_pose_json(ds.get(k).unwrap(), &ds.topology).unwrap()).unwrap();
        poses.push(p);
    }

    let out = d.join("retarget.json");
    ok(&["retarget", "--motion", s(&poses[0]), "--statics", s(&poses[1]), "--checkpoint", s(&ckpt), "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let r = parse_pose_json(&text, &ds.topology).unwrap();
    assert_eq!(r.frames(), 64);
    let statics = ds.get(&keys[1]).unwrap();
    let (a, b) = (r.root(0), statics.root(0));
    assert!((a[0] - b[0]).abs() < 1e-4 && (a[1] - b[1]).abs() < 1e-4);

    // The first interpolation step is the plain reconstruction of `a`.
    let self_retarget = d.join("self.json");
    ok(&["retarget", "--motion", s(&poses[0]), "--statics", s(&poses[0]), "--checkpoint", s(&ckpt), "--out", s(&self_retarget)]);
    let interp = d.join("interp");
    for space in ["motion", "skeleton", "view"] {
        ok(&["interpolate", "--a", s(&poses[0]), "--b", s(&poses[1]), "--space", space, "--steps", "3", "--checkpoint", s(&ckpt), "--out", s(&interp)]);
        assert_eq!(std::fs::read_to_string(interp.join("step_000.json")).unwrap(), std::fs::read_to_string(&self_retarget).unwrap());
        assert!(interp.join("step_002.json").exists());
    }
    assert_eq!(code(&["interpolate", "--a", s(&poses[0]), "--b", s(&poses[1]), "--space", "colour", "--checkpoint", s(&ckpt), "--out", s(&interp)]), 2);
    assert_eq!(code(&["interpolate", "--a", s(&poses[0]), "--b", s(&poses[1]), "--space", "view", "--steps", "1", "--checkpoint", s(&ckpt), "--out", s(&interp)]), 2);

    let report_dir = d.join("report");
    let md = ok(&["evaluate", "--data", s(&data), "--checkpoint", s(&ckpt), "--out", s(&report_dir)]);
    assert_eq!(md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| method")).count(), 6);
    assert_eq!(std::fs::read_to_string(report_dir.join("report.md")).unwrap(), md);
    let again = ok(&["evaluate", "--data", s(&data), "--checkpoint", s(&ckpt), "--out", s(&report_dir)]);
    assert_eq!(md, again);

    let index = d.join("videos.idx");
    ok(&["index", "--checkpoint", s(&ckpt), "--out", s(&index), s(&poses[0]), s(&poses[1])]);
    ok(&["index", "--checkpoint", s(&ckpt), "--out", s(&index), "--append", s(&poses[2])]);
    let hits = ok(&["retrieve", "--index", s(&index), "--checkpoint", s(&ckpt), "--query", s(&poses[1]), "--top-k", "2"]);
    let lines: Vec<serde_json::Value> = hits.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["video"], "clip1");

    let empty = d.join("empty.idx");
    ok(&["index", "--checkpoint", s(&ckpt), "--out", s(&empty), "--append"]);
    assert_eq!(code(&["retrieve", "--index", s(&empty), "--checkpoint", s(&ckpt), "--query", s(&poses[1])]), 3);

    let latents = d.join("latents");
    ok(&["export-latents", "--data", s(&data), "--checkpoint", s(&ckpt), "--out", s(&latents), "--split", "val"]);
    for space in ["motion", "skeleton", "view"] {
        let text = std::fs::read_to_string(latents.join(format!("{space}.csv"))).unwrap();
        assert_eq!(text.lines().count(), keys.len() + 1);
    }
}

#[test]
fn gen_data_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["gen-data", "--out", s(dir), "--motions", "4", "--skeletons", "4", "--views", "3", "--frames", "64", "--seed", "9"]);
    }
    for f in ["manifest.json", "samples.bin"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let ds = Dataset::load(&a).unwrap();
    assert_eq!(ds.len(), 4 * 4 * 3);
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_config(d, json!({}));
    let data = d.join("data");
    ok(&["--config", s(&cfg), "gen-data", "--out", s(&data)]);
    let (straight, split) = (d.join("straight"), d.join("split"));
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&straight), "--epochs", "2"]);
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&split), "--epochs", "1"]);
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&split), "--epochs", "2", "--resume"]);
    let (a, b) = (metrics_rows(&straight), metrics_rows(&split));
    assert_eq!(a.len(), 3);
    // Everything but the wall-clock column.
    let strip = |rows: Vec<Vec<String>>| rows.into_iter().map(|mut r| { r.pop(); r }).collect::<Vec<_>>();
    assert_eq!(strip(a), strip(b));
    // A changed seed is not a resume of the same run.
    assert_eq!(code(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&split), "--epochs", "3", "--seed", "7", "--resume"]), 3);
}

#[test]
fn command_line_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_config(d, json!({"epochs": 3}));
    let data = d.join("data");
    ok(&["--config", s(&cfg), "gen-data", "--out", s(&data), "--views", "3"]);
    assert_eq!(Dataset::load(&data).unwrap().spec.views, 3);
    let run_dir = d.join("run");
    ok(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&run_dir), "--epochs", "1"]);
    assert_eq!(metrics_rows(&run_dir).len(), 2);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["retarget", "--motion", "nope.json"]), 2);
    assert_eq!(code(&["gen-data", "--out", s(&d.join("x")), "--motions", "1"]), 2);

    let bad_cfg = d.join("bad.json");
    std::fs::write(&bad_cfg, r#"{"train": {"epochz": 1}}"#).unwrap();
    assert_eq!(code(&["--config", s(&bad_cfg), "train"]), 2);

    let junk = d.join("junk.ckpt");
    std::fs::write(&junk, b"not a checkpoint").unwrap();
    let pose = d.join("pose.json");
    std::fs::write(&pose, "{}").unwrap();
    assert_eq!(code(&["retarget", "--motion", s(&pose), "--statics", s(&pose), "--checkpoint", s(&junk), "--out", s(&d.join("o.json"))]), 3);

    let cfg = small_config(d, json!({"optimizer": {"lr": 1e30, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}}));
    let data = d.join("data");
    ok(&["--config", s(&cfg), "gen-data", "--out", s(&data)]);
    assert_eq!(code(&["--config", s(&cfg), "train", "--data", s(&data), "--out", s(&d.join("run")), "--epochs", "3"]), 4);

    let empty = d.join("empty.idx");
    assert_eq!(code(&["index", "--checkpoint", s(&junk), "--out", s(&empty)]), 3);
}

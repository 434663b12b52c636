mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;
use rvoseval::mask::{rle_decode, DenseMask, RleMask};
use serde_json::Value;

fn rvoseval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvoseval"))
        .args(args)
        .env_remove("RVOSEVAL_THREADS")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evaluate_prints_json_report() {
    let gt = fixture("manifest.json");
    let pred = fixture("preds");
    let out = rvoseval(&["evaluate", "--gt", path(&gt), "--pred", path(&pred), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["overall"]["count"], 20);
    assert!(report.get("buckets").is_none());
    assert!(report["run_meta"].get("timing").is_none());
}

#[test]
fn evaluate_writes_out_file_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("report.json");
    let out = rvoseval(&[
        "evaluate",
        "--gt",
        path(&fixture("manifest.json")),
        "--pred",
        path(&fixture("preds")),
        "--format",
        "json",
        "--buckets",
        "occlusion",
        "--timing",
        "--split",
        "valid",
        "--out",
        path(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(report["overall"]["count"], 4);
    assert!(report["buckets"]["occlusion"].is_object());
    assert!(report["buckets"].get("length").is_none());
    assert!(report["run_meta"]["timing"]["wall_time_s"].is_f64());
}

#[test]
fn threads_env_var_and_flag_agree() {
    let (gt, pred) = (fixture("manifest.json"), fixture("preds"));
    let args = [
        "evaluate",
        "--gt",
        path(&gt),
        "--pred",
        path(&pred),
        "--format",
        "json",
        "--buckets",
        "all",
    ];
    let a = Command::new(env!("CARGO_BIN_EXE_rvoseval"))
        .args(args)
        .env("RVOSEVAL_THREADS", "3")
        .output()
        .unwrap();
    let mut with_flag = args.to_vec();
    with_flag.extend(["--threads", "1"]);
    let b = rvoseval(&with_flag);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_two() {
    let out = rvoseval(&["evaluate", "--gt", "x.json", "--pred", "p", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(rvoseval(&["evaluate", "--gt", "x.json"]).status.code(), Some(2));
    assert_eq!(
        rvoseval(&["evaluate", "--gt", "a", "--pred", "b", "--format", "xml"]).status.code(),
        Some(2)
    );
    assert_eq!(
        rvoseval(&["evaluate", "--gt", "a", "--pred", "b", "--buckets", "colour"]).status.code(),
        Some(2)
    );
}

#[test]
fn missing_prediction_is_fatal_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixture("preds")).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() != "v000_e00.json" {
            std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    let gt = fixture("manifest.json");
    let strict = rvoseval(&["evaluate", "--gt", path(&gt), "--pred", path(dir.path())]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("e00"));

    let lenient = rvoseval(&[
        "evaluate",
        "--gt",
        path(&gt),
        "--pred",
        path(dir.path()),
        "--allow-missing",
        "--format",
        "json",
    ]);
    assert_eq!(lenient.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&lenient.stdout).unwrap();
    let e00 = &report["per_expression"][0];
    assert_eq!(e00["expression_id"], "e00");
    // The target of e00 is visible on every frame, so an empty prediction
    // scores zero on every metric.
    assert_eq!(e00["metrics"]["tiou"], 0.0);
    assert_eq!(e00["metrics"]["viou"], 0.0);
    assert_eq!(e00["metrics"]["j"], 0.0);
}

#[test]
fn corrupt_prediction_is_collected_or_fatal_with_strict() {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(fixture("preds")).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    let bad = r#"{"video_id":"v000","expression_id":"e01","masks":{"0":{"size":[5,5],"counts":[25]}}}"#;
    std::fs::write(dir.path().join("v000_e01.json"), bad).unwrap();
    let gt = fixture("manifest.json");
    let out = rvoseval(&["evaluate", "--gt", path(&gt), "--pred", path(dir.path()), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["errors"].as_array().unwrap().len(), 1);
    assert_eq!(report["errors"][0]["expression_id"], "e01");
    assert_eq!(report["overall"]["count"], 19);

    let strict = rvoseval(&["evaluate", "--gt", path(&gt), "--pred", path(dir.path()), "--strict"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn validate_lists_planted_violations() {
    let out = rvoseval(&["validate", "--gt", path(&fixture("broken_manifest.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let want: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(fixture("broken_expected.json")).unwrap())
            .unwrap();
    for pointer in want {
        assert!(stderr.contains(&pointer), "missing {pointer} in:\n{stderr}");
    }

    let ok = rvoseval(&["validate", "--gt", path(&fixture("manifest.json"))]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn validate_reports_selection_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("short.json");
    std::fs::write(
        &manifest,
        r#"{"schema_version":1,"videos":[{"id":"v","fps":1,"num_frames":10,"width":2,"height":2,
            "objects":[{"id":"a","masks":{"0":{"size":[2,2],"counts":[0,4]}}}],
            "expressions":[{"id":"e","object_id":"a","text":"x","type":"static"}]}]}"#,
    )
    .unwrap();
    let out = rvoseval(&["validate", "--gt", path(&manifest)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("video v"), "{stderr}");
    let schema_only = rvoseval(&["validate", "--gt", path(&manifest), "--skip-criteria"]);
    assert_eq!(schema_only.status.code(), Some(0));
}

#[test]
fn stats_json_matches_truth() {
    let out = rvoseval(&["stats", "--gt", path(&fixture("manifest.json")), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let got: Value = serde_json::from_slice(&out.stdout).unwrap();
    let want: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("stats_truth.json")).unwrap()).unwrap();
    assert_eq!(got, want);

    let table = rvoseval(&["stats", "--gt", path(&fixture("manifest.json"))]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("descriptions"));

    let check = rvoseval(&["stats", "--gt", path(&fixture("manifest.json")), "--check-reference"]);
    assert_eq!(check.status.code(), Some(1));
}

#[test]
fn rle_encode_decode_through_png() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("mask.png");
    let mask = DenseMask::rect(6, 9, 1, 2, 3, 4);
    image::GrayImage::from_fn(9, 6, |c, r| image::Luma([if mask.get(r, c) { 200 } else { 0 }]))
        .save(&png)
        .unwrap();

    let enc = rvoseval(&["rle", "encode", path(&png)]);
    assert_eq!(enc.status.code(), Some(0));
    let rle: RleMask = serde_json::from_slice(&enc.stdout).unwrap();
    assert_eq!(rle_decode(&rle), mask);

    let rle_path = dir.path().join("mask.json");
    std::fs::write(&rle_path, &enc.stdout).unwrap();
    let grid = rvoseval(&["rle", "decode", path(&rle_path)]);
    assert_eq!(grid.status.code(), Some(0));
    let text = String::from_utf8(grid.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().nth(1).unwrap(), "001111000");

    let back = dir.path().join("back.png");
    let dec = rvoseval(&["rle", "decode", path(&rle_path), "--out", path(&back)]);
    assert_eq!(dec.status.code(), Some(0));
    let img = image::open(&back).unwrap().to_luma8();
    assert_eq!(img.get_pixel(2, 1).0[0], 255);
    assert_eq!(img.get_pixel(0, 0).0[0], 0);
}

#[test]
fn rle_decode_rejects_malformed_counts() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"size":[2,2],"counts":[1,2]}"#).unwrap();
    assert_eq!(rvoseval(&["rle", "decode", path(&bad)]).status.code(), Some(1));
}

#[test]
fn decompose_image_directory() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    for t in 0..14u32 {
        let img = image::RgbImage::from_fn(48, 32, |x, y| {
            let v = ((x + 2 * t) * 9 + y * 5) as u8;
            image::Rgb([v, v, v])
        });
        img.save(frames.join(format!("frame_{t}.png"))).unwrap();
    }
    let out_file = dir.path().join("clips.json");
    let out = rvoseval(&["decompose", "--frames", path(&frames), "--out", path(&out_file)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let clips: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let clips = clips.as_array().unwrap();
    assert_eq!(clips.len(), 2);
    assert_eq!(clips[0]["keyframe"], 0);
    assert_eq!(clips[1]["keyframe"], 12);
    assert_eq!(clips[0]["fields"].as_array().unwrap().len(), 11);
    assert_eq!(clips[1]["fields"].as_array().unwrap().len(), 1);
    // 48x32 frames tile into 2x3 macroblocks.
    assert_eq!(clips[0]["fields"][0].as_array().unwrap().len(), 6);

    let bad = rvoseval(&["decompose", "--frames", path(&frames), "--gop", "0"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = rvoseval(&["decompose", "--frames", "/nonexistent/frames"]);
    assert_eq!(missing.status.code(), Some(1));
}

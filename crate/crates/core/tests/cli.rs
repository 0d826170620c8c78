use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_saliency-bench"))
}

fn run(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn fixture_explain_tile_bench_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, _, err) = run(
        &[
            "fixture",
            "--width",
            "512",
            "--height",
            "256",
            "--lesions",
            "3",
            "--seed",
            "4",
        ],
        d,
    );
    assert_eq!(code, 0, "{err}");
    for f in ["slide.png", "annotations.json", "lesion_mask.png", "detector.smdl"] {
        assert!(d.join(f).exists(), "{f}");
    }

    let (code, _, err) = run(
        &[
            "explain",
            "--method",
            "cam",
            "--model",
            "detector.smdl",
            "--slide",
            "slide.png",
            "--origin",
            "64,64",
            "--tile-size",
            "64",
        ],
        d,
    );
    assert_eq!(code, 0, "{err}");
    assert!(d.join("tile_cam.salm").exists() && d.join("tile_cam.png").exists());

    let (code, _, err) = run(
        &[
            "bench",
            "--model",
            "detector.smdl",
            "--slide",
            "slide.png",
            "--tile-size",
            "64",
            "--out-dir",
            "b",
            "--occlusion-window",
            "16",
            "--occlusion-stride",
            "16",
        ],
        d,
    );
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(d.join("b/bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 6);
    let order: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(order, ["cam", "gradcampp", "hirescam", "lrp", "occlusion"]);

    let (code, out, err) = run(
        &[
            "tile",
            "--slide",
            "slide.png",
            "--annotations",
            "annotations.json",
            "--tile-size",
            "64",
            "--out-dir",
            "t",
        ],
        d,
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("tiles"));
    assert!(d.join("t/tiles.csv").exists() && d.join("t/tiles.png").exists());
}

#[test]
fn evaluate_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(&["fixture", "--width", "256", "--height", "256", "--lesions", "2"], d).0,
        0
    );
    let (code, _, err) = run(
        &[
            "evaluate",
            "--model",
            "detector.smdl",
            "--slide",
            "slide.png",
            "--annotations",
            "annotations.json",
            "--tile-size",
            "64",
            "--method",
            "hirescam",
            "--metrics",
            "road,wg-annotation",
            "--percentiles",
            "10,50",
        ],
        d,
    );
    assert_eq!(code, 0, "{err}");
    let road = std::fs::read_to_string(d.join("road_hirescam.csv")).unwrap();
    assert!(road.starts_with("percentile,value\n10,"));
    assert_eq!(road.lines().count(), 3);
    assert!(d.join("wg_annotation_hirescam.csv").exists());
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["explain", "--method", "gradcam", "--slide", "x.png"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("cam, gradcampp, hirescam, lrp, occlusion"), "{err}");
    assert_eq!(run(&["frobnicate"], dir.path()).0, 2);
    assert_eq!(run(&["fixture", "--width", "300"], dir.path()).0, 2);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(
        &[
            "explain",
            "--method",
            "cam",
            "--model",
            "missing.smdl",
            "--tile",
            "missing.png",
        ],
        dir.path(),
    );
    assert_eq!(code, 1);
}

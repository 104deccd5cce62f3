use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn invcircle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invcircle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = invcircle(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Comment line, header, then rows of fields.
fn read_csv(path: &Path) -> (String, String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap().to_string();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (comment, header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const SCAN_2X2: &str = "[scan]\nm1_range = [0.0, 0.7]\nm2_range = [0.0, -0.23]\nresolution = [2, 2]\n";

#[test]
fn scan_writes_both_period_maps() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "scan.toml", SCAN_2X2);
    let out = dir.path().join("out");
    ok(&["scan", "--config", &cfg, "--out", out.to_str().unwrap()]);
    for name in ["scan_min.csv", "scan_max.csv"] {
        let (comment, header, rows) = read_csv(&out.join(name));
        assert!(
            comment.starts_with("# invcircle ") && comment.contains(" config="),
            "{comment}"
        );
        assert_eq!(header, "m1,m2,class");
        assert_eq!(rows.len(), 4);
        let origin = rows.iter().find(|r| num(&r[0]) == 0.0 && num(&r[1]) == 0.0).unwrap();
        assert_eq!(origin[2], "1", "{name}: stable fixed point at the origin");
    }
}

#[test]
fn scan_is_bit_identical_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "scan.toml", SCAN_2X2);
    let runs = [("a", "8"), ("b", "8"), ("c", "1")];
    for (sub, workers) in runs {
        let out = dir.path().join(sub);
        ok(&[
            "scan",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
    }
    for name in ["scan_min.csv", "scan_max.csv"] {
        let first = fs::read(dir.path().join("a").join(name)).unwrap();
        for (sub, _) in &runs[1..] {
            assert_eq!(
                fs::read(dir.path().join(sub).join(name)).unwrap(),
                first,
                "{name} in {sub}"
            );
        }
    }
}

#[test]
fn synthetic_rotation_number_is_golden() {
    let dir = TempDir::new().unwrap();
    let report = ok(&[
        "rotnum",
        "--synthetic",
        "--n",
        "10000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let rho = report["rho"].as_f64().unwrap();
    assert!((rho - GOLDEN).abs() < 1e-10, "rho = {rho}");
    assert!((0.0..1.0).contains(&rho));
    assert_eq!(report["n"].as_u64(), Some(10_000));
    assert!(report["diagnostics"]["delta_spread"].is_number());
    assert!(dir.path().join("rotnum.json").exists());
}

#[test]
fn rotation_number_on_the_golden_contour() {
    let dir = TempDir::new().unwrap();
    let report = ok(&[
        "rotnum",
        "--m1",
        "0.7",
        "--m2",
        "-0.23",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let rho = report["rho"].as_f64().unwrap();
    assert!((0.0..1.0).contains(&rho));
    assert!((rho - GOLDEN).abs() < 0.01, "rho = {rho}");
}

#[test]
fn fixed_point_parameters_report_no_circle() {
    let dir = TempDir::new().unwrap();
    let out = invcircle(&[
        "rotnum",
        "--m1",
        "0",
        "--m2",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(8), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn escaping_parameters_report_no_attractor() {
    let dir = TempDir::new().unwrap();
    let out = invcircle(&[
        "rotnum",
        "--m1",
        "50",
        "--m2",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fixed_points_at_the_origin() {
    let dir = TempDir::new().unwrap();
    let args = [
        "fixedpoints",
        "--b",
        "0.5",
        "--m1",
        "0",
        "--m2",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let report = ok(&args);
    let points = report["fixed_points"].as_array().unwrap();
    assert_eq!(points.len(), 2);
    let origin = points
        .iter()
        .find(|p| p["state"].as_array().unwrap().iter().all(|c| c.as_f64() == Some(0.0)))
        .unwrap();
    for m in origin["moduli"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 0.5f64.cbrt()).abs() < 1e-12);
    }
    // 2 cos(phi) = -(M2 + 1) / B = -2 lies on the boundary: no complex pair.
    assert!(report["ns_phase"].is_null());

    let again = ok(&args);
    assert_eq!(again, report);
}

#[test]
fn neimark_sacker_phase_when_defined() {
    let dir = TempDir::new().unwrap();
    let report = ok(&["fixedpoints", "--m2", "-0.5", "--out", dir.path().to_str().unwrap()]);
    let phi = report["ns_phase"].as_f64().unwrap();
    assert!((phi.cos() - (-0.5)).abs() < 1e-12);
}

const AFFINE: &str = "[trace]
field = \"affine\"
seed_start = [-0.5, 0.0]
seed_end = [0.5, 0.0]

[trace.search]
target = 0.0
radius = 0.05
initial_direction = [0.0, 1.0]
max_points = 12
";

fn trace_rows(out: &Path) -> Vec<Vec<String>> {
    let (comment, header, rows) = read_csv(&out.join("trace.csv"));
    assert!(comment.starts_with("# invcircle "));
    assert_eq!(
        header,
        "index,m1,m2,rho,residual,lambda0,lambda1,lambda2,ang01,ang02,ang12,reducible,radius_used"
    );
    rows
}

#[test]
fn affine_trace_is_a_straight_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "affine.toml", AFFINE);
    let out = dir.path().join("out");
    let report = ok(&["trace", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(report["termination"], "StepBudget");
    let rows = trace_rows(&out);
    assert_eq!(rows.len(), 12);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 13);
        assert_eq!(row[0], i.to_string());
        assert!(num(&row[1]).abs() <= 1e-10);
        assert!(num(&row[4]).abs() <= 1e-9);
        assert!(row[5..12].iter().all(String::is_empty));
    }
    // Each root sits on the chord between samples at +-5 degrees around the
    // line, a distance r cos 5deg from the previous point.
    let spacing = 0.05 * 5f64.to_radians().cos();
    let m2: Vec<f64> = rows.iter().map(|r| num(&r[2])).collect();
    assert!(m2.windows(2).all(|w| (w[1] - w[0] - spacing).abs() < 1e-9), "{m2:?}");
}

#[test]
fn interrupted_trace_resumes_to_the_same_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "affine.toml", AFFINE);
    let whole = dir.path().join("whole");
    ok(&["trace", "--config", &cfg, "--out", whole.to_str().unwrap()]);

    let short = AFFINE.replace("max_points = 12", "max_points = 5");
    let short_cfg = write_config(dir.path(), "short.toml", &short);
    let split = dir.path().join("split");
    ok(&["trace", "--config", &short_cfg, "--out", split.to_str().unwrap()]);
    assert_eq!(trace_rows(&split).len(), 5);
    let report = ok(&["trace", "--config", &cfg, "--out", split.to_str().unwrap()]);
    assert_eq!(report["resumed_from"].as_u64(), Some(5));

    assert_eq!(trace_rows(&split), trace_rows(&whole));
}

#[test]
fn circular_trace_stays_on_the_circle() {
    let dir = TempDir::new().unwrap();
    let text = "[trace]
field = \"circular\"
seed_start = [0.2, 0.0]
seed_end = [0.8, 0.0]

[trace.search]
target = 0.5
radius = 0.05
initial_direction = [0.0, 1.0]
max_points = 30
";
    let cfg = write_config(dir.path(), "circle.toml", text);
    ok(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    for row in trace_rows(dir.path()) {
        assert!((num(&row[1]).hypot(num(&row[2])) - 0.5).abs() < 1e-8);
    }
}

#[test]
fn analyze_writes_consistent_datasets() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "analyze.toml", "[analysis]\nwindow = 20000\n");
    let out = dir.path().join("out");
    let summary = ok(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]);

    let exps: Vec<f64> = summary["exponents"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let sum: f64 = exps.iter().sum();
    assert!((sum - 0.5f64.ln()).abs() < 1e-6, "sum {sum}");

    let (_, header, orbit) = read_csv(&out.join("orbit.csv"));
    assert_eq!(header, "x,y,z");
    assert_eq!(orbit.len(), 22_000);

    let (_, _, bundles) = read_csv(&out.join("bundles.csv"));
    assert_eq!(bundles.len(), 20_000);
    for row in &bundles {
        for a in &row[10..13] {
            let a = num(a);
            assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&a), "angle {a}");
        }
    }

    let (_, header, conj) = read_csv(&out.join("conjugacy.csv"));
    assert_eq!(header, "theta,x,y,z");
    let thetas: Vec<f64> = conj.iter().map(|r| num(&r[0])).collect();
    assert!(thetas.windows(2).all(|w| w[0] < w[1]));
    assert!(thetas[0] >= 0.0 && thetas[thetas.len() - 1] < 1.0);

    let stored: Value = serde_json::from_str(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(stored, summary);
}

#[test]
fn invalid_config_reports_its_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "b = 0.5\n\n[scan]\nresolution = [0, 3]\n");
    let out = invcircle(&["scan", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("scan.resolution"), "{err}");

    let cfg = write_config(dir.path(), "typo.toml", "b = 0.5\n[trace]\nfeild = \"map\"\n");
    let out = invcircle(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = invcircle(&["scan", "--b", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_hash_tracks_content_not_output_dir() {
    let dir = TempDir::new().unwrap();
    let a = ok(&["fixedpoints", "--out", dir.path().join("a").to_str().unwrap()]);
    let b = ok(&["fixedpoints", "--out", dir.path().join("b").to_str().unwrap()]);
    let c = ok(&[
        "fixedpoints",
        "--b",
        "0.4",
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert_eq!(a["config"], b["config"]);
    assert_ne!(a["config"], c["config"]);
}

#[test]
fn selftest_passes() {
    let dir = TempDir::new().unwrap();
    let report = ok(&["selftest", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(report["pass"], true);
}

#[test]
fn map_trace_rows_carry_the_analysis() {
    let dir = TempDir::new().unwrap();
    let text = "[trace.search]\nmax_points = 3\n\n[analysis]\nwindow = 20000\n";
    let cfg = write_config(dir.path(), "map.toml", text);
    ok(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let rows = trace_rows(dir.path());
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert!((num(&row[3]) - GOLDEN).abs() <= 1e-9);
        let exps: Vec<f64> = row[5..8].iter().map(|s| num(s)).collect();
        assert!(exps[0].abs() < 1e-4, "{exps:?}");
        assert!(exps[1] < -0.01, "{exps:?}");
        assert!((exps.iter().sum::<f64>() - 0.5f64.ln()).abs() < 1e-6, "{exps:?}");
        assert_eq!(row[11], "1");
    }
}

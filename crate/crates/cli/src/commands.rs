use std::path::Path;
use std::time::Instant;

use invcircle::orbit::scan_grid;
use invcircle::rotnum::{build_conjugacy, rotation_number};
use invcircle::synthetic::{analytic_circle, arnold_rotation, rigid_rotation, AffineField, CircularField};
use invcircle::tangent::ANGLE_PAIRS;
use invcircle::tracer::{
    analyze_point, continue_trace, fpm_solve, trace_contour, ContourPoint, MapRhoField, ParamPoint, PointAnalysis,
    RotationField, TraceConfig, TraceOutcome, TraceState,
};
use invcircle::{MapParams, State};
use serde_json::{json, Value};

use crate::config::{FieldKind, RunConfig};
use crate::output::{float, read_rows, write_json, CsvWriter};
use crate::CliError;

pub const TRACE_HEADER: [&str; 13] = [
    "index",
    "m1",
    "m2",
    "rho",
    "residual",
    "lambda0",
    "lambda1",
    "lambda2",
    "ang01",
    "ang02",
    "ang12",
    "reducible",
    "radius_used",
];

fn prepare_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    Ok(&cfg.out)
}

fn map_field(cfg: &RunConfig) -> Result<MapRhoField, CliError> {
    Ok(MapRhoField::new(cfg.b, cfg.rotation.clone())?)
}

pub fn scan(cfg: &RunConfig) -> Result<Value, CliError> {
    let out = prepare_out(cfg)?;
    let grid = scan_grid(&cfg.scan_request())?;
    let hash = cfg.hash();
    let header = ["m1", "m2", "class"];
    let mut min = CsvWriter::create(&out.join("scan_min.csv"), &hash, &header)?;
    let mut max = CsvWriter::create(&out.join("scan_max.csv"), &hash, &header)?;
    for cell in &grid.cells {
        let coords = [float(cell.m1), float(cell.m2)];
        min.row(&[coords[0].clone(), coords[1].clone(), cell.min.code().to_string()])?;
        max.row(&[coords[0].clone(), coords[1].clone(), cell.max.code().to_string()])?;
    }
    min.flush()?;
    max.flush()?;
    Ok(json!({ "cells": grid.cells.len(), "resolution": [grid.resolution.0, grid.resolution.1] }))
}

pub fn rotnum(cfg: &RunConfig, synthetic: bool) -> Result<Value, CliError> {
    let started = Instant::now();
    let (result, point) = if synthetic {
        let points = analytic_circle(cfg.trace.search.target, cfg.rotation.n);
        (rotation_number(&points, &cfg.rotation.embedding)?, Value::Null)
    } else {
        let p = cfg.point();
        (map_field(cfg)?.rotation(p)?, json!({ "m1": p.m1, "m2": p.m2 }))
    };
    let report = json!({
        "rho": result.rho,
        "winding_assumed": result.winding_assumed,
        "diagnostics": result.diagnostics,
        "n": cfg.rotation.n,
        "synthetic": synthetic,
        "b": cfg.b,
        "point": point,
        "wall_time": started.elapsed().as_secs_f64(),
        "config": cfg.hash(),
    });
    write_json(&prepare_out(cfg)?.join("rotnum.json"), &report)?;
    Ok(report)
}

fn parse_field<T: std::str::FromStr>(row: &[String], i: usize, path: &Path, line: usize) -> Result<T, CliError> {
    row.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Other(format!("{}: malformed data row {line}", path.display())))
}

/// The accepted points already in a trace file.
fn existing_points(path: &Path, hash: &str) -> Result<Vec<ContourPoint>, CliError> {
    let (file_hash, rows) = read_rows(path)?;
    if let Some(h) = file_hash.filter(|h| h != hash) {
        log::warn!("{} was written with config {h}, resuming with {hash}", path.display());
    }
    rows.iter()
        .enumerate()
        .map(|(line, row)| {
            Ok(ContourPoint {
                index: parse_field(row, 0, path, line + 1)?,
                point: ParamPoint::new(
                    parse_field(row, 1, path, line + 1)?,
                    parse_field(row, 2, path, line + 1)?,
                ),
                rho: parse_field(row, 3, path, line + 1)?,
                residual: parse_field(row, 4, path, line + 1)?,
                radius_used: parse_field(row, 12, path, line + 1)?,
                analysis: None,
            })
        })
        .collect()
}

fn trace_row(cp: &ContourPoint) -> Vec<String> {
    let mut row = vec![
        cp.index.to_string(),
        float(cp.point.m1),
        float(cp.point.m2),
        float(cp.rho),
        float(cp.residual),
    ];
    match &cp.analysis {
        Some(a) => {
            row.extend(a.exponents.iter().map(|&x| float(x)));
            row.extend(a.min_angles.iter().map(|&x| float(x)));
            row.push(u8::from(a.reducible).to_string());
        }
        None => row.extend(std::iter::repeat_n(String::new(), 7)),
    }
    row.push(float(cp.radius_used));
    row
}

fn run_trace<F: RotationField>(
    field: &F,
    analyzer: Option<&MapRhoField>,
    cfg: &RunConfig,
    search: &TraceConfig,
) -> Result<Value, CliError> {
    let path = prepare_out(cfg)?.join("trace.csv");
    let hash = cfg.hash();
    let existing = existing_points(&path, &hash)?;
    let mut writer = CsvWriter::append(&path, &hash, &TRACE_HEADER)?;
    let mut io_error = None;
    let sink = |cp: &ContourPoint| {
        let mut cp = cp.clone();
        if let Some(map) = analyzer {
            match analyze_point(map, cp.point, &cfg.analysis, cfg.seed) {
                Ok((_, a)) => {
                    cp.analysis = Some(PointAnalysis {
                        exponents: a.lyapunov.exponents,
                        reducible: a.lyapunov.reducible,
                        min_angles: a.reported_min_angles(),
                    })
                }
                Err(e) => log::warn!("analysis of contour point {} failed: {e}", cp.index),
            }
        }
        match writer.row(&trace_row(&cp)).and_then(|_| writer.flush()) {
            Ok(()) => true,
            Err(e) => {
                io_error = Some(e);
                false
            }
        }
    };
    let resumed = existing.len();
    let outcome: TraceOutcome = match TraceState::from_points(&existing) {
        Some(state) => continue_trace(field, state, search, sink)?,
        None => trace_contour(field, [seed_start(cfg), seed_end(cfg)], search, sink)?,
    };
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok(json!({
        "resumed_from": resumed,
        "new_points": outcome.points.len(),
        "failures": outcome.failures.len(),
        "termination": outcome.termination,
        "last": { "m1": outcome.state.current.m1, "m2": outcome.state.current.m2 },
        "radius": outcome.state.radius,
    }))
}

fn seed_start(cfg: &RunConfig) -> ParamPoint {
    ParamPoint::new(cfg.trace.seed_start[0], cfg.trace.seed_start[1])
}

fn seed_end(cfg: &RunConfig) -> ParamPoint {
    ParamPoint::new(cfg.trace.seed_end[0], cfg.trace.seed_end[1])
}

pub fn trace(cfg: &RunConfig) -> Result<Value, CliError> {
    let search = &cfg.trace.search;
    match cfg.trace.field {
        FieldKind::Map => {
            let field = map_field(cfg)?;
            let analyzer = cfg.trace.analyze.then_some(&field);
            run_trace(&field, analyzer, cfg, search)
        }
        FieldKind::Affine => run_trace(&AffineField, None, cfg, search),
        FieldKind::Circular => run_trace(&CircularField, None, cfg, search),
    }
}

fn state_fields(s: &State) -> [String; 3] {
    [float(s.x), float(s.y), float(s.z)]
}

pub fn analyze(cfg: &RunConfig) -> Result<Value, CliError> {
    let out = prepare_out(cfg)?;
    let hash = cfg.hash();
    let field = map_field(cfg)?;
    let p = cfg.point();
    let rotation = field.rotation(p)?;
    let (orbit, analysis) = analyze_point(&field, p, &cfg.analysis, cfg.seed)?;

    let mut w = CsvWriter::create(&out.join("orbit.csv"), &hash, &["x", "y", "z"])?;
    for s in &orbit.points {
        w.row(&state_fields(s))?;
    }
    w.flush()?;

    let mut header = vec!["k"];
    header.extend(["h0x", "h0y", "h0z", "h1x", "h1y", "h1z", "h2x", "h2y", "h2z"]);
    header.extend(["ang01", "ang02", "ang12"]);
    let mut w = CsvWriter::create(&out.join("bundles.csv"), &hash, &header)?;
    let b = &analysis.bundles;
    for (j, k) in b.indices().enumerate() {
        let mut row = vec![k.to_string()];
        for h in &b.h {
            row.extend([float(h[j].x), float(h[j].y), float(h[j].z)]);
        }
        row.extend(analysis.angles.series.iter().map(|s| float(s[j])));
        w.row(&row)?;
    }
    w.flush()?;

    let conjugacy = build_conjugacy(&orbit.points, rotation.rho)?;
    let mut w = CsvWriter::create(&out.join("conjugacy.csv"), &hash, &["theta", "x", "y", "z"])?;
    for (theta, s) in &conjugacy.samples {
        let [x, y, z] = state_fields(s);
        w.row(&[float(*theta), x, y, z])?;
    }
    w.flush()?;

    let l = &analysis.lyapunov;
    let pairs: Vec<String> = ANGLE_PAIRS.iter().map(|(i, j)| format!("{i}{j}")).collect();
    let summary = json!({
        "b": cfg.b,
        "point": { "m1": p.m1, "m2": p.m2 },
        "rho": rotation.rho,
        "exponents": l.exponents,
        "exponent_sum": l.sum(),
        "log_abs_b": cfg.b.abs().ln(),
        "reducible": l.reducible,
        "angle_pairs": pairs,
        "min_angles": analysis.reported_min_angles(),
        "orbit_points": orbit.points.len(),
        "window": [b.indices().start, b.indices().end],
        "config": hash,
    });
    write_json(&out.join("analysis.json"), &summary)?;
    Ok(summary)
}

pub fn fixedpoints(cfg: &RunConfig) -> Result<Value, CliError> {
    let params = MapParams::new(cfg.b, cfg.point.m1, cfg.point.m2)?;
    let mut points = Vec::new();
    for s in params.fixed_points() {
        let entry = match params.fixed_point_multipliers(&s) {
            Ok(m) => json!({
                "state": [s.x, s.y, s.z],
                "multipliers": m.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect::<Vec<_>>(),
                "moduli": m.iter().map(|z| z.norm()).collect::<Vec<_>>(),
                "stable": m.iter().all(|z| z.norm() < 1.0),
            }),
            Err(e) => json!({ "state": [s.x, s.y, s.z], "error": e.to_string() }),
        };
        points.push(entry);
    }
    let report = json!({
        "b": cfg.b,
        "point": { "m1": cfg.point.m1, "m2": cfg.point.m2 },
        "fixed_points": points,
        "ns_phase": params.neimark_sacker_phase().ok(),
        "config": cfg.hash(),
    });
    write_json(&prepare_out(cfg)?.join("fixedpoints.json"), &report)?;
    Ok(report)
}

/// Quick checks against the built-in synthetic generators; returns the
/// report and whether every check passed.
pub fn selftest(cfg: &RunConfig) -> Result<(Value, bool), CliError> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let embedding = &cfg.rotation.embedding;
    let mut checks = Vec::new();
    let mut record = |name: &str, error: f64, tol: f64| {
        let pass = error <= tol;
        eprintln!(
            "{} {name}: error {error:.3e} (tolerance {tol:.0e})",
            if pass { "PASS" } else { "FAIL" }
        );
        checks.push(json!({ "name": name, "error": error, "tolerance": tol, "pass": pass }));
        pass
    };
    let mut ok = true;

    let rho = rotation_number(&analytic_circle(golden, 10_000), embedding)?.rho;
    ok &= record("analytic circle, golden mean", (rho - golden).abs(), 1e-10);
    let rho = rotation_number(&rigid_rotation(0.25, 10_000), embedding)?.rho;
    ok &= record("rigid rotation 1/4", (rho - 0.25).abs(), 1e-12);
    let rho = rotation_number(&analytic_circle(0.4, 10_000), embedding)?.rho;
    ok &= record("analytic circle 2/5", (rho - 0.4).abs(), 1e-8);

    let fpm = cfg.trace.search.fpm;
    let staircase = fpm_solve(
        |w| Ok(arnold_rotation(w, 0.9, 1000, 100_000)? - golden),
        0.55,
        0.7,
        &fpm,
    )?;
    ok &= record("Arnold staircase at the golden mean", staircase.value.abs(), 1e-9);

    let search = TraceConfig {
        target: 0.0,
        max_points: 50,
        initial_direction: [0.0, 1.0],
        ..cfg.trace.search.clone()
    };
    let line = trace_contour(
        &AffineField,
        [ParamPoint::new(-0.5, 0.0), ParamPoint::new(0.5, 0.0)],
        &search,
        |_| true,
    )?;
    let worst = line.points.iter().map(|cp| cp.point.m1.abs()).fold(0.0, f64::max);
    ok &= record("affine field contour", worst, 1e-10);

    Ok((json!({ "checks": checks, "pass": ok }), ok))
}

mod common;

use invcircle::tangent::{self, line_angle, Cocycle, HenonCocycle, TangentConfig};
use invcircle::tracer::{analyze_point, MapRhoField, ParamPoint, RhoEvalConfig};

const POINT: (f64, f64) = (0.7, -0.23);

fn setup(window: usize, seed: u64) -> (MapRhoField, invcircle::orbit::Orbit, tangent::TangentAnalysis) {
    let field = MapRhoField::new(0.5, RhoEvalConfig::default()).unwrap();
    let cfg = TangentConfig {
        window,
        ..TangentConfig::default()
    };
    let (orbit, analysis) = analyze_point(&field, ParamPoint::new(POINT.0, POINT.1), &cfg, seed).unwrap();
    (field, orbit, analysis)
}

#[test]
fn exponents_match_repeated_qr() {
    let (_, orbit, analysis) = setup(30_000, 0);
    let window = analysis.bundles.indices();
    let oracle = common::benettin_exponents(&orbit.params, &orbit.points, window);
    let ours = analysis.lyapunov.sorted();
    for (a, b) in ours.iter().zip(&common::sorted_desc(oracle)) {
        assert!((a - b).abs() < 1e-6, "{ours:?} vs {oracle:?}");
    }
    assert!(ours[0].abs() < 1e-4, "{ours:?}");
    assert!((analysis.lyapunov.sum() - 0.5f64.ln()).abs() < 1e-6);
}

#[test]
fn results_do_not_depend_on_initial_frames() {
    let (_, _, a) = setup(20_000, 1);
    let (_, _, b) = setup(20_000, 2);
    for (x, y) in a.lyapunov.exponents.iter().zip(&b.lyapunov.exponents) {
        assert!(
            (x - y).abs() < 1e-8,
            "{:?} vs {:?}",
            a.lyapunov.exponents,
            b.lyapunov.exponents
        );
    }
    let mut worst = 0.0f64;
    for i in 0..3 {
        for (u, v) in a.bundles.h[i].iter().zip(&b.bundles.h[i]) {
            worst = worst.max(common::angle_between(u, v));
        }
    }
    assert!(worst < 1e-6, "bundle directions differ by {worst:e}");
}

#[test]
fn tangent_bundle_follows_the_circle() {
    let (field, orbit, analysis) = setup(20_000, 0);
    let rho = field.rotation(ParamPoint::new(POINT.0, POINT.1)).unwrap().rho;

    // Orbit indices in circle order: x_k sits at angle frac(k rho).
    let frac = |x: f64| x - x.floor();
    let mut order: Vec<usize> = (0..orbit.points.len()).collect();
    order.sort_by(|&i, &j| frac(i as f64 * rho).total_cmp(&frac(j as f64 * rho)));
    let mut rank = vec![0; order.len()];
    for (r, &k) in order.iter().enumerate() {
        rank[k] = r;
    }

    // Circle-order gaps take unequal values (three-gap theorem), so the
    // symmetric secant through both neighbours is only first-order accurate.
    // Check the secant to the nearer neighbour, and the gap-weighted
    // combination of both secants, which is second-order.
    let n = order.len();
    let (mut nearest, mut weighted) = (0.0f64, 0.0f64);
    for k in analysis.bundles.indices().step_by(20) {
        let r = rank[k];
        let (prev, next) = (order[(r + n - 1) % n], order[(r + 1) % n]);
        let before = frac((k as f64 - prev as f64) * rho);
        let after = frac((next as f64 - k as f64) * rho);
        let x = orbit.points[k];
        let (to_prev, to_next) = (orbit.points[prev] - x, orbit.points[next] - x);
        let h0 = analysis.bundles.at(0, k);
        let closest = if before < after { to_prev } else { to_next };
        nearest = nearest.max(line_angle(&h0, &closest));
        let blend = to_next * (before * before) - to_prev * (after * after);
        weighted = weighted.max(line_angle(&h0, &blend));
    }
    assert!(nearest < 1e-4, "tangent misaligned with nearest secant by {nearest:e}");
    assert!(
        weighted < 1e-6,
        "tangent misaligned with weighted secant by {weighted:e}"
    );
}

#[test]
fn bundles_are_invariant() {
    let (_, orbit, analysis) = setup(20_000, 0);
    let cocycle = HenonCocycle::new(&orbit.params, &orbit.points);
    let b = &analysis.bundles;
    let mut worst = [0.0f64; 3];
    for k in b.indices().skip(100).step_by(17).take(1_000) {
        for (i, w) in worst.iter_mut().enumerate().take(2) {
            let image = cocycle.apply(k, &b.at(i, k));
            *w = w.max(common::angle_between(&image, &b.at(i, k + 1)));
        }
        // The strongly contracting bundle is checked backwards.
        let pre = cocycle.solve(k, &b.at(2, k + 1));
        worst[2] = worst[2].max(common::angle_between(&pre, &b.at(2, k)));
    }
    assert!(worst.iter().all(|&w| w < 1e-6), "{worst:?}");
}

//! False position (regula falsi) with optional Illinois modification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpmConfig {
    /// Stop when `|f(c)|` is at most this.
    pub value_tol: f64,
    /// Stop when the bracket is at most this wide.
    pub param_tol: f64,
    pub max_iter: usize,
    /// Halve the stored value of an endpoint retained twice in a row.
    pub illinois: bool,
}

impl Default for FpmConfig {
    fn default() -> Self {
        Self {
            value_tol: 1e-10,
            param_tol: 1e-12,
            max_iter: 60,
            illinois: true,
        }
    }
}

impl FpmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.value_tol > 0.0 && self.param_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(
                "FPM tolerances and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Bracket `[a, b]` (true function values) and the new point `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpmStep {
    pub a: f64,
    pub fa: f64,
    pub b: f64,
    pub fb: f64,
    pub c: f64,
    pub fc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpmResult {
    pub root: f64,
    pub value: f64,
    pub iterations: usize,
    pub steps: Vec<FpmStep>,
}

#[derive(Clone, Copy, PartialEq)]
enum Kept {
    None,
    A,
    B,
}

/// Finds `t` in `[a, b]` with `f(t) ≈ 0`, given `f(a) f(b) <= 0`.
///
/// Errors from `f` abort the search and are returned unchanged.
pub fn fpm_solve<F>(mut f: F, a: f64, b: f64, cfg: &FpmConfig) -> Result<FpmResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    let done = |root, value, iterations, steps| {
        Ok(FpmResult {
            root,
            value,
            iterations,
            steps,
        })
    };
    if fa.abs() <= cfg.value_tol || fa == 0.0 {
        return done(a, fa, 0, Vec::new());
    }
    if fb.abs() <= cfg.value_tol || fb == 0.0 {
        return done(b, fb, 0, Vec::new());
    }
    if !(fa * fb <= 0.0) {
        return Err(Error::NoBracket { fa, fb });
    }
    // Secant weights; they differ from fa, fb only after Illinois halving.
    let (mut wa, mut wb) = (fa, fb);
    let mut kept = Kept::None;
    let mut streak = 0usize;
    let mut steps = Vec::new();
    for iter in 1..=cfg.max_iter {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let c = ((a * wb - b * wa) / (wb - wa)).clamp(lo, hi);
        let fc = f(c)?;
        steps.push(FpmStep { a, fa, b, fb, c, fc });
        if fc.abs() <= cfg.value_tol {
            return done(c, fc, iter, steps);
        }
        let now_kept = if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
            wa = fc;
            Kept::B
        } else {
            b = c;
            fb = fc;
            wb = fc;
            Kept::A
        };
        streak = if now_kept == kept { streak + 1 } else { 1 };
        kept = now_kept;
        if cfg.illinois && streak >= 2 {
            match kept {
                Kept::A => wa *= 0.5,
                Kept::B => wb *= 0.5,
                Kept::None => {}
            }
        }
        if (b - a).abs() <= cfg.param_tol {
            let (root, value) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
            return done(root, value, iter, steps);
        }
    }
    let (best, value) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    Err(Error::NonConvergence { best, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_brackets(res: &FpmResult) {
        for s in &res.steps {
            assert!(s.fa * s.fb <= 0.0, "{s:?}");
        }
    }

    #[test]
    fn affine_in_one_iteration() {
        let res = fpm_solve(|t| Ok(2.0 * t - 1.0), 0.0, 1.0, &FpmConfig::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.root, 0.5);
    }

    #[test]
    fn square_root_of_two() {
        let res = fpm_solve(|t| Ok(t * t - 2.0), 1.0, 2.0, &FpmConfig::default()).unwrap();
        assert!((res.root - 2f64.sqrt()).abs() < 1e-10);
        check_brackets(&res);
    }

    #[test]
    fn plain_false_position_stalls_where_illinois_does_not() {
        let f = |t: f64| Ok(t.powi(10) - 0.5);
        let plain = FpmConfig {
            illinois: false,
            ..FpmConfig::default()
        };
        let illinois = fpm_solve(f, 0.0, 1.5, &FpmConfig::default()).unwrap();
        check_brackets(&illinois);
        assert!(illinois.value.abs() <= 1e-10);
        assert!(matches!(
            fpm_solve(f, 0.0, 1.5, &plain),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn missing_bracket_and_endpoint_roots() {
        assert_eq!(
            fpm_solve(|t| Ok(t * t + 1.0), -1.0, 1.0, &FpmConfig::default()),
            Err(Error::NoBracket { fa: 2.0, fb: 2.0 })
        );
        let res = fpm_solve(|t| Ok(t - 1.0), 1.0, 3.0, &FpmConfig::default()).unwrap();
        assert_eq!((res.root, res.iterations), (1.0, 0));
    }

    #[test]
    fn evaluation_errors_propagate() {
        let res = fpm_solve(
            |t| {
                if t > 0.2 && t < 0.8 {
                    Err(Error::NoAttractor)
                } else {
                    Ok(t - 0.3)
                }
            },
            0.0,
            1.0,
            &FpmConfig::default(),
        );
        assert_eq!(res, Err(Error::NoAttractor));
    }

    #[test]
    fn exhausted_iterations_report_best_point() {
        let cfg = FpmConfig {
            max_iter: 2,
            ..FpmConfig::default()
        };
        match fpm_solve(|t| Ok(t.powi(3) - 0.001), 0.0, 1.0, &cfg) {
            Err(Error::NonConvergence { best, value }) => {
                assert!((best.powi(3) - 0.001 - value).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }
}

//! Bracketing the target contour on a small circle around the last point.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::par;

use super::{ParamPoint, RotationField};

/// Samples evaluated together; results are consumed in angular order, so
/// the outcome does not depend on the batch size or the worker count.
const BATCH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ArcSample {
    pub angle: f64,
    pub point: ParamPoint,
    /// `rho - target`, or the evaluation failure.
    pub deviation: Result<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleBracket {
    pub first: ArcSample,
    pub second: ArcSample,
    /// Failed samples met on the way, in evaluation order.
    pub skipped: Vec<ArcSample>,
}

impl CircleBracket {
    pub fn values(&self) -> (f64, f64) {
        let v = |s: &ArcSample| *s.deviation.as_ref().expect("bracket samples are valid");
        (v(&self.first), v(&self.second))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CircleSearch {
    pub center: ParamPoint,
    pub radius: f64,
    /// Predicted direction of the contour, radians.
    pub direction: f64,
    pub step: f64,
    pub target: f64,
}

impl CircleSearch {
    fn sample<F: RotationField + ?Sized>(&self, field: &F, angle: f64) -> ArcSample {
        let point = self.center.offset(self.radius, angle);
        ArcSample {
            angle,
            point,
            deviation: field.rho(point).map(|r| r - self.target),
        }
    }

    fn samples<F: RotationField + ?Sized>(&self, field: &F, angles: &[f64]) -> Vec<ArcSample> {
        par::map(angles, |&a| self.sample(field, a))
    }
}

fn encloses(a: &ArcSample, b: &ArcSample) -> bool {
    match (&a.deviation, &b.deviation) {
        (Ok(x), Ok(y)) => x * y <= 0.0,
        _ => false,
    }
}

fn deviation(s: &ArcSample) -> f64 {
    s.deviation.as_ref().map_or(f64::INFINITY, |d| d.abs())
}

/// Two adjacent samples on the circle whose deviations have opposite signs.
///
/// Sampling starts at `direction ± step / 2`, then walks away from the
/// predicted direction on the side with the smaller deviation, up to a
/// quarter turn, then on the other side.
pub fn circle_bracket_search<F: RotationField + ?Sized>(field: &F, search: &CircleSearch) -> Result<CircleBracket> {
    if !(search.radius > 0.0 && search.step > 0.0 && search.step < FRAC_PI_2) {
        return Err(Error::DegenerateInput(
            "circle search needs a positive radius and a step below 90 degrees",
        ));
    }
    let half = 0.5 * search.step;
    let mut first = search.samples(field, &[search.direction - half, search.direction + half]);
    let plus = first.pop().expect("two samples");
    let minus = first.pop().expect("two samples");
    let mut skipped: Vec<ArcSample> = [&minus, &plus]
        .into_iter()
        .filter(|s| s.deviation.is_err())
        .cloned()
        .collect();
    if encloses(&minus, &plus) {
        return Ok(CircleBracket {
            first: minus,
            second: plus,
            skipped,
        });
    }
    let sides = if deviation(&plus) <= deviation(&minus) {
        [(plus, 1.0), (minus, -1.0)]
    } else {
        [(minus, -1.0), (plus, 1.0)]
    };
    // Offsets beyond the starting pair, up to a quarter turn.
    let extra = ((FRAC_PI_2 - half) / search.step).floor() as usize;
    for (start, sign) in sides {
        let mut prev = start;
        let offsets: Vec<f64> = (1..=extra)
            .map(|j| search.direction + sign * (half + j as f64 * search.step))
            .collect();
        for batch in offsets.chunks(BATCH) {
            for s in search.samples(field, batch) {
                if s.deviation.is_err() {
                    skipped.push(s.clone());
                }
                if encloses(&prev, &s) {
                    return Ok(CircleBracket {
                        first: prev,
                        second: s,
                        skipped,
                    });
                }
                prev = s;
            }
        }
    }
    Err(Error::NoCircleBracket)
}

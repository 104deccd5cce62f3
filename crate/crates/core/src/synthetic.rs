//! Synthetic data with known answers: rigid rotations, an analytic embedded
//! circle carrying a prescribed rotation, analytic parameter fields and the
//! Arnold circle map. Used as test hooks and self-tests.

use std::f64::consts::TAU;

use crate::error::Result;
use crate::map::State;
use crate::tracer::{ParamPoint, RotationField};
use crate::wba;

/// `x_k = (cos 2πkρ, sin 2πkρ, 0)`.
pub fn rigid_rotation(rho: f64, n: usize) -> Vec<State> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 * rho;
            State::new(t.cos(), t.sin(), 0.0)
        })
        .collect()
}

/// A non-planar analytic embedding of the circle; counterclockwise when
/// viewed from `(1, 1, 1)`.
pub fn circle_embedding(theta: f64) -> State {
    let t = TAU * theta;
    State::new(
        t.cos() + 0.15 * (2.0 * t).cos(),
        t.sin() + 0.1 * (2.0 * t).sin(),
        0.2 * t.cos() + 0.05 * (3.0 * t).sin(),
    )
}

/// Orbit `x_k = K(k ρ)` of the rigid rotation by `rho`, seen through
/// [`circle_embedding`].
pub fn analytic_circle(rho: f64, n: usize) -> Vec<State> {
    (0..n).map(|k| circle_embedding((k as f64 * rho).fract())).collect()
}

/// Arnold circle map lift `θ ↦ θ + ω - (κ / 2π) sin 2πθ`.
pub fn arnold_step(theta: f64, omega: f64, coupling: f64) -> f64 {
    theta + omega - coupling / TAU * (TAU * theta).sin()
}

/// Rotation number of the Arnold map via the weighted average of lift
/// increments. A homeomorphism for `coupling < 1`, so `ω ↦ ρ` is a devil's
/// staircase.
pub fn arnold_rotation(omega: f64, coupling: f64, n_transient: usize, n: usize) -> Result<f64> {
    let mut theta = 0.0;
    for _ in 0..n_transient {
        theta = arnold_step(theta, omega, coupling).rem_euclid(1.0);
    }
    let increments = (0..n.saturating_sub(1)).map(|_| {
        let next = arnold_step(theta, omega, coupling);
        let inc = next - theta;
        theta = next.rem_euclid(1.0);
        inc
    });
    wba::average_iter(increments, n.saturating_sub(1))
}

/// `r(M1, M2) = M1`; its contours are vertical lines.
#[derive(Debug, Clone, Copy, Default)]
pub struct AffineField;

impl RotationField for AffineField {
    fn rho(&self, p: ParamPoint) -> Result<f64> {
        Ok(p.m1)
    }
}

/// `r(M1, M2) = |(M1, M2)|`; its contours are circles about the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircularField;

impl RotationField for CircularField {
    fn rho(&self, p: ParamPoint) -> Result<f64> {
        Ok(p.m1.hypot(p.m2))
    }
}

//! The quadratic Hénon-like family on R^3,
//!
//! ```text
//! F(x, y, z) = (y, z, B x + M1 + M2 y - z^2)
//! ```
//!
//! with constant Jacobian determinant `B`. For `B != 0` every member is a
//! diffeomorphism with an explicit inverse.

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase-space point.
pub type State = Vector3<f64>;

/// Orbits whose Euclidean norm exceeds this are declared escaped.
pub const ESCAPE_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub b: f64,
    pub m1: f64,
    pub m2: f64,
}

impl MapParams {
    pub fn new(b: f64, m1: f64, m2: f64) -> Result<Self> {
        if b == 0.0 {
            return Err(Error::SingularMap);
        }
        if !(b.is_finite() && m1.is_finite() && m2.is_finite()) {
            return Err(Error::Config(format!(
                "map parameters must be finite, got ({b}, {m1}, {m2})"
            )));
        }
        Ok(Self { b, m1, m2 })
    }

    pub fn is_dissipative(&self) -> bool {
        self.b.abs() < 1.0
    }

    #[inline]
    pub fn apply(&self, s: &State) -> State {
        State::new(s.y, s.z, self.b * s.x + self.m1 + self.m2 * s.y - s.z * s.z)
    }

    /// [`apply`](Self::apply) that rejects non-finite images.
    pub fn try_apply(&self, s: &State) -> Result<State> {
        let next = self.apply(s);
        if next.iter().all(|c| c.is_finite()) {
            Ok(next)
        } else {
            Err(Error::NonFinite)
        }
    }

    #[inline]
    pub fn apply_inverse(&self, s: &State) -> State {
        State::new((s.z - self.m1 - self.m2 * s.x + s.y * s.y) / self.b, s.x, s.y)
    }

    #[inline]
    pub fn jacobian(&self, s: &State) -> Matrix3<f64> {
        Matrix3::new(
            0.0,
            1.0,
            0.0, //
            0.0,
            0.0,
            1.0, //
            self.b,
            self.m2,
            -2.0 * s.z,
        )
    }

    /// `DF(s) v` without forming the matrix.
    #[inline]
    pub fn jacobian_apply(&self, s: &State, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(v.y, v.z, self.b * v.x + self.m2 * v.y - 2.0 * s.z * v.z)
    }

    /// Solves `DF(s) w = v`. The first two rows are shifts, so the solve is
    /// explicit.
    #[inline]
    pub fn solve_jacobian(&self, s: &State, v: &Vector3<f64>) -> Result<Vector3<f64>> {
        if self.b == 0.0 {
            return Err(Error::SingularMap);
        }
        Ok(self.solve_jacobian_unchecked(s, v))
    }

    #[inline]
    pub(crate) fn solve_jacobian_unchecked(&self, s: &State, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new((v.z - self.m2 * v.x + 2.0 * s.z * v.y) / self.b, v.x, v.y)
    }

    /// Real fixed points `(t, t, t)`, roots of `t^2 + (1 - B - M2) t - M1 = 0`.
    /// A double root is reported twice.
    pub fn fixed_points(&self) -> Vec<State> {
        let p = 1.0 - self.b - self.m2;
        let q = -self.m1;
        let disc = p * p - 4.0 * q;
        if disc < 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = -0.5 * (p + p.signum() * sq);
        let (t1, t2) = if big == 0.0 {
            (-0.5 * p, -0.5 * p)
        } else {
            (big, q / big)
        };
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        vec![State::repeat(lo), State::repeat(hi)]
    }

    /// Eigenvalues of the Jacobian at a fixed point: the roots of
    /// `λ^3 + 2t λ^2 - M2 λ - B`, sorted by decreasing modulus.
    pub fn fixed_point_multipliers(&self, s: &State) -> Result<[Complex<f64>; 3]> {
        let residual = (self.apply(s) - s).norm();
        if !(residual <= 1e-9 * s.norm().max(1.0)) {
            return Err(Error::NotFixedPoint { residual });
        }
        let t = s.x;
        Ok(cubic_roots(2.0 * t, -self.m2, -self.b))
    }

    /// Phase `φ ∈ (0, π)` of the multiplier pair `e^{±iφ}` on the
    /// Neimark-Sacker curve, from `2 cos φ = -(M2 + 1) / B`.
    pub fn neimark_sacker_phase(&self) -> Result<f64> {
        let cos_phi = -(self.m2 + 1.0) / (2.0 * self.b);
        if !(cos_phi > -1.0 && cos_phi < 1.0) {
            return Err(Error::NoComplexPair { cos_phi });
        }
        Ok(cos_phi.acos())
    }
}

/// Roots of the monic cubic `λ^3 + a λ^2 + b λ + c` from the eigenvalues of
/// its companion matrix.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex<f64>; 3] {
    let companion = Matrix3::new(
        -a, -b, -c, //
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0,
    );
    let ev = companion.complex_eigenvalues();
    let mut roots = [ev[0], ev[1], ev[2]];
    roots.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.im.total_cmp(&x.im))
            .then(y.re.total_cmp(&x.re))
    });
    roots
}

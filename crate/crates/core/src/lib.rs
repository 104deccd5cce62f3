//! Attracting invariant circles of the three-dimensional Hénon-like family
//! `F(x, y, z) = (y, z, B x + M1 + M2 y - z^2)`.
//!
//! - [`map`]: the map, its inverse, Jacobian and fixed-point analysis.
//! - [`wba`]: weighted Birkhoff averages.
//! - [`orbit`]: attractor iteration, period classification and grid scans.
//! - [`rotnum`]: rotation numbers and conjugacies from a single orbit.
//! - [`tangent`]: Lyapunov bundles, exponents and bundle angles.
//! - [`tracer`]: contours of constant rotation number in parameter space.
//!
//! Data-parallel loops use rayon with the default `parallel` feature and run
//! sequentially without it; results are identical either way.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod map;
pub mod orbit;
pub mod par;
pub mod rotnum;
pub mod synthetic;
pub mod tangent;
pub mod tracer;
pub mod wba;

pub use error::{Error, Result};
pub use map::{MapParams, State};

//! Tangent dynamics along an orbit: Gram-Schmidt frames pushed forward and
//! backward, the Oseledets line bundles recovered from them, Lyapunov
//! exponents as weighted Birkhoff averages of one-step growth, and angles
//! between bundles.
//!
//! With exponents `λ0 > λ1 > λ2`, forward propagation sends `span(u)` to the
//! most expanding bundle `H0` and `span(u, v)` to `H0 ⊕ H1`; backward
//! propagation sends `span(ũ)` to the most contracting bundle `H2` and
//! `span(ũ, ṽ)` to `H1 ⊕ H2`. `H1` is the intersection of the two planes.

use std::ops::Range;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{MapParams, State};
use crate::par;
use crate::wba;

pub type Vec3 = Vector3<f64>;

const VANISHING_NORM: f64 = 1e-300;
const INTERSECTION_THRESHOLD: f64 = 1e-12;

/// A sequence of invertible linear maps `A_k`, `k = 0..len`.
pub trait Cocycle: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `A_k v`.
    fn apply(&self, k: usize, v: &Vec3) -> Vec3;

    /// `A_k^{-1} v`.
    fn solve(&self, k: usize, v: &Vec3) -> Vec3;
}

/// Jacobians of the map along a stored orbit.
#[derive(Debug, Clone, Copy)]
pub struct HenonCocycle<'a> {
    pub params: &'a MapParams,
    pub points: &'a [State],
}

impl<'a> HenonCocycle<'a> {
    pub fn new(params: &'a MapParams, points: &'a [State]) -> Self {
        Self { params, points }
    }
}

impl Cocycle for HenonCocycle<'_> {
    fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    fn apply(&self, k: usize, v: &Vec3) -> Vec3 {
        self.params.jacobian_apply(&self.points[k], v)
    }

    #[inline]
    fn solve(&self, k: usize, v: &Vec3) -> Vec3 {
        self.params.solve_jacobian_unchecked(&self.points[k], v)
    }
}

/// The same matrix at every index.
#[derive(Debug, Clone, Copy)]
pub struct ConstantCocycle {
    matrix: Matrix3<f64>,
    inverse: Matrix3<f64>,
    len: usize,
}

impl ConstantCocycle {
    pub fn new(matrix: Matrix3<f64>, len: usize) -> Result<Self> {
        let inverse = matrix
            .try_inverse()
            .ok_or(Error::DegenerateInput("constant cocycle matrix is singular"))?;
        Ok(Self { matrix, inverse, len })
    }

    pub fn diagonal(d: [f64; 3], len: usize) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vec3::from(d)), len)
    }
}

impl Cocycle for ConstantCocycle {
    fn len(&self) -> usize {
        self.len
    }

    fn apply(&self, _k: usize, v: &Vec3) -> Vec3 {
        self.matrix * v
    }

    fn solve(&self, _k: usize, v: &Vec3) -> Vec3 {
        self.inverse * v
    }
}

/// `w / |w|`, with the norm computed without underflow.
fn normalized(w: Vec3, index: usize) -> Result<Vec3> {
    let scale = w.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateCocycle { index });
    }
    let n = (w / scale).norm() * scale;
    if !(n >= VANISHING_NORM) {
        return Err(Error::DegenerateCocycle { index });
    }
    Ok(w / scale / (n / scale))
}

fn orthonormal_pair(a: Vec3, b: Vec3) -> Result<(Vec3, Vec3)> {
    let a = normalized(a, 0)?;
    let b = b - a * a.dot(&b);
    if b.norm() < 1e-8 {
        return Err(Error::DegenerateInput("initial frame vectors are linearly dependent"));
    }
    Ok((a, b.normalize()))
}

/// One Gram-Schmidt step: the image of `(a, b)` under `step`, orthonormalized.
#[inline]
fn gram_schmidt_step(a: Vec3, b: Vec3, index: usize, step: impl Fn(&Vec3) -> Vec3) -> Result<(Vec3, Vec3)> {
    let a1 = normalized(step(&a), index)?;
    let mut b1 = step(&b);
    b1 -= a1 * a1.dot(&b1);
    let b1 = normalized(b1, index)?;
    Ok((a1, b1))
}

/// Orthonormal frame pairs indexed like the orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePairs {
    pub first: Vec<Vec3>,
    pub second: Vec<Vec3>,
}

/// Forward frames `(u_k, v_k)` with `u_{k+1} ∝ A_k u_k`.
pub fn forward_frames<C: Cocycle + ?Sized>(cocycle: &C, u_init: Vec3, v_init: Vec3) -> Result<FramePairs> {
    let n = cocycle.len();
    let (mut u, mut v) = orthonormal_pair(u_init, v_init)?;
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for k in 0..n {
        first.push(u);
        second.push(v);
        if k + 1 < n {
            (u, v) = gram_schmidt_step(u, v, k, |w| cocycle.apply(k, w))?;
        }
    }
    Ok(FramePairs { first, second })
}

/// Backward frames `(ũ_k, ṽ_k)` with `ũ_{k-1} ∝ A_{k-1}^{-1} ũ_k`, started
/// at the last index.
pub fn backward_frames<C: Cocycle + ?Sized>(cocycle: &C, u_init: Vec3, v_init: Vec3) -> Result<FramePairs> {
    let n = cocycle.len();
    let (mut u, mut v) = orthonormal_pair(u_init, v_init)?;
    let mut first = vec![Vec3::zeros(); n];
    let mut second = vec![Vec3::zeros(); n];
    for k in (0..n).rev() {
        first[k] = u;
        second[k] = v;
        if k > 0 {
            (u, v) = gram_schmidt_step(u, v, k - 1, |w| cocycle.solve(k - 1, w))?;
        }
    }
    Ok(FramePairs { first, second })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    pub forward: FramePairs,
    pub backward: FramePairs,
}

impl FrameSeries {
    pub fn len(&self) -> usize {
        self.forward.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Initial frames: forward `(e1, e2)`, backward `(e3, e2)`, each perturbed
/// by a seeded jitter of size `1e-3`.
pub fn jittered_initial_frames(seed: u64) -> [Vec3; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: Vec3| v + Vec3::from_fn(|_, _| rng.random_range(-1e-3..1e-3));
    [
        jitter(Vec3::x()),
        jitter(Vec3::y()),
        jitter(Vec3::z()),
        jitter(Vec3::y()),
    ]
}

/// Runs both passes, concurrently when the `parallel` feature is on.
pub fn frames<C: Cocycle + ?Sized>(cocycle: &C, init: [Vec3; 4]) -> Result<FrameSeries> {
    let (fwd, bwd) = par::join(
        || forward_frames(cocycle, init[0], init[1]),
        || backward_frames(cocycle, init[2], init[3]),
    );
    Ok(FrameSeries {
        forward: fwd?,
        backward: bwd?,
    })
}

/// Unit sections of `H0`, `H1`, `H2` on a window of orbit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSeries {
    pub start: usize,
    pub h: [Vec<Vec3>; 3],
    /// Norm of the double cross product before normalization.
    pub conditioning: Vec<f64>,
}

impl BundleSeries {
    pub fn len(&self) -> usize {
        self.conditioning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditioning.is_empty()
    }

    pub fn indices(&self) -> Range<usize> {
        self.start..self.start + self.len()
    }

    /// Bundle `i` at orbit index `k`.
    pub fn at(&self, i: usize, k: usize) -> Vec3 {
        self.h[i][k - self.start]
    }
}

/// Direction of the line where the planes `span(a, b)` and `span(c, d)` meet,
/// and the conditioning of that intersection.
pub fn plane_intersection(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> (Vec3, f64) {
    let line = a.cross(b).cross(&c.cross(d));
    let cond = line.norm();
    (line / cond, cond)
}

fn align(v: Vec3, prev: Option<&Vec3>) -> Vec3 {
    match prev {
        Some(p) if v.dot(p) < 0.0 => -v,
        _ => v,
    }
}

pub fn bundles(frames: &FrameSeries, window: Range<usize>) -> Result<BundleSeries> {
    if window.end > frames.len() || window.is_empty() {
        return Err(Error::DegenerateInput("bundle window outside the frame series"));
    }
    let len = window.len();
    let mut h = [
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
    ];
    let mut conditioning = Vec::with_capacity(len);
    for k in window.clone() {
        let (u, v) = (&frames.forward.first[k], &frames.forward.second[k]);
        let (ut, vt) = (&frames.backward.first[k], &frames.backward.second[k]);
        let (mid, cond) = plane_intersection(u, v, ut, vt);
        if !(cond >= INTERSECTION_THRESHOLD) {
            return Err(Error::IntersectionDegenerate {
                index: k,
                conditioning: cond,
            });
        }
        for (i, dir) in [*u, mid, *ut].into_iter().enumerate() {
            let aligned = align(dir, h[i].last());
            h[i].push(aligned);
        }
        conditioning.push(cond);
    }
    Ok(BundleSeries {
        start: window.start,
        h,
        conditioning,
    })
}

/// Weighted Birkhoff average of `log |A_k h_i(k)|` over the bundle window.
pub fn lyapunov_exponent<C: Cocycle + ?Sized>(cocycle: &C, bundles: &BundleSeries, i: usize) -> Result<f64> {
    let logs = bundles
        .indices()
        .map(|k| cocycle.apply(k, &bundles.at(i, k)).norm().ln());
    wba::average_iter(logs, bundles.len())
}

pub fn lyapunov_exponents<C: Cocycle + ?Sized>(cocycle: &C, bundles: &BundleSeries) -> Result<[f64; 3]> {
    Ok([
        lyapunov_exponent(cocycle, bundles, 0)?,
        lyapunov_exponent(cocycle, bundles, 1)?,
        lyapunov_exponent(cocycle, bundles, 2)?,
    ])
}

/// Complete reducibility: the two normal exponents are distinct. Returns the
/// verdict and the number of distinct bundles.
pub fn reducibility_check(lambda1: f64, lambda2: f64, tol: f64) -> (bool, usize) {
    let reducible = lambda1 - lambda2 > tol;
    (reducible, if reducible { 3 } else { 2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovResult {
    /// Exponents of `H0`, `H1`, `H2`.
    pub exponents: [f64; 3],
    pub reducible: bool,
    pub tolerance: f64,
}

impl LyapunovResult {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    pub fn sorted(&self) -> [f64; 3] {
        let mut e = self.exponents;
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }
}

/// Pairs in the order used by every angle array: (0,1), (0,2), (1,2).
pub const ANGLE_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Unsigned angle between two lines, in `[0, π/2]`.
pub fn line_angle(a: &Vec3, b: &Vec3) -> f64 {
    // atan2 keeps full relative accuracy for nearly parallel lines.
    a.cross(b).norm().atan2(a.dot(b).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries {
    pub series: [Vec<f64>; 3],
    pub minima: [f64; 3],
}

pub fn min_angles(bundles: &BundleSeries) -> AngleSeries {
    let series = ANGLE_PAIRS.map(|(i, j)| {
        bundles.h[i]
            .iter()
            .zip(&bundles.h[j])
            .map(|(a, b)| line_angle(a, b))
            .collect::<Vec<f64>>()
    });
    let minima = [0, 1, 2].map(|p| series[p].iter().copied().fold(f64::INFINITY, f64::min));
    AngleSeries { series, minima }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TangentConfig {
    /// Indices dropped at the start while forward frames converge.
    pub warmup: usize,
    /// Averaging window length.
    pub window: usize,
    /// Indices dropped at the end while backward frames converge.
    pub cooldown: usize,
    /// Exponents closer than this count as coinciding.
    pub coincidence_tol: f64,
}

impl Default for TangentConfig {
    fn default() -> Self {
        Self {
            warmup: 1_000,
            window: 100_000,
            cooldown: 1_000,
            coincidence_tol: 1e-3,
        }
    }
}

impl TangentConfig {
    pub fn orbit_len(&self) -> usize {
        self.warmup + self.window + self.cooldown
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(Error::Config("tangent window must hold at least 3 indices".into()));
        }
        if !(self.coincidence_tol > 0.0) {
            return Err(Error::Config("coincidence tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentAnalysis {
    pub bundles: BundleSeries,
    pub lyapunov: LyapunovResult,
    pub angles: AngleSeries,
}

impl TangentAnalysis {
    /// Minimal angles with the (1,2) entry set to 0 when the normal bundles
    /// are not distinguished.
    pub fn reported_min_angles(&self) -> [f64; 3] {
        let mut m = self.angles.minima;
        if !self.lyapunov.reducible {
            m[2] = 0.0;
        }
        m
    }
}

/// Frames, bundles, exponents and angles for a cocycle of length at least
/// `cfg.orbit_len()`; the window is `[warmup, warmup + window)`.
pub fn analyze<C: Cocycle + ?Sized>(cocycle: &C, cfg: &TangentConfig, init: [Vec3; 4]) -> Result<TangentAnalysis> {
    cfg.validate()?;
    if cocycle.len() < cfg.orbit_len() {
        return Err(Error::SequenceTooShort {
            len: cocycle.len(),
            delay: cfg.orbit_len(),
        });
    }
    let frames = frames(cocycle, init)?;
    let bundles = bundles(&frames, cfg.warmup..cfg.warmup + cfg.window)?;
    let exponents = lyapunov_exponents(cocycle, &bundles)?;
    let (reducible, _) = reducibility_check(exponents[1], exponents[2], cfg.coincidence_tol);
    let angles = min_angles(&bundles);
    Ok(TangentAnalysis {
        bundles,
        lyapunov: LyapunovResult {
            exponents,
            reducible,
            tolerance: cfg.coincidence_tol,
        },
        angles,
    })
}

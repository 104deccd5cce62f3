//! Rotation numbers of invariant circles from a single orbit.
//!
//! The orbit is projected to a plane, angle increments around a center point
//! are measured modulo 1, and the missing integer parts are recovered by
//! continuity: an increment must be within 1/2 of the increment at the
//! nearest earlier point of the delay-embedded orbit. The weighted Birkhoff
//! average of the unwrapped increments is the rotation number (for winding
//! number 1 around the center).

mod nn;

use nalgebra::{Complex, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::State;
use crate::wba;

use nn::IncrementalGrid;

/// Planar coordinate, real part along the first basis vector.
pub type Planar = Complex<f64>;

const TIE_TOLERANCE: f64 = 1e-12;
const MIN_PROJECTION_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    /// Delay count `L` of the embedding.
    pub delay: usize,
    /// The projection plane is oriented so that its normal has a positive
    /// component along this direction; this fixes `ρ` versus `1 - ρ`.
    pub orientation: [f64; 3],
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            delay: 3,
            orientation: [1.0, 1.0, 1.0],
        }
    }
}

impl RotationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delay < 2 {
            return Err(Error::Config("delay embedding needs L >= 2".into()));
        }
        let o = Vector3::from(self.orientation);
        if !(o.norm() > 0.0) {
            return Err(Error::Config("orientation reference must be a non-zero vector".into()));
        }
        Ok(())
    }
}

/// An orbit expressed in an oriented plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarOrbit {
    pub points: Vec<Planar>,
    pub center: Planar,
    pub origin: State,
    pub basis: [Vector3<f64>; 2],
}

impl PlanarOrbit {
    /// Wraps planar data directly, with the identity embedding of the plane.
    pub fn from_planar(points: Vec<Planar>, center: Planar) -> Self {
        Self {
            points,
            center,
            origin: State::zeros(),
            basis: [Vector3::x(), Vector3::y()],
        }
    }

    pub fn min_center_distance(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p - self.center).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies `z ↦ conj(z)` about the center (orientation reversal).
    pub fn conjugated(&self) -> Self {
        let c = self.center;
        Self {
            points: self.points.iter().map(|p| (p - c).conj() + c).collect(),
            center: c,
            origin: self.origin,
            basis: [self.basis[0], -self.basis[1]],
        }
    }

    /// Rotates every point about the center by `angle` radians.
    pub fn rotated(&self, angle: f64) -> Self {
        let c = self.center;
        let r = Complex::from_polar(1.0, angle);
        Self {
            points: self.points.iter().map(|p| (p - c) * r + c).collect(),
            ..self.clone()
        }
    }
}

fn oriented_principal_plane(points: &[State], orientation: &Vector3<f64>) -> Result<(State, [Vector3<f64>; 2])> {
    let n = points.len() as f64;
    let mean = points.iter().fold(State::zeros(), |acc, p| acc + p) / n;
    let cov = points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - mean;
        acc + d * d.transpose()
    }) / n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let ev = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    let scale = 1e-10 * mean.norm().max(1.0);
    if !(ev[0].max(0.0).sqrt() > scale) || !(ev[1] > 1e-12 * ev[0]) {
        return Err(Error::DegenerateProjection { eigenvalues: ev });
    }
    let e1: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    let mut e2: Vector3<f64> = eig.eigenvectors.column(order[1]).into_owned();
    let normal = e1.cross(&e2);
    let mut side = normal.dot(orientation);
    // The reference can be (nearly) in the plane; fall back to the axes.
    for fallback in [Vector3::x(), Vector3::y(), Vector3::z()] {
        if side.abs() > 1e-12 * orientation.norm() {
            break;
        }
        side = normal.dot(&fallback);
    }
    if side < 0.0 {
        e2 = -e2;
    }
    Ok((mean, [e1, e2]))
}

/// Projects onto the plane of the two leading principal directions, centered
/// on the orbit mean; the center `P` is the origin of that plane.
pub fn project_orbit(points: &[State], cfg: &RotationConfig) -> Result<PlanarOrbit> {
    if points.len() < MIN_PROJECTION_POINTS {
        return Err(Error::DegenerateInput("projection needs at least 10 orbit points"));
    }
    let (origin, basis) = oriented_principal_plane(points, &Vector3::from(cfg.orientation))?;
    let planar = points
        .iter()
        .map(|p| {
            let d = p - origin;
            Complex::new(d.dot(&basis[0]), d.dot(&basis[1]))
        })
        .collect();
    Ok(PlanarOrbit {
        points: planar,
        center: Complex::new(0.0, 0.0),
        origin,
        basis,
    })
}

#[inline]
fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Angle increments `Δ*_k ∈ [0, 1)` (in turns) of consecutive points about
/// the center.
pub fn raw_deltas(po: &PlanarOrbit) -> Result<Vec<f64>> {
    let rel: Vec<Planar> = po.points.iter().map(|p| p - po.center).collect();
    if let Some(index) = rel.iter().position(|p| p.norm() == 0.0) {
        return Err(Error::UndefinedAngle { index });
    }
    Ok(rel
        .windows(2)
        .map(|w| frac((w[1] * w[0].conj()).arg() / std::f64::consts::TAU))
        .collect())
}

/// Delay vectors `Γ_k = (γ_k, …, γ_{k+L-1})` flattened to `2L` reals each.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayEmbedding {
    pub delay: usize,
    coords: Vec<f64>,
}

impl DelayEmbedding {
    pub fn dim(&self) -> usize {
        2 * self.delay
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim()..(k + 1) * self.dim()]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

pub fn delay_embed(po: &PlanarOrbit, delay: usize) -> Result<DelayEmbedding> {
    if delay < 2 {
        return Err(Error::DegenerateInput("delay embedding needs L >= 2"));
    }
    let n = po.points.len();
    if n <= delay {
        return Err(Error::SequenceTooShort { len: n, delay });
    }
    let count = n - delay + 1;
    let mut coords = Vec::with_capacity(count * 2 * delay);
    for k in 0..count {
        for p in &po.points[k..k + delay] {
            coords.push(p.re);
            coords.push(p.im);
        }
    }
    Ok(DelayEmbedding { delay, coords })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnwrappedDeltas {
    pub raw: Vec<f64>,
    pub unwrapped: Vec<f64>,
    pub offsets: Vec<i64>,
    /// Nearest earlier embedded neighbour used for each index (none for 0).
    pub neighbors: Vec<Option<usize>>,
    /// Largest nearest-neighbour distance in the embedding.
    pub max_neighbor_distance: f64,
}

impl UnwrappedDeltas {
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .unwrapped
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            });
        hi - lo
    }

    /// Adds `shift` to every offset, as if the root offset had been `shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        let offsets: Vec<i64> = self.offsets.iter().map(|o| o + shift).collect();
        let unwrapped = self.raw.iter().zip(&offsets).map(|(r, &o)| r + o as f64).collect();
        Self {
            raw: self.raw.clone(),
            unwrapped,
            offsets,
            neighbors: self.neighbors.clone(),
            max_neighbor_distance: self.max_neighbor_distance,
        }
    }
}

/// Lifts `raw` increments to reals so that each differs by at most 1/2 from
/// the increment at its nearest earlier neighbour in `embedding`.
pub fn unwrap_deltas(raw: &[f64], embedding: &DelayEmbedding) -> Result<UnwrappedDeltas> {
    if embedding.len() < raw.len() {
        return Err(Error::SequenceTooShort {
            len: embedding.len(),
            delay: embedding.delay,
        });
    }
    let n = raw.len();
    let mut unwrapped: Vec<f64> = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    let mut neighbors = Vec::with_capacity(n);
    let mut max_neighbor_distance: f64 = 0.0;
    let mut grid = IncrementalGrid::new(&embedding.coords()[..n * embedding.dim()], embedding.dim());
    for (k, &r) in raw.iter().enumerate() {
        let offset = match grid.nearest(k) {
            None => {
                neighbors.push(None);
                0
            }
            Some((m, dist)) => {
                neighbors.push(Some(m));
                max_neighbor_distance = max_neighbor_distance.max(dist);
                let diff = unwrapped[m] - r;
                let f = diff - diff.floor();
                if (f - 0.5).abs() < TIE_TOLERANCE {
                    return Err(Error::AmbiguousUnwrap { index: k });
                }
                diff.round() as i64
            }
        };
        offsets.push(offset);
        unwrapped.push(r + offset as f64);
        grid.insert_next();
    }
    Ok(UnwrappedDeltas {
        raw: raw.to_vec(),
        unwrapped,
        offsets,
        neighbors,
        max_neighbor_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationDiagnostics {
    /// Number of increments entering the weighted average.
    pub n_deltas: usize,
    pub max_neighbor_distance: f64,
    /// `max Δ_k - min Δ_k`; values of 1 or more point to a bad lift.
    pub delta_spread: f64,
    pub min_center_distance: f64,
    /// Weighted average before reduction modulo 1.
    pub lifted_average: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationResult {
    pub rho: f64,
    pub winding_assumed: i64,
    pub diagnostics: RotationDiagnostics,
}

/// Rotation number of a planar orbit assumed to wind once around its center.
pub fn rotation_number_planar(po: &PlanarOrbit, delay: usize) -> Result<RotationResult> {
    let raw = raw_deltas(po)?;
    let embedding = delay_embed(po, delay)?;
    let count = raw.len().min(embedding.len());
    let deltas = unwrap_deltas(&raw[..count], &embedding)?;
    let lifted_average = wba::average_slice(&deltas.unwrapped)?;
    Ok(RotationResult {
        rho: frac(lifted_average),
        winding_assumed: 1,
        diagnostics: RotationDiagnostics {
            n_deltas: count,
            max_neighbor_distance: deltas.max_neighbor_distance,
            delta_spread: deltas.spread(),
            min_center_distance: po.min_center_distance(),
            lifted_average,
        },
    })
}

pub fn rotation_number(points: &[State], cfg: &RotationConfig) -> Result<RotationResult> {
    cfg.validate()?;
    let po = project_orbit(points, cfg)?;
    rotation_number_planar(&po, cfg.delay)
}

/// Rotation number `m / p` of a periodic cycle lying on a circle, read off
/// from the cyclic order of its points around their centroid.
pub fn cycle_rotation(cycle: &[State], cfg: &RotationConfig) -> Result<(usize, usize)> {
    let p = cycle.len();
    match p {
        0 | 1 => return Err(Error::DegenerateInput("cycle rotation needs period >= 2")),
        2 => return Ok((1, 2)),
        _ => {}
    }
    let (origin, basis) = oriented_principal_plane(cycle, &Vector3::from(cfg.orientation))?;
    let angles: Vec<f64> = cycle
        .iter()
        .map(|s| {
            let d = s - origin;
            d.dot(&basis[1]).atan2(d.dot(&basis[0]))
        })
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]));
    let mut rank = vec![0usize; p];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let step = |k: usize| (rank[(k + 1) % p] + p - rank[k]) % p;
    let m = step(0);
    if (1..p).any(|k| step(k) != m) {
        return Err(Error::DegenerateInput(
            "periodic cycle is not cyclically ordered about its centroid",
        ));
    }
    Ok((m, p))
}

/// Samples of the conjugacy to the rigid rotation: `(frac(k ρ), x_k)`
/// sorted by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacySamples {
    pub samples: Vec<(f64, State)>,
}

impl ConjugacySamples {
    /// Piecewise-linear interpolation at `theta`, periodic in `theta`.
    pub fn interpolate(&self, theta: f64) -> State {
        let s = &self.samples;
        let t = frac(theta);
        let idx = s.partition_point(|(th, _)| *th <= t);
        let (t0, x0, t1, x1) = if idx == 0 {
            let (tl, xl) = s[s.len() - 1];
            (tl - 1.0, xl, s[0].0, s[0].1)
        } else if idx == s.len() {
            let (tl, xl) = s[s.len() - 1];
            (tl, xl, s[0].0 + 1.0, s[0].1)
        } else {
            (s[idx - 1].0, s[idx - 1].1, s[idx].0, s[idx].1)
        };
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        x0 + (x1 - x0) * w
    }
}

pub fn build_conjugacy(points: &[State], rho: f64) -> Result<ConjugacySamples> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::DegenerateInput("conjugacy needs a rotation number in (0, 1)"));
    }
    let mut samples: Vec<(f64, State)> = points
        .iter()
        .enumerate()
        .map(|(k, p)| (frac(k as f64 * rho), *p))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ConjugacySamples { samples })
}

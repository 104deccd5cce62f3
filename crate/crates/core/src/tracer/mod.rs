//! Tracing contours of constant rotation number in the `(M1, M2)` plane.
//!
//! Along a segment crossing the contours, the rotation number is a devil's
//! staircase; false position on the segment gives a first contour point.
//! From there each new point is bracketed on a small circle around the last
//! one and refined by false position along the chord between the two
//! bracketing samples. When a step fails the circle shrinks; the trace ends
//! once the radius falls below a floor, which near the end of a contour
//! signals breakdown of the invariant circle.

mod circle;
mod fpm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{MapParams, State};
use crate::orbit::{classify_points, iterate_orbit, seed_lattice, ClassifyConfig, Orbit, PeriodClass};
use crate::par;
use crate::rotnum::{cycle_rotation, rotation_number, RotationConfig, RotationResult};
use crate::tangent::{self, HenonCocycle, TangentConfig};

pub use circle::{circle_bracket_search, ArcSample, CircleBracket, CircleSearch};
pub use fpm::{fpm_solve, FpmConfig, FpmResult, FpmStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub m1: f64,
    pub m2: f64,
}

impl ParamPoint {
    pub fn new(m1: f64, m2: f64) -> Self {
        Self { m1, m2 }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.m1 - other.m1).hypot(self.m2 - other.m2)
    }

    /// The point at `radius` from `self` in direction `angle`.
    pub fn offset(&self, radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(self.m1 + radius * c, self.m2 + radius * s)
    }

    /// Direction of `other - self`, radians.
    pub fn heading(&self, other: &Self) -> f64 {
        (other.m2 - self.m2).atan2(other.m1 - self.m1)
    }

    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self::new(self.m1 + t * (other.m1 - self.m1), self.m2 + t * (other.m2 - self.m2))
    }

    pub fn is_finite(&self) -> bool {
        self.m1.is_finite() && self.m2.is_finite()
    }
}

/// A scalar function of parameters with the rotation number's role.
pub trait RotationField: Sync {
    fn rho(&self, p: ParamPoint) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoEvalConfig {
    pub n_transient: usize,
    /// Orbit points entering the rotation number.
    pub n: usize,
    pub embedding: RotationConfig,
    /// Recurrence tolerance, period cap and window for spotting cycles.
    pub classify: ClassifyConfig,
    /// Unwrapped increments spreading over this many turns or more reject
    /// the result.
    pub max_delta_spread: f64,
    /// Seed lattice points per axis and half-width, tried after the
    /// perturbed fixed points.
    pub lattice_per_axis: usize,
    pub lattice_extent: f64,
}

impl Default for RhoEvalConfig {
    fn default() -> Self {
        Self {
            n_transient: 10_000,
            n: 100_000,
            embedding: RotationConfig::default(),
            classify: ClassifyConfig::default(),
            max_delta_spread: 1.0,
            lattice_per_axis: 3,
            lattice_extent: 1.5,
        }
    }
}

impl RhoEvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        if self.n < self.classify.window + self.classify.p_max {
            return Err(Error::Config(
                "rotation-number budget n is shorter than the classification window".into(),
            ));
        }
        if self.lattice_per_axis == 0 {
            return Err(Error::Config("seed lattice needs at least one point per axis".into()));
        }
        Ok(())
    }
}

/// What one parameter point settles on.
#[derive(Debug, Clone, PartialEq)]
pub enum Attractor {
    /// An orbit that is not periodic, presumably on an invariant circle.
    Quasiperiodic(Orbit),
    /// A cycle of period at least 2, with its rotation `m / p`.
    Cycle { points: Vec<State>, numerator: usize },
}

/// The map pipeline: attractor search, then the rotation number.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRhoField {
    pub b: f64,
    pub cfg: RhoEvalConfig,
}

impl MapRhoField {
    pub fn new(b: f64, cfg: RhoEvalConfig) -> Result<Self> {
        MapParams::new(b, 0.0, 0.0)?;
        cfg.validate()?;
        Ok(Self { b, cfg })
    }

    pub fn params(&self, p: ParamPoint) -> Result<MapParams> {
        MapParams::new(self.b, p.m1, p.m2)
    }

    /// Seeds near each real fixed point, then the lattice.
    pub fn seeds(&self, params: &MapParams) -> Vec<State> {
        let mut seeds: Vec<State> = params
            .fixed_points()
            .into_iter()
            .map(|f| f + State::new(0.01, 0.01, 0.0))
            .collect();
        seeds.extend(seed_lattice(self.cfg.lattice_per_axis, self.cfg.lattice_extent));
        seeds
    }

    /// First non-escaping, non-stationary attractor over the seeds, with an
    /// orbit of `n_keep` points after the transient.
    pub fn attractor_with(&self, p: ParamPoint, n_keep: usize) -> Result<Attractor> {
        let params = self.params(p)?;
        let mut saw_fixed_point = false;
        for seed in self.seeds(&params) {
            let Ok(orbit) = iterate_orbit(&params, seed, self.cfg.n_transient, n_keep) else {
                continue;
            };
            match classify_points(&orbit.points, &self.cfg.classify) {
                PeriodClass::FixedPoint => saw_fixed_point = true,
                PeriodClass::Periodic(period) => {
                    let points = orbit.points[orbit.len() - period..].to_vec();
                    let (numerator, _) = cycle_rotation(&points, &self.cfg.embedding)?;
                    return Ok(Attractor::Cycle { points, numerator });
                }
                PeriodClass::Aperiodic => return Ok(Attractor::Quasiperiodic(orbit)),
                PeriodClass::Escaped => {}
            }
        }
        Err(if saw_fixed_point {
            Error::NoCircle
        } else {
            Error::NoAttractor
        })
    }

    pub fn attractor(&self, p: ParamPoint) -> Result<Attractor> {
        self.attractor_with(p, self.cfg.n)
    }

    /// Rotation number of a quasiperiodic attractor; cycles are reported as
    /// [`Error::PeriodicAttractor`].
    pub fn rotation(&self, p: ParamPoint) -> Result<RotationResult> {
        match self.attractor(p)? {
            Attractor::Quasiperiodic(orbit) => self.orbit_rotation(&orbit),
            Attractor::Cycle { points, numerator } => Err(Error::PeriodicAttractor {
                period: points.len(),
                numerator,
            }),
        }
    }

    fn orbit_rotation(&self, orbit: &Orbit) -> Result<RotationResult> {
        let res = rotation_number(&orbit.points, &self.cfg.embedding)?;
        if !(res.diagnostics.delta_spread < self.cfg.max_delta_spread) {
            return Err(Error::UnreliableLift {
                spread: res.diagnostics.delta_spread,
            });
        }
        Ok(res)
    }
}

impl RotationField for MapRhoField {
    /// Cycles count as staircase plateaus with value `m / p`.
    fn rho(&self, p: ParamPoint) -> Result<f64> {
        match self.attractor(p)? {
            Attractor::Quasiperiodic(orbit) => Ok(self.orbit_rotation(&orbit)?.rho),
            Attractor::Cycle { points, numerator } => Ok(numerator as f64 / points.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub target: f64,
    pub radius: f64,
    /// Angular step of the circle search, degrees.
    pub angular_step_deg: f64,
    pub shrink: f64,
    pub min_radius: f64,
    /// A point joins the contour only if `|rho - target|` is at most this.
    pub accept_tol: f64,
    pub fpm: FpmConfig,
    /// Direction `(dM1, dM2)` of the first continuation step.
    pub initial_direction: [f64; 2],
    /// Cap on accepted points, the seed point included.
    pub max_points: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            target: (5f64.sqrt() - 1.0) / 2.0,
            radius: 1e-3,
            angular_step_deg: 10.0,
            shrink: 0.5,
            min_radius: 1e-6,
            accept_tol: 1e-9,
            fpm: FpmConfig::default(),
            initial_direction: [1.0, 0.0],
            max_points: 10_000,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if !(self.min_radius > 0.0 && self.radius >= self.min_radius) {
            return bad("radii must satisfy 0 < min_radius <= radius");
        }
        if !(self.angular_step_deg > 0.0 && self.angular_step_deg < 90.0) {
            return bad("angular step must lie in (0, 90) degrees");
        }
        if !(self.accept_tol > 0.0) || !self.target.is_finite() {
            return bad("accept tolerance must be positive and the target finite");
        }
        let [dx, dy] = self.initial_direction;
        if !(dx.hypot(dy) > 0.0) {
            return bad("initial direction must be non-zero");
        }
        if self.max_points == 0 {
            return bad("max_points must be at least 1");
        }
        self.fpm.validate()
    }

    fn step_radians(&self) -> f64 {
        self.angular_step_deg.to_radians()
    }
}

/// Exponents and minimal bundle angles at one contour point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointAnalysis {
    pub exponents: [f64; 3],
    pub reducible: bool,
    /// Pairs (0,1), (0,2), (1,2); (1,2) is 0 when not reducible.
    pub min_angles: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourPoint {
    pub index: usize,
    pub point: ParamPoint,
    pub rho: f64,
    /// `rho - target`.
    pub residual: f64,
    pub radius_used: f64,
    pub analysis: Option<PointAnalysis>,
}

/// Everything needed to continue a trace: the last two accepted points and
/// the radius that produced the last one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceState {
    pub previous: Option<ParamPoint>,
    pub current: ParamPoint,
    pub radius: f64,
    pub next_index: usize,
}

impl TraceState {
    /// State after the given accepted points (in order).
    pub fn from_points(points: &[ContourPoint]) -> Option<Self> {
        let last = points.last()?;
        Some(Self {
            previous: points.len().checked_sub(2).map(|i| points[i].point),
            current: last.point,
            radius: last.radius_used,
            next_index: last.index + 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    /// The radius fell below the floor.
    ShrinkOut {
        radius: f64,
    },
    StepBudget,
    /// The point sink asked to stop.
    Stopped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFailure {
    pub center: ParamPoint,
    pub radius: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOutcome {
    pub points: Vec<ContourPoint>,
    pub failures: Vec<TraceFailure>,
    pub termination: Termination,
    pub state: TraceState,
}

fn accept(cfg: &TraceConfig, index: usize, point: ParamPoint, rho: f64, radius: f64) -> Result<ContourPoint> {
    let residual = rho - cfg.target;
    if !(residual.abs() <= cfg.accept_tol) {
        return Err(Error::ResidualTooLarge { residual });
    }
    Ok(ContourPoint {
        index,
        point,
        rho,
        residual,
        radius_used: radius,
        analysis: None,
    })
}

/// Solves `rho = target` on the segment `a → b`.
pub fn solve_on_segment<F: RotationField + ?Sized>(
    field: &F,
    a: ParamPoint,
    b: ParamPoint,
    cfg: &TraceConfig,
) -> Result<(ParamPoint, f64)> {
    let res = fpm_solve(|t| Ok(field.rho(a.lerp(&b, t))? - cfg.target), 0.0, 1.0, &cfg.fpm)?;
    let p = a.lerp(&b, res.root);
    Ok((p, res.value + cfg.target))
}

/// The first contour point, on the seed segment.
pub fn seed_point<F: RotationField + ?Sized>(
    field: &F,
    seed: [ParamPoint; 2],
    cfg: &TraceConfig,
) -> Result<ContourPoint> {
    cfg.validate()?;
    let (p, rho) = solve_on_segment(field, seed[0], seed[1], cfg)?;
    accept(cfg, 0, p, rho, cfg.radius)
}

fn continuation_step<F: RotationField + ?Sized>(
    field: &F,
    state: &TraceState,
    cfg: &TraceConfig,
) -> Result<ContourPoint> {
    let direction = match state.previous {
        Some(prev) => prev.heading(&state.current),
        None => cfg.initial_direction[1].atan2(cfg.initial_direction[0]),
    };
    let search = CircleSearch {
        center: state.current,
        radius: state.radius,
        direction,
        step: cfg.step_radians(),
        target: cfg.target,
    };
    let bracket = circle_bracket_search(field, &search)?;
    for s in &bracket.skipped {
        if let Err(e) = &s.deviation {
            log::debug!("circle sample at ({}, {}) failed: {e}", s.point.m1, s.point.m2);
        }
    }
    let (p, rho) = solve_on_segment(field, bracket.first.point, bracket.second.point, cfg)?;
    accept(cfg, state.next_index, p, rho, state.radius)
}

/// Continues a trace from `state`, handing each accepted point to `sink`
/// as it is found; `sink` returns `false` to stop.
pub fn continue_trace<F, S>(field: &F, mut state: TraceState, cfg: &TraceConfig, mut sink: S) -> Result<TraceOutcome>
where
    F: RotationField + ?Sized,
    S: FnMut(&ContourPoint) -> bool,
{
    cfg.validate()?;
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let termination = loop {
        if state.next_index >= cfg.max_points {
            break Termination::StepBudget;
        }
        if state.radius < cfg.min_radius {
            break Termination::ShrinkOut { radius: state.radius };
        }
        match continuation_step(field, &state, cfg) {
            Ok(cp) => {
                log::info!(
                    "contour point {} at ({:.12}, {:.12}), residual {:.2e}, radius {:.3e}",
                    cp.index,
                    cp.point.m1,
                    cp.point.m2,
                    cp.residual,
                    cp.radius_used
                );
                state = TraceState {
                    previous: Some(state.current),
                    current: cp.point,
                    radius: state.radius,
                    next_index: cp.index + 1,
                };
                let go_on = sink(&cp);
                points.push(cp);
                if !go_on {
                    break Termination::Stopped;
                }
            }
            Err(error) => {
                log::info!(
                    "step from ({:.12}, {:.12}) at radius {:.3e} failed: {error}",
                    state.current.m1,
                    state.current.m2,
                    state.radius
                );
                failures.push(TraceFailure {
                    center: state.current,
                    radius: state.radius,
                    error,
                });
                state.radius *= cfg.shrink;
            }
        }
    };
    Ok(TraceOutcome {
        points,
        failures,
        termination,
        state,
    })
}

/// Seeds on `seed` and traces until shrink-out or the point budget.
pub fn trace_contour<F, S>(field: &F, seed: [ParamPoint; 2], cfg: &TraceConfig, mut sink: S) -> Result<TraceOutcome>
where
    F: RotationField + ?Sized,
    S: FnMut(&ContourPoint) -> bool,
{
    let first = seed_point(field, seed, cfg)?;
    let state = TraceState::from_points(std::slice::from_ref(&first)).expect("one point");
    if !sink(&first) {
        return Ok(TraceOutcome {
            points: vec![first],
            failures: Vec::new(),
            termination: Termination::Stopped,
            state,
        });
    }
    let mut out = continue_trace(field, state, cfg, sink)?;
    out.points.insert(0, first);
    Ok(out)
}

/// Tangent analysis of the quasiperiodic attractor at one parameter point.
pub fn analyze_point(
    field: &MapRhoField,
    p: ParamPoint,
    tangent_cfg: &TangentConfig,
    frame_seed: u64,
) -> Result<(Orbit, tangent::TangentAnalysis)> {
    let orbit = match field.attractor_with(p, tangent_cfg.orbit_len())? {
        Attractor::Quasiperiodic(orbit) => orbit,
        Attractor::Cycle { points, numerator } => {
            return Err(Error::PeriodicAttractor {
                period: points.len(),
                numerator,
            })
        }
    };
    let cocycle = HenonCocycle::new(&orbit.params, &orbit.points);
    let analysis = tangent::analyze(&cocycle, tangent_cfg, tangent::jittered_initial_frames(frame_seed))?;
    Ok((orbit, analysis))
}

fn summarize(analysis: &tangent::TangentAnalysis) -> PointAnalysis {
    PointAnalysis {
        exponents: analysis.lyapunov.exponents,
        reducible: analysis.lyapunov.reducible,
        min_angles: analysis.reported_min_angles(),
    }
}

/// Attaches exponents and bundle angles to each point; a failing point
/// keeps `analysis: None` and its error is returned alongside.
pub fn analyze_contour(
    field: &MapRhoField,
    points: &[ContourPoint],
    tangent_cfg: &TangentConfig,
    frame_seed: u64,
) -> Vec<(ContourPoint, Option<Error>)> {
    par::map(points, |cp| enrich(field, cp, tangent_cfg, frame_seed))
}

pub fn analyze_contour_sequential(
    field: &MapRhoField,
    points: &[ContourPoint],
    tangent_cfg: &TangentConfig,
    frame_seed: u64,
) -> Vec<(ContourPoint, Option<Error>)> {
    points
        .iter()
        .map(|cp| enrich(field, cp, tangent_cfg, frame_seed))
        .collect()
}

fn enrich(
    field: &MapRhoField,
    cp: &ContourPoint,
    tangent_cfg: &TangentConfig,
    frame_seed: u64,
) -> (ContourPoint, Option<Error>) {
    let mut out = cp.clone();
    match analyze_point(field, cp.point, tangent_cfg, frame_seed) {
        Ok((_, analysis)) => {
            out.analysis = Some(summarize(&analysis));
            (out, None)
        }
        Err(e) => {
            log::warn!("analysis of contour point {} failed: {e}", cp.index);
            (out, Some(e))
        }
    }
}

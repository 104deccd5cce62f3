//! Attractor discovery by forward iteration, recurrence-based period
//! classification and parameter-grid scans (period maps).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{MapParams, State, ESCAPE_NORM};
use crate::par;

/// A finite trajectory after discarding a transient.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub params: MapParams,
    pub seed: State,
    pub n_transient: usize,
    pub points: Vec<State>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|x_{k+1} - F(x_k)|` over the given indices.
    pub fn consistency_residual(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices
            .into_iter()
            .filter(|&k| k + 1 < self.points.len())
            .map(|k| (self.points[k + 1] - self.params.apply(&self.points[k])).norm())
            .fold(0.0, f64::max)
    }
}

/// The orbit left the ball of radius [`ESCAPE_NORM`] (or overflowed) at
/// iterate `iterate`, counted from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Escaped {
    pub iterate: usize,
}

#[inline]
pub(crate) fn escaped(s: &State) -> bool {
    !(s.norm_squared() <= ESCAPE_NORM * ESCAPE_NORM)
}

pub fn iterate_orbit(
    params: &MapParams,
    seed: State,
    n_transient: usize,
    n_keep: usize,
) -> std::result::Result<Orbit, Escaped> {
    let mut s = seed;
    if escaped(&s) {
        return Err(Escaped { iterate: 0 });
    }
    for i in 0..n_transient {
        s = params.apply(&s);
        if escaped(&s) {
            return Err(Escaped { iterate: i + 1 });
        }
    }
    let mut points = Vec::with_capacity(n_keep);
    for i in 0..n_keep {
        s = params.apply(&s);
        if escaped(&s) {
            return Err(Escaped {
                iterate: n_transient + i + 1,
            });
        }
        points.push(s);
    }
    Ok(Orbit {
        params: *params,
        seed,
        n_transient,
        points,
    })
}

/// Period-map classification of the attractor reached from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeriodClass {
    FixedPoint,
    Periodic(usize),
    Aperiodic,
    Escaped,
}

impl PeriodClass {
    fn rank(&self) -> (u8, usize) {
        match *self {
            PeriodClass::FixedPoint => (0, 1),
            PeriodClass::Periodic(p) => (0, p),
            PeriodClass::Aperiodic => (1, 0),
            PeriodClass::Escaped => (2, 0),
        }
    }

    /// CSV code: 0 escaped, 1 fixed point, `p` for period `p`, -1 aperiodic.
    pub fn code(&self) -> i64 {
        match *self {
            PeriodClass::Escaped => 0,
            PeriodClass::FixedPoint => 1,
            PeriodClass::Periodic(p) => p as i64,
            PeriodClass::Aperiodic => -1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(PeriodClass::Escaped),
            1 => Some(PeriodClass::FixedPoint),
            -1 => Some(PeriodClass::Aperiodic),
            p if p >= 2 => Some(PeriodClass::Periodic(p as usize)),
            _ => None,
        }
    }

    fn from_period(p: usize) -> Self {
        if p == 1 {
            PeriodClass::FixedPoint
        } else {
            PeriodClass::Periodic(p)
        }
    }
}

impl Ord for PeriodClass {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for PeriodClass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PeriodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodClass::FixedPoint => write!(f, "fixed point"),
            PeriodClass::Periodic(p) => write!(f, "period {p}"),
            PeriodClass::Aperiodic => write!(f, "aperiodic"),
            PeriodClass::Escaped => write!(f, "escaped"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub n_transient: usize,
    pub n_keep: usize,
    /// Recurrence tolerance.
    pub eps: f64,
    pub p_max: usize,
    /// Number of consecutive indices that must all recur.
    pub window: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            n_transient: 10_000,
            n_keep: 10_000,
            eps: 1e-6,
            p_max: 100,
            window: 200,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_max < 1 || self.window < 1 {
            return Err(Error::Config("p_max and window must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("recurrence tolerance must be positive".into()));
        }
        if self.n_keep < self.window + self.p_max {
            return Err(Error::Config(format!(
                "n_keep ({}) must cover window + p_max ({})",
                self.n_keep,
                self.window + self.p_max
            )));
        }
        Ok(())
    }
}

/// Minimal `p <= p_max` such that `|x_{k+p} - x_k| < eps` for every `k` of a
/// `window`-long stretch at the end of `points`.
pub fn minimal_period(points: &[State], eps: f64, p_max: usize, window: usize) -> Option<usize> {
    let need = window + p_max;
    if points.len() < need {
        return None;
    }
    let seg = &points[points.len() - need..];
    (1..=p_max).find(|&p| (0..window).all(|k| (seg[k + p] - seg[k]).norm() < eps))
}

pub fn classify_points(points: &[State], cfg: &ClassifyConfig) -> PeriodClass {
    match minimal_period(points, cfg.eps, cfg.p_max, cfg.window) {
        Some(p) => PeriodClass::from_period(p),
        None => PeriodClass::Aperiodic,
    }
}

pub fn classify_attractor(params: &MapParams, seed: State, cfg: &ClassifyConfig) -> PeriodClass {
    match iterate_orbit(params, seed, cfg.n_transient, cfg.n_keep) {
        Ok(orbit) => classify_points(&orbit.points, cfg),
        Err(_) => PeriodClass::Escaped,
    }
}

/// `n^3` seeds on a uniform lattice over `[-extent, extent]^3`.
pub fn seed_lattice(n_per_axis: usize, extent: f64) -> Vec<State> {
    let coord = |i: usize| {
        if n_per_axis == 1 {
            0.0
        } else {
            -extent + 2.0 * extent * i as f64 / (n_per_axis - 1) as f64
        }
    };
    let mut seeds = Vec::with_capacity(n_per_axis.pow(3));
    for i in 0..n_per_axis {
        for j in 0..n_per_axis {
            for k in 0..n_per_axis {
                seeds.push(State::new(coord(i), coord(j), coord(k)));
            }
        }
    }
    seeds
}

pub fn default_seeds() -> Vec<State> {
    seed_lattice(3, 1.5)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive (`lo` alone if `n == 1`).
pub(crate) fn grid_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub b: f64,
    pub m1_range: (f64, f64),
    pub m2_range: (f64, f64),
    /// Grid nodes along (M1, M2).
    pub resolution: (usize, usize),
    pub seeds: Vec<State>,
    pub classify: ClassifyConfig,
}

impl ScanRequest {
    pub fn validate(&self) -> Result<()> {
        MapParams::new(self.b, 0.0, 0.0)?;
        if self.resolution.0 < 1 || self.resolution.1 < 1 {
            return Err(Error::Config("scan resolution must be at least 1 in each axis".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("scan needs at least one seed".into()));
        }
        self.classify.validate()
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        let m1s = grid_axis(self.m1_range.0, self.m1_range.1, self.resolution.0);
        let m2s = grid_axis(self.m2_range.0, self.m2_range.1, self.resolution.1);
        m2s.iter().flat_map(|&m2| m1s.iter().map(move |&m1| (m1, m2))).collect()
    }

    /// Tamest and wildest attractor reached from the seeds; escaping seeds
    /// find no attractor and count only when every seed escapes.
    fn scan_cell(&self, (m1, m2): (f64, f64)) -> ScanCell {
        let params = MapParams { b: self.b, m1, m2 };
        let mut bounds: Option<(PeriodClass, PeriodClass)> = None;
        for seed in &self.seeds {
            let class = classify_attractor(&params, *seed, &self.classify);
            if class == PeriodClass::Escaped {
                continue;
            }
            bounds = Some(match bounds {
                None => (class, class),
                Some((lo, hi)) => (lo.min(class), hi.max(class)),
            });
        }
        let (min, max) = bounds.unwrap_or((PeriodClass::Escaped, PeriodClass::Escaped));
        ScanCell { m1, m2, min, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanCell {
    pub m1: f64,
    pub m2: f64,
    pub min: PeriodClass,
    pub max: PeriodClass,
}

/// Period map over a parameter rectangle; cells are stored row by row with
/// M1 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub b: f64,
    pub resolution: (usize, usize),
    pub cells: Vec<ScanCell>,
}

/// Period map, cells distributed over the current worker pool.
pub fn scan_grid(req: &ScanRequest) -> Result<GridScan> {
    req.validate()?;
    let cells = par::map(&req.nodes(), |&node| req.scan_cell(node));
    Ok(GridScan {
        b: req.b,
        resolution: req.resolution,
        cells,
    })
}

/// Single-threaded [`scan_grid`]; produces identical cells.
pub fn scan_grid_sequential(req: &ScanRequest) -> Result<GridScan> {
    req.validate()?;
    let cells = req.nodes().into_iter().map(|node| req.scan_cell(node)).collect();
    Ok(GridScan {
        b: req.b,
        resolution: req.resolution,
        cells,
    })
}

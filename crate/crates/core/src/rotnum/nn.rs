//! Exact nearest neighbour among previously inserted delay vectors.
//!
//! Points are bucketed by their leading planar pair on a uniform grid whose
//! cell size shrinks as the point count doubles, so a query scans O(1)
//! rings on a curve. The planar distance is a lower bound for the full
//! embedded distance, which makes the ring search exact.

use rustc_hash::FxHashMap;

const BRUTE_FORCE_BELOW: usize = 16;
/// Cell edge in units of `extent / count`.
const CELL_FACTOR: f64 = 4.0;

pub(crate) struct IncrementalGrid<'a> {
    coords: &'a [f64],
    dim: usize,
    extent: f64,
    origin: (f64, f64),
    cell: f64,
    buckets: FxHashMap<(i64, i64), Vec<u32>>,
    /// Indices `0..inserted` are searchable.
    inserted: usize,
    next_rebuild: usize,
}

impl<'a> IncrementalGrid<'a> {
    /// `coords` holds all points, `dim` reals each; nothing is inserted yet.
    pub(crate) fn new(coords: &'a [f64], dim: usize) -> Self {
        let n = coords.len() / dim;
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for i in 0..n {
            let (x, y) = (coords[i * dim], coords[i * dim + 1]);
            lo_x = lo_x.min(x);
            hi_x = hi_x.max(x);
            lo_y = lo_y.min(y);
            hi_y = hi_y.max(y);
        }
        let extent = if n == 0 {
            1.0
        } else {
            (hi_x - lo_x).max(hi_y - lo_y).max(f64::MIN_POSITIVE)
        };
        Self {
            coords,
            dim,
            extent,
            origin: if n == 0 { (0.0, 0.0) } else { (lo_x, lo_y) },
            cell: extent,
            buckets: FxHashMap::default(),
            inserted: 0,
            next_rebuild: BRUTE_FORCE_BELOW,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn key(&self, i: usize) -> (i64, i64) {
        let p = self.point(i);
        (
            ((p[0] - self.origin.0) / self.cell).floor() as i64,
            ((p[1] - self.origin.1) / self.cell).floor() as i64,
        )
    }

    fn dist2(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    fn rebuild(&mut self) {
        self.cell = CELL_FACTOR * self.extent / self.inserted as f64;
        self.buckets.clear();
        for i in 0..self.inserted {
            let key = self.key(i);
            self.buckets.entry(key).or_default().push(i as u32);
        }
    }

    /// Makes index `self.inserted` searchable.
    pub(crate) fn insert_next(&mut self) {
        let i = self.inserted;
        self.inserted += 1;
        if self.inserted < BRUTE_FORCE_BELOW {
            return;
        }
        if self.inserted >= self.next_rebuild {
            self.next_rebuild = self.inserted * 2;
            self.rebuild();
        } else {
            let key = self.key(i);
            self.buckets.entry(key).or_default().push(i as u32);
        }
    }

    /// Nearest inserted point to point `q` and its Euclidean distance. Ties
    /// go to the smaller index.
    pub(crate) fn nearest(&self, q: usize) -> Option<(usize, f64)> {
        if self.inserted == 0 {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let consider = |j: usize, best: &mut (f64, usize)| {
            let d = self.dist2(q, j);
            if d < best.0 || (d == best.0 && j < best.1) {
                *best = (d, j);
            }
        };
        if self.inserted < BRUTE_FORCE_BELOW {
            for j in 0..self.inserted {
                consider(j, &mut best);
            }
            return Some((best.1, best.0.sqrt()));
        }
        let (ci, cj) = self.key(q);
        let max_ring = (self.extent / self.cell).ceil() as i64 + 2;
        for r in 0..=max_ring {
            let visit = |di: i64, dj: i64, best: &mut (f64, usize)| {
                if let Some(bucket) = self.buckets.get(&(ci + di, cj + dj)) {
                    for &j in bucket {
                        consider(j as usize, best);
                    }
                }
            };
            if r == 0 {
                visit(0, 0, &mut best);
            } else {
                for d in -r..=r {
                    visit(d, -r, &mut best);
                    visit(d, r, &mut best);
                }
                for d in (-r + 1)..r {
                    visit(-r, d, &mut best);
                    visit(r, d, &mut best);
                }
            }
            let reach = r as f64 * self.cell;
            if best.0.is_finite() && best.0 <= reach * reach {
                break;
            }
        }
        Some((best.1, best.0.sqrt()))
    }
}

//! Weighted Birkhoff averaging.
//!
//! For a quasiperiodic orbit and a smooth observable, the weighted average
//!
//! ```text
//! WB_n = sum_{k=1}^{n-1} w(k/n) Δ_k / sum_{k=1}^{n-1} w(k/n)
//! ```
//!
//! with a smooth bump `w` supported on `[0, 1]` converges faster than any
//! power of `1/n` when the rotation is Diophantine, instead of the `O(1/n)`
//! of the plain average.

use crate::error::{Error, Result};

/// The bump `exp(-1 / (t (1 - t)))` on `(0, 1)`, zero elsewhere.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BumpWeight;

impl BumpWeight {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        weight(t)
    }
}

#[inline]
pub fn weight(t: f64) -> f64 {
    if t > 0.0 && t < 1.0 {
        (-1.0 / (t * (1.0 - t))).exp()
    } else {
        0.0
    }
}

/// Kahan-Babuška (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming weighted average of `Δ_1, …, Δ_{n-1}` for a fixed `n`.
///
/// Weights are evaluated on the fly, so the series is never stored.
#[derive(Debug, Clone)]
pub struct WeightedAccumulator {
    n: usize,
    next_k: usize,
    num: CompensatedSum,
    den: CompensatedSum,
}

impl WeightedAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            next_k: 1,
            num: CompensatedSum::default(),
            den: CompensatedSum::default(),
        }
    }

    /// Feeds `Δ_k` for the next index `k`. Values past `n - 1` are ignored.
    #[inline]
    pub fn push(&mut self, value: f64) {
        if self.next_k >= self.n {
            return;
        }
        let w = weight(self.next_k as f64 / self.n as f64);
        self.next_k += 1;
        if w > 0.0 {
            self.num.add(w * value);
            self.den.add(w);
        }
    }

    pub fn finish(&self) -> Result<f64> {
        let den = self.den.value();
        if self.n < 3 || den <= 0.0 {
            return Err(Error::DegenerateInput("all Birkhoff weights vanish (n < 3)"));
        }
        Ok(self.num.value() / den)
    }
}

/// The values `Δ_1, …, Δ_{n-1}` of one weighted Birkhoff sum; `n` is
/// `values.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSeries {
    values: Vec<f64>,
}

impl WeightedSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.len() + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn weighted_average(series: &WeightedSeries) -> Result<f64> {
    average_slice(series.values())
}

/// Weighted average of `values` treated as `Δ_1, …, Δ_{len}`.
pub fn average_slice(values: &[f64]) -> Result<f64> {
    average_iter(values.iter().copied(), values.len())
}

/// Weighted average of the first `count` items of `values`.
pub fn average_iter<I>(values: I, count: usize) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = WeightedAccumulator::new(count + 1);
    for v in values.into_iter().take(count) {
        acc.push(v);
    }
    acc.finish()
}

/// A sequence `Δ_k` (starting at `k = 1`) with a known ergodic limit.
pub trait SeriesSource {
    fn value(&self, k: usize) -> f64;
    fn limit(&self) -> f64;
}

impl<F: Fn(usize) -> f64> SeriesSource for (F, f64) {
    fn value(&self, k: usize) -> f64 {
        (self.0)(k)
    }

    fn limit(&self) -> f64 {
        self.1
    }
}

/// `|WB_n - limit|` for each requested `n`.
pub fn convergence_probe<S: SeriesSource + ?Sized>(source: &S, n_list: &[usize]) -> Result<Vec<(usize, f64)>> {
    n_list
        .iter()
        .map(|&n| {
            let wb = average_iter((1..n).map(|k| source.value(k)), n.saturating_sub(1))?;
            Ok((n, (wb - source.limit()).abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    #[test]
    fn weight_examples() {
        assert_abs_diff_eq!(weight(0.5), 0.018_315_638_888_734_18, epsilon = 1e-15);
        assert_eq!(weight(0.0), 0.0);
        assert_eq!(weight(1.0), 0.0);
        assert_eq!(weight(-0.3), 0.0);
        assert_eq!(weight(0.3), weight(0.7));
        assert!(weight(0.1) > 0.0);
    }

    #[test]
    fn degenerate_n() {
        assert!(average_slice(&[]).is_err());
        assert!(average_slice(&[1.0]).is_err());
        assert_eq!(average_slice(&[1.0, 2.0]).unwrap(), 1.5);
    }

    #[test]
    fn constant_series() {
        let s = WeightedSeries::new(vec![3.25; 999]);
        assert_eq!(s.n(), 1000);
        assert_abs_diff_eq!(weighted_average(&s).unwrap(), 3.25, epsilon = 1e-15);
    }

    #[test]
    fn golden_cosine_vanishes() {
        let n = 10_000;
        let vals: Vec<f64> = (1..n).map(|k| (2.0 * PI * k as f64 * GOLDEN).cos()).collect();
        let wb = average_slice(&vals).unwrap();
        assert!(wb.abs() < 1e-10, "{wb}");
    }

    #[test]
    fn linear_ramp_centers() {
        let n = 100_000;
        let vals: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
        assert_abs_diff_eq!(average_slice(&vals).unwrap(), 0.5, epsilon = 1e-3);
    }

    #[test]
    fn probe_on_constant_and_cosine() {
        let constant = (|_k: usize| 2.0, 2.0);
        for (_, err) in convergence_probe(&constant, &[3, 10, 1000]).unwrap() {
            assert!(err < 1e-15);
        }
        let cosine = (|k: usize| (2.0 * PI * k as f64 * GOLDEN).cos(), 0.0);
        let errs = convergence_probe(&cosine, &[500, 1000, 2000, 4000, 8000, 16000]).unwrap();
        for pair in errs.windows(2) {
            // Below ~1e-14 rounding dominates and monotonicity is meaningless.
            if pair[1].1 > 1e-14 {
                assert!(pair[1].1 < pair[0].1, "{errs:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn constant_one_normalizes(n in 3usize..4000) {
            let wb = average_iter(std::iter::repeat(1.0), n - 1).unwrap();
            prop_assert!((wb - 1.0).abs() < 1e-15);
        }

        #[test]
        fn linear_and_symmetric(
            vals in prop::collection::vec(-10.0f64..10.0, 3..300),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let other: Vec<f64> = vals.iter().map(|v| (v * 1.7).sin()).collect();
            let mixed: Vec<f64> = vals.iter().zip(&other).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = average_slice(&mixed).unwrap();
            let rhs = alpha * average_slice(&vals).unwrap() + beta * average_slice(&other).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-13);

            let reversed: Vec<f64> = vals.iter().rev().copied().collect();
            let fwd = average_slice(&vals).unwrap();
            let back = average_slice(&reversed).unwrap();
            prop_assert!((fwd - back).abs() < 1e-13);
        }
    }
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::ops::Range;

use invcircle::map::{MapParams, State};
use invcircle::wba;
use nalgebra::{Complex, Matrix3};

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Repeated-QR (Benettin) exponents: `Q_{k+1} R_k = J(x_k) Q_k` from
/// `Q_0 = I`, with `log |R_k[i][i]|` averaged over `window` using the same
/// bump weights as the bundle exponents.
pub fn benettin_exponents(params: &MapParams, points: &[State], window: Range<usize>) -> [f64; 3] {
    let mut q = Matrix3::<f64>::identity();
    let mut logs: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (k, x) in points.iter().enumerate().take(window.end) {
        let qr = (params.jacobian(x) * q).qr();
        let r = qr.r();
        q = qr.q();
        if window.contains(&k) {
            for (i, l) in logs.iter_mut().enumerate() {
                l.push(r[(i, i)].abs().ln());
            }
        }
    }
    logs.map(|l| wba::average_slice(&l).unwrap())
}

/// Roots of `x^3 + a x^2 + b x + c` by Durand-Kerner iteration.
pub fn durand_kerner(a: f64, b: f64, c: f64) -> [Complex<f64>; 3] {
    let p = |z: Complex<f64>| ((z + a) * z + b) * z + c;
    let seed = Complex::new(0.4, 0.9);
    let mut z = [Complex::new(1.0, 0.0), seed, seed * seed];
    for _ in 0..500 {
        let prev = z;
        for i in 0..3 {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            z[i] -= p(z[i]) / den;
        }
        if (0..3).all(|i| (z[i] - prev[i]).norm() < 1e-16) {
            break;
        }
    }
    z
}

pub fn sorted_desc(mut v: [f64; 3]) -> [f64; 3] {
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Angle between two lines, computed without the library helper.
pub fn angle_between(a: &State, b: &State) -> f64 {
    let c = (a.dot(b) / (a.norm() * b.norm())).abs().min(1.0);
    let s = a.cross(b).norm() / (a.norm() * b.norm());
    s.atan2(c)
}

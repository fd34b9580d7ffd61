//! Quadrature: adaptive Gauss–Kronrod (7/15) for real integrands and a
//! double-exponential rule on `[0, 1]` that hands the integrand both `t`
//! and `1 - t`, so endpoint singularities keep full relative accuracy.

use crate::error::{Error, Result};
use num_complex::Complex64;

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XK[i];
        let s = f(c - dx) + f(c + dx);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod on `[a, b]` to absolute-or-relative tolerance `tol`.
/// Returns `(value, error estimate)`.
/// Fixed composite 15-point Kronrod rule on `panels` equal panels.
pub fn composite_kronrod<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| gk15(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h).0).sum()
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    integrate_named(&mut f, a, b, tol, "integral")
}

pub fn integrate_named<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, what: &'static str) -> Result<(f64, f64)> {
    const MAX_INTERVALS: usize = 4000;
    let (v0, e0) = gk15(f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    while err > tol.max(tol * total.abs()) {
        if parts.len() >= MAX_INTERVALS || !err.is_finite() {
            return Err(Error::Quadrature { what, estimate: err, tol });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, v, e) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(f, lo, mid);
        let (vr, er) = gk15(f, mid, hi);
        total += vl + vr - v;
        err += el + er - e;
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature { what, estimate: err, tol });
        }
    }
    // Re-sum to shed the drift of the running updates.
    let total: f64 = parts.iter().map(|p| p.2).sum();
    let err: f64 = parts.iter().map(|p| p.3).sum();
    Ok((total, err))
}

/// Tanh-sinh rule on `[0, 1]`; `f(t, 1 - t)` receives the complement exactly.
/// Halves the step until successive estimates agree to `tol` (relative).
pub fn tanh_sinh_unit<F: FnMut(f64, f64) -> Complex64>(f: F, tol: f64) -> Result<(Complex64, f64)> {
    let (value, diff, converged) = tanh_sinh_unit_estimate(f, tol);
    if converged {
        Ok((value, diff))
    } else {
        Err(Error::Quadrature { what: "tanh-sinh", estimate: diff, tol })
    }
}

/// As [`tanh_sinh_unit`] but always returns the finest estimate, its last
/// difference, and whether the tolerance was met.
pub fn tanh_sinh_unit_estimate<F: FnMut(f64, f64) -> Complex64>(mut f: F, tol: f64) -> (Complex64, f64, bool) {
    const U_MAX: f64 = 4.5;
    const MAX_LEVEL: u32 = 9;
    const NOISE_FLOOR_FACTOR: f64 = 1e3;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut node = |u: f64| -> Complex64 {
        let w = half_pi * u.sinh();
        // t = 1/(1 + e^{-2w}), 1 - t = 1/(1 + e^{2w})
        let t = 1.0 / (1.0 + (-2.0 * w).exp());
        let c = 1.0 / (1.0 + (2.0 * w).exp());
        let weight = std::f64::consts::PI * u.cosh() * t * c;
        if weight == 0.0 || !weight.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        f(t, c) * weight
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= U_MAX {
        let u = k as f64 * h;
        sum += node(u) + node(-u);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut prev_diff = f64::INFINITY;
    for level in 0..MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= U_MAX {
            let u = k as f64 * h;
            sum += node(u) + node(-u);
            k += 2;
        }
        let next = sum * h;
        let diff = (next - estimate).norm();
        estimate = next;
        let scale = estimate.norm().max(1e-300);
        if diff <= tol * scale {
            return (estimate, diff, true);
        }
        // Once the rule has converged onto the noise floor of a nested
        // integrand, further halving only resamples the noise.
        if level >= 4 && diff > 0.25 * prev_diff && diff <= NOISE_FLOOR_FACTOR * tol * scale {
            return (estimate, diff, true);
        }
        prev_diff = diff;
    }
    (estimate, prev_diff, false)
}

//! Symmetric N-spike steady states, general quasi-equilibria, and the
//! reconstructed spike profiles.
//!
//! Each spike carries a triple `(v_max, s, C)` tied together by
//!
//! ```text
//! C e^{χ̄ s} = s
//! -v²/2 + s²/2 + (C/χ̄) e^{χ̄ v} - s/χ̄ = 0
//! s_j = (2χ̄/3) ε Σ_k v_k³ G(x_j; x_k)
//! ```
//!
//! The first relation is eliminated exactly, leaving `2N` unknowns. The core
//! profile `V0(y)` follows from the first integral `½V0'² + K(V0) = 0` with
//! `K(V) = ½(s² - V²) + (C/χ̄)(e^{χ̄V} - e^{χ̄s})`; every integral over the
//! profile is done in `V` with `V = v_max - r²`, which removes the
//! square-root endpoint singularity at the spike centre.

use crate::error::{Error, Result};
use crate::greens::{a_g, assemble_matrices, helmholtz_green, GreensMatrixSet};
use crate::model::{qe_positivity_threshold, ModelParams};
use crate::quad::{composite_kronrod, integrate, integrate_named};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Widest sub-inner region, `|y| <= SUB_INNER_EXTENT / (χ̄ v_max)`.
pub const SUB_INNER_EXTENT: f64 = 6.0;
/// Candidate sub-inner widths (in units of `1/(χ̄ v_max)`), widest first.
const SUB_INNER_LADDER: [f64; 9] = [6.0, 4.0, 3.0, 2.0, 1.5, 1.0, 0.75, 0.5, 0.25];
/// Largest relative mismatch accepted between the sech² form and the core.
const SUB_INNER_MATCH: f64 = 0.03;
/// Inner region: `|y| <= INNER_EXTENT`.
pub const INNER_EXTENT: f64 = 10.0;
const QUAD_TOL: f64 = 1e-12;

/// `e^x - 1 - x` without cancellation.
pub(crate) fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..16 {
            term *= x / k as f64;
            sum += term;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

/// Residual `-v²/2 + s²/2 + (C/χ̄)e^{χ̄v} - s/χ̄` of the amplitude equation.
pub fn vmax_amplitude_eq_check(v_max: f64, s: f64, c: f64, chibar: f64) -> f64 {
    -0.5 * v_max * v_max + 0.5 * s * s + c / chibar * (chibar * v_max).exp() - s / chibar
}

/// Amplitude residual with `C = s e^{-χ̄ s}` substituted.
fn amplitude(v: f64, s: f64, chibar: f64) -> f64 {
    -0.5 * v * v + 0.5 * s * s + s / chibar * (chibar * (v - s)).exp_m1()
}

fn amplitude_dv(v: f64, s: f64, chibar: f64) -> f64 {
    -v + s * (chibar * (v - s)).exp()
}

/// `dv_max/ds` along the amplitude relation (with `C = s e^{-χ̄ s}`).
pub fn amplitude_slope(v: f64, s: f64, chibar: f64) -> f64 {
    -amplitude_ds(v, s, chibar) / amplitude_dv(v, s, chibar)
}

fn amplitude_ds(v: f64, s: f64, chibar: f64) -> f64 {
    let e = (chibar * (v - s)).exp();
    s + (e - 1.0) / chibar - s * e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeEquilibrium {
    pub n: usize,
    pub v_max0: f64,
    pub u_max: f64,
    pub s0: f64,
    pub c0: f64,
    pub locations: Vec<f64>,
    pub a_g: f64,
    /// `(1 - 2/(χ̄ v_max0))⁻¹`
    pub zeta0: f64,
    /// `(χ̄ v_max0 - 2)/3`
    pub a1: f64,
    /// `χ̄ v_max0/3 - 1/2`
    pub a: f64,
    pub eps: f64,
    pub chibar: f64,
    pub residual: f64,
}

impl SpikeEquilibrium {
    fn from_root(p: &ModelParams, v: f64, ag: f64) -> Self {
        let chibar = p.chibar();
        let s0 = 2.0 * chibar / 3.0 * ag * v.powi(3) * p.eps();
        let c0 = s0 * (-chibar * s0).exp();
        Self {
            n: p.n,
            v_max0: v,
            u_max: chibar * v * v / 2.0,
            s0,
            c0,
            locations: p.symmetric_locations(),
            a_g: ag,
            zeta0: 1.0 / (1.0 - 2.0 / (chibar * v)),
            a1: (chibar * v - 2.0) / 3.0,
            a: chibar * v / 3.0 - 0.5,
            eps: p.eps(),
            chibar,
            residual: vmax_amplitude_eq_check(v, s0, c0, chibar),
        }
    }

    pub fn as_quasi(&self) -> QuasiEquilibrium {
        let n = self.n;
        QuasiEquilibrium {
            locations: self.locations.clone(),
            v_max: vec![self.v_max0; n],
            s: vec![self.s0; n],
            c: vec![self.c0; n],
            zeta: vec![self.zeta0; n],
            residual_norm: self.residual.abs(),
            chibar: self.chibar,
            eps: self.eps,
        }
    }
}

/// Symmetric residual `f(v)` with `s = (2χ̄/3) a_g v³ ε`.
fn symmetric_residual(v: f64, chibar: f64, ag: f64, eps: f64) -> f64 {
    amplitude(v, 2.0 * chibar / 3.0 * ag * v.powi(3) * eps, chibar)
}

/// Dominant-balance estimate `e^{χ̄ v} = 3/(4 a_g ε v)`, iterated.
fn dominant_balance_seed(chibar: f64, ag: f64, eps: f64) -> f64 {
    let mut v = 2.0 / chibar;
    for _ in 0..60 {
        let arg = 3.0 / (4.0 * ag * eps * v);
        if arg <= 1.0 {
            break;
        }
        v = arg.ln() / chibar;
    }
    v
}

/// Large root of the single amplitude equation for equally spaced spikes.
pub fn solve_symmetric(p: &ModelParams) -> Result<SpikeEquilibrium> {
    p.require_admissible()?;
    let (chibar, eps) = (p.chibar(), p.eps());
    let ag = a_g(p, p.n);
    let f = |v: f64| symmetric_residual(v, chibar, ag, eps);
    let lo = 1.0_f64.min(0.5 / chibar);
    let hi = 20.0 * eps.ln().abs().max(1.0);
    const SCAN: usize = 4000;
    let seed = dominant_balance_seed(chibar, ag, eps);
    let mut best: Option<(f64, f64)> = None;
    let mut prev = (lo, f(lo));
    for i in 1..=SCAN {
        let x = lo + (hi - lo) * i as f64 / SCAN as f64;
        let fx = f(x);
        // roots with χ̄v <= 2 sit next to s and are not spikes
        let spike_like = chibar * prev.0 > 2.0;
        if spike_like && prev.1.signum() != fx.signum() && fx.is_finite() && prev.1.is_finite() {
            let mid = 0.5 * (prev.0 + x);
            let closer = best.map_or(true, |(a, b)| (mid - seed).abs() < (0.5 * (a + b) - seed).abs());
            if closer {
                best = Some((prev.0, x));
            }
        }
        prev = (x, fx);
    }
    let (a, b) = best.ok_or(Error::NoBracket { what: "symmetric amplitude equation", lo, hi })?;
    let df = |v: f64| {
        let s = 2.0 * chibar / 3.0 * ag * v.powi(3) * eps;
        let ds = 2.0 * chibar * ag * v * v * eps;
        amplitude_dv(v, s, chibar) + amplitude_ds(v, s, chibar) * ds
    };
    let v = bracketed_newton(f, df, a, b, 1e-15)?;
    Ok(SpikeEquilibrium::from_root(p, v, ag))
}

/// Newton iteration safeguarded by bisection on a sign-changing bracket.
pub(crate) fn bracketed_newton(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > a.min(b) && newton < a.max(b) { newton } else { 0.5 * (a + b) };
        if (next - x).abs() <= xtol * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence { what: "bracketed Newton", iterations: 200, residual: f(x).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiEquilibrium {
    pub locations: Vec<f64>,
    pub v_max: Vec<f64>,
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    /// `(1 - 2/(χ̄ v_max_j))⁻¹`
    pub zeta: Vec<f64>,
    pub residual_norm: f64,
    pub chibar: f64,
    pub eps: f64,
}

impl QuasiEquilibrium {
    pub fn n(&self) -> usize {
        self.locations.len()
    }

    /// Largest residual over the `3N` algebraic equations.
    pub fn residuals(&self, p: &ModelParams) -> Result<f64> {
        let chibar = p.chibar();
        let mut worst = 0.0f64;
        for j in 0..self.n() {
            let (v, s, c) = (self.v_max[j], self.s[j], self.c[j]);
            worst = worst.max((c * (chibar * s).exp() - s).abs());
            worst = worst.max(vmax_amplitude_eq_check(v, s, c, chibar).abs());
            let mut sum = 0.0;
            for k in 0..self.n() {
                sum += self.v_max[k].powi(3) * helmholtz_green(self.locations[j], self.locations[k], p)?;
            }
            worst = worst.max((s - 2.0 * chibar / 3.0 * p.eps() * sum).abs());
        }
        Ok(worst)
    }
}

/// Newton solve of the coupled system at arbitrary sorted interior locations.
/// `warm` supplies `(v_max, s)`; by default the symmetric solution is used.
pub fn solve_quasi(p: &ModelParams, locations: &[f64], warm: Option<&QuasiEquilibrium>) -> Result<QuasiEquilibrium> {
    let n = locations.len();
    if n == 0 {
        return Err(Error::InvalidParameter { name: "locations", reason: "empty".into() });
    }
    if locations.iter().any(|&x| !(x > -1.0 && x < 1.0)) {
        return Err(Error::InvalidParameter { name: "locations", reason: "must lie in (-1, 1)".into() });
    }
    let d1q = qe_positivity_threshold(p, locations)?;
    if p.d1 <= d1q {
        return Err(Error::BelowPositivity { d1: p.d1, d1p: d1q });
    }
    let pn = p.with_n(n);
    let (chibar, eps) = (p.chibar(), p.eps());
    let gmat = DMatrix::from_fn(n, n, |i, j| helmholtz_green(locations[i], locations[j], p));
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = gmat[(i, j)].clone()?;
        }
    }
    let (mut v, mut s) = match warm {
        Some(w) if w.n() == n => (DVector::from_vec(w.v_max.clone()), DVector::from_vec(w.s.clone())),
        _ => {
            let sym = solve_symmetric(&pn)?;
            (DVector::from_element(n, sym.v_max0), DVector::from_element(n, sym.s0))
        }
    };
    let k = 2.0 * chibar / 3.0 * eps;
    let residual = |v: &DVector<f64>, s: &DVector<f64>| -> DVector<f64> {
        let cubes = v.map(|x| x.powi(3));
        let gs = &g * cubes;
        DVector::from_fn(2 * n, |i, _| if i < n { amplitude(v[i], s[i], chibar) } else { s[i - n] - k * gs[i - n] })
    };
    let mut r = residual(&v, &s);
    let mut history = vec![r.amax()];
    for _ in 0..60 {
        if r.amax() < 1e-13 {
            break;
        }
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            jac[(i, i)] = amplitude_dv(v[i], s[i], chibar);
            jac[(i, n + i)] = amplitude_ds(v[i], s[i], chibar);
            jac[(n + i, n + i)] = 1.0;
            for kk in 0..n {
                jac[(n + i, kk)] = -3.0 * k * v[kk] * v[kk] * g[(i, kk)];
            }
        }
        let svd = jac.clone().svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        if !cond.is_finite() || cond > 1e13 {
            return Err(Error::BifurcationProximity { what: "quasi-equilibrium Jacobian", condition: cond });
        }
        let step = jac.lu().solve(&(-&r)).ok_or(Error::BifurcationProximity { what: "quasi-equilibrium Jacobian", condition: cond })?;
        let mut lambda = 1.0;
        loop {
            let vt = &v + step.rows(0, n) * lambda;
            let st = &s + step.rows(n, n) * lambda;
            let admissible = vt.iter().zip(st.iter()).all(|(&a, &b)| b > 0.0 && a > b);
            if admissible {
                let rt = residual(&vt, &st);
                if rt.amax() < r.amax() || lambda < 1e-3 {
                    v = vt;
                    s = st;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::Newton { what: "quasi-equilibrium", history });
            }
        }
        history.push(r.amax());
    }
    if r.amax() >= 1e-12 {
        return Err(Error::Newton { what: "quasi-equilibrium", history });
    }
    let c: Vec<f64> = s.iter().map(|&sj| sj * (-chibar * sj).exp()).collect();
    let mut q = QuasiEquilibrium {
        locations: locations.to_vec(),
        zeta: v.iter().map(|&vj| 1.0 / (1.0 - 2.0 / (chibar * vj))).collect(),
        v_max: v.iter().copied().collect(),
        s: s.iter().copied().collect(),
        c,
        residual_norm: 0.0,
        chibar,
        eps,
    };
    q.residual_norm = q.residuals(p)?;
    Ok(q)
}

/// Core profile of one spike, parametrised by `V` between `s` and `v_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerCore {
    pub v_max: f64,
    pub s: f64,
    pub c: f64,
    pub chibar: f64,
}

impl InnerCore {
    pub fn new(v_max: f64, s: f64, c: f64, chibar: f64) -> Self {
        Self { v_max, s, c, chibar }
    }

    /// `-2K` at `V = v_max - rho`, dropping the (tiny) amplitude residual.
    fn minus_two_k_top(&self, rho: f64) -> f64 {
        let pv = self.c * (self.chibar * self.v_max).exp();
        let val = (pv - self.v_max) * rho + 0.5 * rho * rho - pv / self.chibar * expm1_minus_x(-self.chibar * rho);
        (2.0 * val).max(0.0)
    }

    /// `-2K` at `V = s + delta`, using `C e^{χ̄ s} = s`.
    fn minus_two_k_bottom(&self, delta: f64) -> f64 {
        let val = 0.5 * delta * delta - self.s / self.chibar * expm1_minus_x(self.chibar * delta);
        (2.0 * val).max(0.0)
    }

    /// `-2K(V) >= 0`, evaluated relative to whichever endpoint is nearer.
    pub fn minus_two_k(&self, x: f64) -> f64 {
        let top = self.v_max - x;
        let bottom = x - self.s;
        if top < bottom {
            self.minus_two_k_top(top)
        } else {
            self.minus_two_k_bottom(bottom)
        }
    }

    /// `∫_lower^{v_max} f(δ, -2K)/sqrt(-2K) dV` with `δ = V - s`. The upper
    /// half uses `V = v_max - r²` (square-root endpoint), the lower half
    /// `V = s + e^t` (logarithmic endpoint at `s`).
    fn integrate_over_v(&self, lower: f64, what: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let span = self.v_max - self.s;
        let lower_delta = lower - self.s;
        let r_max = (0.5 * span).min(self.v_max - lower).max(0.0).sqrt();
        let mut g = |r: f64| {
            let w = self.minus_two_k_top(r * r);
            let delta = span - r * r;
            if w <= 0.0 {
                // r → 0: 2r/sqrt(-2K) → 2/sqrt(2K'(v_max))
                let kp = self.c * (self.chibar * self.v_max).exp() - self.v_max;
                return if r == 0.0 { 2.0 * f(delta, 0.0) / (2.0 * kp).sqrt() } else { 0.0 };
            }
            2.0 * r * f(delta, w) / w.sqrt()
        };
        let mut total = integrate_named(&mut g, 0.0, r_max, QUAD_TOL, what)?.0;
        if lower_delta < 0.5 * span {
            let t_lo = lower_delta.max(1e-30 * span).ln();
            let t_hi = (0.5 * span).ln();
            let mut h = |t: f64| {
                let d = t.exp();
                let w = self.minus_two_k_bottom(d);
                if w <= 0.0 {
                    return 0.0;
                }
                d * f(d, w) / w.sqrt()
            };
            total += integrate_named(&mut h, t_lo, t_hi, QUAD_TOL, what)?.0;
        }
        Ok(total)
    }

    /// Distance `y >= 0` from the centre at which `V0 = target`.
    pub fn y_of_v(&self, target: f64) -> Result<f64> {
        if target >= self.v_max {
            return Ok(0.0);
        }
        self.integrate_over_v(target, "inner implicit profile", |_, _| 1.0)
    }

    /// `V0(y)` by inverting `y(V)`; `y` may have either sign.
    pub fn v_of_y(&self, y: f64) -> Result<f64> {
        let y = y.abs();
        if y == 0.0 {
            return Ok(self.v_max);
        }
        let (mut lo, mut hi) = (self.s, self.v_max);
        let sub = self.v_max + 2.0 / self.chibar * (1.0 / (0.5 * self.chibar * self.v_max * y).cosh()).ln();
        let mut x = sub.clamp(self.s + 1e-3 * (self.v_max - self.s), self.v_max - 1e-12);
        for _ in 0..100 {
            let fx = self.y_of_v(x)? - y;
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            // dy/dV = -1/sqrt(-2K)
            let slope = -1.0 / self.minus_two_k(x).sqrt();
            let newton = x - fx / slope;
            let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 1e-14 * x.abs().max(1.0) || (hi - lo) <= 1e-15 * x.abs() {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::Quadrature { what: "inner profile inversion", estimate: hi - lo, tol: 1e-14 })
    }

    /// Leading-order sech² profile `(U, V)` of the sub-inner layer.
    pub fn sub_inner(&self, y: f64) -> (f64, f64) {
        let z = 0.5 * self.chibar * self.v_max * y;
        let sech2 = 1.0 / (z.cosh() * z.cosh());
        (0.5 * self.chibar * self.v_max * self.v_max * sech2, self.v_max + sech2.ln() / self.chibar)
    }

    /// Widest rung of the ladder on which the sech² form still matches the
    /// core profile; zero when it never does.
    pub fn sub_inner_extent(&self) -> Result<f64> {
        for k in SUB_INNER_LADDER {
            let y = k / (self.chibar * self.v_max);
            let (us, vs) = self.sub_inner(y);
            let v = self.v_of_y(y)?;
            let u = self.u_of_v(v);
            if (vs - v).abs() <= SUB_INNER_MATCH * v.abs() && (us - u).abs() <= SUB_INNER_MATCH * u {
                return Ok(y);
            }
        }
        Ok(0.0)
    }

    /// `U0 = C e^{χ̄ V0}`.
    pub fn u_of_v(&self, v: f64) -> f64 {
        self.c * (self.chibar * v).exp()
    }

    /// `∫_0^∞ (V0')² dy`.
    pub fn slope_energy(&self) -> Result<f64> {
        self.integrate_over_v(self.s, "∫(V0')² dy", |_, w| w)
    }

    /// `-∫_0^∞ y V0' dy`.
    pub fn first_moment(&self) -> Result<f64> {
        self.integrate_over_v(self.s, "∫ y V0' dy", |d, _| d)
    }

    /// `-∫_0^∞ U0 V0' (∫_0^y 1/U0) dy`.
    pub fn speed_numerator(&self) -> Result<f64> {
        let chibar = self.chibar;
        self.integrate_over_v(self.s, "speed projection", |d, _| -(-chibar * d).exp_m1() / chibar)
    }

    /// `β0 = -∫ y V0' / ∫ (V0')²`.
    pub fn beta0(&self) -> Result<f64> {
        Ok(self.first_moment()? / self.slope_energy()?)
    }

    /// `β_j` of the speed law.
    pub fn beta(&self) -> Result<f64> {
        Ok(self.speed_numerator()? / self.slope_energy()?)
    }

    /// `∫_0^∞ (U0 - s) dy` and `∫_0^∞ (U0² - s²) dy`.
    pub fn mass_integrals(&self) -> Result<(f64, f64)> {
        let q = self.s;
        let m1 = self.integrate_over_v(self.s, "∫U0 dy", |d, _| q * (self.chibar * d).exp_m1())?;
        let m2 = self.integrate_over_v(self.s, "∫U0² dy", |d, _| q * q * (2.0 * self.chibar * d).exp_m1())?;
        Ok((m1, m2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    SubInner,
    Inner,
    Outer,
}

/// Piecewise evaluator of the composite `(u, v)` profile.
#[derive(Debug, Clone)]
pub struct SpikeProfile {
    pub params: ModelParams,
    pub locations: Vec<f64>,
    pub cores: Vec<InnerCore>,
    /// Per-spike half-width of the sub-inner layer, in `y`.
    pub sub_inner_y: Vec<f64>,
    /// Outer weights `(2χ̄/3) ε v_k³`.
    weights: Vec<f64>,
}

impl SpikeProfile {
    fn nearest(&self, x: f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, &xj) in self.locations.iter().enumerate() {
            if (x - xj).abs() < best.1.abs() {
                best = (j, x - xj);
            }
        }
        best
    }

    pub fn region(&self, x: f64) -> (Region, usize) {
        let (j, dx) = self.nearest(x);
        let y = (dx / self.params.eps()).abs();
        if y <= self.sub_inner_y[j] {
            (Region::SubInner, j)
        } else if y <= INNER_EXTENT {
            (Region::Inner, j)
        } else {
            (Region::Outer, j)
        }
    }

    /// Outer solution `u_o = v_o = (2χ̄/3) ε Σ_k v_k³ G(x; x_k)`.
    pub fn outer(&self, x: f64) -> Result<f64> {
        let mut sum = 0.0;
        for (w, &xk) in self.weights.iter().zip(&self.locations) {
            sum += w * helmholtz_green(x, xk, &self.params)?;
        }
        Ok(sum)
    }

    /// `(u, v)` at `x`. Inside a spike layer the outer variation is added
    /// to the core (additive composite, common part `s_j`).
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let (region, j) = self.region(x);
        let core = &self.cores[j];
        let y = (x - self.locations[j]) / self.params.eps();
        let (u, v) = match region {
            Region::SubInner => core.sub_inner(y),
            Region::Inner => {
                let v = core.v_of_y(y)?;
                (core.u_of_v(v), v)
            }
            Region::Outer => {
                let w = self.outer(x)?;
                return Ok((w, w));
            }
        };
        let shift = self.outer(x)? - core.s;
        Ok((u + shift, v + shift))
    }

    /// Region boundaries, sorted, for piecewise quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        let eps = self.params.eps();
        let mut pts = vec![-1.0, 1.0];
        for (&ys, &xj) in self.sub_inner_y.iter().zip(&self.locations) {
            for d in [-INNER_EXTENT, -ys, 0.0, ys, INNER_EXTENT] {
                let x = xj + d * eps;
                if x > -1.0 && x < 1.0 {
                    pts.push(x);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Samples `(x, u, v)` on `n` equally spaced points of `[-1, 1]`.
    pub fn sample(&self, n: usize) -> Result<Vec<(f64, f64, f64)>> {
        (0..n)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                self.eval(x).map(|(u, v)| (x, u, v))
            })
            .collect()
    }
}

/// Builds the composite profile of a (quasi-)equilibrium.
pub fn build_profile(eq: &QuasiEquilibrium, p: &ModelParams) -> Result<SpikeProfile> {
    let chibar = p.chibar();
    let cores: Vec<InnerCore> = (0..eq.n())
        .map(|j| InnerCore::new(eq.v_max[j], eq.s[j], eq.c[j], chibar))
        .collect();
    let sub_inner_y = cores.iter().map(InnerCore::sub_inner_extent).collect::<Result<_>>()?;
    let weights = eq.v_max.iter().map(|v| 2.0 * chibar / 3.0 * p.eps() * v.powi(3)).collect();
    Ok(SpikeProfile { params: *p, locations: eq.locations.clone(), cores, sub_inner_y, weights })
}

/// `∫_{-1}^{1} u (ubar - u) dx` over the composite profile. Spike layers
/// use fixed Kronrod panels, since every node inverts the implicit profile.
pub fn global_balance_residual(profile: &SpikeProfile, p: &ModelParams) -> Result<f64> {
    let ubar = p.ubar;
    let pts = profile.breakpoints();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (region, _) = profile.region(0.5 * (w[0] + w[1]));
        let mut failure = None;
        let mut f = |x: f64| match profile.eval(x) {
            Ok((u, _)) => u * (ubar - u),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        total += match region {
            Region::Outer => integrate_named(&mut f, w[0], w[1], 1e-11, "global balance")?.0,
            _ => composite_kronrod(&mut f, w[0], w[1], 24),
        };
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct QuasiJacobian {
    pub matrix: DMatrix<f64>,
    /// `1 - (3/(2 - χ̄ v)) σ_j/σ_1`, in the order of the `σ_j`.
    pub eigenvalues: Vec<f64>,
}

/// `J = I - (3/(2 - χ̄ v_max0)) G/a_g` and its closed-form eigenvalues.
pub fn quasi_jacobian(eq: &SpikeEquilibrium, p: &ModelParams) -> Result<QuasiJacobian> {
    let set: GreensMatrixSet = assemble_matrices(&p.with_n(eq.n), Complex64::new(0.0, 0.0))?;
    let factor = 3.0 / (2.0 - eq.chibar * eq.v_max0);
    let matrix = DMatrix::identity(eq.n, eq.n) - &set.g * (factor / set.a_g);
    let s1 = set.sigma[0].re;
    let eigenvalues = set.sigma.iter().map(|s| 1.0 - factor * s.re / s1).collect();
    Ok(QuasiJacobian { matrix, eigenvalues })
}

/// Convenience for tests and callers that only need `∫ f` over a range.
pub fn integrate_profile(profile: &SpikeProfile, a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let mut pts: Vec<f64> = profile.breakpoints().into_iter().filter(|&x| x > a && x < b).collect();
    pts.insert(0, a);
    pts.push(b);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (v, _) = integrate(
            |x| {
                let (u, vv) = profile.eval(x).unwrap_or((f64::NAN, f64::NAN));
                f(u, vv)
            },
            w[0],
            w[1],
            1e-10,
        )?;
        total += v;
    }
    Ok(total)
}

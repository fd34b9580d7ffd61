//! Gamma function and generalised hypergeometric series.
//!
//! `pfq` sums
//!
//! ```text
//! pFq(a; b; z) = Σ_n (a_1)_n … (a_p)_n / ((b_1)_n … (b_q)_n) · z^n / n!
//! ```
//!
//! with compensated accumulation. At `z = 1` the terms decay only like
//! `n^{-(1+s)}` with `s = Re(Σb - Σa)`, so the partial sums are sampled at
//! doubling lengths and Richardson-extrapolated in the powers `N^{-(s+m)}`;
//! the tail expansion of a Gamma-ratio term has no logarithmic pieces, so the
//! elimination is exact order by order.
//!
//! `euler_integral_lift` is the independent oracle: it adds one (upper, lower)
//! parameter pair through
//!
//! ```text
//! Γ(b)/(Γ(a)Γ(b-a)) ∫_0^1 t^{a-1} (1-t)^{b-a-1} pFq(…; t z) dt
//! ```
//!
//! and evaluates the inner function by the same lift recursively until it is
//! `1F0` or `0F0`, both closed forms. Complements `1 - t z` are carried
//! through every level so the algebraic endpoint behaviour at `z = 1` is
//! resolved without cancellation.

use crate::error::{Error, Result};
use crate::quad::{tanh_sinh_unit, tanh_sinh_unit_estimate};
use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_TERMS: usize = 200_000;
/// Relative tolerance of each quadrature level in the Euler-integral oracle.
pub const LIFT_TOL: f64 = 1e-11;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Γ(z) by the Lanczos approximation (g = 7), reflected for `Re z < 1/2`.
pub fn gamma(z: C64) -> Result<C64> {
    if is_nonpositive_integer(z) {
        return Err(Error::GammaPole(z.re));
    }
    Ok(gamma_unchecked(z))
}

fn gamma_unchecked(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return C64::new(PI, 0.0) / (s * gamma_unchecked(1.0 - z));
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    ((z + 0.5) * t.ln() - t).exp() * x * (2.0 * PI).sqrt()
}

pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(C64::new(x, 0.0)).map(|g| g.re)
}

/// Parameters of a `pFq` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeomSpec {
    pub upper: Vec<C64>,
    pub lower: Vec<C64>,
    pub z: C64,
    pub tol: f64,
    pub max_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfqValue {
    pub value: C64,
    /// Number of series terms summed.
    pub terms: usize,
    /// Absolute error estimate (last increment or extrapolation spread).
    pub error_estimate: f64,
}

impl HypergeomSpec {
    pub fn new(upper: Vec<C64>, lower: Vec<C64>, z: C64) -> Result<Self> {
        let s = Self { upper, lower, z, tol: DEFAULT_TOL, max_terms: DEFAULT_MAX_TERMS };
        s.validate()?;
        Ok(s)
    }

    pub fn real(upper: &[f64], lower: &[f64], z: f64) -> Result<Self> {
        Self::new(
            upper.iter().map(|&a| C64::new(a, 0.0)).collect(),
            lower.iter().map(|&b| C64::new(b, 0.0)).collect(),
            C64::new(z, 0.0),
        )
    }

    /// Inner function of an Euler lift. It is only ever evaluated at `t z`
    /// with `t < 1`, so the unit-circle convergence condition is checked on
    /// the lifted parameters instead.
    pub fn for_lift(upper: Vec<C64>, lower: Vec<C64>, z: C64) -> Result<Self> {
        let s = Self { upper, lower, z, tol: DEFAULT_TOL, max_terms: DEFAULT_MAX_TERMS };
        if let Some(b) = s.lower.iter().find(|&&b| is_nonpositive_integer(b)) {
            return Err(Error::HypergeometricDomain(format!("lower parameter {b} is a non-positive integer")));
        }
        if s.z.norm() > 1.0 {
            return Err(Error::HypergeometricDomain(format!("|z| = {} > 1", s.z.norm())));
        }
        Ok(s)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn terminates(&self) -> bool {
        self.upper.iter().any(|&a| is_nonpositive_integer(a))
    }

    /// `Σ lower - Σ upper`; its real part sets the decay of terms at `|z| = 1`.
    pub fn excess(&self) -> C64 {
        self.lower.iter().sum::<C64>() - self.upper.iter().sum::<C64>()
    }

    fn validate(&self) -> Result<()> {
        if let Some(b) = self.lower.iter().find(|&&b| is_nonpositive_integer(b)) {
            return Err(Error::HypergeometricDomain(format!("lower parameter {b} is a non-positive integer")));
        }
        if self.terminates() {
            return Ok(());
        }
        let (p, q) = (self.upper.len(), self.lower.len());
        let r = self.z.norm();
        if p > q + 1 && r > 0.0 {
            return Err(Error::HypergeometricDomain(format!("{p}F{q} diverges for z != 0")));
        }
        if p == q + 1 {
            if r > 1.0 {
                return Err(Error::HypergeometricDomain(format!("|z| = {r} > 1")));
            }
            if r == 1.0 && self.excess().re <= 0.0 {
                return Err(Error::HypergeometricDomain(format!(
                    "Re(Σb - Σa) = {} must be > 0 on |z| = 1",
                    self.excess().re
                )));
            }
        }
        Ok(())
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: C64,
    comp: C64,
}

impl Compensated {
    fn add(&mut self, x: C64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.comp.im);
    }

    fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

fn neumaier(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

fn next_term(term: C64, n: usize, spec: &HypergeomSpec) -> C64 {
    let nf = n as f64;
    let mut r = spec.z / (nf + 1.0);
    for &a in &spec.upper {
        r *= a + nf;
    }
    for &b in &spec.lower {
        r /= b + nf;
    }
    term * r
}

/// Generalised hypergeometric function `pFq(upper; lower; z)`, `|z| <= 1`.
pub fn pfq(spec: &HypergeomSpec) -> Result<PfqValue> {
    spec.validate()?;
    let at_unit_point = (spec.z - 1.0).norm() == 0.0 && spec.upper.len() == spec.lower.len() + 1;
    if at_unit_point && !spec.terminates() {
        pfq_extrapolated(spec)
    } else {
        pfq_direct(spec)
    }
}

fn pfq_direct(spec: &HypergeomSpec) -> Result<PfqValue> {
    let mut acc = Compensated::default();
    let mut term = C64::new(1.0, 0.0);
    let mut quiet = 0;
    for n in 0..spec.max_terms {
        acc.add(term);
        let next = next_term(term, n, spec);
        if next == C64::new(0.0, 0.0) {
            return Ok(PfqValue { value: acc.value(), terms: n + 1, error_estimate: 0.0 });
        }
        // Geometric tail bound from the current term ratio.
        let ratio = next.norm() / term.norm();
        let shrinking = ratio < 1.0;
        let tail = if shrinking { next.norm() / (1.0 - ratio) } else { f64::INFINITY };
        let small = tail <= spec.tol * acc.value().norm();
        quiet = if small && shrinking { quiet + 1 } else { 0 };
        term = next;
        if quiet >= 2 {
            acc.add(term);
            return Ok(PfqValue { value: acc.value(), terms: n + 2, error_estimate: term.norm() });
        }
    }
    Err(Error::NoConvergence { what: "pFq series", iterations: spec.max_terms, residual: term.norm() })
}

fn pfq_extrapolated(spec: &HypergeomSpec) -> Result<PfqValue> {
    const FIRST: usize = 64;
    let s = spec.excess();
    let mut checkpoints = Vec::new();
    let mut n_k = FIRST;
    while n_k <= spec.max_terms {
        checkpoints.push(n_k);
        n_k *= 2;
    }
    if checkpoints.len() < 3 {
        return pfq_direct(spec);
    }
    let mut acc = Compensated::default();
    let mut term = C64::new(1.0, 0.0);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut best: Option<(C64, f64)> = None;
    let mut n = 0;
    for &target in &checkpoints {
        while n < target {
            acc.add(term);
            term = next_term(term, n, spec);
            n += 1;
        }
        let mut row = vec![acc.value()];
        if let Some(prev) = rows.last() {
            for m in 1..=prev.len() {
                let w = C64::new(2.0, 0.0).powc(s + (m - 1) as f64);
                row.push((w * row[m - 1] - prev[m - 1]) / (w - 1.0));
            }
            let k = row.len() - 1;
            let diff = (row[k] - prev[k - 1]).norm();
            if best.map_or(true, |(_, d)| diff < d) {
                best = Some((row[k], diff));
            }
            if diff <= spec.tol * row[k].norm() {
                rows.push(row);
                break;
            }
        }
        rows.push(row);
    }
    let (value, err) = best.expect("at least two rows");
    // Round-off in the extrapolation table floors the attainable accuracy a
    // little above machine precision.
    if err <= spec.tol.max(1e-12) * value.norm().max(1e-300) {
        Ok(PfqValue { value, terms: n, error_estimate: err })
    } else {
        Err(Error::NoConvergence { what: "pFq at z = 1", iterations: n, residual: err })
    }
}

/// `Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b))`, the value of `2F1(a, b; c; 1)`.
pub fn gauss_sum(a: C64, b: C64, c: C64) -> Result<C64> {
    Ok(gamma(c)? * gamma(c - a - b)? / (gamma(c - a)? * gamma(c - b)?))
}

/// Evaluates `(p+1)F(q+1)(inner.upper ++ [a]; inner.lower ++ [b]; inner.z)`
/// through the Euler integral over the inner function.
pub fn euler_integral_lift(inner: &HypergeomSpec, a_extra: C64, b_extra: C64) -> Result<C64> {
    if !(a_extra.re > 0.0 && b_extra.re > a_extra.re) {
        return Err(Error::HypergeometricDomain(format!(
            "Euler lift needs Re b > Re a > 0, got a = {a_extra}, b = {b_extra}"
        )));
    }
    let mut lifted = inner.clone();
    lifted.upper.push(a_extra);
    lifted.lower.push(b_extra);
    lifted.validate()?;
    let tol = inner.tol.max(LIFT_TOL);
    lift(&inner.upper, &inner.lower, a_extra, b_extra, inner.z, 1.0 - inner.z, tol, true)
}

/// Quadrature-only evaluation of a `pFq` (no outer series), for cross-checks.
pub fn pfq_by_quadrature(spec: &HypergeomSpec) -> Result<C64> {
    spec.validate()?;
    let tol = spec.tol.max(LIFT_TOL);
    eval_nested(&spec.upper, &spec.lower, spec.z, 1.0 - spec.z, tol, true)
}

/// Only the outermost quadrature (`top`) must meet `tol`: inner levels are
/// also sampled at nodes whose complement underflows the rule's reach, where
/// they cannot converge but carry negligible outer weight.
#[allow(clippy::too_many_arguments)]
fn lift(upper: &[C64], lower: &[C64], a: C64, b: C64, z: C64, cz: C64, tol: f64, top: bool) -> Result<C64> {
    let norm = gamma(b)? / (gamma(a)? * gamma(b - a)?);
    let mut failure = None;
    // weak endpoint exponents: map t = u^q or 1 - t = (1 - u)^q so the
    // mapped kernel is O(1) and the tanh-sinh reach suffices
    let (near_zero, near_one) = (a.re, (b - a).re);
    let (q, at_one) = if near_zero.min(near_one) < 0.5 {
        (1.0 / near_zero.min(near_one), near_one < near_zero)
    } else {
        (1.0, false)
    };
    let integrand = |u: f64, cu: f64| -> C64 {
        let (t, c, ljac) = if q == 1.0 {
            (u, cu, 0.0)
        } else if at_one {
            let l = q * cu.ln();
            (-l.exp_m1(), l.exp(), q.ln() + (q - 1.0) * cu.ln())
        } else {
            let l = q * u.ln();
            (l.exp(), -l.exp_m1(), q.ln() + (q - 1.0) * u.ln())
        };
        if t == 0.0 || c == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let (lt, lc) = (ln_pair(t, c), ln_pair(c, t));
        let weight = ((a - 1.0) * lt + (b - a - 1.0) * lc + ljac).exp();
        let w = z * t;
        let cw = cz * t + c;
        match eval_nested(upper, lower, w, cw, tol, false) {
            Ok(v) => weight * v,
            Err(e) => {
                failure.get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        }
    };
    let value = if top {
        tanh_sinh_unit(integrand, tol)?.0
    } else {
        tanh_sinh_unit_estimate(integrand, tol).0
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(norm * value)
}

/// `ln x` given `x` and its complement `1 - x`.
fn ln_pair(x: f64, one_minus_x: f64) -> f64 {
    if one_minus_x < 0.5 {
        (-one_minus_x).ln_1p()
    } else {
        x.ln()
    }
}

/// Evaluates `pFq(upper; lower; w)` with `cw = 1 - w` supplied accurately.
fn eval_nested(upper: &[C64], lower: &[C64], w: C64, cw: C64, tol: f64, force_lift: bool) -> Result<C64> {
    match (upper.len(), lower.len()) {
        (0, 0) => return Ok(w.exp()),
        (1, 0) => return Ok((-upper[0] * cw.ln()).exp()),
        _ => {}
    }
    let direct = || {
        let spec = HypergeomSpec { upper: upper.to_vec(), lower: lower.to_vec(), z: w, tol: tol * 1e-2, max_terms: DEFAULT_MAX_TERMS };
        pfq(&spec).map(|v| v.value)
    };
    if w.norm() <= 0.5 && !force_lift {
        return direct();
    }
    match best_pair(upper, lower) {
        Some((i, j)) => {
            let mut up = upper.to_vec();
            let mut lo = lower.to_vec();
            let a = up.remove(i);
            let b = lo.remove(j);
            lift(&up, &lo, a, b, w, cw, tol, force_lift)
        }
        None => direct(),
    }
}

/// Pair (upper index, lower index) taken from the assignment of every lower
/// parameter to a distinct upper one that maximises the smallest margin
/// `min(Re a, Re(b - a))`; `None` when no assignment has positive margin.
fn best_pair(upper: &[C64], lower: &[C64]) -> Option<(usize, usize)> {
    if lower.is_empty() || upper.len() < lower.len() {
        return None;
    }
    fn search(upper: &[C64], lower: &[C64], j: usize, used: &mut Vec<bool>, current: f64, pick: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if j == lower.len() {
            if current > best.0 {
                *best = (current, pick.clone());
            }
            return;
        }
        for i in 0..upper.len() {
            if used[i] {
                continue;
            }
            let margin = upper[i].re.min((lower[j] - upper[i]).re);
            let next = current.min(margin);
            if next <= best.0 {
                continue;
            }
            used[i] = true;
            pick.push(i);
            search(upper, lower, j + 1, used, next, pick, best);
            pick.pop();
            used[i] = false;
        }
    }
    let mut best = (0.0, Vec::new());
    search(upper, lower, 0, &mut vec![false; upper.len()], f64::INFINITY, &mut Vec::new(), &mut best);
    best.1.first().map(|&i| (i, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn gamma_classical_values() {
        assert!((gamma_real(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_real(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_real(5.0).unwrap() - 24.0).abs() < 1e-12);
        assert!((gamma_real(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!(matches!(gamma(c(0.0)), Err(Error::GammaPole(_))));
        assert!(matches!(gamma(c(-3.0)), Err(Error::GammaPole(_))));
    }

    #[test]
    fn gamma_matches_integral_definition() {
        // Γ(3.7) = ∫_0^∞ t^{2.7} e^{-t} dt, mapped to [0, 1) by t = s/(1-s).
        let f = |s: f64| {
            if s >= 1.0 {
                return 0.0;
            }
            let t = s / (1.0 - s);
            t.powf(2.7) * (-t).exp() / ((1.0 - s) * (1.0 - s))
        };
        let (v, _) = integrate(f, 0.0, 1.0, 1e-14).unwrap();
        assert!((gamma_real(3.7).unwrap() - v).abs() < 1e-10 * v);
    }

    #[test]
    fn gamma_complex_reflection_consistent() {
        let z = C64::new(0.3, 1.7);
        let lhs = gamma(z).unwrap() * gamma(1.0 - z).unwrap();
        let rhs = PI / (z * PI).sin();
        assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
        let rec = gamma(z + 1.0).unwrap() - z * gamma(z).unwrap();
        assert!(rec.norm() < 1e-13 * gamma(z + 1.0).unwrap().norm());
    }

    #[test]
    fn gauss_summation_at_unit_argument() {
        let spec = HypergeomSpec::real(&[0.3, 0.2], &[1.7], 1.0).unwrap();
        let v = pfq(&spec).unwrap();
        let exact = gauss_sum(c(0.3), c(0.2), c(1.7)).unwrap();
        assert!((v.value - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn gauss_summation_slowest_admissible_decay() {
        // excess 0.25: terms decay like n^{-1.25}
        let spec = HypergeomSpec::real(&[0.5, 0.75], &[1.5], 1.0).unwrap();
        let v = pfq(&spec).unwrap();
        let exact = gauss_sum(c(0.5), c(0.75), c(1.5)).unwrap();
        assert!((v.value - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn terminating_series() {
        let spec = HypergeomSpec::real(&[0.0, 3.2], &[1.1], 0.9).unwrap();
        assert_eq!(pfq(&spec).unwrap().value, c(1.0));
        // 2F1(-2, b; c; z) = 1 - 2bz/c + b(b+1)z²/(c(c+1))
        let (b, cc, z) = (1.5, 2.5, 1.0);
        let spec = HypergeomSpec::real(&[-2.0, b], &[cc], z).unwrap();
        let exact = 1.0 - 2.0 * b * z / cc + b * (b + 1.0) * z * z / (cc * (cc + 1.0));
        assert!((pfq(&spec).unwrap().value.re - exact).abs() < 1e-15);
    }

    #[test]
    fn domain_violations_rejected() {
        assert!(HypergeomSpec::real(&[1.0, 1.0], &[1.5], 1.0).is_err());
        assert!(HypergeomSpec::real(&[1.0], &[-2.0], 0.5).is_err());
        assert!(HypergeomSpec::real(&[1.0, 1.0], &[2.0], 1.2).is_err());
        let capped = HypergeomSpec::real(&[1.0, 1.0], &[2.0], 0.999_999).unwrap().with_max_terms(50);
        assert!(matches!(pfq(&capped), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn closed_forms_small_argument() {
        // 1F0(a;;z) = (1-z)^{-a}, 0F0 = e^z, 2F1(1,1;2;z) = -ln(1-z)/z
        let v = pfq(&HypergeomSpec::real(&[0.7], &[], 0.4).unwrap()).unwrap().value.re;
        assert!((v - 0.6f64.powf(-0.7)).abs() < 1e-14);
        let v = pfq(&HypergeomSpec::real(&[], &[], 1.3).unwrap()).unwrap().value.re;
        assert!((v - 1.3f64.exp()).abs() < 1e-14);
        let v = pfq(&HypergeomSpec::real(&[1.0, 1.0], &[2.0], 0.9).unwrap()).unwrap().value.re;
        assert!((v + (0.1f64).ln() / 0.9).abs() < 1e-13);
    }

    #[test]
    fn lift_of_constant_is_one() {
        let inner = HypergeomSpec::real(&[], &[], 0.0).unwrap();
        let v = euler_integral_lift(&inner, c(0.6), c(2.3)).unwrap();
        assert!((v - 1.0).norm() < 1e-12);
    }

    #[test]
    fn lift_of_1f0_reproduces_2f1() {
        for &(a, b, cc, z) in &[(0.3, 0.2, 1.7, 1.0), (0.8, 1.2, 2.6, 0.7), (1.5, 0.5, 2.2, -0.8)] {
            let inner = HypergeomSpec::for_lift(vec![c(a)], vec![], c(z)).unwrap();
            let lifted = euler_integral_lift(&inner, c(b), c(cc)).unwrap();
            let series = pfq(&HypergeomSpec::real(&[a, b], &[cc], z).unwrap()).unwrap().value;
            assert!((lifted - series).norm() < 1e-8 * series.norm(), "{a} {b} {cc} {z}");
        }
    }

    #[test]
    fn nested_lift_matches_series_for_4f3() {
        let d = c(0.1);
        let upper = vec![c(1.0), c(0.5), c(2.0), c(2.0)];
        let lower = vec![2.0 - d, 2.0 + d, c(2.5)];
        let spec = HypergeomSpec::new(upper, lower, c(1.0)).unwrap();
        let series = pfq(&spec).unwrap().value;
        let quad = pfq_by_quadrature(&spec).unwrap();
        assert!((series - quad).norm() < 1e-8 * series.norm(), "{series} vs {quad}");
    }

    #[test]
    fn three_f_two_small_delta_limit() {
        let d = 0.05;
        let spec = HypergeomSpec::real(&[1.0 + d, d - 0.5, 1.0 + d], &[2.0 * d + 1.0, 1.5 + d], 1.0).unwrap();
        let v = pfq(&spec).unwrap().value;
        assert!((v.re - 0.55).abs() < 5e-3);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn complex_parameters_at_unit_argument() {
        let d = C64::new(0.4, 0.3);
        let spec = HypergeomSpec::new(vec![1.0 + d, d - 0.5, 1.0 + d], vec![2.0 * d + 1.0, 1.5 + d], c(1.0)).unwrap();
        let series = pfq(&spec).unwrap().value;
        let quad = pfq_by_quadrature(&spec).unwrap();
        assert!((series - quad).norm() < 1e-8 * series.norm(), "{series} vs {quad}");
    }

    #[test]
    fn euler_transformation_identity() {
        let (a, b, cc) = (0.4, 1.3, 2.1);
        for &z in &[0.1, 0.5, 0.85] {
            let lhs = pfq(&HypergeomSpec::real(&[a, b], &[cc], z).unwrap()).unwrap().value;
            let rhs = pfq(&HypergeomSpec::real(&[cc - a, cc - b], &[cc], z).unwrap()).unwrap().value
                * (1.0 - z).powf(cc - a - b);
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn derivative_recursion(a1 in 0.1f64..3.0, a2 in -1.5f64..2.0, b1 in 0.2f64..4.0, a3 in 0.1f64..2.0, b2 in 0.3f64..3.0) {
            let z = 0.5;
            let f = |zz: f64| pfq(&HypergeomSpec::real(&[a1, a2, a3], &[b1, b2], zz).unwrap()).unwrap().value.re;
            let h = 1e-4;
            let fd = (f(z + h) - f(z - h)) / (2.0 * h);
            let shifted = pfq(&HypergeomSpec::real(&[a1 + 1.0, a2 + 1.0, a3 + 1.0], &[b1 + 1.0, b2 + 1.0], z).unwrap()).unwrap().value.re;
            let exact = a1 * a2 * a3 / (b1 * b2) * shifted;
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
        }

        #[test]
        fn pfaff_euler_transformation(a in 0.1f64..2.0, b in 0.1f64..2.0, dc in 0.1f64..2.0, z in 0.0f64..0.9) {
            let cc = a.max(b) + dc;
            let lhs = pfq(&HypergeomSpec::real(&[a, b], &[cc], z).unwrap()).unwrap().value.re;
            let rhs = pfq(&HypergeomSpec::real(&[cc - a, cc - b], &[cc], z).unwrap()).unwrap().value.re
                * (1.0 - z).powf(cc - a - b);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs());
        }
    }
}

//! Large eigenvalues: competition thresholds at `τ = 0` and the one-spike
//! Hopf threshold for `τ > 0`.
//!
//! Both rest on the scalar NLEP with multiplier `α`, an eigenvalue of
//! `ℬ = (2/a_g)(2𝒢_λ/a_g − I)⁻¹𝒢_λ`. At `τ = 0` these are
//! `α_j = 2σ_j/(2σ_j − σ_1)`. The zero-crossing condition and the Hopf
//! condition are both the hypergeometric equation `H(δ1) = 4/κ`, with
//! `κ = α(4 − Λ)/(2 + α)` and `δ1 = sqrt(Λ)/2`.

use crate::equilibria::solve_symmetric;
use crate::error::{Error, Result};
use crate::greens::{assemble_matrices, helmholtz_green_lambda};
use crate::model::ModelParams;
use crate::specialfn::{gamma, pfq, pfq_by_quadrature, HypergeomSpec, C64, DEFAULT_TOL};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_DAMPING: f64 = 0.5;
const FIXED_POINT_MAX: usize = 200;

/// `θ` at which `cos(2θ/N) = (1 − a cos(π/N))/(a + 1)`.
pub fn threshold_theta(n: usize, a: f64) -> Result<f64> {
    let eta = (1.0 - a * (PI / n as f64).cos()) / (a + 1.0);
    if !(-1.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter { name: "a", reason: format!("cosine argument {eta} outside [-1, 1]") });
    }
    Ok(0.5 * n as f64 * eta.acos())
}

/// `γ_c = 1 − 3/(2χ̄ v_max0)`.
pub fn nlep_threshold_refined(v_max0: f64, chibar: f64) -> Result<f64> {
    if chibar * v_max0 <= 2.0 {
        return Err(Error::InvalidParameter { name: "v_max0", reason: "needs χ̄ v_max0 > 2".into() });
    }
    Ok(1.0 - 3.0 / (2.0 * chibar * v_max0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Nlep,
    Jacobian,
}

impl Kind {
    fn a(self, chibar: f64, v: f64) -> f64 {
        match self {
            Kind::Nlep => chibar * v / 3.0 - 0.5,
            Kind::Jacobian => chibar * v / 3.0 - 2.0 / 3.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Nlep => "competition threshold",
            Kind::Jacobian => "Jacobian-singularity threshold",
        }
    }
}

fn threshold_fixed_point(p: &ModelParams, n: usize, kind: Kind) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "N", reason: "must be positive".into() });
    }
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let base = p.with_n(n).with_tau(0.0);
    let chibar = p.chibar();
    let map = |d1: f64| -> Result<f64> {
        let eq = solve_symmetric(&base.at_d1(d1))?;
        let theta = threshold_theta(n, kind.a(chibar, eq.v_max0))?;
        Ok(base.d1_for_theta(theta))
    };
    // leading-order start: v_max0 from the caller's d1 (or a safe admissible one)
    let start = match solve_symmetric(&base) {
        Ok(_) => p.d1,
        Err(_) => 4.0 * base.mu * base.ubar / PI.powi(2),
    };
    let mut d1 = map(start)?;
    let mut history = vec![d1];
    for _ in 0..FIXED_POINT_MAX {
        let next = (1.0 - FIXED_POINT_DAMPING) * d1 + FIXED_POINT_DAMPING * map(d1)?;
        history.push(next);
        if (next - d1).abs() <= FIXED_POINT_TOL * d1.abs().max(1.0) {
            return Ok(next);
        }
        d1 = next;
    }
    Err(Error::FixedPoint { what: kind.name(), history })
}

/// `d1cN`: above it the `N`-spike state has a real positive large eigenvalue.
/// Infinite for `N = 1`.
pub fn competition_threshold(p: &ModelParams, n: usize) -> Result<f64> {
    threshold_fixed_point(p, n, Kind::Nlep)
}

/// `d1cN★`: largest `d1` at which the quasi-equilibrium Jacobian is singular.
pub fn competition_threshold_jacobian(p: &ModelParams, n: usize) -> Result<f64> {
    threshold_fixed_point(p, n, Kind::Jacobian)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionThresholds {
    pub n: usize,
    /// `None` when unbounded (`N = 1`).
    pub d1c_n: Option<f64>,
    pub d1c_n_star: Option<f64>,
    /// `η_N` at `d1cN`.
    pub eta_n: Option<f64>,
    /// `1 − 3/(2χ̄ v_max0)` at `d1cN`.
    pub gamma_c: Option<f64>,
}

pub fn competition_thresholds(p: &ModelParams, n: usize) -> Result<CompetitionThresholds> {
    let finite = |x: f64| x.is_finite().then_some(x);
    let d1c = finite(competition_threshold(p, n)?);
    let d1s = finite(competition_threshold_jacobian(p, n)?);
    let (eta_n, gamma_c) = match d1c {
        Some(d1) => {
            let eq = solve_symmetric(&p.with_n(n).with_tau(0.0).at_d1(d1))?;
            let a = Kind::Nlep.a(eq.chibar, eq.v_max0);
            (Some((1.0 - a * (PI / n as f64).cos()) / (a + 1.0)), Some(nlep_threshold_refined(eq.v_max0, eq.chibar)?))
        }
        None => (None, None),
    };
    Ok(CompetitionThresholds { n, d1c_n: d1c, d1c_n_star: d1s, eta_n, gamma_c })
}

/// `α_j = 2σ_j/(2σ_j − σ_1)` at `τ = 0`, in the order of the `σ_j`.
pub fn bcal_eigenvalues(p: &ModelParams) -> Result<Vec<f64>> {
    let set = assemble_matrices(&p.with_tau(0.0), C64::new(0.0, 0.0))?;
    let s1 = set.sigma[0].re;
    Ok(set.sigma.iter().map(|s| 2.0 * s.re / (2.0 * s.re - s1)).collect())
}

/// `ℬ = (2/a_g)(2𝒢_λ/a_g − I)⁻¹𝒢_λ`, assembled densely.
pub fn bcal_matrix(p: &ModelParams, lambda0: C64) -> Result<DMatrix<C64>> {
    let set = assemble_matrices(p, lambda0)?;
    let n = set.n;
    let ag = C64::new(set.a_g, 0.0);
    let lhs = set.g_lambda.map(|g| 2.0 * g / ag) - DMatrix::<C64>::identity(n, n);
    let inv = lhs.try_inverse().ok_or(Error::SingularMode { mode: n, eigenvalue: 0.0 })?;
    Ok(inv * &set.g_lambda * (2.0 / ag))
}

/// Principal NLEP multiplier `α` of a single spike at `λ0`:
/// `2r/(2r − 1)` with `r = G_λ(0;0)/G(0;0)`.
pub fn alpha_one_spike(p: &ModelParams, lambda0: C64) -> Result<C64> {
    let p1 = p.with_n(1);
    let set = assemble_matrices(&p1, lambda0)?;
    let r = set.sigma[0] / set.a_g;
    Ok(2.0 * r / (2.0 * r - 1.0))
}

/// `κ = α(4 − Λ)/(2 + α)`.
pub fn nlep_multiplier(alpha: C64, big_lambda: C64) -> Result<C64> {
    let den = 2.0 + alpha;
    if den.norm() < 1e-14 {
        return Err(Error::MultiplierPole);
    }
    Ok(alpha * (4.0 - big_lambda) / den)
}

/// `Λ = 4(λ0 + 1)/(χ̄ v_max0)²`.
pub fn big_lambda(lambda0: C64, chibar: f64, v_max0: f64) -> C64 {
    4.0 * (lambda0 + 1.0) / (chibar * v_max0).powi(2)
}

/// Constant `A` fixing the even symmetry of the particular solution.
pub fn a_constant(delta1: C64) -> Result<C64> {
    let half = C64::new(0.5, 0.0);
    let den = (half - delta1) * gamma(1.0 + 2.0 * delta1)? * gamma(half)?;
    if den.norm() < 1e-300 {
        return Err(Error::GammaPole(delta1.re));
    }
    Ok(C64::new(1.5, 0.0).powc(1.0 - delta1) * gamma(1.0 + delta1)? * gamma(half + delta1)? / den)
}

fn threshold_specs(delta1: C64, tol: f64) -> Result<(HypergeomSpec, HypergeomSpec)> {
    let c = |x: f64| C64::new(x, 0.0);
    let f43 = HypergeomSpec::new(
        vec![c(1.0), c(0.5), c(2.0), c(2.0)],
        vec![2.0 - delta1, 2.0 + delta1, c(2.5)],
        c(1.0),
    )?
    .with_tol(tol);
    let f32 = HypergeomSpec::new(
        vec![1.0 + delta1, delta1 - 0.5, 1.0 + delta1],
        vec![2.0 * delta1 + 1.0, 1.5 + delta1],
        c(1.0),
    )?
    .with_tol(tol);
    Ok((f43, f32))
}

fn threshold_combine(delta1: C64, f43: C64, f32: C64) -> Result<C64> {
    let half = C64::new(0.5, 0.0);
    let first = f43 / (1.0 - delta1 * delta1);
    let weight = a_constant(delta1)? / 3.0 * C64::new(1.5, 0.0).powc(1.0 + delta1) * gamma(1.0 + delta1)? * gamma(half)?
        / gamma(1.5 + delta1)?;
    Ok(first + weight * f32)
}

/// Left side `H(δ1)` of the threshold equation `H = 3/κ̄ = 4/κ`, by series.
pub fn threshold_lhs(delta1: C64) -> Result<C64> {
    threshold_lhs_with_tol(delta1, DEFAULT_TOL)
}

pub fn threshold_lhs_with_tol(delta1: C64, tol: f64) -> Result<C64> {
    let (f43, f32) = threshold_specs(delta1, tol)?;
    threshold_combine(delta1, pfq(&f43)?.value, pfq(&f32)?.value)
}

/// `H(δ1)` with both hypergeometric factors from nested Euler integrals.
pub fn threshold_lhs_quadrature(delta1: C64) -> Result<C64> {
    let (f43, f32) = threshold_specs(delta1, DEFAULT_TOL)?;
    threshold_combine(delta1, pfq_by_quadrature(&f43)?, pfq_by_quadrature(&f32)?)
}

/// `κ̄ = 3/H(δ1)` from the zero-eigenvalue threshold equation.
pub fn kappa_bar(delta1: f64) -> Result<f64> {
    Ok(3.0 / threshold_lhs(C64::new(delta1, 0.0))?.re)
}

/// Residual `H(δ1) − 4/κ` of the one-spike eigenvalue relation at `(τ, λ0)`.
pub fn eigen_residual(p: &ModelParams, v_max0: f64, tau: f64, lambda0: C64) -> Result<C64> {
    eigen_residual_with(p, v_max0, tau, lambda0, threshold_lhs)
}

fn eigen_residual_with(
    p: &ModelParams,
    v_max0: f64,
    tau: f64,
    lambda0: C64,
    lhs: impl Fn(C64) -> Result<C64>,
) -> Result<C64> {
    let chibar = p.chibar();
    let lam = big_lambda(lambda0, chibar, v_max0);
    let alpha = alpha_one_spike(&p.with_tau(tau), lambda0)?;
    let kappa = nlep_multiplier(alpha, lam)?;
    let delta1 = lam.sqrt() / 2.0;
    Ok(lhs(delta1)? - 4.0 / kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfResult {
    pub d1: f64,
    pub tau_c: f64,
    pub lambda_h: f64,
    pub v_max0: f64,
    /// `|H(δ1) − 4/κ|` at the solution.
    pub residual: f64,
    pub iterations: usize,
}

fn hopf_newton(p: &ModelParams, v: f64, guess: (f64, f64)) -> Result<HopfResult> {
    let f = |x: [f64; 2]| -> Result<[f64; 2]> {
        let r = eigen_residual(p, v, x[0].exp(), C64::new(0.0, x[1]))?;
        Ok([r.re, r.im])
    };
    let mut x = [guess.0.ln(), guess.1];
    let mut r = f(x)?;
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let mut history = vec![norm(r)];
    for it in 0..80 {
        if norm(r) < 1e-12 {
            if x[1] <= 0.0 {
                return Err(Error::SpuriousHopfRoot(x[1]));
            }
            return Ok(HopfResult { d1: p.d1, tau_c: x[0].exp(), lambda_h: x[1], v_max0: v, residual: norm(r), iterations: it });
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x;
            xp[k] += h;
            let rp = f(xp)?;
            jac[0][k] = (rp[0] - r[0]) / h;
            jac[1][k] = (rp[1] - r[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Newton { what: "Hopf threshold", history });
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut step = 1.0;
        loop {
            let xt = [x[0] + step * dx[0], x[1] + step * dx[1]];
            if let Ok(rt) = f(xt) {
                if norm(rt) < norm(r) {
                    x = xt;
                    r = rt;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(Error::Newton { what: "Hopf threshold", history });
            }
        }
        history.push(norm(r));
    }
    Err(Error::Newton { what: "Hopf threshold", history })
}

/// Local minima of `|residual|` on a log grid in `(τ, λ_H)`, best first.
fn hopf_seeds(p: &ModelParams, v: f64) -> Vec<(f64, f64)> {
    const K: usize = 33;
    let tau = |i: usize| 10f64.powf(-2.5 + 5.0 * i as f64 / (K - 1) as f64);
    let lh = |j: usize| 10f64.powf(-1.5 + 3.5 * j as f64 / (K - 1) as f64);
    let mut r = vec![[f64::INFINITY; K]; K];
    for i in 0..K {
        for j in 0..K {
            if let Ok(x) = eigen_residual(p, v, tau(i), C64::new(0.0, lh(j))) {
                r[i][j] = x.norm();
            }
        }
    }
    let mut minima = Vec::new();
    for i in 0..K {
        for j in 0..K {
            let here = r[i][j];
            let lower_neighbour = (i.saturating_sub(1)..=(i + 1).min(K - 1)).any(|a| (j.saturating_sub(1)..=(j + 1).min(K - 1)).any(|b| (a, b) != (i, j) && r[a][b] < here));
            if here.is_finite() && !lower_neighbour {
                minima.push(((tau(i), lh(j)), here));
            }
        }
    }
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    minima.into_iter().map(|(x, _)| x).take(8).collect()
}

/// Hopf threshold `(τ_c, λ_H)` of a single spike at `d1` (χ̄ held fixed).
///
/// The relation can have several roots `(τ, λ_H)`; the threshold is the one
/// with the smallest `τ`, so Newton runs from `guess` and from every scan seed.
pub fn hopf_solve(p: &ModelParams, d1: f64, guess: Option<(f64, f64)>) -> Result<HopfResult> {
    let p1 = p.with_n(1).with_tau(0.0).at_d1(d1);
    let v = solve_symmetric(&p1)?.v_max0;
    let mut best: Option<HopfResult> = None;
    let mut err = None;
    for seed in std::iter::once(guess.unwrap_or((1.0, 1.0))).chain(hopf_seeds(&p1, v)) {
        match hopf_newton(&p1, v, seed) {
            Ok(r) if best.as_ref().map_or(true, |b| r.tau_c < b.tau_c) => best = Some(r),
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    }
    best.ok_or_else(|| err.expect("at least one Newton run"))
}

/// `τ_c(d1)` traced by continuation; each solve starts from the previous one.
pub fn hopf_curve(p: &ModelParams, d1_values: &[f64]) -> Result<Vec<HopfResult>> {
    let mut out: Vec<HopfResult> = Vec::with_capacity(d1_values.len());
    for &d1 in d1_values {
        let guess = out.last().map(|r| (r.tau_c, r.lambda_h));
        out.push(hopf_solve(p, d1, guess)?);
    }
    Ok(out)
}

/// Eigenvalue `λ0` of the one-spike relation at fixed `τ`, by complex
/// Newton from `guess`.
pub fn track_eigenvalue(p: &ModelParams, d1: f64, tau: f64, guess: C64) -> Result<C64> {
    let p1 = p.with_n(1).with_tau(0.0).at_d1(d1);
    let v = solve_symmetric(&p1)?.v_max0;
    let f = |l: C64| eigen_residual(&p1, v, tau, l);
    let mut lam = guess;
    let mut r = f(lam)?;
    let mut history = vec![r.norm()];
    for _ in 0..80 {
        if r.norm() < 1e-12 {
            return Ok(lam);
        }
        let h = 1e-7 * lam.norm().max(1.0);
        let d = (f(lam + h)? - r) / h;
        let dl = -r / d;
        let mut step = 1.0;
        loop {
            let lt = lam + step * dl;
            if let Ok(rt) = f(lt) {
                if rt.norm() < r.norm() {
                    lam = lt;
                    r = rt;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(Error::Newton { what: "eigenvalue tracking", history });
            }
        }
        history.push(r.norm());
    }
    Err(Error::Newton { what: "eigenvalue tracking", history })
}

/// Re-evaluates a Hopf solution with the Euler-integral `pFq` oracle.
pub fn hopf_residual_quadrature(p: &ModelParams, h: &HopfResult) -> Result<f64> {
    let p1 = p.with_n(1).with_tau(0.0).at_d1(h.d1);
    Ok(eigen_residual_with(&p1, h.v_max0, h.tau_c, C64::new(0.0, h.lambda_h), threshold_lhs_quadrature)?.norm())
}

/// `G_λ(0; 0)/G(0; 0)` for a single spike, used by the τ = 0 reduction check.
pub fn one_spike_green_ratio(p: &ModelParams, lambda0: C64) -> Result<C64> {
    let p1 = p.with_n(1);
    Ok(helmholtz_green_lambda(0.0, 0.0, &p1, lambda0)? / helmholtz_green_lambda(0.0, 0.0, &p1.with_tau(0.0), C64::new(0.0, 0.0))?)
}

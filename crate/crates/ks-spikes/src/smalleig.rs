//! Small (translation) eigenvalues of the symmetric `N`-spike state.
//!
//! `λ_j = −(2ε³β0/3) χ̄ v_max0³ h_j`. The explicit `h_j` has no removable
//! singularities; the compositional route through `ξ_j`, `ω_j`, `a_g` and the
//! dense matrices `𝓜`, `𝓜̃` serve as oracles for it.

use crate::equilibria::{solve_symmetric, InnerCore, SpikeEquilibrium};
use crate::error::{Error, Result};
use crate::greens::{a_g, assemble_matrices, dense_symmetric_eigenvalues, theta_m, xi_closed_form, GreensMatrixSet};
use crate::model::ModelParams;
use crate::nlep::{competition_threshold, threshold_theta};
use crate::quad::integrate;
use crate::specialfn::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Half-width of the band around `θ_m = mπ/2` refused by the compositional form.
pub const THETA_M_BAND: f64 = 1e-4;

/// Condition bound on `I + 3ζ0𝒢/(χ̄ a_g v_max0)` before reporting `d1cN★` proximity.
const INVERSE_CONDITION_MAX: f64 = 1e10;

/// `θ_sN = (N/2) arccos((1 − a1)/(1 + a1))`, where every `h_j`, `j ≥ 2`, vanishes.
pub fn theta_sn(n: usize, a1: f64) -> f64 {
    0.5 * n as f64 * ((1.0 - a1) / (1.0 + a1)).acos()
}

/// `θ_cN`: vertical asymptote of `h_N`, the Jacobian threshold in `θ`.
pub fn theta_cn(n: usize, a1: f64) -> Result<f64> {
    threshold_theta(n, a1)
}

/// `h_j`, `j = 1..N`, in the explicit form.
pub fn h_explicit(theta: f64, n: usize, a1: f64, ubar: f64) -> Vec<f64> {
    let nf = n as f64;
    let c2 = (2.0 * theta / nf).cos();
    let lead = theta.powi(3) / ubar / (2.0 * theta / nf).sin();
    (1..=n)
        .map(|j| {
            if j == 1 {
                return lead;
            }
            let b = PI * (j - 1) as f64 / (2.0 * nf);
            let num = 1.0 - a1 - (1.0 + a1) * c2;
            let den = 1.0 + a1 * (2.0 * b).cos() - (1.0 + a1) * c2;
            lead * b.sin().powi(2) * num / den
        })
        .collect()
}

/// `h_j` composed from `ξ_j`, `ω_j` and `a_g`; refused within
/// [`THETA_M_BAND`] of each `θ_m`.
pub fn h_compositional(p: &ModelParams, eq: &SpikeEquilibrium) -> Result<Vec<f64>> {
    let n = eq.n;
    let theta = p.theta();
    for m in 1..n {
        if (theta - theta_m(m)).abs() < THETA_M_BAND {
            return Err(Error::NearRemovableSingularity { theta, m, band: THETA_M_BAND });
        }
    }
    let (mu, d1, ubar) = (p.mu, p.d1, p.ubar);
    let ag = a_g(p, n);
    let v = eq.v_max0;
    let zeta = eq.zeta0;
    let chibar = eq.chibar;
    let xi = xi_closed_form(theta, n);
    let shift = 3.0 * zeta / (chibar * ag * v) * (mu / (d1 * ubar)).sqrt();
    let csc2 = 1.0 / (2.0 * theta / n as f64).sin().powi(2);
    Ok((0..n)
        .map(|j| {
            let omega = if j == 0 {
                0.0
            } else {
                (mu / d1).powi(2) * csc2 * (PI * j as f64 / n as f64).sin().powi(2) / (-xi[j] + shift)
            };
            (mu * theta / d1 - 3.0 * zeta * omega / (chibar * ag * v)) / xi[j] + ubar * mu / d1 * ag
        })
        .collect())
}

/// `−(2ε³β0/3) χ̄ v³ h`.
pub fn lambda_from_h(h: f64, eq: &SpikeEquilibrium, beta0: f64) -> f64 {
    -2.0 * eq.eps.powi(3) * beta0 / 3.0 * eq.chibar * eq.v_max0.powi(3) * h
}

/// Small eigenvalues through the compositional route, with `β0 = 2/v_max0`.
pub fn small_eigs_compositional(p: &ModelParams, eq: &SpikeEquilibrium) -> Result<Vec<f64>> {
    let beta0 = 2.0 / eq.v_max0;
    Ok(h_compositional(p, eq)?.iter().map(|&h| lambda_from_h(h, eq, beta0)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallEigenReport {
    pub n: usize,
    pub d1: f64,
    pub theta: f64,
    pub v_max0: f64,
    pub a1: f64,
    pub h: Vec<f64>,
    /// With the asymptotic `β0 = 2/v_max0`.
    pub lambda: Vec<f64>,
    pub beta0: f64,
    /// `β0` by quadrature over the reconstructed core.
    pub beta0_quadrature: f64,
    pub theta_sn: f64,
    /// `None` when the cosine argument leaves `[−1, 1]` (small `a1`).
    pub theta_cn: Option<f64>,
    pub d1sn: f64,
    /// Columns of `Q_g`, one per mode.
    pub mode_eigenvectors: Vec<Vec<f64>>,
}

pub fn small_eigs_explicit(p: &ModelParams, eq: &SpikeEquilibrium) -> Result<SmallEigenReport> {
    let n = eq.n;
    let theta = p.theta();
    let h = h_explicit(theta, n, eq.a1, p.ubar);
    let beta = beta0(eq)?;
    let greens = assemble_matrices(&p.with_n(n).with_tau(0.0), C64::new(0.0, 0.0))?;
    let ts = theta_sn(n, eq.a1);
    Ok(SmallEigenReport {
        n,
        d1: p.d1,
        theta,
        v_max0: eq.v_max0,
        a1: eq.a1,
        lambda: h.iter().map(|&x| lambda_from_h(x, eq, beta.asymptotic)).collect(),
        h,
        beta0: beta.asymptotic,
        beta0_quadrature: beta.quadrature,
        theta_sn: ts,
        theta_cn: theta_cn(n, eq.a1).ok(),
        d1sn: p.d1_for_theta(ts),
        mode_eigenvectors: greens.q_g.column_iter().map(|c| c.iter().copied().collect()).collect(),
    })
}

/// `d1sN`: the self-consistent `d1` at `θ_sN`. Infinite for `N = 1`.
pub fn small_threshold_d1(p: &ModelParams, n: usize) -> Result<f64> {
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let base = p.with_n(n).with_tau(0.0);
    let map = |d1: f64| -> Result<f64> {
        let eq = solve_symmetric(&base.at_d1(d1))?;
        Ok(base.d1_for_theta(theta_sn(n, eq.a1)))
    };
    let start = if solve_symmetric(&base).is_ok() { p.d1 } else { 4.0 * p.mu * p.ubar / PI.powi(2) };
    let mut d1 = map(start)?;
    let mut history = vec![d1];
    for _ in 0..200 {
        let next = 0.5 * d1 + 0.5 * map(d1)?;
        history.push(next);
        if (next - d1).abs() <= 1e-14 * d1 {
            return Ok(next);
        }
        d1 = next;
    }
    Err(Error::FixedPoint { what: "small-eigenvalue threshold", history })
}

#[derive(Debug, Clone)]
pub struct MatrixM {
    pub m: DMatrix<f64>,
    pub m_tilde: DMatrix<f64>,
    /// Ascending.
    pub spectrum_m: Vec<f64>,
    pub spectrum_m_tilde: Vec<f64>,
    /// `Σ = (μ²/4d1²) csc²(2θ/N) 𝒮ℋ𝒮ᵀ`, diagonal in exact arithmetic.
    pub sigma: DMatrix<f64>,
}

/// `(I + 3ζ0𝒢/(χ̄ a_g v_max0))⁻¹`, refused near `d1cN★`.
fn screened_inverse(eq: &SpikeEquilibrium, greens: &GreensMatrixSet) -> Result<DMatrix<f64>> {
    let n = eq.n;
    let c = 3.0 * eq.zeta0 / (eq.chibar * greens.a_g * eq.v_max0);
    let a = DMatrix::<f64>::identity(n, n) + &greens.g * c;
    let sv = a.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    if !(cond < INVERSE_CONDITION_MAX) {
        return Err(Error::BifurcationProximity { what: "I + 3ζ0𝒢/(χ̄ a_g v_max0)", condition: cond });
    }
    a.try_inverse().ok_or(Error::BifurcationProximity { what: "I + 3ζ0𝒢/(χ̄ a_g v_max0)", condition: f64::INFINITY })
}

/// `𝓜` from the Green's, dipole and flux matrices, and `𝓜̃` from the
/// gradient and mixed-derivative matrices of `G` (DAE linearization).
pub fn build_matrix_m(p: &ModelParams, eq: &SpikeEquilibrium, greens: &GreensMatrixSet) -> Result<MatrixM> {
    let n = eq.n;
    let v = eq.v_max0;
    let ag = greens.a_g;
    let inv = screened_inverse(eq, greens)?;
    let ident = DMatrix::<f64>::identity(n, n);
    let b = eq.s0 * p.ubar * p.mu / (eq.eps * p.d1);
    let coupling = 2.0 * v * v * eq.zeta0 / ag;
    let cubic = 2.0 * eq.chibar / 3.0 * v.powi(3);

    let m = &greens.g_g * cubic - &greens.p * &inv * &greens.p_g * coupling + &ident * b;
    // ∂_{x_k} G(x_j; x_k) = G_x(x_k; x_j) by symmetry of G
    let grad_t = greens.p.transpose();
    let m_tilde = &greens.p * &inv * &grad_t * coupling - &greens.g_xy * cubic + &ident * b;

    let theta = p.theta();
    let shift = 3.0 * eq.zeta0 / (eq.chibar * ag * v) * (p.mu / (p.ubar * p.d1)).sqrt();
    let kappa: Vec<f64> = greens.kappa.iter().map(|k| k.re).collect();
    let hmat = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / (shift + kappa[i]) } else { 0.0 });
    let s = greens.q_g.transpose() * greens.c.transpose() * &greens.q;
    let scale = (p.mu / (2.0 * p.d1)).powi(2) / (2.0 * theta / n as f64).sin().powi(2);
    let sigma = &s * hmat * s.transpose() * scale;

    let sym = |a: &DMatrix<f64>| (a + a.transpose()) * 0.5;
    Ok(MatrixM {
        spectrum_m: dense_symmetric_eigenvalues(&sym(&m)),
        spectrum_m_tilde: dense_symmetric_eigenvalues(&sym(&m_tilde)),
        m,
        m_tilde,
        sigma,
    })
}

/// `ω_j` of the diagonal of `Σ`.
pub fn omega(p: &ModelParams, eq: &SpikeEquilibrium, greens: &GreensMatrixSet) -> Vec<f64> {
    let n = eq.n;
    let shift = 3.0 * eq.zeta0 / (eq.chibar * greens.a_g * eq.v_max0) * (p.mu / (p.ubar * p.d1)).sqrt();
    let csc2 = 1.0 / (2.0 * p.theta() / n as f64).sin().powi(2);
    (0..n)
        .map(|j| (p.mu / p.d1).powi(2) * csc2 * (PI * j as f64 / n as f64).sin().powi(2) / (shift + greens.kappa[j].re))
        .collect()
}

/// How `v_maxℓ` is obtained on the half-cell `|x| ≤ ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellAmplitude {
    /// `v e^{χ̄v} cot(θℓ) = 3ū/(2εθ)`.
    DominantBalance,
    /// Large root of the full amplitude equation of the symmetric state.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricPoint {
    pub n: usize,
    pub theta: f64,
    pub d1: f64,
    pub v_max: f64,
    /// `(1 − a1)/(1 + a1)` with `a1` from `v_max`.
    pub cos_arg: f64,
}

/// `v_maxℓ` from the dominant balance on the half-cell.
pub fn cell_amplitude(p: &ModelParams, ell: f64) -> Result<f64> {
    let theta = p.theta();
    let cot = 1.0 / (theta * ell).tan();
    if !(cot > 0.0) {
        return Err(Error::InvalidParameter { name: "ell", reason: format!("cot(θℓ) = {cot} must be positive") });
    }
    let chibar = p.chibar();
    let target = (1.5 * p.ubar / (p.eps() * theta) / cot).ln();
    // ln v + χ̄ v = target, increasing in v
    let f = |v: f64| v.ln() + chibar * v - target;
    let (mut lo, mut hi) = (1e-300_f64, target.abs().max(1.0) / chibar + 1.0);
    if f(hi) < 0.0 {
        return Err(Error::NoBracket { what: "cell amplitude", lo, hi });
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fv = f(v);
        if fv > 0.0 { hi = v } else { lo = v }
        let next = v - fv / (1.0 / v + chibar);
        let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= 1e-15 * v {
            return Ok(next);
        }
        v = next;
    }
    Ok(v)
}

/// `ℬ(ℓ) = v_maxℓ³ / sin(θℓ)`.
pub fn bcal_ell(p: &ModelParams, ell: f64) -> Result<f64> {
    Ok(cell_amplitude(p, ell)?.powi(3) / (p.theta() * ell).sin())
}

/// Closed-form `ℬ'(ℓ)`.
pub fn bcal_ell_derivative(p: &ModelParams, ell: f64) -> Result<f64> {
    let v = cell_amplitude(p, ell)?;
    let th = p.theta();
    let (s, c) = (th * ell).sin_cos();
    Ok(th * v.powi(3) / (s * s * c) * (3.0 / (1.0 + p.chibar() * v) - c * c))
}

/// `θ` (and `d1`) at which `ℬ'(1/N) = 0`, i.e. where asymmetric branches
/// leave the symmetric `N`-spike branch.
pub fn asymmetric_bifurcation_point(p: &ModelParams, n: usize, route: CellAmplitude) -> Result<AsymmetricPoint> {
    if n < 2 {
        return Err(Error::InvalidParameter { name: "N", reason: "needs at least two spikes".into() });
    }
    let chibar = p.chibar();
    let base = p.with_n(n).with_tau(0.0);
    let point = |v: f64, d1: f64| {
        let a1 = (chibar * v - 2.0) / 3.0;
        let theta = base.at_d1(d1).theta();
        AsymmetricPoint { n, theta, d1, v_max: v, cos_arg: (1.0 - a1) / (1.0 + a1) }
    };
    match route {
        CellAmplitude::Full => {
            let d1 = small_threshold_d1(&base, n)?;
            let v = solve_symmetric(&base.at_d1(d1))?.v_max0;
            Ok(point(v, d1))
        }
        CellAmplitude::DominantBalance => {
            let ell = 1.0 / n as f64;
            let g = |theta: f64| -> Result<f64> {
                let q = base.at_d1(base.d1_for_theta(theta));
                let v = cell_amplitude(&q, ell)?;
                Ok(3.0 / (1.0 + chibar * v) - (theta * ell).cos().powi(2))
            };
            let (mut lo, mut hi) = (1e-3, 0.5 * PI * n as f64 * (1.0 - 1e-9));
            let (glo, ghi) = (g(lo)?, g(hi)?);
            if glo.signum() == ghi.signum() {
                return Err(Error::NoBracket { what: "asymmetric bifurcation", lo, hi });
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid)?.signum() == glo.signum() { lo = mid } else { hi = mid }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            let theta = 0.5 * (lo + hi);
            let d1 = base.d1_for_theta(theta);
            let v = cell_amplitude(&base.at_d1(d1), ell)?;
            Ok(point(v, d1))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta0 {
    pub quadrature: f64,
    pub asymptotic: f64,
}

/// `β0 = −∫ y V0' dy / ∫ (V0')² dy` over the reconstructed core, and `2/v_max0`.
pub fn beta0(eq: &SpikeEquilibrium) -> Result<Beta0> {
    let core = InnerCore::new(eq.v_max0, eq.s0, eq.c0, eq.chibar);
    Ok(Beta0 { quadrature: core.beta0()?, asymptotic: 2.0 / eq.v_max0 })
}

/// Full-line `(∫ |y| |V0'| dy, ∫ (V0')² dy)` in `y`, by inverting the core profile.
pub fn beta0_full_line_integrals(core: &InnerCore) -> Result<(f64, f64)> {
    let span = core.v_max - core.s;
    let y_end = core.y_of_v(core.s + 1e-13 * span)?;
    let slope2 = |y: f64| core.v_of_y(y).map(|v| core.minus_two_k(v));
    let mut failure = None;
    let mut record = |r: Result<f64>| {
        r.unwrap_or_else(|e| {
            failure.get_or_insert(e);
            0.0
        })
    };
    let num = integrate(|y| y.abs() * record(slope2(y)).sqrt(), -y_end, y_end, 1e-13)?.0;
    let den = integrate(|y| record(slope2(y)), -y_end, y_end, 1e-13)?.0;
    match failure {
        Some(e) => Err(e),
        None => Ok((num, den)),
    }
}

/// Sweep rows `(d1, h_1..h_N, λ_1..λ_N, stable_small, stable_large)`.
pub fn sweep_csv(p: &ModelParams, n: usize, d1_values: &[f64]) -> Result<String> {
    let d1c = competition_threshold(p, n)?;
    let mut out = String::from("d1");
    for j in 1..=n {
        out.push_str(&format!(",h_{j}"));
    }
    for j in 1..=n {
        out.push_str(&format!(",lambda_{j}"));
    }
    out.push_str(",stable_small,stable_large\n");
    for &d1 in d1_values {
        let q = p.with_n(n).with_tau(0.0).at_d1(d1);
        let eq = solve_symmetric(&q)?;
        let r = small_eigs_explicit(&q, &eq)?;
        out.push_str(&format!("{d1:.16e}"));
        for x in r.h.iter().chain(&r.lambda) {
            out.push_str(&format!(",{x:.16e}"));
        }
        out.push_str(&format!(",{},{}\n", r.h.iter().all(|&h| h > 0.0), d1 < d1c));
    }
    Ok(out)
}

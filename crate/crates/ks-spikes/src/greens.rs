//! Helmholtz and dipole Green's functions on `(-1, 1)` and the structured
//! matrices built from them at spike locations.
//!
//! `G` solves `(d1/mu) G_xx + ubar G = δ(x - xk)` with Neumann ends, so
//! `[G_x] = mu/d1` across the source. In product form
//!
//! ```text
//! G(x; xk) = K cos(θ(1 + x<)) cos(θ(1 - x>)),   K = mu / (d1 θ sin 2θ)
//! ```
//!
//! which is free of the `1/cos` factors of the piecewise-tangent form. The
//! dipole function is `g = -∂G/∂xk`, with `(d1/mu)[g] = 1`.
//!
//! Matrices are assembled by point evaluation. The tridiagonal matrices
//! `D`, `D_g`, `C` and all spectra come from closed forms, so the product
//! identities between the two are genuine checks rather than tautologies.

use crate::error::{Error, Result};
use crate::model::{ModelParams, RESONANCE_BAND};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

type C64 = Complex64;

/// Trigonometric kernel shared by the real and complex evaluations.
#[derive(Debug, Clone, Copy)]
struct Kernel<T> {
    theta: T,
    k: T,
}

macro_rules! kernel_impl {
    ($t:ty) => {
        impl Kernel<$t> {
            fn g(&self, x: f64, xk: f64) -> $t {
                let (lo, hi) = if x < xk { (x, xk) } else { (xk, x) };
                self.k * (self.theta * (1.0 + lo)).cos() * (self.theta * (1.0 - hi)).cos()
            }
        }
    };
}
kernel_impl!(f64);
kernel_impl!(C64);

impl Kernel<f64> {
    fn g_x_left(&self, x: f64, xk: f64) -> f64 {
        -self.k * self.theta * (self.theta * (1.0 + x)).sin() * (self.theta * (1.0 - xk)).cos()
    }

    fn g_x_right(&self, x: f64, xk: f64) -> f64 {
        self.k * self.theta * (self.theta * (1.0 + xk)).cos() * (self.theta * (1.0 - x)).sin()
    }

    fn dipole_left(&self, x: f64, xk: f64) -> f64 {
        -self.k * self.theta * (self.theta * (1.0 + x)).cos() * (self.theta * (1.0 - xk)).sin()
    }

    fn dipole_right(&self, x: f64, xk: f64) -> f64 {
        self.k * self.theta * (self.theta * (1.0 + xk)).sin() * (self.theta * (1.0 - x)).cos()
    }

    /// `g_x`, continuous across the source.
    fn dipole_x(&self, x: f64, xk: f64) -> f64 {
        let (lo, hi) = if x < xk { (x, xk) } else { (xk, x) };
        self.k * self.theta * self.theta * (self.theta * (1.0 + lo)).sin() * (self.theta * (1.0 - hi)).sin()
    }
}

fn real_kernel(p: &ModelParams) -> Result<Kernel<f64>> {
    let theta = p.theta();
    check_full_domain_resonance(p)?;
    Ok(Kernel { theta, k: p.mu / (p.d1 * theta * (2.0 * theta).sin()) })
}

/// Rejects `d1` near any `d1Tm = 4 mu ubar/(m² π²)`, where `sin 2θ = 0`.
fn check_full_domain_resonance(p: &ModelParams) -> Result<()> {
    let m = (2.0 * p.theta() / PI).round();
    if m >= 1.0 {
        let d1t = 4.0 * p.mu * p.ubar / (m * m * PI * PI);
        if ((p.d1 - d1t) / d1t).abs() < RESONANCE_BAND {
            return Err(Error::ResonantD1 { d1: p.d1, mode: m as usize, resonance: d1t });
        }
    }
    Ok(())
}

/// `θ_λ = sqrt((mu/d1)(ubar - tau λ0/mu))`, principal branch.
pub fn theta_lambda(p: &ModelParams, lambda0: C64) -> C64 {
    ((p.mu / p.d1) * (p.ubar - p.tau * lambda0 / p.mu)).sqrt()
}

fn complex_kernel(p: &ModelParams, lambda0: C64) -> Result<Kernel<C64>> {
    let theta = theta_lambda(p, lambda0);
    let s = (2.0 * theta).sin();
    if s.norm() < RESONANCE_BAND {
        return Err(Error::ResonantD1 { d1: p.d1, mode: (2.0 * theta.re / PI).round() as usize, resonance: p.d1 });
    }
    Ok(Kernel { theta, k: p.mu / (p.d1 * theta * s) })
}

/// Helmholtz Green's function `G(x; xk)`.
pub fn helmholtz_green(x: f64, xk: f64, p: &ModelParams) -> Result<f64> {
    Ok(real_kernel(p)?.g(x, xk))
}

/// `G_λ(x; xk)` with `ubar` replaced by `ubar - tau λ0/mu`.
pub fn helmholtz_green_lambda(x: f64, xk: f64, p: &ModelParams, lambda0: C64) -> Result<C64> {
    Ok(complex_kernel(p, lambda0)?.g(x, xk))
}

/// `∂G/∂x`; at `x = xk` returns the one-sided limits' average, which is `R_x(xk; xk)`.
pub fn green_x(x: f64, xk: f64, p: &ModelParams) -> Result<f64> {
    let k = real_kernel(p)?;
    Ok(if x < xk {
        k.g_x_left(x, xk)
    } else if x > xk {
        k.g_x_right(x, xk)
    } else {
        0.5 * (k.g_x_left(x, xk) + k.g_x_right(x, xk))
    })
}

/// Regular part `R = G - (mu/(2 d1))|x - xk|`.
pub fn regular_part(x: f64, xk: f64, p: &ModelParams) -> Result<f64> {
    Ok(helmholtz_green(x, xk, p)? - p.mu / (2.0 * p.d1) * (x - xk).abs())
}

/// `∂²G/∂x∂xk`; on the diagonal this is `R_xy(xk; xk)`.
pub fn green_xy(x: f64, xk: f64, p: &ModelParams) -> Result<f64> {
    Ok(-real_kernel(p)?.dipole_x(x, xk))
}

/// Dipole Green's function `g(x; xk) = -∂G/∂xk`; at `x = xk` the average `<g>`.
pub fn dipole_green(x: f64, xk: f64, p: &ModelParams) -> Result<f64> {
    let k = real_kernel(p)?;
    Ok(if x < xk {
        k.dipole_left(x, xk)
    } else if x > xk {
        k.dipole_right(x, xk)
    } else {
        0.5 * (k.dipole_left(x, xk) + k.dipole_right(x, xk))
    })
}

/// `∂g/∂x`, continuous across the source.
pub fn dipole_green_x(x: f64, xk: f64, p: &ModelParams) -> Result<f64> {
    Ok(real_kernel(p)?.dipole_x(x, xk))
}

/// Common row sum `a_g = (1/2) sqrt(mu/(d1 ubar)) cot(θ/N)` of the Green's matrix.
pub fn a_g(p: &ModelParams, n: usize) -> f64 {
    0.5 * (p.mu / (p.d1 * p.ubar)).sqrt() / (p.theta() / n as f64).tan()
}

/// Entries of `D` and `D_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensScalars {
    pub theta: f64,
    pub theta_lambda: C64,
    pub d: C64,
    pub e: C64,
    pub f: C64,
    pub d_g: f64,
    pub e_g: f64,
    pub f_g: f64,
}

impl GreensScalars {
    pub fn new(p: &ModelParams, n: usize, lambda0: C64) -> Self {
        let nf = n as f64;
        let tl = theta_lambda(p, lambda0) / nf;
        let cot = |z: C64| z.cos() / z.sin();
        let d = tl.tan() - cot(2.0 * tl);
        let e = -2.0 * cot(2.0 * tl);
        let f = 1.0 / (2.0 * tl).sin();
        let phi = p.theta() / nf;
        let d_g = 1.0 / (2.0 * phi).tan() + 1.0 / phi.tan();
        let e_g = 2.0 / (2.0 * phi).tan();
        let f_g = -1.0 / (2.0 * phi).sin();
        Self { theta: p.theta(), theta_lambda: theta_lambda(p, lambda0), d, e, f, d_g, e_g, f_g }
    }
}

/// Everything assembled at the equally spaced locations `x_j⁰`.
#[derive(Debug, Clone)]
pub struct GreensMatrixSet {
    pub n: usize,
    pub locations: Vec<f64>,
    pub lambda0: C64,
    pub scalars: GreensScalars,
    /// `G(x_j; x_k)`
    pub g: DMatrix<f64>,
    /// `G_λ(x_j; x_k)`
    pub g_lambda: DMatrix<C64>,
    /// `G_x(x_j; x_k)`, diagonal `R_x(x_j; x_j)`
    pub p: DMatrix<f64>,
    /// `g(x_j; x_k)`, diagonal `<g>`
    pub p_g: DMatrix<f64>,
    /// `g_x(x_j; x_k)`
    pub g_g: DMatrix<f64>,
    /// `∂x∂y G(x_j; x_k)`, diagonal `R_xy`
    pub g_xy: DMatrix<f64>,
    pub d: DMatrix<C64>,
    pub d_g: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Eigenvalues of `G_λ` (closed form), ordered with `q_1` first.
    pub sigma: Vec<C64>,
    /// Eigenvalues of `D`.
    pub kappa: Vec<C64>,
    /// Eigenvalues of `D_g`.
    pub xi: Vec<f64>,
    /// Orthonormal eigenvectors of `D` (columns).
    pub q: DMatrix<f64>,
    /// Orthonormal eigenvectors of `D_g` (columns).
    pub q_g: DMatrix<f64>,
    pub a_g: f64,
}

impl GreensMatrixSet {
    /// `sqrt(mu/(d1 û))` with `û = ubar - tau λ0/mu`.
    pub fn prefactor(p: &ModelParams, lambda0: C64) -> C64 {
        theta_lambda(p, lambda0).inv() * (p.mu / p.d1)
    }

    /// `G = sqrt(mu/(d1 ubar)) D⁻¹` at `λ0 = 0` (real part of the complex route).
    pub fn g_from_tridiagonal(&self, p: &ModelParams) -> Result<DMatrix<f64>> {
        let d = self.d.map(|z| z.re);
        let inv = d.try_inverse().ok_or(Error::SingularMode { mode: 0, eigenvalue: 0.0 })?;
        Ok(inv * Self::prefactor(p, C64::new(0.0, 0.0)).re)
    }

    /// `G_g = (mu θ/d1) D_g⁻¹`.
    pub fn g_g_from_tridiagonal(&self, p: &ModelParams) -> Result<DMatrix<f64>> {
        let inv = self.d_g.clone().try_inverse().ok_or(Error::SingularMode { mode: 0, eigenvalue: 0.0 })?;
        Ok(inv * (p.mu * p.theta() / p.d1))
    }

    /// `P_g = -(mu/(2 d1)) csc(2θ/N) C D_g⁻¹`.
    pub fn p_g_from_tridiagonal(&self, p: &ModelParams) -> Result<DMatrix<f64>> {
        let inv = self.d_g.clone().try_inverse().ok_or(Error::SingularMode { mode: 0, eigenvalue: 0.0 })?;
        Ok(&self.c * inv * (-self.csc_factor(p)))
    }

    /// `P = -(mu/(2 d1)) csc(2θ/N) Cᵀ D⁻¹`, equivalently `-P_gᵀ`.
    pub fn p_from_tridiagonal(&self, p: &ModelParams) -> Result<DMatrix<f64>> {
        let d = self.d.map(|z| z.re);
        let inv = d.try_inverse().ok_or(Error::SingularMode { mode: 0, eigenvalue: 0.0 })?;
        Ok(self.c.transpose() * inv * (-self.csc_factor(p)))
    }

    fn csc_factor(&self, p: &ModelParams) -> f64 {
        p.mu / (2.0 * p.d1) / (2.0 * p.theta() / self.n as f64).sin()
    }

    /// Row-major CSV with index headers.
    pub fn matrix_csv(m: &DMatrix<f64>) -> String {
        let mut out = String::from("row");
        for j in 0..m.ncols() {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for i in 0..m.nrows() {
            out.push_str(&i.to_string());
            for j in 0..m.ncols() {
                out.push_str(&format!(",{:.16e}", m[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Assembles all matrices and spectra at `x_j⁰` for `N = p.n` spikes.
pub fn assemble_matrices(p: &ModelParams, lambda0: C64) -> Result<GreensMatrixSet> {
    let n = p.n;
    p.require_admissible()?;
    let kernel = real_kernel(p)?;
    let ckernel = complex_kernel(p, lambda0)?;
    let locations = p.symmetric_locations();
    let scalars = GreensScalars::new(p, n, lambda0);

    let kappa = kappa_closed_form(&scalars, n);
    for (j, k) in kappa.iter().enumerate() {
        let scale = scalars.e.norm().max(scalars.f.norm());
        if !k.norm().is_finite() || k.norm() < RESONANCE_BAND * scale {
            return Err(Error::SingularMode { mode: j + 1, eigenvalue: k.norm() });
        }
    }
    let pre = GreensMatrixSet::prefactor(p, lambda0);
    let sigma: Vec<C64> = kappa.iter().map(|k| pre / k).collect();
    let xi = xi_closed_form(p.theta(), n);

    let x = &locations;
    let g = DMatrix::from_fn(n, n, |i, j| kernel.g(x[i], x[j]));
    let g_lambda = DMatrix::from_fn(n, n, |i, j| ckernel.g(x[i], x[j]));
    let pm = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => kernel.g_x_left(x[i], x[j]),
        std::cmp::Ordering::Greater => kernel.g_x_right(x[i], x[j]),
        std::cmp::Ordering::Equal => 0.5 * (kernel.g_x_left(x[i], x[j]) + kernel.g_x_right(x[i], x[j])),
    });
    let p_g = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => kernel.dipole_left(x[i], x[j]),
        std::cmp::Ordering::Greater => kernel.dipole_right(x[i], x[j]),
        std::cmp::Ordering::Equal => 0.5 * (kernel.dipole_left(x[i], x[j]) + kernel.dipole_right(x[i], x[j])),
    });
    let g_g = DMatrix::from_fn(n, n, |i, j| kernel.dipole_x(x[i], x[j]));
    let g_xy = -&g_g;

    let (d, d_g, c) = tridiagonals(&scalars, n);
    let q = DMatrix::from_fn(n, n, |l, j| q_entry(l, j, n));
    let q_g = DMatrix::from_fn(n, n, |l, j| q_g_entry(l, j, n));

    Ok(GreensMatrixSet {
        n,
        locations,
        lambda0,
        scalars,
        g,
        g_lambda,
        p: pm,
        p_g,
        g_g,
        g_xy,
        d,
        d_g,
        c,
        sigma,
        kappa,
        xi,
        q,
        q_g,
        a_g: a_g(p, n),
    })
}

fn tridiagonals(s: &GreensScalars, n: usize) -> (DMatrix<C64>, DMatrix<f64>, DMatrix<f64>) {
    let zero = C64::new(0.0, 0.0);
    let mut d = DMatrix::from_element(n, n, zero);
    let mut d_g = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    if n == 1 {
        d[(0, 0)] = s.e + 2.0 * s.f;
        d_g[(0, 0)] = s.e_g - 2.0 * s.f_g;
        return (d, d_g, c);
    }
    for i in 0..n {
        d[(i, i)] = if i == 0 || i == n - 1 { s.d } else { s.e };
        d_g[(i, i)] = if i == 0 || i == n - 1 { s.d_g } else { s.e_g };
        if i + 1 < n {
            d[(i, i + 1)] = s.f;
            d[(i + 1, i)] = s.f;
            d_g[(i, i + 1)] = s.f_g;
            d_g[(i + 1, i)] = s.f_g;
        }
    }
    c[(0, 0)] = 1.0;
    c[(0, 1)] = 1.0;
    for i in 1..n - 1 {
        c[(i, i - 1)] = -1.0;
        c[(i, i + 1)] = 1.0;
    }
    c[(n - 1, n - 2)] = -1.0;
    c[(n - 1, n - 1)] = -1.0;
    (d, d_g, c)
}

/// `κ_1 = e + 2f`, `κ_j = e + 2f cos(π(j-1)/N)`.
fn kappa_closed_form(s: &GreensScalars, n: usize) -> Vec<C64> {
    (1..=n)
        .map(|j| s.e + 2.0 * s.f * (PI * (j - 1) as f64 / n as f64).cos())
        .collect()
}

/// `ξ_1 = 2 cot(θ/N)`, `ξ_j = 2 cot(2θ/N) - 2 csc(2θ/N) cos(π(j-1)/N)`.
pub fn xi_closed_form(theta: f64, n: usize) -> Vec<f64> {
    let phi = theta / n as f64;
    (1..=n)
        .map(|j| {
            if j == 1 {
                2.0 / phi.tan()
            } else {
                2.0 / (2.0 * phi).tan() - 2.0 / (2.0 * phi).sin() * (PI * (j - 1) as f64 / n as f64).cos()
            }
        })
        .collect()
}

/// `ξ̂_j = ξ_j cot(θ/N)` for `j >= 2`, in the two equivalent forms.
pub fn xi_hat_forms(theta: f64, n: usize, j: usize) -> (f64, f64) {
    let phi = theta / n as f64;
    let alpha = PI * (j - 1) as f64 / n as f64;
    let csc2 = 1.0 / (phi.sin() * phi.sin());
    let a = csc2 * ((2.0 * phi).cos() - alpha.cos());
    let b = -2.0 + 2.0 * (alpha / 2.0).sin().powi(2) * csc2;
    (a, b)
}

fn q_entry(l: usize, j: usize, n: usize) -> f64 {
    let nf = n as f64;
    if j == 0 {
        1.0 / nf.sqrt()
    } else {
        (2.0 / nf).sqrt() * (PI * j as f64 * (l as f64 + 0.5) / nf).cos()
    }
}

fn q_g_entry(l: usize, j: usize, n: usize) -> f64 {
    let nf = n as f64;
    if j == 0 {
        if l % 2 == 0 { 1.0 / nf.sqrt() } else { -1.0 / nf.sqrt() }
    } else {
        (2.0 / nf).sqrt() * (PI * j as f64 * (l as f64 + 0.5) / nf).sin()
    }
}

/// Dense symmetric eigenvalues, ascending; oracle for the closed forms.
pub fn dense_symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `θ` values `mπ/2` near which compositional formulas lose accuracy.
pub fn theta_m(m: usize) -> f64 {
    m as f64 * FRAC_PI_2
}

/// `Σ_k G(x; x_k) w_k` for arbitrary sources.
pub fn superpose(x: f64, sources: &[f64], weights: &DVector<f64>, p: &ModelParams) -> Result<f64> {
    let k = real_kernel(p)?;
    Ok(sources.iter().zip(weights.iter()).map(|(&xk, &w)| w * k.g(x, xk)).sum())
}

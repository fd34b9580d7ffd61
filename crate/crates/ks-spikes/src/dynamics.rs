//! Slow spike motion on the `O(ε⁻³)` time scale.
//!
//! Locations obey `ẋ_j = (2χ̄/3) ε³ β_j ℱ_j`, where
//! `ℱ_j = Σ_{k≠j} v_k³ G_x(x_j; x_k) + v_j³ R_x(x_j; x_j)` and the amplitudes
//! come from a quasi-equilibrium solve at the current locations.

use crate::equilibria::{amplitude_slope, solve_quasi, InnerCore, QuasiEquilibrium, SpikeEquilibrium};
use crate::error::{Error, Result};
use crate::greens::{green_x, green_xy, helmholtz_green};
use crate::model::ModelParams;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// How `β_j` is evaluated in the speed law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BetaRule {
    /// Projection integral over the reconstructed core of each spike.
    #[default]
    Quadrature,
    /// `2/v_max_j`.
    Asymptotic,
}

/// Far-field relation used to match the odd inner correction to the outer gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FarField {
    /// `U1' ~ V1' ~ C̄` as `|y| → ∞`.
    #[default]
    Leading,
    /// Keeps the background term: `U1' (1 − χ̄ s_j) → C̄`, a factor `1 − χ̄ s_j` on each velocity.
    FluxCorrected,
}

impl FarField {
    fn factor(self, q: &QuasiEquilibrium, j: usize) -> f64 {
        match self {
            FarField::Leading => 1.0,
            FarField::FluxCorrected => 1.0 - q.chibar * q.s[j],
        }
    }
}

pub fn beta_values(q: &QuasiEquilibrium, rule: BetaRule) -> Result<Vec<f64>> {
    (0..q.n())
        .map(|j| match rule {
            BetaRule::Quadrature => InnerCore::new(q.v_max[j], q.s[j], q.c[j], q.chibar).beta(),
            BetaRule::Asymptotic => Ok(2.0 / q.v_max[j]),
        })
        .collect()
}

/// `ℱ_j` at the quasi-equilibrium `q`.
pub fn forcing(p: &ModelParams, q: &QuasiEquilibrium) -> Result<Vec<f64>> {
    let x = &q.locations;
    (0..q.n())
        .map(|j| {
            let mut f = 0.0;
            for k in 0..q.n() {
                f += q.v_max[k].powi(3) * green_x(x[j], x[k], p)?;
            }
            Ok(f)
        })
        .collect()
}

/// Quasi-equilibrium at `locations`, retrying from the symmetric solution
/// when the warm start fails.
pub fn quasi_with_retry(p: &ModelParams, locations: &[f64], warm: Option<&QuasiEquilibrium>) -> Result<QuasiEquilibrium> {
    match solve_quasi(p, locations, warm) {
        Ok(q) => Ok(q),
        Err(e) if warm.is_some() => solve_quasi(p, locations, None).map_err(|_| e),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeState {
    pub t: f64,
    pub locations: Vec<f64>,
    pub quasi: QuasiEquilibrium,
    pub beta: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl DaeState {
    pub fn new(p: &ModelParams, locations: &[f64], rule: BetaRule, far: FarField) -> Result<Self> {
        let quasi = quasi_with_retry(p, locations, None)?;
        let beta = beta_values(&quasi, rule)?;
        let velocities = velocities(p, &quasi, &beta, far)?;
        Ok(Self { t: 0.0, locations: locations.to_vec(), quasi, beta, velocities })
    }
}

fn velocities(p: &ModelParams, q: &QuasiEquilibrium, beta: &[f64], far: FarField) -> Result<Vec<f64>> {
    let scale = 2.0 * p.chibar() / 3.0 * p.eps().powi(3);
    Ok(forcing(p, q)?.iter().zip(beta).enumerate().map(|(j, (f, b))| scale * far.factor(q, j) * b * f).collect())
}

/// Velocities at `locations` with `β_j` evaluated fresh by `rule`.
pub fn dae_rhs(p: &ModelParams, locations: &[f64], warm: Option<&QuasiEquilibrium>, rule: BetaRule) -> Result<(Vec<f64>, QuasiEquilibrium)> {
    let q = quasi_with_retry(p, locations, warm)?;
    let beta = beta_values(&q, rule)?;
    Ok((velocities(p, &q, &beta, FarField::Leading)?, q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub beta_rule: BetaRule,
    pub far_field: FarField,
    /// Samples are taken exactly at these times; empty records every accepted step.
    pub sample_times: Vec<f64>,
    /// Halt when two spikes (or a spike and the boundary) come within this many `ε`.
    pub collision_eps: f64,
    pub max_steps: usize,
}

impl Default for DaeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, beta_rule: BetaRule::Quadrature, far_field: FarField::Leading, sample_times: Vec::new(), collision_eps: 5.0, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaeSample {
    pub t: f64,
    pub locations: Vec<f64>,
    pub v_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<DaeSample>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |s| s.locations.len());
        let mut out = String::from("t");
        for j in 1..=n {
            out.push_str(&format!(",x_{j}"));
        }
        for j in 1..=n {
            out.push_str(&format!(",v_max_{j}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{:.16e}", s.t));
            for x in s.locations.iter().chain(&s.v_max) {
                out.push_str(&format!(",{x:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// First time at which `f(sample)` crosses `level`, linearly interpolated.
    pub fn crossing_time(&self, level: f64, f: impl Fn(&DaeSample) -> f64) -> Option<f64> {
        self.samples.windows(2).find_map(|w| {
            let (a, b) = (f(&w[0]) - level, f(&w[1]) - level);
            (a.signum() != b.signum() || b == 0.0).then(|| w[0].t + (w[1].t - w[0].t) * a / (a - b))
        })
    }
}

fn check_gaps(x: &[f64], limit: f64, t: f64) -> Result<()> {
    let n = x.len();
    if x[0] + 1.0 < limit {
        return Err(Error::SpikeCollision { i: 0, j: 0, gap: x[0] + 1.0, t });
    }
    if 1.0 - x[n - 1] < limit {
        return Err(Error::SpikeCollision { i: n - 1, j: n - 1, gap: 1.0 - x[n - 1], t });
    }
    for j in 1..n {
        let gap = x[j] - x[j - 1];
        if gap < limit {
            return Err(Error::SpikeCollision { i: j - 1, j, gap, t });
        }
    }
    Ok(())
}

// Dormand–Prince 5(4)
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates the DAE from `x0` to `t_end`. `β_j` is refreshed once per
/// accepted step; every stage re-solves the algebraic system warm-started
/// from the last accepted state.
pub fn integrate(p: &ModelParams, x0: &[f64], t_end: f64, opts: &DaeOptions) -> Result<Trajectory> {
    let n = x0.len();
    let limit = opts.collision_eps * p.eps();
    check_gaps(x0, limit, 0.0)?;
    let mut state = DaeState::new(p, x0, opts.beta_rule, opts.far_field)?;
    let scale = 2.0 * p.chibar() / 3.0 * p.eps().powi(3);
    let sample = |s: &DaeState| DaeSample { t: s.t, locations: s.locations.clone(), v_max: s.quasi.v_max.clone() };
    let mut samples = Vec::new();
    let mut pending: Vec<f64> = opts.sample_times.iter().copied().filter(|&t| t >= 0.0 && t <= t_end).collect();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    while pending.last() == Some(&0.0) {
        pending.pop();
        samples.push(sample(&state));
    }
    if opts.sample_times.is_empty() {
        samples.push(sample(&state));
    }
    let speed = state.velocities.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut dt = if speed > 0.0 { (1e-3 / speed).min(t_end) } else { 1e-2 * t_end };
    let (mut accepted, mut rejected) = (0usize, 0usize);

    while state.t < t_end {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepCollapse { dt, t: state.t });
        }
        let target = pending.last().copied().unwrap_or(t_end).min(t_end);
        let h = dt.min(target - state.t);
        let beta = state.beta.clone();
        let eval = |x: &[f64], warm: &QuasiEquilibrium| -> Result<(Vec<f64>, QuasiEquilibrium)> {
            if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|&v| !(v > -1.0 && v < 1.0)) {
                return Err(Error::InvalidParameter { name: "locations", reason: "left the ordered interior".into() });
            }
            let q = quasi_with_retry(p, x, Some(warm))?;
            let f = forcing(p, &q)?;
            Ok((f.iter().zip(&beta).enumerate().map(|(j, (f, b))| scale * opts.far_field.factor(&q, j) * b * f).collect(), q))
        };
        let mut k: Vec<Vec<f64>> = vec![state.velocities.clone()];
        let mut last_q = state.quasi.clone();
        let mut stage_failed = false;
        for s in 1..7 {
            let xs: Vec<f64> = (0..n).map(|i| state.locations[i] + h * (0..s).map(|r| A[s][r] * k[r][i]).sum::<f64>()).collect();
            match eval(&xs, &state.quasi) {
                Ok((ks, q)) => {
                    k.push(ks);
                    last_q = q;
                }
                Err(_) => {
                    stage_failed = true;
                    break;
                }
            }
        }
        if stage_failed {
            rejected += 1;
            dt = 0.25 * h;
            if dt < 1e-12 * state.t.max(1.0) {
                return Err(Error::StepCollapse { dt, t: state.t });
            }
            continue;
        }
        let x5: Vec<f64> = (0..n).map(|i| state.locations[i] + h * (0..7).map(|r| B5[r] * k[r][i]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|i| {
                let x4 = state.locations[i] + h * (0..7).map(|r| B4[r] * k[r][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * x5[i].abs().max(state.locations[i].abs());
                ((x5[i] - x4) / sc).powi(2)
            })
            .sum::<f64>()
            .sqrt()
            / (n as f64).sqrt();
        if err <= 1.0 {
            state.t += h;
            state.locations = x5;
            state.quasi = last_q;
            check_gaps(&state.locations, limit, state.t)?;
            state.beta = beta_values(&state.quasi, opts.beta_rule)?;
            state.velocities = velocities(p, &state.quasi, &state.beta, opts.far_field)?;
            accepted += 1;
            if pending.last().is_some_and(|&t| (t - state.t).abs() <= 1e-12 * t.max(1.0)) {
                pending.pop();
                samples.push(sample(&state));
            } else if opts.sample_times.is_empty() {
                samples.push(sample(&state));
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            dt = (h * grow).max(dt.min(h));
        } else {
            rejected += 1;
            dt = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
            if dt < 1e-12 * state.t.max(1.0) {
                return Err(Error::StepCollapse { dt, t: state.t });
            }
        }
    }
    Ok(Trajectory { samples, accepted_steps: accepted, rejected_steps: rejected })
}

/// `dv_max/ds` used in the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SlopeRule {
    /// `−ζ0/(χ̄ s0)`, the leading term as `ε → 0`.
    #[default]
    Asymptotic,
    /// Implicit derivative of the full amplitude equation.
    Exact,
}

/// `𝒥 = (∂ℱ_j/∂x_i)` at the symmetric equilibrium, assembled from `G`,
/// `∂_x G`, `∂_x∂_y G` evaluated at the spike locations.
pub fn forcing_jacobian(p: &ModelParams, eq: &SpikeEquilibrium, rule: SlopeRule) -> Result<DMatrix<f64>> {
    let n = eq.n;
    let x = &eq.locations;
    let v = eq.v_max0;
    let eps = eq.eps;
    let chibar = eq.chibar;
    let mut g = DMatrix::zeros(n, n);
    let mut grad = DMatrix::zeros(n, n);
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            g[(j, k)] = helmholtz_green(x[j], x[k], p)?;
            grad[(j, k)] = green_x(x[j], x[k], p)?;
            hess[(j, k)] = green_xy(x[j], x[k], p)?;
        }
    }
    let slope = match rule {
        SlopeRule::Asymptotic => -eq.zeta0 / (chibar * eq.s0),
        SlopeRule::Exact => amplitude_slope(v, eq.s0, chibar),
    };
    // ∇s = (I − 2χ̄ε v² v' 𝒢)⁻¹ (2χ̄ε/3) v³ (∇𝒢)ᵀ
    let screen = DMatrix::<f64>::identity(n, n) - &g * (2.0 * chibar * eps * v * v * slope);
    let svd = screen.clone().svd(false, false);
    let cond = svd.singular_values.max() / svd.singular_values.min();
    if !(cond < 1e10) {
        return Err(Error::BifurcationProximity { what: "screened Green's matrix", condition: cond });
    }
    let inv = screen.try_inverse().ok_or(Error::BifurcationProximity { what: "screened Green's matrix", condition: f64::INFINITY })?;
    let grad_s = inv * grad.transpose() * (2.0 * chibar * eps / 3.0 * v.powi(3));
    let row_sum = g.row(0).sum();
    Ok(&grad * grad_s * (3.0 * v * v * slope) + hess * v.powi(3)
        - DMatrix::<f64>::identity(n, n) * (p.ubar * p.mu / p.d1 * row_sum * v.powi(3)))
}

/// `𝓜̃ = −(2χ̄/3) 𝒥` with the leading-order amplitude slope.
pub fn linearize_at_equilibrium(p: &ModelParams, eq: &SpikeEquilibrium) -> Result<DMatrix<f64>> {
    Ok(forcing_jacobian(p, eq, SlopeRule::Asymptotic)? * (-2.0 * eq.chibar / 3.0))
}

/// Central finite differences of `ℱ` (with full quasi-equilibrium re-solves).
pub fn forcing_jacobian_fd(p: &ModelParams, eq: &SpikeEquilibrium, h: f64) -> Result<DMatrix<f64>> {
    let n = eq.n;
    let base = eq.as_quasi();
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut xp = eq.locations.clone();
        let mut xm = eq.locations.clone();
        xp[i] += h;
        xm[i] -= h;
        let fp = forcing(p, &solve_quasi(p, &xp, Some(&base))?)?;
        let fm = forcing(p, &solve_quasi(p, &xm, Some(&base))?)?;
        for j in 0..n {
            jac[(j, i)] = (fp[j] - fm[j]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::solve_symmetric;
    use crate::greens::assemble_matrices;
    use crate::smalleig::build_matrix_m;
    use crate::specialfn::C64;

    fn left_fig() -> ModelParams {
        ModelParams::new(1.0, 0.02, 1.0, 0.25, 2.0, 0.0, 1).unwrap()
    }

    fn right_fig() -> ModelParams {
        ModelParams::new(1.0, 0.005, 1.0, 1.0, 2.0, 0.0, 2).unwrap()
    }

    #[test]
    fn equally_spaced_spikes_do_not_move() {
        for n in 1..=4 {
            let p = right_fig().with_n(n);
            let (vel, q) = dae_rhs(&p, &p.symmetric_locations(), None, BetaRule::Quadrature).unwrap();
            assert!(vel.iter().all(|v| v.abs() < 1e-10), "{vel:?}");
            assert!(q.residual_norm < 1e-10);
        }
    }

    #[test]
    fn single_spike_drifts_to_centre() {
        let p = left_fig();
        let (v, _) = dae_rhs(&p, &[-0.1], None, BetaRule::Quadrature).unwrap();
        assert!(v[0] > 0.0);
        let (v, _) = dae_rhs(&p, &[0.1], None, BetaRule::Quadrature).unwrap();
        assert!(v[0] < 0.0);
    }

    #[test]
    fn beta_rules_share_direction() {
        let p = right_fig();
        let (a, _) = dae_rhs(&p, &[-0.6, 0.55], None, BetaRule::Quadrature).unwrap();
        let (b, _) = dae_rhs(&p, &[-0.6, 0.55], None, BetaRule::Asymptotic).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.signum() == y.signum());
        }
    }

    #[test]
    fn flux_corrected_velocity_is_scaled_leading_velocity() {
        let p = right_fig();
        let a = DaeState::new(&p, &[-0.6, 0.55], BetaRule::Quadrature, FarField::Leading).unwrap();
        let b = DaeState::new(&p, &[-0.6, 0.55], BetaRule::Quadrature, FarField::FluxCorrected).unwrap();
        for j in 0..2 {
            let f = 1.0 - a.quasi.chibar * a.quasi.s[j];
            assert!(f > 0.0 && f < 1.0);
            assert!((b.velocities[j] - f * a.velocities[j]).abs() <= 1e-12 * a.velocities[j].abs());
        }
    }

    #[test]
    fn one_spike_converges_monotonically() {
        let p = left_fig();
        let t_end = 40.0 / p.eps().powi(3);
        let traj = integrate(&p, &[-0.1], t_end, &DaeOptions::default()).unwrap();
        let xs: Vec<f64> = traj.samples.iter().map(|s| s.locations[0]).collect();
        assert!(xs.windows(2).all(|w| w[1] >= w[0] - 1e-9 && w[1] <= 1e-9), "{xs:?}");
        assert!(xs.last().unwrap().abs() < 1e-3, "{}", xs.last().unwrap());
    }

    #[test]
    fn two_spikes_relax_symmetrically() {
        let p = right_fig();
        let t_end = 40.0 / p.eps().powi(3);
        let opts = DaeOptions { sample_times: (0..=20).map(|k| t_end * k as f64 / 20.0).collect(), ..DaeOptions::default() };
        let traj = integrate(&p, &[-0.6, 0.6], t_end, &opts).unwrap();
        assert_eq!(traj.samples.len(), 21);
        for s in &traj.samples {
            assert!((s.locations[0] + s.locations[1]).abs() < 1e-10);
        }
        let end = traj.samples.last().unwrap();
        assert!((end.locations[1] - 0.5).abs() < 1e-3, "{:?}", end.locations);
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,x_1,x_2,v_max_1,v_max_2\n"));
    }

    #[test]
    fn collision_is_reported() {
        let p = right_fig();
        let e = integrate(&p, &[-0.02, 0.02], 1.0, &DaeOptions::default()).unwrap_err();
        assert!(matches!(e, Error::SpikeCollision { .. }));
    }

    #[test]
    fn linearization_matches_small_eigenvalue_matrix() {
        for n in 2..=4 {
            for d1 in [0.4, 0.8, 1.5] {
                let p = right_fig().with_n(n).at_d1(d1);
                let Ok(eq) = solve_symmetric(&p) else { continue };
                let greens = assemble_matrices(&p, C64::new(0.0, 0.0)).unwrap();
                let Ok(mm) = build_matrix_m(&p, &eq, &greens) else { continue };
                let mt = linearize_at_equilibrium(&p, &eq).unwrap();
                assert!((&mt - &mm.m).amax() < 1e-8 * mm.m.amax(), "N={n} d1={d1}");
            }
        }
    }

    #[test]
    fn finite_differences_match_exact_slope_jacobian() {
        for (n, d1) in [(1, 1.0), (2, 0.8), (3, 0.6)] {
            let p = right_fig().with_n(n).at_d1(d1);
            let eq = solve_symmetric(&p).unwrap();
            let fd = forcing_jacobian_fd(&p, &eq, 1e-5).unwrap();
            let exact = forcing_jacobian(&p, &eq, SlopeRule::Exact).unwrap();
            assert!((&fd - &exact).amax() < 1e-4 * exact.amax(), "N={n}:\n{fd}\n{exact}");
        }
    }

    #[test]
    fn asymptotic_slope_gap_shrinks_with_eps() {
        let mut last = f64::INFINITY;
        for d2 in [1e-2, 1e-4, 1e-8] {
            let p = right_fig().with_d2(d2).at_d1(0.8);
            let eq = solve_symmetric(&p).unwrap();
            let a = forcing_jacobian(&p, &eq, SlopeRule::Asymptotic).unwrap();
            let b = forcing_jacobian(&p, &eq, SlopeRule::Exact).unwrap();
            let gap = (&a - &b).amax() / b.amax();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn one_spike_linearization_is_stable() {
        for d1 in [0.9, 1.5, 3.0, 10.0] {
            let p = left_fig().with_d2(0.0004).at_d1(d1);
            let eq = solve_symmetric(&p).unwrap();
            assert!(forcing_jacobian(&p, &eq, SlopeRule::Asymptotic).unwrap()[(0, 0)] < 0.0);
            assert!(forcing_jacobian(&p, &eq, SlopeRule::Exact).unwrap()[(0, 0)] < 0.0);
        }
    }

    #[test]
    fn mirrored_start_gives_mirrored_path() {
        let p = left_fig();
        let t_end = 5.0 / p.eps().powi(3);
        let opts = DaeOptions { sample_times: (0..=10).map(|k| t_end * k as f64 / 10.0).collect(), ..DaeOptions::default() };
        let a = integrate(&p, &[-0.1], t_end, &opts).unwrap();
        let b = integrate(&p, &[0.1], t_end, &opts).unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.locations[0] + sb.locations[0]).abs() < 1e-10);
            assert!((sa.v_max[0] - sb.v_max[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn halving_eps_slows_motion_by_about_eight() {
        let half_time = |d2: f64| {
            let p = left_fig().with_d2(d2);
            let traj = integrate(&p, &[-0.1], 20.0 / p.eps().powi(3), &DaeOptions::default()).unwrap();
            traj.crossing_time(-0.05, |s| s.locations[0]).unwrap()
        };
        let ratio = half_time(0.005) / half_time(0.02);
        assert!((6.0..=10.0).contains(&ratio), "{ratio}");
    }
}

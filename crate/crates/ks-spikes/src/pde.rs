//! Finite-volume solver for the full time-dependent system.
//!
//! Cell-centred grid on `(-1, 1)` with zero flux at both walls. The
//! chemotactic flux `-d1 u_x + chi u v_x` uses the Scharfetter–Gummel face
//! formula, which reduces to upwinding for large cell Péclet numbers and is
//! exact for `u ∝ exp(chibar v)`. Time stepping is linearly implicit Euler
//! on the coupled system, one block-tridiagonal solve per step, with the
//! step size cut back whenever a step would leave the nonnegative cone.

use crate::equilibria::{build_profile, solve_quasi};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// `max(2048, ceil(40/ε))`.
pub fn default_cells(eps: f64) -> usize {
    2048usize.max((40.0 / eps).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub n_cells: usize,
    pub h: f64,
}

impl PdeGrid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 8 {
            return Err(Error::InvalidParameter { name: "n_cells", reason: format!("need at least 8 cells, got {n_cells}") });
        }
        Ok(Self { n_cells, h: 2.0 / n_cells as f64 })
    }

    pub fn for_params(p: &ModelParams) -> Self {
        Self::new(default_cells(p.eps())).expect("default grid is valid")
    }

    pub fn x(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.h
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PdeState {
    pub fn flat(grid: &PdeGrid, value: f64) -> Self {
        Self { t: 0.0, u: vec![value; grid.n_cells], v: vec![value; grid.n_cells] }
    }

    /// Composite asymptotic quasi-equilibrium at `locations`, sampled at cell centres.
    pub fn from_profile(p: &ModelParams, grid: &PdeGrid, locations: &[f64]) -> Result<Self> {
        let q = solve_quasi(p, locations, None)?;
        let profile = build_profile(&q, p)?;
        let mut u = Vec::with_capacity(grid.n_cells);
        let mut v = Vec::with_capacity(grid.n_cells);
        for x in grid.centers() {
            let (a, b) = profile.eval(x)?;
            u.push(a.max(0.0));
            v.push(b.max(0.0));
        }
        Ok(Self { t: 0.0, u, v })
    }

    pub fn snapshot_csv(&self, grid: &PdeGrid) -> String {
        let mut out = String::from("x,u,v\n");
        for i in 0..grid.n_cells {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", grid.x(i), self.u[i], self.v[i]));
        }
        out
    }
}

/// `z / (e^z - 1)`.
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

/// `d/dz [z / (e^z - 1)]`.
fn bernoulli_prime(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        -0.5 + z / 6.0
    } else {
        let b = bernoulli(z);
        b * (1.0 - bernoulli(-z)) / z
    }
}

/// Block Thomas algorithm for 2×2 blocks; `lower[0]` and `upper[n-1]` are ignored.
fn solve_block_tridiagonal(lower: &[Matrix2<f64>], diag: &[Matrix2<f64>], upper: &[Matrix2<f64>], rhs: &mut [Vector2<f64>], work: &mut [Matrix2<f64>]) -> bool {
    let n = diag.len();
    let Some(inv) = diag[0].try_inverse() else { return false };
    work[0] = inv * upper[0];
    rhs[0] = inv * rhs[0];
    for i in 1..n {
        let Some(inv) = (diag[i] - lower[i] * work[i - 1]).try_inverse() else { return false };
        if i + 1 < n {
            work[i] = inv * upper[i];
        }
        rhs[i] = inv * (rhs[i] - lower[i] * rhs[i - 1]);
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= work[i] * next;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Target for `max|Δu| / max u` per step.
    pub target_change: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { dt_init: 1e-3, dt_min: 1e-10, dt_max: 1.0, target_change: 0.02 }
    }
}

/// Owns the grid, parameters and scratch buffers for one simulation.
#[derive(Debug, Clone)]
pub struct PdeSolver {
    pub params: ModelParams,
    pub grid: PdeGrid,
    /// Relaxation constant of the `u` equation; the model's `tau` if positive, else 1.
    pub tau: f64,
    pub control: StepControl,
    dt: f64,
    lower: Vec<Matrix2<f64>>,
    diag: Vec<Matrix2<f64>>,
    upper: Vec<Matrix2<f64>>,
    work: Vec<Matrix2<f64>>,
}

impl PdeSolver {
    pub fn new(params: ModelParams, grid: PdeGrid) -> Self {
        let n = grid.n_cells;
        let tau = if params.tau > 0.0 { params.tau } else { 1.0 };
        let control = StepControl::default();
        let z = vec![Matrix2::zeros(); n];
        Self { params, grid, tau, dt: control.dt_init, control, lower: z.clone(), diag: z.clone(), upper: z.clone(), work: z }
    }

    pub fn with_control(mut self, control: StepControl) -> Self {
        self.dt = control.dt_init;
        self.control = control;
        self
    }

    pub fn set_d1(&mut self, d1: f64) {
        self.params = self.params.at_d1(d1);
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Right-hand side `(τ u_t, v_t)` per cell; fills the Jacobian blocks as a side effect.
    fn assemble(&mut self, state: &PdeState) -> Vec<Vector2<f64>> {
        let n = self.grid.n_cells;
        let p = self.params;
        let h2 = self.grid.h * self.grid.h;
        let d = p.d1 / h2;
        let k = p.d2 / h2;
        let chibar = p.chi / p.d1;
        let (u, v) = (&state.u, &state.v);
        let mut f = vec![Vector2::zeros(); n];
        for i in 0..n {
            f[i] = Vector2::new(p.mu * u[i] * (p.ubar - u[i]), u[i] - v[i]);
            self.diag[i] = Matrix2::new(p.mu * (p.ubar - 2.0 * u[i]), 0.0, 1.0, -1.0);
            self.lower[i] = Matrix2::zeros();
            self.upper[i] = Matrix2::zeros();
        }
        // face i+1/2: G = a u_i - b u_{i+1}, flux per unit length squared
        for i in 0..n - 1 {
            let pe = chibar * (v[i + 1] - v[i]);
            let a = d * bernoulli(-pe);
            let b = d * bernoulli(pe);
            let g = a * u[i] - b * u[i + 1];
            let dg = -d * (bernoulli_prime(-pe) * u[i] + bernoulli_prime(pe) * u[i + 1]) * chibar;
            f[i][0] -= g;
            f[i + 1][0] += g;
            // ∂G/∂u_i = a, ∂G/∂u_{i+1} = -b, ∂G/∂v_{i+1} = dg, ∂G/∂v_i = -dg
            self.diag[i][(0, 0)] -= a;
            self.upper[i][(0, 0)] += b;
            self.upper[i][(0, 1)] -= dg;
            self.diag[i][(0, 1)] += dg;
            self.diag[i + 1][(0, 0)] -= b;
            self.lower[i + 1][(0, 0)] += a;
            self.diag[i + 1][(0, 1)] += dg;
            self.lower[i + 1][(0, 1)] -= dg;
            // v diffusion across the same face
            let dv = k * (v[i + 1] - v[i]);
            f[i][1] += dv;
            f[i + 1][1] -= dv;
            self.diag[i][(1, 1)] -= k;
            self.upper[i][(1, 1)] += k;
            self.diag[i + 1][(1, 1)] -= k;
            self.lower[i + 1][(1, 1)] += k;
        }
        f
    }

    /// One linearly implicit Euler step, `(diag(τ, 1)/dt − J) Δ = F(xⁿ)` with
    /// the exact Jacobian `J` of the discrete right-hand side.
    pub fn step(&mut self, state: &PdeState, dt: f64) -> Result<PdeState> {
        let mut rhs = self.assemble(state);
        let mass = Matrix2::new(self.tau / dt, 0.0, 0.0, 1.0 / dt);
        for b in self.diag.iter_mut() {
            *b = mass - *b;
        }
        for b in self.lower.iter_mut().chain(self.upper.iter_mut()) {
            *b = -*b;
        }
        if !solve_block_tridiagonal(&self.lower, &self.diag, &self.upper, &mut rhs, &mut self.work) {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("singular step matrix at dt = {dt:e}") });
        }
        let u: Vec<f64> = state.u.iter().zip(&rhs).map(|(x, d)| x + d[0]).collect();
        let v: Vec<f64> = state.v.iter().zip(&rhs).map(|(x, d)| x + d[1]).collect();
        if let Some(i) = u.iter().chain(&v).position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidParameter { name: "state", reason: format!("positivity lost at index {i}") });
        }
        Ok(PdeState { t: state.t + dt, u, v })
    }

    /// Discrete right-hand side `(τ u_t, v_t)`, split into components.
    pub fn rhs(&mut self, state: &PdeState) -> (Vec<f64>, Vec<f64>) {
        let f = self.assemble(state);
        (f.iter().map(|x| x[0]).collect(), f.iter().map(|x| x[1]).collect())
    }

    /// Adaptive step; returns the accepted state and the relative change.
    pub fn adaptive_step(&mut self, state: &PdeState, dt_cap: f64) -> Result<(PdeState, f64)> {
        loop {
            let dt = self.dt.min(dt_cap);
            match self.step(state, dt) {
                Ok(next) => {
                    let scale = state.u.iter().fold(0.0f64, |m, &x| m.max(x)).max(1e-12);
                    let change = next.u.iter().zip(&state.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
                    if change <= 2.0 * self.control.target_change || dt <= self.control.dt_min {
                        let factor = if change > 0.0 { (self.control.target_change / change).sqrt().clamp(0.5, 1.5) } else { 1.5 };
                        if dt == self.dt {
                            self.dt = (dt * factor).clamp(self.control.dt_min, self.control.dt_max);
                        }
                        return Ok((next, change));
                    }
                    self.dt = dt * 0.5;
                }
                Err(_) => self.dt = dt * 0.25,
            }
            if self.dt < self.control.dt_min {
                return Err(Error::StepCollapse { dt: self.dt, t: state.t });
            }
        }
    }

    /// Advances to exactly `t_end`.
    pub fn advance(&mut self, state: &PdeState, t_end: f64) -> Result<PdeState> {
        let mut s = state.clone();
        while s.t < t_end {
            let remaining = t_end - s.t;
            let (next, _) = self.adaptive_step(&s, remaining)?;
            s = next;
            if t_end - s.t < 1e-12 * t_end.abs().max(1.0) {
                s.t = t_end;
            }
        }
        Ok(s)
    }

    /// `∫ mu u (ubar - u) dx`.
    pub fn logistic_integral(&self, u: &[f64]) -> f64 {
        let p = &self.params;
        self.grid.integrate(&u.iter().map(|&x| p.mu * x * (p.ubar - x)).collect::<Vec<_>>())
    }
}

/// Largest real growth rate of the Neumann cosine mode `m` about `u = v = ubar`
/// (`k = mπ/2`), from the 2×2 linearisation with relaxation constant `tau`.
pub fn uniform_state_growth(p: &ModelParams, tau: f64, m: usize) -> f64 {
    let k2 = (m as f64 * std::f64::consts::PI / 2.0).powi(2);
    // tau λ φ = -(d1 k² + mu ubar) φ + chi ubar k² ψ,   λ ψ = φ - (d2 k² + 1) ψ
    let a = -(p.d1 * k2 + p.mu * p.ubar) / tau;
    let b = p.chi * p.ubar * k2 / tau;
    let d = -(p.d2 * k2 + 1.0);
    let tr = a + d;
    let det = a * d - b;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        0.5 * (tr + disc.sqrt())
    } else {
        0.5 * tr
    }
}

/// Maximum of [`uniform_state_growth`] over the modes resolved by `grid`.
pub fn uniform_state_max_growth(p: &ModelParams, tau: f64, grid: &PdeGrid) -> f64 {
    (0..grid.n_cells).map(|m| uniform_state_growth(p, tau, m)).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyResult {
    pub state: PdeState,
    /// `max|Δu| / (Δt max u)` over the final step.
    pub rate: f64,
    pub steps: usize,
}

/// Marches until the relative rate of change of `u` drops below `tol`.
pub fn run_to_steady(solver: &mut PdeSolver, initial: &PdeState, tol: f64, t_max: f64) -> Result<SteadyResult> {
    let mut s = initial.clone();
    let mut steps = 0;
    let mut rate = f64::INFINITY;
    while s.t < t_max {
        let t0 = s.t;
        let (next, change) = solver.adaptive_step(&s, t_max - s.t)?;
        rate = change / (next.t - t0);
        s = next;
        steps += 1;
        if rate < tol {
            return Ok(SteadyResult { state: s, rate, steps });
        }
    }
    Err(Error::NotSteady { t: s.t, rate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedSpike {
    pub x: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub prominence: f64,
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    pub spikes: Vec<DetectedSpike>,
    pub u_bdry: [f64; 2],
    pub v_bdry: [f64; 2],
}

impl SpikeReport {
    pub fn interior(&self) -> impl Iterator<Item = &DetectedSpike> {
        self.spikes.iter().filter(|s| !s.at_boundary)
    }

    pub fn count(&self) -> usize {
        self.spikes.len()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.x).collect()
    }
}

/// Default prominence for [`detect_spikes`]: a quarter of `ubar`.
pub fn default_prominence(p: &ModelParams) -> f64 {
    0.25 * p.ubar
}

fn parabolic_peak(f: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= f.len() {
        return (0.0, f[i]);
    }
    let (a, b, c) = (f[i - 1], f[i], f[i + 1]);
    let curv = a - 2.0 * b + c;
    if curv >= 0.0 {
        return (0.0, b);
    }
    let off = 0.5 * (a - c) / curv;
    (off, b - 0.25 * (a - c) * off)
}

/// Local maxima of `u` whose topographic prominence exceeds `prominence`,
/// with parabolic sub-cell refinement.
pub fn detect_spikes(grid: &PdeGrid, state: &PdeState, prominence: f64) -> SpikeReport {
    let u = &state.u;
    let n = u.len();
    let wall = |f: &[f64], i: usize, j: usize| (9.0 * f[i] - f[j]) / 8.0;
    let mut spikes = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || u[i] > u[i - 1];
        let right_ok = i + 1 == n || u[i] >= u[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let mut lmin = u[i];
        let mut j = i;
        let mut left_higher = false;
        while j > 0 {
            j -= 1;
            if u[j] > u[i] {
                left_higher = true;
                break;
            }
            lmin = lmin.min(u[j]);
        }
        let mut rmin = u[i];
        let mut right_higher = false;
        for &x in &u[i + 1..] {
            if x > u[i] {
                right_higher = true;
                break;
            }
            rmin = rmin.min(x);
        }
        let base = match (left_higher, right_higher) {
            (true, true) => lmin.max(rmin),
            (true, false) => lmin,
            (false, true) => rmin,
            (false, false) => lmin.min(rmin),
        };
        let base = if i == 0 { rmin } else if i + 1 == n { lmin } else { base };
        let prom = u[i] - base;
        if prom < prominence {
            continue;
        }
        let at_boundary = i == 0 || i + 1 == n;
        let (off, u_max) = parabolic_peak(u, i);
        let (_, v_max) = parabolic_peak(&state.v, i);
        let x = if i == 0 { -1.0 } else if i + 1 == n { 1.0 } else { grid.x(i) + off * grid.h };
        let u_max = if i == 0 { wall(u, 0, 1) } else if i + 1 == n { wall(u, n - 1, n - 2) } else { u_max };
        spikes.push(DetectedSpike { x, u_max, v_max, prominence: prom, at_boundary });
    }
    SpikeReport {
        spikes,
        u_bdry: [wall(u, 0, 1), wall(u, n - 1, n - 2)],
        v_bdry: [wall(&state.v, 0, 1), wall(&state.v, n - 1, n - 2)],
    }
}

/// One line of a ramp experiment log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampEvent {
    pub t: f64,
    pub d1: f64,
    pub spike_count: usize,
    pub locations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampLog {
    /// Initial entry followed by one entry per change in spike count.
    pub events: Vec<RampEvent>,
    pub final_state: PdeState,
}

impl RampLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,d1,spike_count,locations\n");
        for e in &self.events {
            let locs: Vec<String> = e.locations.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&format!("{:.16e},{:.16e},{},{}\n", e.t, e.d1, e.spike_count, locs.join(";")));
        }
        out
    }

    pub fn changes(&self) -> &[RampEvent] {
        &self.events[1..]
    }
}

/// Integrates with `d1 = schedule(t)` (at fixed `chibar`), checking the
/// spike count every `check_every` time units.
pub fn ramp_experiment(solver: &mut PdeSolver, schedule: impl Fn(f64) -> f64, initial: &PdeState, t_end: f64, check_every: f64) -> Result<RampLog> {
    let prom = default_prominence(&solver.params);
    let mut s = initial.clone();
    solver.set_d1(schedule(s.t));
    let report = detect_spikes(&solver.grid, &s, prom);
    let mut events = vec![RampEvent { t: s.t, d1: solver.params.d1, spike_count: report.count(), locations: report.locations() }];
    let mut next_check = s.t + check_every;
    while s.t < t_end {
        solver.set_d1(schedule(s.t));
        let cap = (next_check - s.t).min(t_end - s.t);
        let (next, _) = solver.adaptive_step(&s, cap)?;
        s = next;
        if s.t >= next_check - 1e-12 || s.t >= t_end {
            next_check += check_every;
            let report = detect_spikes(&solver.grid, &s, prom);
            if report.count() != events.last().map_or(0, |e| e.spike_count) {
                events.push(RampEvent { t: s.t, d1: solver.params.d1, spike_count: report.count(), locations: report.locations() });
            }
        }
    }
    Ok(RampLog { events, final_state: s })
}

/// Location of each interior spike sampled at `times`.
pub fn track_spikes(solver: &mut PdeSolver, initial: &PdeState, times: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    let prom = default_prominence(&solver.params);
    let mut s = initial.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        s = solver.advance(&s, t)?;
        let report = detect_spikes(&solver.grid, &s, prom);
        out.push((t, report.interior().map(|sp| sp.x).collect()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(d2: f64) -> ModelParams {
        ModelParams::new(1.0, d2, 1.0, 0.25, 2.0, 1.0, 1).unwrap()
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        // weak chemotaxis: the uniform state is linearly stable, so round-off cannot grow
        let p = ModelParams::new(1.0, 0.004, 0.3, 0.25, 2.0, 1.0, 1).unwrap();
        let grid = PdeGrid::new(256).unwrap();
        assert!(uniform_state_max_growth(&p, 1.0, &grid) < 0.0);
        let mut solver = PdeSolver::new(p, grid);
        let mut s = PdeState::flat(&grid, p.ubar);
        for _ in 0..10_000 {
            s = solver.step(&s, 0.1).unwrap();
        }
        let drift = s.u.iter().chain(&s.v).fold(0.0f64, |m, x| m.max((x - p.ubar).abs()));
        assert!(drift < 1e-12, "{drift}");
    }

    #[test]
    fn perturbed_uniform_state_follows_linear_growth() {
        let grid = PdeGrid::new(400).unwrap();
        for (chi, m) in [(0.3, 3), (1.0, 3)] {
            let p = ModelParams::new(1.0, 0.004, chi, 0.25, 2.0, 1.0, 1).unwrap();
            let rate = uniform_state_growth(&p, 1.0, m);
            let mut solver = PdeSolver::new(p, grid);
            let mut s = PdeState::flat(&grid, p.ubar);
            let k = m as f64 * std::f64::consts::PI / 2.0;
            let amp = |s: &PdeState| grid.integrate(&s.u.iter().zip(grid.centers()).map(|(u, x)| (u - p.ubar) * (k * (x + 1.0)).cos()).collect::<Vec<_>>());
            for (i, x) in grid.centers().into_iter().enumerate() {
                s.u[i] += 1e-6 * (k * (x + 1.0)).cos();
            }
            // let the slow eigenvector emerge, then measure the growth over one unit of time
            let dt = 1e-4;
            for _ in 0..20_000 {
                s = solver.step(&s, dt).unwrap();
            }
            let a0 = amp(&s);
            for _ in 0..10_000 {
                s = solver.step(&s, dt).unwrap();
            }
            let measured = (amp(&s) / a0).ln();
            assert!((measured - rate).abs() < 0.02 * rate.abs().max(1.0), "chi={chi}: {measured} vs {rate}");
        }
    }

    #[test]
    fn mass_changes_only_through_logistic_term() {
        let p = table(0.02);
        let grid = PdeGrid::new(512).unwrap();
        let mut solver = PdeSolver::new(p, grid);
        let s0 = PdeState::from_profile(&p, &grid, &[-0.3]).unwrap();
        let dt = 1e-4;
        let s1 = solver.step(&s0, dt).unwrap();
        let lhs = solver.tau / dt * (grid.integrate(&s1.u) - grid.integrate(&s0.u));
        // flux differences telescope; only the linearized logistic term survives
        let rhs = grid.integrate(&s0.u.iter().zip(&s1.u).map(|(a, b)| p.mu * (a * (p.ubar - a) + (p.ubar - 2.0 * a) * (b - a))).collect::<Vec<_>>());
        assert!((lhs - rhs).abs() < 1e-6 * rhs.abs().max(1.0), "{lhs} {rhs}");
        let explicit = solver.logistic_integral(&s0.u);
        assert!((lhs - explicit).abs() < 0.05 * explicit.abs().max(1.0));
    }

    #[test]
    fn bernoulli_flux_balances_exponential_profile() {
        for z in [-30.0, -1.0, -1e-9, 0.0, 1e-9, 0.5, 40.0] {
            assert!((bernoulli(-z) - bernoulli(z) * z.exp()).abs() <= 1e-12 * bernoulli(-z).max(1.0));
        }
        for z in [-3.0, -1e-3, -2e-5, 0.0, 3e-5, 0.2, 7.0] {
            let h = 1e-6;
            let fd = (bernoulli(z + h) - bernoulli(z - h)) / (2.0 * h);
            assert!((bernoulli_prime(z) - fd).abs() < 1e-8, "{z}");
        }
    }

    #[test]
    fn block_tridiagonal_matches_dense_solve() {
        let n = 6;
        let m = |i: usize, c: f64| Matrix2::new(c + 0.1 * i as f64, 0.2, -0.1 * (i as f64).cos(), c - 0.05 * i as f64);
        let diag: Vec<_> = (0..n).map(|i| m(i, 3.0)).collect();
        let lower: Vec<_> = (0..n).map(|i| m(i, -0.4)).collect();
        let upper: Vec<_> = (0..n).map(|i| m(i, -0.7)).collect();
        let b: Vec<_> = (0..n).map(|i| Vector2::new((i as f64).sin(), 1.0 - i as f64)).collect();
        let mut x = b.clone();
        assert!(solve_block_tridiagonal(&lower, &diag, &upper, &mut x, &mut vec![Matrix2::zeros(); n]));
        let a = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (i, j) = (r / 2, c / 2);
            let blk = match i as isize - j as isize {
                0 => diag[i],
                1 => lower[i],
                -1 => upper[i],
                _ => return 0.0,
            };
            blk[(r % 2, c % 2)]
        });
        let flat = |v: &[Vector2<f64>]| nalgebra::DVector::from_iterator(2 * n, v.iter().flat_map(|x| [x[0], x[1]]));
        assert!((a * flat(&x) - flat(&b)).amax() < 1e-13);
    }

    #[test]
    fn step_jacobian_matches_finite_differences() {
        let p = table(0.02);
        let grid = PdeGrid::new(24).unwrap();
        let mut solver = PdeSolver::new(p, grid);
        let mut s = PdeState::from_profile(&p, &grid, &[0.1]).unwrap();
        for (i, x) in grid.centers().into_iter().enumerate() {
            s.u[i] += 0.3 * (3.0 * x).sin();
            s.v[i] += 0.2 * (2.0 * x).cos();
        }
        let n = grid.n_cells;
        solver.assemble(&s);
        let (lower, diag, upper) = (solver.lower.clone(), solver.diag.clone(), solver.upper.clone());
        let h = 1e-6;
        for j in 0..n {
            for comp in 0..2 {
                let bump = |d: f64| {
                    let mut t = s.clone();
                    if comp == 0 { t.u[j] += d } else { t.v[j] += d }
                    t
                };
                let (fp, fm) = (solver.assemble(&bump(h)), solver.assemble(&bump(-h)));
                for i in 0..n {
                    let blk = match i as isize - j as isize {
                        0 => diag[i],
                        1 => lower[i],
                        -1 => upper[i],
                        _ => Matrix2::zeros(),
                    };
                    for r in 0..2 {
                        let fd = (fp[i][r] - fm[i][r]) / (2.0 * h);
                        assert!((blk[(r, comp)] - fd).abs() < 1e-5 * fd.abs().max(1.0), "cell {i}, var {comp}@{j}: {} vs {fd}", blk[(r, comp)]);
                    }
                }
            }
        }
    }

    #[test]
    fn detection_on_profiles() {
        let p = table(0.004);
        let grid = PdeGrid::for_params(&p);
        let s = PdeState::from_profile(&p, &grid, &[0.0]).unwrap();
        let r = detect_spikes(&grid, &s, default_prominence(&p));
        assert_eq!(r.count(), 1);
        assert!(r.spikes[0].x.abs() <= grid.h);
        let flat = PdeState::flat(&grid, p.ubar);
        assert_eq!(detect_spikes(&grid, &flat, default_prominence(&p)).count(), 0);
        let two = PdeState::from_profile(&p.with_n(2).with_d2(0.0004).at_d1(1.0), &grid, &[-0.5, 0.5]).unwrap();
        let r = detect_spikes(&grid, &two, default_prominence(&p));
        let xs = r.locations();
        assert_eq!(xs.len(), 2);
        assert!((xs[0] + 0.5).abs() <= grid.h && (xs[1] - 0.5).abs() <= grid.h);
    }

    #[test]
    fn constant_schedule_logs_no_events() {
        let p = table(0.02);
        let grid = PdeGrid::new(512).unwrap();
        let mut solver = PdeSolver::new(p, grid);
        let s = PdeState::from_profile(&p, &grid, &[0.0]).unwrap();
        let log = ramp_experiment(&mut solver, |_| 1.0, &s, 20.0, 1.0).unwrap();
        assert!(log.changes().is_empty());
        assert!(log.to_csv().starts_with("t,d1,spike_count,locations\n"));
    }
}

//! One function per subcommand. Each writes its files through [`Output`].

use crate::config::RunConfig;
use anyhow::{Context, Result};
use ks_spikes::dynamics::{integrate, DaeOptions, DaeState};
use ks_spikes::equilibria::{build_profile, global_balance_residual, solve_quasi, solve_symmetric};
use ks_spikes::model::{classify_d1, ModelParams};
use ks_spikes::nlep::{competition_thresholds, hopf_curve, hopf_solve};
use ks_spikes::pde::{default_prominence, detect_spikes, ramp_experiment, run_to_steady, track_spikes, PdeGrid, PdeSolver, PdeState, StepControl};
use ks_spikes::smalleig::{small_eigs_explicit, small_threshold_d1};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;

/// The configured state failed a stability assertion.
#[derive(Debug)]
pub struct Unstable(pub String);

impl std::fmt::Display for Unstable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "instability detected: {}", self.0)
    }
}

impl std::error::Error for Unstable {}

pub struct Output {
    pub dir: PathBuf,
    pub hash: String,
}

impl Output {
    pub fn new(dir: PathBuf, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let out = Self { dir, hash: cfg.sha256() };
        out.text("resolved_config.txt", &cfg.resolved)?;
        Ok(out)
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, format!("# config-sha256: {}\n{body}", self.hash)).with_context(|| format!("writing {}", path.display()))
    }

    pub fn csv(&self, name: &str, body: &str) -> Result<()> {
        self.text(name, body)
    }

    /// JSON cannot carry comments, so the hash goes in a `config_sha256` field.
    pub fn json(&self, name: &str, mut value: Value) -> Result<()> {
        if let Value::Object(map) = &mut value {
            map.insert("config_sha256".into(), Value::String(self.hash.clone()));
        }
        let path = self.dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn is_symmetric(cfg: &RunConfig) -> bool {
    cfg.locations.iter().zip(cfg.params.symmetric_locations()).all(|(a, b)| (a - b).abs() < 1e-12)
}

pub fn equilibrium(cfg: &RunConfig, out: &Output) -> Result<()> {
    let p = cfg.params.with_tau(0.0);
    p.require_admissible()?;
    let sym = if is_symmetric(cfg) { Some(solve_symmetric(&p)?) } else { None };
    let q = solve_quasi(&p, &cfg.locations, sym.as_ref().map(|e| e.as_quasi()).as_ref())?;
    let profile = build_profile(&q, &p)?;
    let mut csv = String::from("x,u,v\n");
    for (x, u, v) in profile.sample(cfg.profile_points)? {
        let _ = writeln!(csv, "{x:.16e},{u:.16e},{v:.16e}");
    }
    out.csv("profile.csv", &csv)?;
    out.json(
        "equilibrium.json",
        json!({
            "params": p,
            "locations": q.locations,
            "amplitudes": q.v_max,
            "backgrounds": q.s,
            "quasi_residual": q.residual_norm,
            "v_max0": sym.as_ref().map(|e| e.v_max0),
            "u_max": sym.as_ref().map(|e| e.u_max),
            "s0": sym.as_ref().map(|e| e.s0),
            "a_g": sym.as_ref().map(|e| e.a_g),
            "zeta0": sym.as_ref().map(|e| e.zeta0),
        }),
    )?;
    let residual = global_balance_residual(&profile, &p)?;
    let v_max = q.v_max.iter().fold(0.0f64, |m, &v| m.max(v));
    out.json(
        "balance.json",
        json!({
            "integral_u_times_ubar_minus_u": residual,
            "eps": p.eps(),
            "v_max": v_max,
            "ratio_to_eps_v_max": residual.abs() / (p.eps() * v_max),
        }),
    )
}

pub fn stability(cfg: &RunConfig, out: &Output) -> Result<()> {
    let p = cfg.params.with_tau(0.0);
    let n = p.n;
    let adm = classify_d1(&p);
    let d1s = small_threshold_d1(&p, n)?;
    let comp = competition_thresholds(&p, n)?;
    let mut problems = Vec::new();

    let here = if adm.in_admissible_set {
        let eq = solve_symmetric(&p)?;
        let r = small_eigs_explicit(&p, &eq)?;
        if n > 1 && r.h.iter().any(|&h| h < 0.0) {
            problems.push(format!("small eigenvalue unstable at d1 = {}", p.d1));
        }
        if comp.d1c_n.is_some_and(|c| p.d1 > c) {
            problems.push(format!("competition instability, d1 = {} above d1c{n}", p.d1));
        }
        Some(json!({ "h": r.h, "lambda": r.lambda, "v_max0": eq.v_max0 }))
    } else {
        problems.push(format!("d1 = {} is not admissible", p.d1));
        None
    };

    let d1_min = if cfg.sweep_d1_min > 0.0 { cfg.sweep_d1_min } else { 1.05 * adm.d1p_n };
    let grid = linspace(d1_min, cfg.sweep_d1_max, cfg.sweep_points);
    let rows: Vec<Option<String>> = grid
        .par_iter()
        .map(|&d1| {
            let q = p.at_d1(d1);
            let eq = solve_symmetric(&q).ok()?;
            let r = small_eigs_explicit(&q, &eq).ok()?;
            let mut line = format!("{d1:.16e}");
            for x in r.h.iter().chain(&r.lambda) {
                let _ = write!(line, ",{x:.16e}");
            }
            let _ = writeln!(line, ",{},{}", n == 1 || r.h.iter().all(|&h| h > 0.0), comp.d1c_n.map_or(true, |c| d1 < c));
            Some(line)
        })
        .collect();
    let mut csv = String::from("d1");
    for j in 1..=n {
        let _ = write!(csv, ",h_{j}");
    }
    for j in 1..=n {
        let _ = write!(csv, ",lambda_{j}");
    }
    csv.push_str(",stable_small,stable_large\n");
    let mut skipped = Vec::new();
    for (d1, row) in grid.iter().zip(&rows) {
        match row {
            Some(line) => csv.push_str(line),
            None => skipped.push(*d1),
        }
    }
    out.csv("sweep.csv", &csv)?;

    let mut hopf = Value::Null;
    if cfg.hopf {
        let curve = hopf_curve(&p, &linspace(cfg.hopf_d1_min, cfg.hopf_d1_max, cfg.hopf_points))?;
        out.csv("hopf.csv", &hopf_csv(&curve))?;
        let at = hopf_solve(&p, p.d1, None)?;
        if n == 1 && cfg.params.tau > at.tau_c {
            problems.push(format!("tau = {} above the Hopf threshold {}", cfg.params.tau, at.tau_c));
        }
        hopf = json!(at);
    }

    out.json(
        "thresholds.json",
        json!({
            "N": n,
            "d1": p.d1,
            "d1p_n": adm.d1p_n,
            "d1t_list": adm.d1t_list,
            "in_admissible_set": adm.in_admissible_set,
            "d1s_n": finite(d1s),
            "d1c_n": comp.d1c_n,
            "d1c_n_star": comp.d1c_n_star,
            "small_eigenvalues": if n == 1 { json!("always stable (small)") } else { json!(here.is_some() && problems.is_empty()) },
            "competition": if n == 1 { json!("no finite d1c1") } else { json!(comp.d1c_n) },
            "at_d1": here,
            "hopf_at_d1": hopf,
            "sweep_skipped_d1": skipped,
        }),
    )?;
    if cfg.assert_stable && !problems.is_empty() {
        return Err(Unstable(problems.join("; ")).into());
    }
    Ok(())
}

fn hopf_csv(curve: &[ks_spikes::nlep::HopfResult]) -> String {
    let mut csv = String::from("d1,tau_c,lambda_h,v_max0\n");
    for r in curve {
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", r.d1, r.tau_c, r.lambda_h, r.v_max0);
    }
    csv
}

pub fn hopf(cfg: &RunConfig, out: &Output) -> Result<()> {
    let p = cfg.params.with_tau(0.0);
    let at = hopf_solve(&p, p.d1, None)?;
    let curve = hopf_curve(&p, &linspace(cfg.hopf_d1_min, cfg.hopf_d1_max, cfg.hopf_points))?;
    out.csv("hopf.csv", &hopf_csv(&curve))?;
    out.json("hopf.json", json!({ "at_d1": at, "tau": cfg.params.tau, "stable": cfg.params.tau < at.tau_c }))?;
    if cfg.assert_stable && cfg.params.tau >= at.tau_c {
        return Err(Unstable(format!("tau = {} above the Hopf threshold {}", cfg.params.tau, at.tau_c)).into());
    }
    Ok(())
}

fn dae_run(cfg: &RunConfig, t_end: f64) -> Result<ks_spikes::dynamics::Trajectory> {
    let opts = DaeOptions { rtol: cfg.rtol, beta_rule: cfg.beta_rule, far_field: cfg.far_field, sample_times: cfg.sample_times(t_end), ..DaeOptions::default() };
    Ok(integrate(&cfg.params.with_tau(0.0), &cfg.locations, t_end, &opts)?)
}

pub fn dae(cfg: &RunConfig, out: &Output) -> Result<()> {
    let p = cfg.params.with_tau(0.0);
    let t_end = cfg.dynamics_t_end();
    let start = DaeState::new(&p, &cfg.locations, cfg.beta_rule, cfg.far_field)?;
    let traj = dae_run(cfg, t_end)?;
    out.csv("dae_trajectory.csv", &traj.to_csv())?;
    out.json(
        "dae_summary.json",
        json!({
            "t_end": t_end,
            "initial_velocities": start.velocities,
            "initial_beta": start.beta,
            "final_locations": traj.samples.last().map(|s| s.locations.clone()),
            "accepted_steps": traj.accepted_steps,
            "rejected_steps": traj.rejected_steps,
        }),
    )
}

fn solver(cfg: &RunConfig, p: ModelParams) -> Result<(PdeSolver, PdeGrid)> {
    let grid = if cfg.n_cells > 0 { PdeGrid::new(cfg.n_cells)? } else { PdeGrid::for_params(&p) };
    let control = StepControl { dt_max: cfg.dt_max, ..StepControl::default() };
    Ok((PdeSolver::new(p, grid).with_control(control), grid))
}

fn initial_state(cfg: &RunConfig, p: &ModelParams, grid: &PdeGrid) -> Result<PdeState> {
    Ok(if cfg.pde_flat { PdeState::flat(grid, p.ubar) } else { PdeState::from_profile(p, grid, &cfg.locations)? })
}

pub fn pde(cfg: &RunConfig, out: &Output) -> Result<()> {
    let p = cfg.params;
    let (mut solver, grid) = solver(cfg, p)?;
    let mut state = initial_state(cfg, &p, &grid)?;
    let prom = default_prominence(&p);
    let mut reports = Vec::new();
    let mut record = |k: usize, s: &PdeState| -> Result<()> {
        out.csv(&format!("snapshot_{k:03}.csv"), &format!("# t = {:.16e}\n{}", s.t, s.snapshot_csv(&grid)))?;
        reports.push(json!({ "t": s.t, "report": detect_spikes(&grid, s, prom) }));
        Ok(())
    };
    if cfg.steady {
        record(0, &state)?;
        let t_max = if cfg.t_end > 0.0 { cfg.t_end } else { 1e6 };
        let r = run_to_steady(&mut solver, &state, cfg.steady_tol, t_max)?;
        record(1, &r.state)?;
    } else {
        let t_end = cfg.dynamics_t_end();
        let mut times = cfg.snapshot_times.clone();
        if times.is_empty() {
            times = vec![0.0, t_end];
        }
        for (k, &t) in times.iter().enumerate() {
            state = solver.advance(&state, t)?;
            record(k, &state)?;
        }
    }
    out.json("spikes.json", json!({ "n_cells": grid.n_cells, "tau": solver.tau, "snapshots": reports }))
}

pub fn compare(cfg: &RunConfig, out: &Output) -> Result<()> {
    let t_end = cfg.dynamics_t_end();
    let traj = dae_run(cfg, t_end)?;
    out.csv("dae_trajectory.csv", &traj.to_csv())?;
    let p = cfg.params;
    let (mut solver, grid) = solver(cfg, p)?;
    let init = PdeState::from_profile(&p, &grid, &cfg.locations)?;
    let tracked = track_spikes(&mut solver, &init, &cfg.sample_times(t_end))?;
    let n = p.n;
    let header = |name: &str| (1..=n).fold(String::from("t"), |s, j| s + &format!(",{name}_{j}")) + "\n";
    let mut pde_csv = header("x");
    let mut disc_csv = header("d").trim_end().to_string() + ",max\n";
    let mut worst = 0.0f64;
    let mut lost = Vec::new();
    for (s, (t, xs)) in traj.samples.iter().zip(&tracked) {
        let _ = write!(pde_csv, "{t:.16e}");
        let _ = write!(disc_csv, "{t:.16e}");
        if xs.len() == n {
            let mut m = 0.0f64;
            for (a, b) in xs.iter().zip(&s.locations) {
                let _ = write!(pde_csv, ",{a:.16e}");
                let _ = write!(disc_csv, ",{:.16e}", (a - b).abs());
                m = m.max((a - b).abs());
            }
            worst = worst.max(m);
            let _ = writeln!(disc_csv, ",{m:.16e}");
        } else {
            lost.push(*t);
            pde_csv.push_str(&",nan".repeat(n));
            disc_csv.push_str(&",nan".repeat(n + 1));
            disc_csv.push('\n');
        }
        pde_csv.push('\n');
    }
    out.csv("pde_trajectory.csv", &pde_csv)?;
    out.csv("discrepancy.csv", &disc_csv)?;
    out.json(
        "compare_summary.json",
        json!({
            "t_end": t_end,
            "n_cells": grid.n_cells,
            "tau": solver.tau,
            "max_discrepancy": worst,
            "spike_count_mismatch_times": lost,
        }),
    )
}

pub fn ramp(cfg: &RunConfig, out: &Output) -> Result<()> {
    let p = cfg.params.at_d1(cfg.ramp_d1_start);
    let t_end = if cfg.t_end > 0.0 { cfg.t_end } else { cfg.ramp_time };
    let (mut solver, grid) = solver(cfg, p)?;
    let init = initial_state(cfg, &p, &grid)?;
    let (a, b, ramp) = (cfg.ramp_d1_start, cfg.ramp_d1_end, cfg.ramp_time);
    let log = ramp_experiment(&mut solver, |t| a + (b - a) * (t / ramp).min(1.0), &init, t_end, cfg.check_every)?;
    out.csv("ramp_events.csv", &log.to_csv())?;
    out.csv("ramp_final.csv", &log.final_state.snapshot_csv(&grid))?;
    out.json(
        "ramp_summary.json",
        json!({
            "chibar": p.chibar(),
            "tau": solver.tau,
            "n_cells": grid.n_cells,
            "initial_count": log.events.first().map(|e| e.spike_count),
            "final_count": log.events.last().map(|e| e.spike_count),
            "changes": log.changes(),
        }),
    )
}

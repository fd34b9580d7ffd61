//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`; the row layout is given on the
//! function. The plain `*_rows` functions carry the logic and run natively.

use ks_spikes::equilibria::{build_profile, solve_quasi};
use ks_spikes::greens::{green_x, helmholtz_green};
use ks_spikes::model::ModelParams;
use ks_spikes::smalleig::small_eigs_explicit;
use wasm_bindgen::prelude::*;

fn params(d1: f64, d2: f64, chibar: f64, mu: f64, ubar: f64, n: usize) -> Result<ModelParams, String> {
    ModelParams::with_chibar(d1, d2, chibar, mu, ubar, n).map_err(|e| e.to_string())
}

/// Rows `(x, u, v)` of the composite equilibrium with `n` equally spaced spikes.
pub fn profile_rows(d1: f64, d2: f64, chibar: f64, mu: f64, ubar: f64, n: usize, points: usize) -> Result<Vec<f64>, String> {
    let p = params(d1, d2, chibar, mu, ubar, n)?;
    p.require_admissible().map_err(|e| e.to_string())?;
    let q = solve_quasi(&p, &p.symmetric_locations(), None).map_err(|e| e.to_string())?;
    let profile = build_profile(&q, &p).map_err(|e| e.to_string())?;
    let samples = profile.sample(points.max(2)).map_err(|e| e.to_string())?;
    Ok(samples.into_iter().flat_map(|(x, u, v)| [x, u, v]).collect())
}

/// Rows `(d1, h_1, …, h_n)` over `points` values of `d1`; `NaN` where no equilibrium exists.
#[allow(clippy::too_many_arguments)]
pub fn small_eigen_rows(d2: f64, chibar: f64, mu: f64, ubar: f64, n: usize, d1_min: f64, d1_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let base = params(d1_min, d2, chibar, mu, ubar, n)?;
    let points = points.max(2);
    let mut out = Vec::with_capacity(points * (n + 1));
    for k in 0..points {
        let d1 = d1_min + (d1_max - d1_min) * k as f64 / (points - 1) as f64;
        let p = base.at_d1(d1);
        out.push(d1);
        match ks_spikes::equilibria::solve_symmetric(&p).and_then(|eq| small_eigs_explicit(&p, &eq)) {
            Ok(r) => out.extend(r.h),
            Err(_) => out.extend(std::iter::repeat(f64::NAN).take(n)),
        }
    }
    Ok(out)
}

/// Rows `(x, G, G_x)` of the Green's function of `(d1/mu) G_xx + ubar G = δ(x - source)`.
pub fn green_rows(d1: f64, mu: f64, ubar: f64, source: f64, points: usize) -> Result<Vec<f64>, String> {
    let p = params(d1, 1e-4, 1.0, mu, ubar, 1)?;
    if source.abs() >= 1.0 {
        return Err(format!("source {source} must lie in (-1, 1)"));
    }
    let points = points.max(2);
    let mut out = Vec::with_capacity(3 * points);
    for k in 0..points {
        let x = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
        out.push(x);
        out.push(helmholtz_green(x, source, &p).map_err(|e| e.to_string())?);
        out.push(green_x(x, source, &p).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn profile(d1: f64, d2: f64, chibar: f64, mu: f64, ubar: f64, n: usize, points: usize) -> Result<Vec<f64>, JsValue> {
    profile_rows(d1, d2, chibar, mu, ubar, n, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn small_eigen_sweep(d2: f64, chibar: f64, mu: f64, ubar: f64, n: usize, d1_min: f64, d1_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    small_eigen_rows(d2, chibar, mu, ubar, n, d1_min, d1_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn green_curve(d1: f64, mu: f64, ubar: f64, source: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    green_rows(d1, mu, ubar, source, points).map_err(|e| JsValue::from_str(&e))
}

//! Model parameters of the 1D Keller–Segel system with logistic growth
//!
//! ```text
//! tau u_t = d1 u_xx - chi (u v_x)_x + mu u (ubar - u)
//!     v_t = d2 v_xx - v + u,          |x| < 1,  u_x = v_x = 0 at x = ±1
//! ```
//!
//! and the classification of `d1` against the positivity threshold `d1pN`
//! and the resonances `d1Tm`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative band around each `d1Tm` treated as resonant.
pub const RESONANCE_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d1: f64,
    pub d2: f64,
    pub chi: f64,
    pub mu: f64,
    pub ubar: f64,
    pub tau: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl ModelParams {
    pub fn new(d1: f64, d2: f64, chi: f64, mu: f64, ubar: f64, tau: f64, n: usize) -> Result<Self> {
        let p = Self { d1, d2, chi, mu, ubar, tau, n };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `chi = chibar * d1`, the normalisation used throughout.
    pub fn with_chibar(d1: f64, d2: f64, chibar: f64, mu: f64, ubar: f64, n: usize) -> Result<Self> {
        Self::new(d1, d2, chibar * d1, mu, ubar, 0.0, n)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("chi", self.chi),
            ("mu", self.mu),
            ("ubar", self.ubar),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite and > 0, got {value}") });
            }
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::InvalidParameter { name: "tau", reason: format!("must be >= 0, got {}", self.tau) });
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter { name: "N", reason: "need at least one spike".into() });
        }
        Ok(())
    }

    pub fn chibar(&self) -> f64 {
        self.chi / self.d1
    }

    pub fn eps(&self) -> f64 {
        self.d2.sqrt()
    }

    pub fn theta(&self) -> f64 {
        (self.mu * self.ubar / self.d1).sqrt()
    }

    /// Same parameters at a new `d1`, keeping `chibar` fixed (so `chi` moves with `d1`).
    pub fn at_d1(&self, d1: f64) -> Self {
        let chibar = self.chibar();
        Self { d1, chi: chibar * d1, ..*self }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }

    pub fn with_d2(&self, d2: f64) -> Self {
        Self { d2, ..*self }
    }

    /// `d1` at which `theta` equals `target`.
    pub fn d1_for_theta(&self, target: f64) -> f64 {
        self.mu * self.ubar / (target * target)
    }

    /// Equally spaced spike centres `x_j = -1 + (2j - 1)/N`.
    pub fn symmetric_locations(&self) -> Vec<f64> {
        symmetric_locations(self.n)
    }

    /// Checks admissibility and returns a typed error when `d1` is excluded.
    pub fn require_admissible(&self) -> Result<AdmissibilityReport> {
        let report = classify_d1(self);
        if self.d1 <= report.d1p_n {
            return Err(Error::BelowPositivity { d1: self.d1, d1p: report.d1p_n });
        }
        if let Some((m, r)) = report.resonant_mode(self.d1) {
            return Err(Error::ResonantD1 { d1: self.d1, mode: m, resonance: r });
        }
        Ok(report)
    }
}

pub fn symmetric_locations(n: usize) -> Vec<f64> {
    (1..=n).map(|j| -1.0 + (2 * j - 1) as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub d1p_n: f64,
    /// `d1Tm` for `m = 1..N-1`, strictly decreasing.
    pub d1t_list: Vec<f64>,
    pub in_admissible_set: bool,
    /// Smallest relative distance `|d1 - d1Tm| / d1Tm`; infinite when there are no resonances.
    pub nearest_resonance_distance: f64,
}

impl AdmissibilityReport {
    fn resonant_mode(&self, d1: f64) -> Option<(usize, f64)> {
        self.d1t_list
            .iter()
            .enumerate()
            .find(|(_, &r)| ((d1 - r) / r).abs() < RESONANCE_BAND)
            .map(|(i, &r)| (i + 1, r))
    }
}

pub fn classify_d1(p: &ModelParams) -> AdmissibilityReport {
    let mu_u = p.mu * p.ubar;
    let d1p_n = turing_threshold_raw(mu_u, 2.0, p.n);
    let d1t_list: Vec<f64> = (1..p.n).map(|m| turing_threshold_raw(mu_u, 2.0, m)).collect();
    let nearest = d1t_list
        .iter()
        .map(|r| ((p.d1 - r) / r).abs())
        .fold(f64::INFINITY, f64::min);
    AdmissibilityReport {
        d1p_n,
        in_admissible_set: p.d1 > d1p_n && nearest >= RESONANCE_BAND,
        d1t_list,
        nearest_resonance_distance: nearest,
    }
}

fn turing_threshold_raw(mu_u: f64, l: f64, m: usize) -> f64 {
    mu_u * l * l / ((m * m) as f64 * PI * PI)
}

/// Critical `d1 = mu ubar L^2 / (m^2 pi^2)` for mode `m` on an interval of length `L`.
pub fn turing_threshold(p: &ModelParams, l: f64, m: usize) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter { name: "L", reason: format!("must be > 0, got {l}") });
    }
    if m == 0 {
        return Err(Error::InvalidParameter { name: "m", reason: "mode index starts at 1".into() });
    }
    Ok(turing_threshold_raw(p.mu * p.ubar, l, m))
}

/// Smallest `d1` keeping the outer solution positive between spikes at `locations`.
pub fn qe_positivity_threshold(p: &ModelParams, locations: &[f64]) -> Result<f64> {
    let (first, last) = match (locations.first(), locations.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidParameter { name: "locations", reason: "empty".into() }),
    };
    let mut l_max = f64::max((first + 1.0).abs(), (last - 1.0).abs());
    for w in locations.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter { name: "locations", reason: "must be strictly increasing".into() });
        }
        l_max = l_max.max(w[1] - w[0]);
    }
    Ok(l_max * l_max * p.mu * p.ubar / (PI * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn base(n: usize) -> ModelParams {
        ModelParams::with_chibar(1.0, 0.0004, 1.0, 1.0, 2.0, n).unwrap()
    }

    #[test]
    fn positivity_thresholds_match_closed_form() {
        let r = classify_d1(&base(2));
        assert_relative_eq!(r.d1p_n, 8.0 / (4.0 * PI * PI), max_relative = 1e-15);
        assert!((r.d1p_n - 0.2026).abs() < 1e-4);
        let r1 = classify_d1(&base(1));
        assert!((r1.d1p_n - 0.8106).abs() < 1e-4);
        assert!(r1.d1t_list.is_empty());
        assert!(r1.nearest_resonance_distance.is_infinite());
    }

    #[test]
    fn three_spike_admissible_example() {
        let p = base(3).at_d1(0.5);
        let r = classify_d1(&p);
        assert!(r.in_admissible_set);
        assert!((r.d1p_n - 0.0901).abs() < 1e-4);
        assert!((r.d1t_list[0] - 0.8106).abs() < 1e-4);
        assert!((r.d1t_list[1] - 0.2026).abs() < 1e-4);
    }

    #[test]
    fn resonant_and_subthreshold_d1_rejected() {
        let p = base(3);
        let r = classify_d1(&p);
        let at = p.at_d1(r.d1t_list[0] * (1.0 + 1e-8));
        assert!(matches!(at.require_admissible(), Err(Error::ResonantD1 { mode: 1, .. })));
        let low = p.at_d1(0.05);
        assert!(matches!(low.require_admissible(), Err(Error::BelowPositivity { .. })));
    }

    #[test]
    fn turing_threshold_examples() {
        let p = base(1);
        assert_relative_eq!(turing_threshold(&p, 2.0, 1).unwrap(), 8.0 / (PI * PI), max_relative = 1e-15);
        let q = ModelParams::with_chibar(1.0, 0.004, 1.0, 0.25, 2.0, 1).unwrap();
        assert!((turing_threshold(&q, 1.0, 2).unwrap() - 0.01267).abs() < 1e-5);
        for n in 1..6 {
            let pn = base(n);
            let t = turing_threshold(&pn, 2.0 / n as f64, 1).unwrap();
            assert_relative_eq!(t, classify_d1(&pn).d1p_n, max_relative = 1e-14);
        }
    }

    #[test]
    fn qe_threshold_gap_maximum() {
        let p = base(2);
        let mu_u = p.mu * p.ubar;
        assert_relative_eq!(qe_positivity_threshold(&p, &[-0.5, 0.5]).unwrap(), mu_u / (PI * PI));
        assert_relative_eq!(qe_positivity_threshold(&p, &[-0.6, 0.6]).unwrap(), 1.44 * mu_u / (PI * PI), max_relative = 1e-14);
        assert_relative_eq!(qe_positivity_threshold(&p, &[0.0]).unwrap(), mu_u / (PI * PI));
        assert!(qe_positivity_threshold(&p, &[]).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ModelParams::new(0.0, 0.01, 1.0, 1.0, 2.0, 0.0, 1).is_err());
        assert!(ModelParams::new(1.0, 0.01, 1.0, 1.0, 2.0, -1.0, 1).is_err());
        assert!(ModelParams::new(1.0, 0.01, 1.0, 1.0, 2.0, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn derived_scalars_consistent(d1 in 0.01f64..10.0, d2 in 1e-5f64..0.1, chibar in 0.1f64..5.0) {
            let p = ModelParams::with_chibar(d1, d2, chibar, 1.0, 2.0, 2).unwrap();
            prop_assert!((p.chibar() * p.d1 - p.chi).abs() <= 1e-15 * p.chi);
            prop_assert!((p.eps() * p.eps() - p.d2).abs() <= 1e-15 * p.d2);
            prop_assert!((p.theta().powi(2) * p.d1 - p.mu * p.ubar).abs() <= 1e-14);
        }

        #[test]
        fn resonance_chain_monotone(n in 2usize..50, mu in 0.1f64..5.0, ubar in 0.1f64..5.0) {
            let p = ModelParams::with_chibar(1.0, 0.01, 1.0, mu, ubar, n).unwrap();
            let r = classify_d1(&p);
            prop_assert!(r.d1p_n < *r.d1t_list.last().unwrap());
            for w in r.d1t_list.windows(2) {
                prop_assert!(w[0] > w[1]);
            }
        }

        #[test]
        fn thresholds_depend_on_product_only(k in 0.1f64..10.0, n in 1usize..8) {
            let p = ModelParams::with_chibar(1.0, 0.01, 1.0, 1.0, 2.0, n).unwrap();
            let q = ModelParams { mu: p.mu * k, ubar: p.ubar / k, ..p };
            let (a, b) = (classify_d1(&p), classify_d1(&q));
            prop_assert!((a.d1p_n - b.d1p_n).abs() <= 1e-14 * a.d1p_n);
            for (x, y) in a.d1t_list.iter().zip(&b.d1t_list) {
                prop_assert!((x - y).abs() <= 1e-14 * x);
            }
        }
    }
}

//! `key = value` run configuration.
//!
//! Every key has a default; files and `--override` flags may only set keys
//! listed in [`KEYS`]. The resolved configuration is echoed verbatim next to
//! the outputs and its SHA-256 tags every file.

use ks_spikes::dynamics::{BetaRule, FarField};
use ks_spikes::model::ModelParams;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// `(key, default, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("d1", "1", "cell diffusivity"),
    ("d2", "0.0004", "chemical diffusivity, eps^2"),
    ("chi", "1", "chemotactic sensitivity"),
    ("mu", "1", "logistic growth rate"),
    ("ubar", "2", "carrying capacity"),
    ("tau", "1", "relaxation constant of the cell equation"),
    ("N", "2", "number of spikes"),
    ("locations", "", "initial spike centres, comma separated; empty = equally spaced"),
    ("profile_points", "2001", "samples in the profile CSV"),
    ("sweep_d1_min", "0", "start of the d1 sweep; 0 = 1.05 d1pN"),
    ("sweep_d1_max", "3", "end of the d1 sweep"),
    ("sweep_points", "60", "points in the d1 sweep"),
    ("hopf", "false", "also trace the single-spike Hopf curve"),
    ("hopf_d1_min", "0.9", "start of the Hopf curve"),
    ("hopf_d1_max", "3", "end of the Hopf curve"),
    ("hopf_points", "12", "points on the Hopf curve"),
    ("assert_stable", "false", "exit with status 4 if the configured state is unstable"),
    ("t_end", "0", "final time; 0 = 2/eps^3 (ramp: ramp_time)"),
    ("samples", "41", "equally spaced trajectory samples, including t = 0"),
    ("beta_rule", "quadrature", "quadrature | asymptotic"),
    ("far_field", "leading", "leading | flux_corrected"),
    ("rtol", "1e-8", "relative tolerance of the DAE integrator"),
    ("n_cells", "0", "PDE cells; 0 = max(2048, ceil(40/eps))"),
    ("dt_max", "1", "largest PDE time step"),
    ("pde_initial", "profile", "profile | flat"),
    ("snapshot_times", "", "PDE snapshot times, comma separated; empty = 0 and t_end"),
    ("steady", "false", "pde: march to steady state instead of t_end"),
    ("steady_tol", "1e-9", "pde: relative rate of change treated as steady"),
    ("ramp_d1_start", "2", "d1 at t = 0, chi/d1 held fixed"),
    ("ramp_d1_end", "3.2", "d1 at the end of the ramp"),
    ("ramp_time", "1200", "duration of the linear ramp"),
    ("check_every", "5", "spike count check interval during a ramp"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub locations: Vec<f64>,
    pub profile_points: usize,
    pub sweep_d1_min: f64,
    pub sweep_d1_max: f64,
    pub sweep_points: usize,
    pub hopf: bool,
    pub hopf_d1_min: f64,
    pub hopf_d1_max: f64,
    pub hopf_points: usize,
    pub assert_stable: bool,
    pub t_end: f64,
    pub samples: usize,
    pub beta_rule: BetaRule,
    pub far_field: FarField,
    pub rtol: f64,
    pub n_cells: usize,
    pub dt_max: f64,
    pub pde_flat: bool,
    pub snapshot_times: Vec<f64>,
    pub steady: bool,
    pub steady_tol: f64,
    pub ramp_d1_start: f64,
    pub ramp_d1_end: f64,
    pub ramp_time: f64,
    pub check_every: f64,
    /// Canonical `key = value` text, one line per key in [`KEYS`] order.
    pub resolved: String,
}

/// Raw values before typing; starts from the defaults.
#[derive(Debug, Clone)]
pub struct RawConfig(BTreeMap<&'static str, String>);

impl Default for RawConfig {
    fn default() -> Self {
        Self(KEYS.iter().map(|(k, v, _)| (*k, v.to_string())).collect())
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let Some((k, _, _)) = KEYS.iter().find(|(k, _, _)| *k == key) else {
            return Err(ConfigError(format!("unknown key `{key}`")));
        };
        self.0.insert(k, value.trim().to_string());
        Ok(())
    }

    /// Applies a config file: `key = value` lines, `#` comments, blank lines ignored.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line).map_err(|e| ConfigError(format!("{origin}:{}: {}", i + 1, e.0)))?;
        }
        Ok(())
    }

    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| ConfigError(format!("expected key=value, got `{assignment}`")))?;
        self.set(k.trim(), v)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let raw = &self.0[key];
        raw.parse().map_err(|_| ConfigError(format!("cannot parse `{key} = {raw}`")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.0[key]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| ConfigError(format!("cannot parse `{s}` in `{key}`"))))
            .collect()
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let params = ModelParams::new(self.get("d1")?, self.get("d2")?, self.get("chi")?, self.get("mu")?, self.get("ubar")?, self.get("tau")?, self.get("N")?)
            .map_err(|e| ConfigError(e.to_string()))?;
        let mut locations = self.list("locations")?;
        if locations.is_empty() {
            locations = params.symmetric_locations();
        }
        if locations.len() != params.n {
            return Err(ConfigError(format!("{} locations given for N = {}", locations.len(), params.n)));
        }
        if locations.windows(2).any(|w| w[1] <= w[0]) || locations.iter().any(|x| x.abs() >= 1.0) {
            return Err(ConfigError("locations must be increasing and inside (-1, 1)".into()));
        }
        let beta_rule = match self.0["beta_rule"].as_str() {
            "quadrature" => BetaRule::Quadrature,
            "asymptotic" => BetaRule::Asymptotic,
            other => return Err(ConfigError(format!("beta_rule must be quadrature or asymptotic, got `{other}`"))),
        };
        let far_field = match self.0["far_field"].as_str() {
            "leading" => FarField::Leading,
            "flux_corrected" => FarField::FluxCorrected,
            other => return Err(ConfigError(format!("far_field must be leading or flux_corrected, got `{other}`"))),
        };
        let pde_flat = match self.0["pde_initial"].as_str() {
            "profile" => false,
            "flat" => true,
            other => return Err(ConfigError(format!("pde_initial must be profile or flat, got `{other}`"))),
        };
        let cfg = RunConfig {
            params,
            locations,
            profile_points: self.get("profile_points")?,
            sweep_d1_min: self.get("sweep_d1_min")?,
            sweep_d1_max: self.get("sweep_d1_max")?,
            sweep_points: self.get("sweep_points")?,
            hopf: self.get("hopf")?,
            hopf_d1_min: self.get("hopf_d1_min")?,
            hopf_d1_max: self.get("hopf_d1_max")?,
            hopf_points: self.get("hopf_points")?,
            assert_stable: self.get("assert_stable")?,
            t_end: self.get("t_end")?,
            samples: self.get("samples")?,
            beta_rule,
            far_field,
            rtol: self.get("rtol")?,
            n_cells: self.get("n_cells")?,
            dt_max: self.get("dt_max")?,
            pde_flat,
            snapshot_times: self.list("snapshot_times")?,
            steady: self.get("steady")?,
            steady_tol: self.get("steady_tol")?,
            ramp_d1_start: self.get("ramp_d1_start")?,
            ramp_d1_end: self.get("ramp_d1_end")?,
            ramp_time: self.get("ramp_time")?,
            check_every: self.get("check_every")?,
            resolved: KEYS.iter().fold(String::new(), |mut s, (k, _, _)| {
                let _ = writeln!(s, "{k} = {}", self.0[k]);
                s
            }),
        };
        if cfg.samples < 2 || cfg.profile_points < 2 || cfg.sweep_points < 1 || cfg.hopf_points < 1 {
            return Err(ConfigError("samples and profile_points need at least 2 points, sweeps at least 1".into()));
        }
        if !(cfg.t_end >= 0.0 && cfg.dt_max > 0.0 && cfg.rtol > 0.0 && cfg.check_every > 0.0 && cfg.ramp_time > 0.0) {
            return Err(ConfigError("t_end must be >= 0; dt_max, rtol, check_every and ramp_time must be > 0".into()));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn sha256(&self) -> String {
        Sha256::digest(self.resolved.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// `t_end`, or `2/ε³` when unset.
    pub fn dynamics_t_end(&self) -> f64 {
        if self.t_end > 0.0 {
            self.t_end
        } else {
            2.0 / self.params.eps().powi(3)
        }
    }

    pub fn sample_times(&self, t_end: f64) -> Vec<f64> {
        let n = self.samples - 1;
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = RawConfig::default().resolve().unwrap();
        assert_eq!(cfg.locations, vec![-0.5, 0.5]);
        assert_eq!(cfg.resolved.lines().count(), KEYS.len());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut raw = RawConfig::default();
        assert!(raw.set("d3", "1").is_err());
        assert!(raw.apply_text("d1 = 2\nfoo = 1\n", "cfg").unwrap_err().0.contains("cfg:2"));
    }

    #[test]
    fn comments_and_overrides() {
        let mut raw = RawConfig::default();
        raw.apply_text("# table row\nd2 = 0.02   # eps^2\nN = 1\n", "cfg").unwrap();
        raw.apply_assignment("mu=0.25").unwrap();
        let cfg = raw.resolve().unwrap();
        assert_eq!((cfg.params.d2, cfg.params.n, cfg.params.mu), (0.02, 1, 0.25));
        assert_eq!(cfg.locations, vec![0.0]);
    }

    #[test]
    fn hash_tracks_values_only() {
        let a = RawConfig::default().resolve().unwrap();
        let mut raw = RawConfig::default();
        raw.apply_text("d1 = 1\n\n", "cfg").unwrap();
        assert_eq!(raw.resolve().unwrap().sha256(), a.sha256());
        raw.set("d1", "1.5").unwrap();
        assert_ne!(raw.resolve().unwrap().sha256(), a.sha256());
    }

    #[test]
    fn bad_values() {
        for (k, v) in [("N", "0"), ("N", "two"), ("locations", "0.5,-0.5"), ("beta_rule", "fast"), ("samples", "1")] {
            let mut raw = RawConfig::default();
            raw.set(k, v).unwrap();
            assert!(raw.resolve().is_err(), "{k} = {v}");
        }
    }
}

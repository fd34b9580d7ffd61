//! Library error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("d1 = {d1} is resonant (within the tolerance band of d1T{mode} = {resonance})")]
    ResonantD1 { d1: f64, mode: usize, resonance: f64 },

    #[error("d1 = {d1} is not above the positivity threshold d1p = {d1p}")]
    BelowPositivity { d1: f64, d1p: f64 },

    #[error("tridiagonal matrix singular at mode {mode} (eigenvalue {eigenvalue:e})")]
    SingularMode { mode: usize, eigenvalue: f64 },

    #[error("Gamma function pole at z = {0}")]
    GammaPole(f64),

    #[error("hypergeometric parameters outside the domain: {0}")]
    HypergeometricDomain(String),

    #[error("{what} did not converge in {iterations} iterations (last residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },

    #[error("{what}: Newton did not converge; residual history {history:?}")]
    Newton { what: &'static str, history: Vec<f64> },

    #[error("{what}: fixed point did not converge; iterates {history:?}")]
    FixedPoint { what: &'static str, history: Vec<f64> },

    #[error("no root of {what} bracketed on [{lo}, {hi}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("quadrature failed for {what}: error estimate {estimate:e} above tolerance {tol:e}")]
    Quadrature { what: &'static str, estimate: f64, tol: f64 },

    #[error("near the bifurcation point: {what} is singular (condition {condition:e})")]
    BifurcationProximity { what: &'static str, condition: f64 },

    #[error("theta = {theta} lies within {band:e} of the removable singularity theta_{m}")]
    NearRemovableSingularity { theta: f64, m: usize, band: f64 },

    #[error("spikes {i} and {j} approached within {gap:e} at t = {t}")]
    SpikeCollision { i: usize, j: usize, gap: f64, t: f64 },

    #[error("step size collapsed to {dt:e} at t = {t}")]
    StepCollapse { dt: f64, t: f64 },

    #[error("not steady after t = {t} (last rate {rate:e})")]
    NotSteady { t: f64, rate: f64 },

    #[error("Hopf solve returned a spurious root with lambda_H = {0}")]
    SpuriousHopfRoot(f64),

    #[error("pole of the NLEP multiplier at alpha = -2")]
    MultiplierPole,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable short name, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid parameter",
            Error::ResonantD1 { .. } => "resonant d1",
            Error::BelowPositivity { .. } => "below positivity threshold",
            Error::SingularMode { .. } => "singular mode",
            Error::GammaPole(_) => "gamma pole",
            Error::HypergeometricDomain(_) => "hypergeometric domain",
            Error::NoConvergence { .. } => "no convergence",
            Error::Newton { .. } => "newton failure",
            Error::FixedPoint { .. } => "fixed point failure",
            Error::NoBracket { .. } => "no bracket",
            Error::Quadrature { .. } => "quadrature failure",
            Error::BifurcationProximity { .. } => "bifurcation proximity",
            Error::NearRemovableSingularity { .. } => "near removable singularity",
            Error::SpikeCollision { .. } => "spike collision",
            Error::StepCollapse { .. } => "step collapse",
            Error::NotSteady { .. } => "not steady",
            Error::SpuriousHopfRoot(_) => "spurious hopf root",
            Error::MultiplierPole => "multiplier pole",
        }
    }
}

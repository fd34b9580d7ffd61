//! Spike equilibria, stability thresholds and slow dynamics for the 1D
//! Keller–Segel model with logistic growth in the small `d2` limit, with a
//! finite-volume solver of the full system to check them against.

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod greens;
pub mod model;
pub mod nlep;
pub mod pde;
pub mod quad;
pub mod smalleig;
pub mod specialfn;

pub use error::{Error, Result};
pub use model::ModelParams;

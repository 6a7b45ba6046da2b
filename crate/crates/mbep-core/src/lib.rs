//! Lindbladian superoperators for small driven-dissipative N-level systems
//! and their exceptional-point structure: multi-block Jordan forms,
//! perturbation splitting exponents via Newton diagrams, population dynamics
//! with polynomial prefactors, and quantum-metric divergence scans.

pub mod acceptance;
pub mod dynamics;
pub mod error;
pub mod jordan;
pub mod linalg;
pub mod model;
pub mod perturb;
pub mod qgt;

pub use error::{Error, Result};

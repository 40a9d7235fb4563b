//! Proximal algorithms for weakly convex objectives, with diagnostics for
//! fixed-point stability: Jacobian spectra of the one-step maps at critical
//! points, Moreau-envelope identities, Monte Carlo escape experiments, and a
//! relaxed model-based method with per-iteration certificates.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod mba;
pub mod matrix;
pub mod problems;
pub mod proxengine;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};

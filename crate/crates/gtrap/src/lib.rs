//! Simulation library for single-(anti)proton g-factor measurements in
//! Penning traps.
//!
//! The library models the two measurement strategies side by side: the
//! classical continuous Stern-Gerlach scheme (resistive cooling, magnetic
//! bottle, axial-frequency spin detection, double-trap shuttling) and a
//! quantum-logic scheme (ground-state cooling, Coulomb-mediated motional
//! exchange with an atomic ion, fluorescence readout). On top of both sit the
//! common metrology layers: Larmor/cyclotron lineshape scans, least-squares
//! resonance fits, magnetic-field drift with a co-magnetometer flywheel, and
//! full campaign simulations that produce a g-factor estimate with an honest
//! uncertainty.
//!
//! Everything stochastic draws from named, seed-derived ChaCha streams
//! ([`rng::substream`]), so any result can be reproduced bit for bit.

pub mod classical;
pub mod config;
pub mod constants;
pub mod output;
pub mod protocol;
pub mod qdyn;
pub mod rng;
pub mod species;
pub mod trap;

/// Library-wide error type. The CLI maps these onto exit codes: validation
/// and physics-domain failures are distinct from numerical breakdowns, which
/// are distinct from I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the physical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested trap configuration has no stable confined motion.
    #[error("unstable trap: {0}")]
    UnstableTrap(String),
    /// Population reached the top of a truncated Fock space.
    #[error("truncation guard violated: {0}")]
    Truncation(String),
    /// Configuration file or cross-reference problem.
    #[error("config error: {0}")]
    Config(String),
    /// An estimator failed to produce a usable result.
    #[error("estimation failed: {0}")]
    Estimation(String),
    /// A numerical routine broke down (non-convergence, singularity, NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Measurement windows that should be paired do not line up.
    #[error("window alignment error: {0}")]
    Alignment(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

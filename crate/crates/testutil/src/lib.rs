//! Independent numerical oracles for the gtrap test suites.
//!
//! Everything in this crate deliberately avoids the algorithms used by the
//! main library: matrix exponentials go through dense Pade approximation with
//! hand-rolled Gaussian elimination, Penning-trap mode frequencies through the
//! characteristic polynomial of the full equation-of-motion matrix, cooling
//! through an analytic rate equation, and the two-ion splitting through the
//! classical stiffness matrix. Agreement between these routes and the library
//! is what the cross-check tests assert; sharing code would make those checks
//! vacuous.

pub mod cooling;
pub mod expm;
pub mod hamiltonian;
pub mod penning;
pub mod stats;
pub mod twoion;

pub use cooling::rate_equation_cool;
pub use expm::expm;
pub use hamiltonian::{exchange_hamiltonian, sideband_hamiltonian, OracleDriveKind};
pub use penning::characteristic_mode_frequencies;
pub use stats::{chi_square_statistic, chi_square_critical, mean, sample_variance};
pub use twoion::coupled_axial_splitting;

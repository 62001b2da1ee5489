//! Physical constants (CODATA 2018 exact/recommended values) and fixed data
//! for the built-in particle species.

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Proton mass (kg).
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;

/// Proton g-factor (dimensionless).
pub const PROTON_G: f64 = 5.585_694_689_3;

/// 9Be+ ionic mass (kg): 9.012183065 u minus one electron mass.
pub const BE9_ION_MASS: f64 = 1.496_417_111_641e-26;

/// Effective g-factor for the 9Be+ hyperfine qubit, defined so that the
/// universal moment identity mu = g |q| hbar / (4 m) reproduces an
/// electron-like moment (g_J/2) mu_B with g_J = 2.00226. The physical moment
/// comes from the valence electron, not the ion's cyclotron motion, hence the
/// large numerical value.
pub const BE9_EFFECTIVE_G: f64 = 3.289_153_499_239_853e4;

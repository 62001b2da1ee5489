//! Coulomb-mediated motional exchange between two ions in separate wells.
//!
//! Expanding the Coulomb interaction to quadratic order about the two
//! equilibrium positions leaves a bilinear cross term -2 beta z_a z_b with
//! beta = q_a q_b / (4 pi eps0 d^3). In the rotating frame this becomes a
//! beamsplitter coupling hbar Omega_ex (a b+ + a+ b) with
//! Omega_ex = |q_a q_b| z0_a z0_b / (2 pi eps0 d^3 hbar), which equals half
//! the classical normal-mode splitting of the coupled wells. Well detuning
//! enters as hbar (omega_b - omega_a) b+ b.
//!
//! Evolution conserves the total quantum number, so the propagator is built
//! per fixed-N block from a real symmetric tridiagonal eigenproblem; the spin
//! is a spectator.

use super::{ModeCount, SpinMotionState};
use crate::constants::{EPSILON_0, HBAR};
use crate::species::Species;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Two ions in adjacent axial wells, coupled through the Coulomb interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWell {
    /// Axial frequency of ion a (rad/s).
    pub omega_a: f64,
    /// Axial frequency of ion b (rad/s).
    pub omega_b: f64,
    /// Well separation (m).
    pub separation: f64,
    q_a: f64,
    q_b: f64,
    m_a: f64,
    m_b: f64,
}

impl DoubleWell {
    pub fn new(
        ion_a: &Species,
        ion_b: &Species,
        omega_a: f64,
        omega_b: f64,
        separation: f64,
    ) -> Result<Self> {
        for (name, v) in [("omega_a", omega_a), ("omega_b", omega_b), ("separation", separation)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "double well: {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            omega_a,
            omega_b,
            separation,
            q_a: ion_a.charge(),
            q_b: ion_b.charge(),
            m_a: ion_a.mass(),
            m_b: ion_b.mass(),
        })
    }

    /// Ground-state wavepacket extent sqrt(hbar / (2 m omega)).
    pub fn ground_state_extent(mass: f64, omega: f64) -> f64 {
        (HBAR / (2.0 * mass * omega)).sqrt()
    }

    /// The quantum exchange rate Omega_ex (rad/s). Equal to half the
    /// classical normal-mode splitting of the two coupled wells.
    pub fn exchange_rate(&self) -> f64 {
        let z0a = Self::ground_state_extent(self.m_a, self.omega_a);
        let z0b = Self::ground_state_extent(self.m_b, self.omega_b);
        (self.q_a * self.q_b).abs() * z0a * z0b
            / (2.0 * std::f64::consts::PI * EPSILON_0 * self.separation.powi(3) * HBAR)
    }

    /// Well detuning omega_b - omega_a (rad/s).
    pub fn detuning(&self) -> f64 {
        self.omega_b - self.omega_a
    }

    /// Time of the first complete quantum swap, pi / (2 Omega_ex).
    pub fn swap_time(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.exchange_rate())
    }
}

/// Evolve a two-mode state under the exchange coupling for `t` seconds.
pub fn evolve_exchange(
    state: &SpinMotionState,
    well: &DoubleWell,
    t: f64,
) -> Result<SpinMotionState> {
    if !matches!(state.mode_count(), ModeCount::Two) {
        return Err(Error::Domain("exchange evolution needs a two-mode state".into()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "evolution time must be nonnegative and finite, got {t}"
        )));
    }
    let omega = well.exchange_rate();
    let delta = well.detuning();
    let n_max = state.n_max();
    let mut out = state.clone();

    // Fixed-N blocks: basis states (n_a, N - n_a). Adjacent states couple
    // with strength Omega sqrt((n_a + 1)(n_b)); the detuning term is
    // delta * n_b on the diagonal.
    for total in 0..=(2 * n_max) {
        let na_min = total.saturating_sub(n_max);
        let na_max = total.min(n_max);
        let size = na_max - na_min + 1;
        if size == 1 {
            // Single state in the block: pure phase from the diagonal.
            let na = na_min;
            let nb = total - na;
            let angle = -delta * nb as f64 * t;
            let phase = Complex64::new(angle.cos(), angle.sin());
            for spin_up in [false, true] {
                let idx = out.index_two(spin_up, na, nb);
                out.amplitudes_mut()[idx] *= phase;
            }
            continue;
        }
        let mut block = DMatrix::<f64>::zeros(size, size);
        for i in 0..size {
            let na = na_min + i;
            let nb = total - na;
            block[(i, i)] = delta * nb as f64;
            if i + 1 < size {
                // <na+1, nb-1| H |na, nb> = Omega sqrt((na+1) nb)
                let coupling = omega * (((na + 1) * nb) as f64).sqrt();
                block[(i, i + 1)] = coupling;
                block[(i + 1, i)] = coupling;
            }
        }
        let eigen = SymmetricEigen::new(block);
        // U = V exp(-i Lambda t) V^T applied to each spin sector.
        for spin_up in [false, true] {
            let indices: Vec<usize> = (0..size)
                .map(|i| {
                    let na = na_min + i;
                    state.index_two(spin_up, na, total - na)
                })
                .collect();
            let sub: Vec<Complex64> = indices.iter().map(|&ix| out.amplitudes()[ix]).collect();
            // y = V^T sub
            let mut y = vec![Complex64::ZERO; size];
            for (k, yk) in y.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for (i, &s) in sub.iter().enumerate() {
                    acc += Complex64::new(eigen.eigenvectors[(i, k)], 0.0) * s;
                }
                *yk = acc;
            }
            // y *= exp(-i lambda t)
            for (k, yk) in y.iter_mut().enumerate() {
                let angle = -eigen.eigenvalues[k] * t;
                *yk *= Complex64::new(angle.cos(), angle.sin());
            }
            // sub' = V y
            for (i, &ix) in indices.iter().enumerate() {
                let mut acc = Complex64::ZERO;
                for (k, &yk) in y.iter().enumerate() {
                    acc += Complex64::new(eigen.eigenvectors[(i, k)], 0.0) * yk;
                }
                out.amplitudes_mut()[ix] = acc;
            }
        }
    }
    out.check_truncation()?;
    Ok(out)
}

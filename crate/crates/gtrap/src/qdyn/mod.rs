//! Quantum spin-motion dynamics in truncated Fock spaces.
//!
//! States carry one spin-1/2 plus one or two harmonic modes, each truncated
//! at `n_max` quanta. Every propagation step re-checks a truncation guard on
//! the top Fock level, so silent reflection off the artificial boundary is
//! impossible: simulations that climb the ladder fail loudly instead.

mod cooling;
mod exchange;
mod pulse;
mod thermal;

pub use cooling::{ground_state_cool, CoolingLimits, CoolingOutcome, DecayModel};
pub use exchange::{evolve_exchange, DoubleWell};
pub use pulse::evolve_pulse;
pub use thermal::{thermal_state, FockDistribution};

use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default ceiling for the top-Fock-level population.
pub const DEFAULT_TRUNCATION_GUARD: f64 = 1e-6;

/// The Lamb-Dicke expansion behind the sideband coupling breaks down well
/// before eta reaches this bound.
pub const LAMB_DICKE_MAX: f64 = 0.5;

/// Which joint spin-motion ladder a drive addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// Spin flip at constant motional quantum number.
    Carrier,
    /// |down, n> <-> |up, n-1>, Rabi rate eta Omega0 sqrt(n).
    RedSideband,
    /// |down, n> <-> |up, n+1>, Rabi rate eta Omega0 sqrt(n+1).
    BlueSideband,
}

/// A resolved-sideband drive in the frame rotating at the drive frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandDrive {
    /// Bare (carrier) Rabi frequency (rad/s).
    pub omega0: f64,
    /// Lamb-Dicke parameter, in (0, 0.5).
    pub eta: f64,
    /// Detuning of the drive from the addressed transition (rad/s).
    pub detuning: f64,
    /// Drive phase (rad).
    pub phase: f64,
    pub kind: PulseKind,
}

impl SidebandDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::Domain(format!(
                "drive omega0 must be positive and finite, got {}",
                self.omega0
            )));
        }
        if !(self.eta > 0.0 && self.eta < LAMB_DICKE_MAX) {
            return Err(Error::Domain(format!(
                "Lamb-Dicke parameter must lie in (0, {LAMB_DICKE_MAX}), got {}",
                self.eta
            )));
        }
        if !self.detuning.is_finite() || !self.phase.is_finite() {
            return Err(Error::Domain(
                "drive detuning and phase must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// How many motional modes a state carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeCount {
    One,
    Two,
}

/// A pure state of spin x (one or two) truncated harmonic modes.
///
/// Amplitude layout: spin slowest (down = 0, up = 1), then mode a, then mode
/// b; i.e. index = s*L + n for one mode and s*L^2 + n_a*L + n_b for two,
/// with L = n_max + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMotionState {
    n_max: usize,
    mode_count: ModeCount,
    truncation_guard: f64,
    amps: Vec<Complex64>,
}

impl SpinMotionState {
    fn dim(n_max: usize, mode_count: ModeCount) -> usize {
        let l = n_max + 1;
        match mode_count {
            ModeCount::One => 2 * l,
            ModeCount::Two => 2 * l * l,
        }
    }

    /// Basis state |spin, n> for a single mode.
    pub fn basis_one(n_max: usize, spin_up: bool, n: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::Domain(format!(
                "Fock level {n} exceeds n_max = {n_max}"
            )));
        }
        let mut amps = vec![Complex64::ZERO; Self::dim(n_max, ModeCount::One)];
        let s = usize::from(spin_up);
        amps[s * (n_max + 1) + n] = Complex64::ONE;
        Ok(Self {
            n_max,
            mode_count: ModeCount::One,
            truncation_guard: DEFAULT_TRUNCATION_GUARD,
            amps,
        })
    }

    /// Basis state |spin, n_a, n_b> for two modes.
    pub fn basis_two(n_max: usize, spin_up: bool, n_a: usize, n_b: usize) -> Result<Self> {
        if n_a > n_max || n_b > n_max {
            return Err(Error::Domain(format!(
                "Fock level ({n_a}, {n_b}) exceeds n_max = {n_max}"
            )));
        }
        let l = n_max + 1;
        let mut amps = vec![Complex64::ZERO; Self::dim(n_max, ModeCount::Two)];
        let s = usize::from(spin_up);
        amps[s * l * l + n_a * l + n_b] = Complex64::ONE;
        Ok(Self {
            n_max,
            mode_count: ModeCount::Two,
            truncation_guard: DEFAULT_TRUNCATION_GUARD,
            amps,
        })
    }

    /// Build a state from raw amplitudes (normalized to 1 within 1e-9).
    pub fn from_amplitudes(
        n_max: usize,
        mode_count: ModeCount,
        amps: Vec<Complex64>,
    ) -> Result<Self> {
        if amps.len() != Self::dim(n_max, mode_count) {
            return Err(Error::Domain(format!(
                "amplitude vector has length {}, expected {}",
                amps.len(),
                Self::dim(n_max, mode_count)
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "state norm^2 = {norm}, must be 1 within 1e-9"
            )));
        }
        Ok(Self {
            n_max,
            mode_count,
            truncation_guard: DEFAULT_TRUNCATION_GUARD,
            amps,
        })
    }

    /// Replace the truncation guard (population ceiling for the top level).
    pub fn with_truncation_guard(mut self, guard: f64) -> Self {
        self.truncation_guard = guard;
        self
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mode_count(&self) -> ModeCount {
        self.mode_count
    }

    pub fn truncation_guard(&self) -> f64 {
        self.truncation_guard
    }

    pub(crate) fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn index_one(&self, spin_up: bool, n: usize) -> usize {
        debug_assert!(matches!(self.mode_count, ModeCount::One));
        usize::from(spin_up) * (self.n_max + 1) + n
    }

    pub fn index_two(&self, spin_up: bool, n_a: usize, n_b: usize) -> usize {
        debug_assert!(matches!(self.mode_count, ModeCount::Two));
        let l = self.n_max + 1;
        usize::from(spin_up) * l * l + n_a * l + n_b
    }

    /// Human-readable basis label for amplitude index `idx`, e.g. "down:3"
    /// or "up:0,2".
    pub fn basis_label(&self, idx: usize) -> String {
        let l = self.n_max + 1;
        match self.mode_count {
            ModeCount::One => {
                let spin = if idx / l == 0 { "down" } else { "up" };
                format!("{spin}:{}", idx % l)
            }
            ModeCount::Two => {
                let spin = if idx / (l * l) == 0 { "down" } else { "up" };
                let rest = idx % (l * l);
                format!("{spin}:{},{}", rest / l, rest % l)
            }
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn population(&self, idx: usize) -> f64 {
        self.amps[idx].norm_sqr()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn spin_up_population(&self) -> f64 {
        let half = self.amps.len() / 2;
        self.amps[half..].iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mean occupation of mode `mode` (0 = a, 1 = b; a one-mode state only
    /// has mode 0).
    pub fn mean_occupation(&self, mode: usize) -> f64 {
        let l = self.n_max + 1;
        match self.mode_count {
            ModeCount::One => {
                assert_eq!(mode, 0, "one-mode state has only mode 0");
                self.amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (i % l) as f64 * a.norm_sqr())
                    .sum()
            }
            ModeCount::Two => {
                assert!(mode < 2);
                self.amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let rest = i % (l * l);
                        let n = if mode == 0 { rest / l } else { rest % l };
                        n as f64 * a.norm_sqr()
                    })
                    .sum()
            }
        }
    }

    /// Squared overlap |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len());
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.norm_sqr()
    }

    /// Total population sitting at the top Fock level of any mode.
    pub fn top_level_population(&self) -> f64 {
        let l = self.n_max + 1;
        match self.mode_count {
            ModeCount::One => self
                .amps
                .iter()
                .enumerate()
                .filter(|(i, _)| i % l == self.n_max)
                .map(|(_, a)| a.norm_sqr())
                .sum(),
            ModeCount::Two => self
                .amps
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let rest = i % (l * l);
                    rest / l == self.n_max || rest % l == self.n_max
                })
                .map(|(_, a)| a.norm_sqr())
                .sum(),
        }
    }

    /// Enforce the truncation guard; called after every propagation step.
    pub fn check_truncation(&self) -> Result<()> {
        let top = self.top_level_population();
        if top >= self.truncation_guard {
            return Err(Error::Truncation(format!(
                "top Fock level (n_max = {}) holds population {top:.3e}, \
                 guard is {:.1e}; raise n_max",
                self.n_max, self.truncation_guard
            )));
        }
        Ok(())
    }
}

//! Five-step quantum-logic spin readout.
//!
//! The proton's spin is mapped onto a fluorescence signal of a co-trapped
//! beryllium ion: (1) spin interrogation probe, (2) proton spin-to-motion
//! sideband, (3) motional exchange to the beryllium well, (4) beryllium
//! motion-to-spin sideband, (5) fluorescence detection. Each step is modeled
//! as an independent binary symmetric channel with its own fidelity, so the
//! end-to-end assignment probability has the product form
//! p = (1 + prod(2 f_i - 1)) / 2.

use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// One readout step: how often it preserves the logical bit, and how long it
/// takes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepModel {
    /// Probability the step transfers the bit faithfully.
    pub fidelity: f64,
    /// Wall time of the step (s).
    pub duration: f64,
}

impl StepModel {
    /// A step that never fails and takes no time (used for absent steps).
    pub const fn perfect() -> Self {
        StepModel {
            fidelity: 1.0,
            duration: 0.0,
        }
    }

    pub fn validate(&self, label: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fidelity) || !self.fidelity.is_finite() {
            return Err(Error::Domain(format!(
                "{label} fidelity must lie in [0, 1], got {}",
                self.fidelity
            )));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::Domain(format!(
                "{label} duration must be nonnegative, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// The full five-step chain from spin probe to photon count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSequence {
    /// Spin interrogation probe on the proton.
    pub probe: StepModel,
    /// Proton spin-to-motion red sideband.
    pub proton_sideband: StepModel,
    /// Motional quantum exchange between the wells.
    pub exchange: StepModel,
    /// Beryllium motion-to-spin sideband.
    pub be_sideband: StepModel,
    /// State-selective fluorescence detection.
    pub fluorescence: StepModel,
}

impl ReadoutSequence {
    pub fn validate(&self) -> Result<()> {
        self.probe.validate("probe")?;
        self.proton_sideband.validate("proton sideband")?;
        self.exchange.validate("exchange")?;
        self.be_sideband.validate("beryllium sideband")?;
        self.fluorescence.validate("fluorescence")?;
        Ok(())
    }

    fn steps(&self) -> [StepModel; 5] {
        [
            self.probe,
            self.proton_sideband,
            self.exchange,
            self.be_sideband,
            self.fluorescence,
        ]
    }

    /// Total wall time of one readout.
    pub fn total_duration(&self) -> f64 {
        self.steps().iter().map(|s| s.duration).sum()
    }

    /// Probability that the reported bit equals the true spin state:
    /// (1 + prod(2 f_i - 1)) / 2.
    pub fn correct_assignment_probability(&self) -> f64 {
        let product: f64 = self.steps().iter().map(|s| 2.0 * s.fidelity - 1.0).product();
        0.5 * (1.0 + product)
    }
}

/// Run one readout of a known spin state. Returns true for "bright"
/// (fluorescence seen), which reports spin up when every step works.
pub fn run_readout(
    sequence: &ReadoutSequence,
    spin_up: bool,
    rng: &mut ChaCha12Rng,
) -> Result<bool> {
    sequence.validate()?;
    let mut bit = spin_up;
    for step in sequence.steps() {
        if !rng.random_bool(step.fidelity) {
            bit = !bit;
        }
    }
    Ok(bit)
}

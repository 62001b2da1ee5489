//! Quantum-logic measurement protocol: readout sequence, drift model,
//! lineshape scanning and fitting, flywheel correction, and full campaign
//! simulation.

mod campaign;
mod flywheel;
mod lineshape;
mod readout;

pub use campaign::{
    run_campaign, CampaignConfig, CampaignMode, CampaignReport, ClassicalDetection,
    OmegaCReadModel, ReplicaResult, ShotRecord, WindowRecord,
};
pub use flywheel::{flywheel_correct, FlywheelResult, WindowEstimate};
pub use lineshape::{
    fit_resonance, rabi_flip_probability, scan_lineshape, LineshapeScan, ResonanceFit, ScanParams,
};
pub use readout::{run_readout, ReadoutSequence, StepModel};

use crate::{Error, Result};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

/// Slow magnetic field drift: deterministic linear ramp plus a random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftModel {
    /// Field at t = 0 (T).
    pub b0: f64,
    /// Linear drift rate (T/s).
    pub linear_rate: f64,
    /// Random walk amplitude (T per sqrt second).
    pub random_walk: f64,
    /// RNG stream label for the walk increments.
    pub seed_stream: String,
}

impl DriftModel {
    /// A perfectly stable field.
    pub fn frozen(b0: f64) -> Self {
        DriftModel {
            b0,
            linear_rate: 0.0,
            random_walk: 0.0,
            seed_stream: "drift".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return Err(Error::Domain(format!(
                "drift model needs a positive base field, got {}",
                self.b0
            )));
        }
        if !self.linear_rate.is_finite() || !self.random_walk.is_finite() || self.random_walk < 0.0
        {
            return Err(Error::Domain(
                "drift rates must be finite (walk amplitude nonnegative)".into(),
            ));
        }
        Ok(())
    }
}

/// Stateful sampler of the drifting field. Queries must come in
/// nondecreasing time order so the random walk accumulates consistently.
#[derive(Debug, Clone)]
pub struct DriftTracker {
    model: DriftModel,
    rng: ChaCha12Rng,
    last_time: f64,
    walk_offset: f64,
}

impl DriftTracker {
    pub fn new(model: DriftModel, rng: ChaCha12Rng) -> Result<Self> {
        model.validate()?;
        Ok(DriftTracker {
            model,
            rng,
            last_time: 0.0,
            walk_offset: 0.0,
        })
    }

    /// Field value at time `t` (s); advances the random walk from the last
    /// queried time to `t`.
    pub fn field_at(&mut self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("drift time must be nonnegative, got {t}")));
        }
        if t < self.last_time {
            return Err(Error::Domain(format!(
                "drift queries must be time ordered: {t} came after {}",
                self.last_time
            )));
        }
        let dt = t - self.last_time;
        if dt > 0.0 && self.model.random_walk > 0.0 {
            let step = Normal::new(0.0, self.model.random_walk * dt.sqrt())
                .expect("positive walk std");
            self.walk_offset += step.sample(&mut self.rng);
        }
        self.last_time = t;
        Ok(self.model.b0 + self.model.linear_rate * t + self.walk_offset)
    }

    /// The underlying model.
    pub fn model(&self) -> &DriftModel {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use gtrap_testutil::{mean, sample_variance};

    #[test]
    fn frozen_field_never_moves() {
        let mut tracker =
            DriftTracker::new(DriftModel::frozen(1.9), substream(7, "drift", 0)).unwrap();
        for k in 0..50 {
            assert_eq!(tracker.field_at(k as f64 * 10.0).unwrap(), 1.9);
        }
    }

    #[test]
    fn linear_ramp_is_exact_without_walk() {
        let model = DriftModel {
            b0: 1.9,
            linear_rate: 2.0e-9,
            random_walk: 0.0,
            seed_stream: "drift".into(),
        };
        let mut tracker = DriftTracker::new(model, substream(7, "drift", 1)).unwrap();
        let b = tracker.field_at(500.0).unwrap();
        assert_abs_diff_eq!(b, 1.9 + 2.0e-9 * 500.0, epsilon = 1e-18);
    }

    #[test]
    fn random_walk_variance_scales_with_elapsed_time() {
        // After time T the walk offset is N(0, amp^2 T) regardless of how
        // the interval was chopped up.
        let amp = 1.0e-10;
        let total = 400.0;
        let trials = 4000;
        let mut finals = Vec::with_capacity(trials);
        for k in 0..trials {
            let model = DriftModel {
                b0: 1.9,
                linear_rate: 0.0,
                random_walk: amp,
                seed_stream: "drift".into(),
            };
            let mut tracker =
                DriftTracker::new(model, substream(11, "walk-var", k as u64)).unwrap();
            // Uneven chopping on purpose.
            let mut t = 0.0f64;
            let mut step = 1.0f64;
            while t < total {
                t = (t + step).min(total);
                step *= 1.3;
                tracker.field_at(t).unwrap();
            }
            finals.push(tracker.field_at(total).unwrap() - 1.9);
        }
        let var = sample_variance(&finals);
        let expected = amp * amp * total;
        // 4 sigma for a variance estimate: var * sqrt(2/(n-1)) * 4.
        let tol = expected * (2.0 / (trials as f64 - 1.0)).sqrt() * 4.0;
        assert_abs_diff_eq!(var, expected, epsilon = tol);
        assert_abs_diff_eq!(mean(&finals), 0.0, epsilon = 4.0 * (expected / trials as f64).sqrt());
    }

    #[test]
    fn time_must_not_run_backwards() {
        let model = DriftModel {
            b0: 1.9,
            linear_rate: 0.0,
            random_walk: 1e-10,
            seed_stream: "drift".into(),
        };
        let mut tracker = DriftTracker::new(model, substream(7, "drift", 2)).unwrap();
        tracker.field_at(100.0).unwrap();
        let err = tracker.field_at(50.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(DriftModel {
            b0: -1.0,
            linear_rate: 0.0,
            random_walk: 0.0,
            seed_stream: "drift".into()
        }
        .validate()
        .is_err());
        assert!(DriftModel {
            b0: 1.9,
            linear_rate: 0.0,
            random_walk: -1e-10,
            seed_stream: "drift".into()
        }
        .validate()
        .is_err());
    }
}

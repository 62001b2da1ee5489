//! Flywheel drift correction: interleaved measurements of a co-trapped
//! reference ion track the magnetic field, and per-window frequency ratios
//! cancel the common-mode drift that would otherwise smear the line.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One time window's frequency estimate for a single species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    /// Window index within the campaign.
    pub window: u32,
    /// Window start time (s).
    pub t_start: f64,
    /// Window end time (s).
    pub t_end: f64,
    /// Estimated resonance frequency over the window (rad/s).
    pub omega_hat: f64,
    /// One-sigma uncertainty of the estimate (rad/s); zero means exact.
    pub sigma: f64,
}

impl WindowEstimate {
    fn validate(&self) -> Result<()> {
        if !self.omega_hat.is_finite() || !(self.omega_hat > 0.0) {
            return Err(Error::Domain(format!(
                "window {} frequency estimate must be positive, got {}",
                self.window, self.omega_hat
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::Domain(format!(
                "window {} sigma must be nonnegative, got {}",
                self.window, self.sigma
            )));
        }
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() {
            return Err(Error::Domain(format!(
                "window {} has an empty or inverted time span [{}, {}]",
                self.window, self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    fn overlaps(&self, other: &WindowEstimate) -> bool {
        self.t_start < other.t_end && other.t_start < self.t_end
    }
}

/// Combined per-window ratios and their inverse-variance average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlywheelResult {
    /// Per-window frequency ratios omega_target / omega_reference.
    pub window_ratios: Vec<f64>,
    /// Per-window one-sigma ratio uncertainties (zero when both inputs are
    /// exact).
    pub window_sigmas: Vec<f64>,
    /// Inverse-variance weighted mean ratio (plain mean when all windows are
    /// exact).
    pub ratio: f64,
    /// One-sigma uncertainty of the combined ratio (zero when exact).
    pub ratio_sigma: f64,
}

/// Form per-window target/reference frequency ratios and combine them.
///
/// The two estimate lists must pair up one-to-one: same window indices, in
/// the same order, with overlapping time spans — the drift cancellation
/// argument only holds when both species sampled the same field. Ratio
/// variance propagates linearly: (sigma_r / r)^2 = (sigma_t / omega_t)^2 +
/// (sigma_ref / omega_ref)^2.
pub fn flywheel_correct(
    target: &[WindowEstimate],
    reference: &[WindowEstimate],
) -> Result<FlywheelResult> {
    if target.is_empty() {
        return Err(Error::Domain("flywheel correction needs at least one window".into()));
    }
    if target.len() != reference.len() {
        return Err(Error::Alignment(format!(
            "target has {} windows but reference has {}",
            target.len(),
            reference.len()
        )));
    }
    let mut ratios = Vec::with_capacity(target.len());
    let mut sigmas = Vec::with_capacity(target.len());
    for (t, r) in target.iter().zip(reference) {
        t.validate()?;
        r.validate()?;
        if t.window != r.window {
            return Err(Error::Alignment(format!(
                "window indices diverge: target {} vs reference {}",
                t.window, r.window
            )));
        }
        if !t.overlaps(r) {
            return Err(Error::Alignment(format!(
                "window {}: target span [{}, {}] never overlaps reference span [{}, {}]",
                t.window, t.t_start, t.t_end, r.t_start, r.t_end
            )));
        }
        let ratio = t.omega_hat / r.omega_hat;
        let rel2 = (t.sigma / t.omega_hat).powi(2) + (r.sigma / r.omega_hat).powi(2);
        ratios.push(ratio);
        sigmas.push(ratio * rel2.sqrt());
    }

    let all_exact = sigmas.iter().all(|&s| s == 0.0);
    let any_exact = sigmas.iter().any(|&s| s == 0.0);
    let (combined, combined_sigma) = if all_exact {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        (mean, 0.0)
    } else if any_exact {
        return Err(Error::Domain(
            "cannot mix exact (sigma = 0) and noisy windows in one combination".into(),
        ));
    } else {
        let mut wsum = 0.0;
        let mut msum = 0.0;
        for (ratio, sigma) in ratios.iter().zip(&sigmas) {
            let w = 1.0 / (sigma * sigma);
            wsum += w;
            msum += w * ratio;
        }
        (msum / wsum, (1.0 / wsum).sqrt())
    };

    Ok(FlywheelResult {
        window_ratios: ratios,
        window_sigmas: sigmas,
        ratio: combined,
        ratio_sigma: combined_sigma,
    })
}

//! Truncated thermal (geometric) Fock distributions.

use crate::{Error, Result};

/// A probability distribution over Fock levels 0..=n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDistribution {
    probabilities: Vec<f64>,
}

impl FockDistribution {
    /// Build from raw probabilities (must be nonnegative, summing to 1
    /// within 1e-9).
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Domain("distribution needs at least one level".into()));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("probabilities must be nonnegative and finite".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, must be 1 within 1e-9"
            )));
        }
        Ok(Self { probabilities })
    }

    pub fn n_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean_occupation(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Thermal distribution with mean occupation `n_bar` truncated at `n_max`.
///
/// p(n) is proportional to r^n with r = n_bar / (1 + n_bar). If the
/// renormalized top-level probability reaches `truncation_guard` the space is
/// too small to represent the state and an error is returned.
pub fn thermal_state(n_bar: f64, n_max: usize, truncation_guard: f64) -> Result<FockDistribution> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::Domain(format!(
            "mean occupation must be nonnegative and finite, got {n_bar}"
        )));
    }
    if n_bar == 0.0 {
        let mut p = vec![0.0; n_max + 1];
        p[0] = 1.0;
        return FockDistribution::new(p);
    }
    let r = n_bar / (1.0 + n_bar);
    let raw: Vec<f64> = (0..=n_max).map(|n| (1.0 - r) * r.powi(n as i32)).collect();
    let total: f64 = raw.iter().sum();
    let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    if p[n_max] >= truncation_guard {
        return Err(Error::Truncation(format!(
            "thermal state with n_bar = {n_bar} leaves p({n_max}) = {:.3e} >= guard {:.1e}; \
             raise n_max",
            p[n_max], truncation_guard
        )));
    }
    FockDistribution::new(p)
}

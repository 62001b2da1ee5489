//! Small statistics helpers shared by the test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator n - 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    assert!(xs.len() > 1);
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Pearson chi-square statistic over pre-built bins. Bins with expected count
/// below `min_expected` are merged into a trailing overflow bin first.
/// Returns (statistic, degrees of freedom = retained bins - 1).
pub fn chi_square_statistic(observed: &[f64], expected: &[f64], min_expected: f64) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut obs_bins: Vec<f64> = Vec::new();
    let mut exp_bins: Vec<f64> = Vec::new();
    let mut carry_obs = 0.0;
    let mut carry_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected.iter()) {
        carry_obs += o;
        carry_exp += e;
        if carry_exp >= min_expected {
            obs_bins.push(carry_obs);
            exp_bins.push(carry_exp);
            carry_obs = 0.0;
            carry_exp = 0.0;
        }
    }
    if carry_exp > 0.0 {
        if let (Some(last_o), Some(last_e)) = (obs_bins.last_mut(), exp_bins.last_mut()) {
            *last_o += carry_obs;
            *last_e += carry_exp;
        } else {
            obs_bins.push(carry_obs);
            exp_bins.push(carry_exp);
        }
    }
    assert!(obs_bins.len() >= 2, "need at least two adequate bins");
    let stat = obs_bins
        .iter()
        .zip(exp_bins.iter())
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    (stat, obs_bins.len() - 1)
}

/// Upper-tail chi-square critical value at significance `alpha`.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("valid dof")
        .inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_and_variance_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(mean(&xs), 2.5);
        assert_relative_eq!(sample_variance(&xs), 5.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn chi_square_zero_for_perfect_agreement() {
        let e = [10.0, 20.0, 30.0, 40.0];
        let (stat, dof) = chi_square_statistic(&e, &e, 5.0);
        assert_relative_eq!(stat, 0.0);
        assert_eq!(dof, 3);
    }

    #[test]
    fn sparse_tail_gets_merged() {
        let obs = [50.0, 30.0, 2.0, 1.0, 0.0];
        let exp = [48.0, 31.0, 2.0, 1.5, 0.5];
        let (_, dof) = chi_square_statistic(&obs, &exp, 5.0);
        // The inadequate tail (2 + 1.5 + 0.5 = 4 expected) folds into the
        // second bin, leaving two bins.
        assert_eq!(dof, 1);
    }

    #[test]
    fn critical_value_matches_tabulated() {
        // chi^2_{0.99, 5} = 15.086 (standard tables).
        assert_relative_eq!(chi_square_critical(5, 0.01), 15.086, max_relative = 1e-4);
    }
}

//! Spin resonance lineshape: scanning a probe drive across the line and
//! fitting the flip-probability curve to recover the center frequency.

use super::readout::{run_readout, ReadoutSequence};
use super::DriftTracker;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Probability that a square probe pulse of Rabi rate `omega_rabi` and
/// length `t`, detuned by `detuning` from the spin resonance, flips the
/// spin: the two-level Rabi formula
/// (Omega^2 / (Omega^2 + delta^2)) sin^2(sqrt(Omega^2 + delta^2) t / 2).
pub fn rabi_flip_probability(omega_rabi: f64, detuning: f64, t: f64) -> f64 {
    if omega_rabi == 0.0 {
        return 0.0;
    }
    let w2 = omega_rabi * omega_rabi + detuning * detuning;
    let w = w2.sqrt();
    (omega_rabi * omega_rabi / w2) * (0.5 * w * t).sin().powi(2)
}

/// Probe scan parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Probe Rabi rate (rad/s).
    pub probe_rabi: f64,
    /// Probe pulse length (s).
    pub probe_time: f64,
    /// Number of detuning points across the scan.
    pub points: u32,
    /// Half width of the scan grid (rad/s): detunings run from -span to
    /// +span around the center guess.
    pub span: f64,
    /// Readout shots per detuning point.
    pub shots_per_point: u32,
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.probe_rabi > 0.0) || !self.probe_rabi.is_finite() {
            return Err(Error::Domain(format!(
                "probe Rabi rate must be positive, got {}",
                self.probe_rabi
            )));
        }
        if !(self.probe_time > 0.0) || !self.probe_time.is_finite() {
            return Err(Error::Domain(format!(
                "probe time must be positive, got {}",
                self.probe_time
            )));
        }
        if self.points < 3 {
            return Err(Error::Domain(format!(
                "a scan needs at least 3 points, got {}",
                self.points
            )));
        }
        if !(self.span > 0.0) || !self.span.is_finite() {
            return Err(Error::Domain(format!(
                "scan span must be positive, got {}",
                self.span
            )));
        }
        if self.shots_per_point == 0 {
            return Err(Error::Domain("scans need at least one shot per point".into()));
        }
        Ok(())
    }

    /// The scan grid of absolute probe frequencies around `center_guess`.
    pub fn grid(&self, center_guess: f64) -> Vec<f64> {
        let n = self.points as usize;
        (0..n)
            .map(|k| {
                let frac = if n == 1 {
                    0.0
                } else {
                    k as f64 / (n as f64 - 1.0)
                };
                center_guess - self.span + 2.0 * self.span * frac
            })
            .collect()
    }
}

/// Raw result of one scan: per-point probe frequencies, bright counts, and
/// shot totals. Counts are floats so that expectation-value (noise-free)
/// runs can carry exact fractional counts through the same fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineshapeScan {
    /// Absolute probe frequency at each point (rad/s).
    pub probe_frequencies: Vec<f64>,
    /// Bright (flip-reported) counts per point; whole numbers for sampled
    /// scans, expected values for noise-free ones.
    pub bright_counts: Vec<f64>,
    /// Shots per point.
    pub shots: Vec<u32>,
    /// Wall time spent on the scan (s).
    pub elapsed: f64,
}

/// Resonance fit result: the recovered line center and its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    /// Fitted line center (rad/s).
    pub center: f64,
    /// One-sigma statistical uncertainty on the center (rad/s).
    pub center_sigma: f64,
    /// Fitted peak flip probability.
    pub amplitude: f64,
    /// One-sigma uncertainty on the amplitude.
    pub amplitude_sigma: f64,
    /// Weighted residual sum of squares at the optimum.
    pub chi_square: f64,
    /// Gauss-Newton iterations used.
    pub iterations: u32,
}

/// Scan the probe across the (possibly drifting) resonance line.
///
/// For each grid point and shot, the true line center is evaluated from the
/// instantaneous magnetic field, the flip probability follows the Rabi
/// formula at the actual detuning, and the flip decision plus readout error
/// are sampled through the full five-step sequence. The shared `clock`
/// advances by one sequence duration per shot so drift accumulates across
/// the scan.
#[allow(clippy::too_many_arguments)]
pub fn scan_lineshape(
    center_guess: f64,
    params: &ScanParams,
    sequence: &ReadoutSequence,
    drift: &mut DriftTracker,
    omega_per_tesla: f64,
    clock: &mut f64,
    rng: &mut ChaCha12Rng,
) -> Result<LineshapeScan> {
    params.validate()?;
    sequence.validate()?;
    if !(omega_per_tesla > 0.0) || !omega_per_tesla.is_finite() {
        return Err(Error::Domain(format!(
            "field-to-frequency factor must be positive, got {omega_per_tesla}"
        )));
    }
    let grid = params.grid(center_guess);
    let shot_cost = sequence.total_duration();
    let t_start = *clock;
    let mut bright = vec![0.0f64; grid.len()];
    for (i, &probe_frequency) in grid.iter().enumerate() {
        for _ in 0..params.shots_per_point {
            let field = drift.field_at(*clock)?;
            let line_center = omega_per_tesla * field;
            let p_flip = rabi_flip_probability(
                params.probe_rabi,
                probe_frequency - line_center,
                params.probe_time,
            );
            let flipped = rng.random_bool(p_flip);
            if run_readout(sequence, flipped, rng)? {
                bright[i] += 1.0;
            }
            *clock += shot_cost;
        }
    }
    Ok(LineshapeScan {
        probe_frequencies: grid,
        bright_counts: bright,
        shots: vec![params.shots_per_point; params.points as usize],
        elapsed: *clock - t_start,
    })
}

/// Fit the two-parameter model
/// p(omega) = dark + (amplitude - dark) * L(omega - center)
/// to a scan, where L is the normalized Rabi lineshape of the probe used and
/// dark = 1 - p_correct accounts for readout errors on unflipped shots.
///
/// Parameters recovered: {center, amplitude}. Weighted Gauss-Newton with a
/// Levenberg-Marquardt damping fallback; per-point variances come from the
/// shrunk estimator p~ = (count + 1/2) / (shots + 1).
pub fn fit_resonance(
    scan: &LineshapeScan,
    params: &ScanParams,
    sequence: &ReadoutSequence,
    center_guess: f64,
) -> Result<ResonanceFit> {
    params.validate()?;
    sequence.validate()?;
    let n = scan.probe_frequencies.len();
    if n != scan.bright_counts.len() || n != scan.shots.len() {
        return Err(Error::Domain(
            "scan arrays must have matching lengths".into(),
        ));
    }
    if n < 3 {
        return Err(Error::Estimation(
            "resonance fit needs at least 3 scan points".into(),
        ));
    }
    let p_correct = sequence.correct_assignment_probability();

    // Observed rates and weights from the shrunk proportion estimator.
    let mut rates = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let shots = f64::from(scan.shots[i]);
        if shots == 0.0 {
            return Err(Error::Domain("scan point with zero shots".into()));
        }
        let count = scan.bright_counts[i];
        if !(0.0..=shots).contains(&count) {
            return Err(Error::Domain(format!(
                "bright count {count} outside [0, {shots}] at point {i}"
            )));
        }
        let shrunk = (count + 0.5) / (shots + 1.0);
        rates.push(count / shots);
        weights.push(shots / (shrunk * (1.0 - shrunk)));
    }

    // Flat data carries no line information: refuse rather than report a
    // spurious center.
    let rate_spread = rates.iter().cloned().fold(f64::MIN, f64::max)
        - rates.iter().cloned().fold(f64::MAX, f64::min);
    let typical_sigma = (0..n)
        .map(|i| (1.0 / weights[i]).sqrt())
        .sum::<f64>()
        / n as f64;
    if rate_spread < 2.0 * typical_sigma {
        return Err(Error::Estimation(format!(
            "scan shows no resonance contrast: spread {rate_spread:.4} vs noise {typical_sigma:.4}"
        )));
    }

    // Model pieces. The readout chain maps a true flip probability q to the
    // observed bright rate p_correct * q + (1 - p_correct)(1 - q).
    let line = |center: f64, omega: f64| -> f64 {
        rabi_flip_probability(params.probe_rabi, omega - center, params.probe_time)
    };
    let peak = rabi_flip_probability(params.probe_rabi, 0.0, params.probe_time);
    if peak <= 0.0 {
        return Err(Error::Estimation("probe pulse produces no flips at resonance".into()));
    }
    let model = |center: f64, amplitude: f64, omega: f64| -> f64 {
        let q = amplitude * line(center, omega) / peak;
        p_correct * q + (1.0 - p_correct) * (1.0 - q)
    };

    // Initial guesses: center at the weighted mean of above-floor excess,
    // amplitude from the maximum observed rate.
    let dark = 1.0 - p_correct;
    let mut amp = ((rates.iter().cloned().fold(f64::MIN, f64::max) - dark)
        / (2.0 * p_correct - 1.0).max(1e-6))
    .clamp(0.05, 1.0);
    let mut center = center_guess;
    {
        let mut wsum = 0.0;
        let mut msum = 0.0;
        for i in 0..n {
            let excess = (rates[i] - dark).max(0.0);
            wsum += excess;
            msum += excess * scan.probe_frequencies[i];
        }
        if wsum > 0.0 {
            center = msum / wsum;
        }
    }

    let chi2 = |center: f64, amp: f64| -> f64 {
        (0..n)
            .map(|i| {
                let r = rates[i] - model(center, amp, scan.probe_frequencies[i]);
                weights[i] * r * r
            })
            .sum()
    };

    let mut lambda = 0.0f64; // LM damping, raised only on rejected steps
    let mut current = chi2(center, amp);
    let mut iterations = 0u32;
    let mut converged = false;
    let h_center = params.span * 1e-7;
    let h_amp = 1e-7;
    while !converged && iterations < 60 {
        iterations += 1;
        // Numerical Jacobian of the residual vector.
        let mut jtj = DMatrix::<f64>::zeros(2, 2);
        let mut jtr = DVector::<f64>::zeros(2);
        for i in 0..n {
            let omega = scan.probe_frequencies[i];
            let m0 = model(center, amp, omega);
            let dc = (model(center + h_center, amp, omega) - m0) / h_center;
            let da = (model(center, amp + h_amp, omega) - m0) / h_amp;
            let r = rates[i] - m0;
            let w = weights[i];
            jtj[(0, 0)] += w * dc * dc;
            jtj[(0, 1)] += w * dc * da;
            jtj[(1, 1)] += w * da * da;
            jtr[0] += w * dc * r;
            jtr[1] += w * da * r;
        }
        jtj[(1, 0)] = jtj[(0, 1)];

        let mut stepped = false;
        for _ in 0..25 {
            let mut damped = jtj.clone();
            damped[(0, 0)] *= 1.0 + lambda;
            damped[(1, 1)] *= 1.0 + lambda;
            let Some(delta) = damped.lu().solve(&jtr) else {
                lambda = (lambda * 10.0).max(1e-6);
                continue;
            };
            let trial_center = center + delta[0];
            let trial_amp = (amp + delta[1]).clamp(0.0, 1.0);
            let trial = chi2(trial_center, trial_amp);
            if trial.is_finite() && trial <= current + 1e-12 {
                let moved = delta[0].abs() / params.span + delta[1].abs();
                let improved = current - trial;
                center = trial_center;
                amp = trial_amp;
                current = trial;
                lambda *= 0.3;
                stepped = true;
                if moved < 1e-10 || improved < 1e-12 * (1.0 + current) {
                    converged = true;
                }
                break;
            }
            lambda = (lambda * 10.0).max(1e-6);
        }
        if !stepped {
            // Damping alone cannot improve the fit further.
            break;
        }
    }

    // Covariance from the unscaled (J^T W J)^-1 at the optimum: weights are
    // absolute binomial variances, so no reduced-chi-square scaling.
    let mut jtj = DMatrix::<f64>::zeros(2, 2);
    for i in 0..n {
        let omega = scan.probe_frequencies[i];
        let m0 = model(center, amp, omega);
        let dc = (model(center + h_center, amp, omega) - m0) / h_center;
        let da = (model(center, amp + h_amp, omega) - m0) / h_amp;
        let w = weights[i];
        jtj[(0, 0)] += w * dc * dc;
        jtj[(0, 1)] += w * dc * da;
        jtj[(1, 1)] += w * da * da;
    }
    jtj[(1, 0)] = jtj[(0, 1)];
    let cov = jtj
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Estimation("singular normal matrix in resonance fit".into()))?;
    let var_center = cov[(0, 0)];
    let var_amp = cov[(1, 1)];
    if !(var_center > 0.0) || !var_center.is_finite() {
        return Err(Error::Estimation(format!(
            "resonance fit produced an unusable center variance {var_center}"
        )));
    }

    Ok(ResonanceFit {
        center,
        center_sigma: var_center.sqrt(),
        amplitude: amp,
        amplitude_sigma: var_amp.max(0.0).sqrt(),
        chi_square: current,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::readout::StepModel;
    use crate::protocol::DriftModel;
    use crate::rng::substream;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use gtrap_testutil::{mean, sample_variance};

    fn sequence() -> ReadoutSequence {
        ReadoutSequence {
            probe: StepModel {
                fidelity: 1.0,
                duration: 0.05,
            },
            proton_sideband: StepModel {
                fidelity: 0.97,
                duration: 2.0e-3,
            },
            exchange: StepModel {
                fidelity: 0.98,
                duration: 5.8e-3,
            },
            be_sideband: StepModel {
                fidelity: 0.97,
                duration: 2.0e-4,
            },
            fluorescence: StepModel {
                fidelity: 0.99,
                duration: 5.0e-3,
            },
        }
    }

    fn scan_params() -> ScanParams {
        ScanParams {
            probe_rabi: 2.0 * std::f64::consts::PI * 10.0,
            probe_time: 0.05,
            points: 9,
            span: 150.0,
            shots_per_point: 100,
        }
    }

    #[test]
    fn rabi_formula_special_points() {
        let omega = 100.0;
        // Resonant pi pulse: t = pi / Omega flips with certainty.
        let t_pi = std::f64::consts::PI / omega;
        assert_abs_diff_eq!(rabi_flip_probability(omega, 0.0, t_pi), 1.0, epsilon = 1e-12);
        // Resonant pi/2 pulse: probability 1/2.
        assert_abs_diff_eq!(
            rabi_flip_probability(omega, 0.0, t_pi / 2.0),
            0.5,
            epsilon = 1e-12
        );
        // Far detuned: amplitude suppressed by Omega^2 / delta^2.
        let p = rabi_flip_probability(omega, 1.0e4, t_pi);
        assert!(p <= omega * omega / (1.0e8), "far-detuned flip {p} too large");
        // Detuned so the generalized pulse area is exactly 2 pi: zero.
        let delta = (3.0f64).sqrt() * omega;
        let t = 2.0 * std::f64::consts::PI / (2.0 * omega);
        assert_abs_diff_eq!(rabi_flip_probability(omega, delta, t), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_is_symmetric_and_ordered() {
        let params = scan_params();
        let grid = params.grid(1000.0);
        assert_eq!(grid.len(), 9);
        assert_abs_diff_eq!(grid[0], 850.0);
        assert_abs_diff_eq!(grid[8], 1150.0);
        assert_abs_diff_eq!(grid[4], 1000.0);
        for w in grid.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn fit_recovers_a_static_line_center() {
        let seq = sequence();
        let params = scan_params();
        let omega_per_tesla = 1.0e8;
        let true_center = omega_per_tesla * 1.9;
        let mut worst: f64 = 0.0;
        for trial in 0..20 {
            let mut drift =
                DriftTracker::new(DriftModel::frozen(1.9), substream(50, "static-line", trial))
                    .unwrap();
            let mut clock = 0.0;
            let mut rng = substream(51, "static-line-shots", trial);
            let scan = scan_lineshape(
                true_center,
                &params,
                &seq,
                &mut drift,
                omega_per_tesla,
                &mut clock,
                &mut rng,
            )
            .unwrap();
            let fit = fit_resonance(&scan, &params, &seq, true_center).unwrap();
            worst = worst.max((fit.center - true_center).abs() / fit.center_sigma);
            assert!(
                (fit.center - true_center).abs() < 5.0 * fit.center_sigma,
                "trial {trial}: center off by {} with sigma {}",
                fit.center - true_center,
                fit.center_sigma
            );
            assert!(fit.center_sigma < params.span / 2.0);
        }
        assert!(worst > 0.0);
    }

    #[test]
    fn fit_pulls_are_standard_normal() {
        // Over many independent scans the normalized residual
        // (center_hat - center_true) / sigma_hat should have mean 0 and
        // variance 1.
        let seq = sequence();
        let params = ScanParams {
            shots_per_point: 200,
            ..scan_params()
        };
        let omega_per_tesla = 1.0e8;
        let true_center = omega_per_tesla * 1.9;
        let trials = 120;
        let mut pulls = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut drift =
                DriftTracker::new(DriftModel::frozen(1.9), substream(60, "pulls", trial as u64))
                    .unwrap();
            let mut clock = 0.0;
            let mut rng = substream(61, "pull-shots", trial as u64);
            let scan = scan_lineshape(
                true_center,
                &params,
                &seq,
                &mut drift,
                omega_per_tesla,
                &mut clock,
                &mut rng,
            )
            .unwrap();
            let fit = fit_resonance(&scan, &params, &seq, true_center).unwrap();
            pulls.push((fit.center - true_center) / fit.center_sigma);
        }
        let m = mean(&pulls);
        let v = sample_variance(&pulls);
        // Mean: se = 1/sqrt(trials); variance: se ~ sqrt(2/trials).
        assert_abs_diff_eq!(m, 0.0, epsilon = 4.0 / (trials as f64).sqrt());
        assert_abs_diff_eq!(v, 1.0, epsilon = 4.0 * (2.0 / trials as f64).sqrt());
    }

    #[test]
    fn fit_tracks_an_offset_center() {
        // True line sits 40 rad/s above the guess; the fit must find it.
        let seq = sequence();
        let params = ScanParams {
            shots_per_point: 400,
            ..scan_params()
        };
        let omega_per_tesla = 1.0e8;
        let guess = omega_per_tesla * 1.9;
        let offset = 40.0;
        let b_actual = (guess + offset) / omega_per_tesla;
        let mut drift =
            DriftTracker::new(DriftModel::frozen(b_actual), substream(70, "offset", 0)).unwrap();
        let mut clock = 0.0;
        let mut rng = substream(71, "offset-shots", 0);
        let scan = scan_lineshape(
            guess,
            &params,
            &seq,
            &mut drift,
            omega_per_tesla,
            &mut clock,
            &mut rng,
        )
        .unwrap();
        let fit = fit_resonance(&scan, &params, &seq, guess).unwrap();
        assert_abs_diff_eq!(fit.center - guess, offset, epsilon = 5.0 * fit.center_sigma);
    }

    #[test]
    fn scan_advances_the_clock_by_its_wall_time() {
        let seq = sequence();
        let params = scan_params();
        let mut drift =
            DriftTracker::new(DriftModel::frozen(1.9), substream(80, "clock", 0)).unwrap();
        let mut clock = 123.0;
        let mut rng = substream(81, "clock-shots", 0);
        let scan = scan_lineshape(
            1.9e8,
            &params,
            &seq,
            &mut drift,
            1.0e8,
            &mut clock,
            &mut rng,
        )
        .unwrap();
        let shots = f64::from(params.points * params.shots_per_point);
        assert_relative_eq!(scan.elapsed, shots * seq.total_duration(), max_relative = 1e-12);
        assert_relative_eq!(clock, 123.0 + scan.elapsed, max_relative = 1e-12);
    }

    #[test]
    fn flat_scan_is_rejected_as_no_contrast() {
        let seq = sequence();
        let params = scan_params();
        // A scan that never saw the line: all counts at the dark floor.
        let scan = LineshapeScan {
            probe_frequencies: params.grid(0.0),
            bright_counts: vec![5.0; 9],
            shots: vec![100; 9],
            elapsed: 0.0,
        };
        let err = fit_resonance(&scan, &params, &seq, 0.0).unwrap_err();
        assert!(matches!(err, Error::Estimation(_)), "got {err:?}");
    }

    #[test]
    fn mismatched_scan_arrays_are_rejected() {
        let seq = sequence();
        let params = scan_params();
        let scan = LineshapeScan {
            probe_frequencies: vec![0.0, 1.0, 2.0],
            bright_counts: vec![1.0, 2.0],
            shots: vec![10, 10, 10],
            elapsed: 0.0,
        };
        assert!(fit_resonance(&scan, &params, &seq, 0.0).is_err());
    }

    #[test]
    fn invalid_scan_params_are_rejected() {
        let mut p = scan_params();
        p.points = 2;
        assert!(p.validate().is_err());
        let mut p = scan_params();
        p.span = 0.0;
        assert!(p.validate().is_err());
        let mut p = scan_params();
        p.shots_per_point = 0;
        assert!(p.validate().is_err());
    }
}

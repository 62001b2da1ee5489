//! Classical continuous Stern-Gerlach spin detection.
//!
//! The proton's spin orientation shifts the axial frequency through the
//! magnetic bottle; detecting a flip means resolving that sub-hertz shift
//! against axial frequency jitter whose size grows with the cyclotron quantum
//! number. Each detection repetition therefore cools the cyclotron mode
//! resistively (slow!), samples the resulting occupation, and compares a
//! measured axial frequency against the calibrated pre-flip reference. The
//! decision statistic is the post-flip sample minus that reference, so the
//! single-shot error probability is Phi(-delta / (2 sigma)) when the flip
//! shift is delta and the per-sample jitter is sigma. Majority voting over
//! repetitions buys accuracy at a brutal wall-time cost: that trade is the
//! whole motivation for the quantum-logic protocol.

use crate::species::Species;
use crate::trap::{bottle_axial_shift, ideal_modes, perturbed_modes, ModeFrequencies, TrapZone};
use crate::{Error, Result};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Geometric, Normal};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal as GaussCdf};

/// Multiples of the resistive time constant waited before each occupation
/// sample, putting the mean occupation within e^-3 of thermal.
pub const COOLING_WAIT_TAUS: f64 = 3.0;

/// Re-thermalization factor: transport and measurement reheat the cyclotron
/// to this multiple of the thermal occupation before each repetition cools
/// it back down.
pub const REHEAT_FACTOR: f64 = 10.0;

/// Resistive cooling of the cyclotron mode by the detection circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingModel {
    /// Resistive cooling time constant (s).
    pub tau_resistive: f64,
    /// Equilibrium temperature of the detection circuit (K).
    pub t_equilibrium: f64,
    /// RNG stream label for occupation sampling.
    pub seed_stream: String,
}

impl CoolingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_resistive > 0.0) || !self.tau_resistive.is_finite() {
            return Err(Error::Domain(format!(
                "resistive time constant must be positive, got {}",
                self.tau_resistive
            )));
        }
        if !(self.t_equilibrium >= 0.0) || !self.t_equilibrium.is_finite() {
            return Err(Error::Domain(format!(
                "equilibrium temperature must be nonnegative, got {}",
                self.t_equilibrium
            )));
        }
        Ok(())
    }

    /// Thermal cyclotron occupation k_B T / (hbar omega_plus).
    pub fn thermal_occupation(&self, modes: &ModeFrequencies) -> f64 {
        crate::constants::BOLTZMANN * self.t_equilibrium
            / (crate::constants::HBAR * modes.omega_plus)
    }
}

/// Axial frequency measurement noise: one sample of the axial frequency
/// carries Gaussian jitter sigma0 sqrt(n_plus + 1), growing with the
/// cyclotron occupation because the bottle couples radial energy into the
/// axial well.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialNoiseModel {
    /// Jitter at n_plus = 0 (rad/s) for one detection average.
    pub sigma0: f64,
    /// Duration of one axial frequency measurement (s).
    pub detection_time: f64,
}

impl AxialNoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= 0.0) || !self.sigma0.is_finite() {
            return Err(Error::Domain(format!(
                "axial jitter sigma0 must be nonnegative, got {}",
                self.sigma0
            )));
        }
        if !(self.detection_time > 0.0) || !self.detection_time.is_finite() {
            return Err(Error::Domain(format!(
                "detection time must be positive, got {}",
                self.detection_time
            )));
        }
        Ok(())
    }

    /// Jitter for one sample at cyclotron occupation `n_plus`.
    pub fn sigma(&self, n_plus: u64) -> f64 {
        self.sigma0 * ((n_plus as f64) + 1.0).sqrt()
    }
}

/// Timing pieces of one classical double-trap cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleTrapTimings {
    /// One-way adiabatic transport time between zones (s).
    pub transport_time: f64,
    /// Spin interrogation time in the precision zone (s).
    pub precision_interrogation_time: f64,
    /// Number of complete spin-flip detection blocks in the analysis zone.
    pub analysis_detection_blocks: u32,
}

/// Outcome of one spin-flip detection attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// True if the detector claims a spin flip occurred.
    pub flip_detected: bool,
    /// Analytic probability that the majority vote is wrong, evaluated at
    /// the expected post-wait occupation.
    pub error_prob: f64,
    /// Wall time consumed: repetitions x (cooling wait + two axial
    /// measurements).
    pub wall_time: f64,
    /// Mean sampled cyclotron occupation across repetitions.
    pub mean_occupation: f64,
}

/// Sample the cyclotron occupation after resistive cooling for `t` seconds
/// from an initial mean occupation `n_initial`. The mean relaxes as
/// n_th + (n_initial - n_th) exp(-t/tau) and the sample is geometric
/// (thermal) with that mean.
pub fn resistive_cool(
    n_initial: f64,
    cooling: &CoolingModel,
    modes: &ModeFrequencies,
    t: f64,
    rng: &mut ChaCha12Rng,
) -> Result<u64> {
    cooling.validate()?;
    if !(n_initial >= 0.0) || !n_initial.is_finite() {
        return Err(Error::Domain(format!(
            "initial occupation must be nonnegative, got {n_initial}"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("cooling time must be nonnegative, got {t}")));
    }
    let n_th = cooling.thermal_occupation(modes);
    let mean = n_th + (n_initial - n_th) * (-t / cooling.tau_resistive).exp();
    if mean <= 0.0 {
        return Ok(0);
    }
    // Geometric (thermal) occupation with the relaxed mean.
    let p = 1.0 / (1.0 + mean);
    let dist = Geometric::new(p).map_err(|e| {
        Error::Numerical(format!("geometric sampler rejected p = {p}: {e}"))
    })?;
    Ok(dist.sample(rng))
}

/// One axial frequency sample around a true value `omega_true`, with jitter
/// set by the cyclotron occupation.
pub fn axial_frequency_sample(
    omega_true: f64,
    noise: &AxialNoiseModel,
    n_plus: u64,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    noise.validate()?;
    let sigma = noise.sigma(n_plus);
    if sigma == 0.0 {
        return Ok(omega_true);
    }
    let dist = Normal::new(0.0, sigma)
        .map_err(|e| Error::Numerical(format!("normal sampler rejected sigma = {sigma}: {e}")))?;
    Ok(omega_true + dist.sample(rng))
}

fn zone_modes(species: &Species, zone: &TrapZone) -> Result<ModeFrequencies> {
    if zone.tilt == 0.0 && zone.ellipticity == 0.0 {
        ideal_modes(species, zone)
    } else {
        perturbed_modes(species, zone)
    }
}

/// Spin-flip axial shift delta = shift(+mu) - shift(-mu) in this zone.
pub fn spin_flip_shift(species: &Species, zone: &TrapZone) -> Result<f64> {
    let up = bottle_axial_shift(species, zone, species.spin_moment())?;
    let down = bottle_axial_shift(species, zone, -species.spin_moment())?;
    let delta = up - down;
    if delta <= 0.0 {
        return Err(Error::Config(
            "zone has no magnetic bottle: spin flip produces no axial shift".into(),
        ));
    }
    Ok(delta)
}

/// Core detection loop shared by spin-flip detection and campaign shots:
/// `flip_occurred` is ground truth; the return is the majority-vote claim.
fn run_detection(
    species: &Species,
    zone: &TrapZone,
    noise: &AxialNoiseModel,
    cooling: &CoolingModel,
    repetitions: u32,
    flip_occurred: bool,
    rng: &mut ChaCha12Rng,
) -> Result<DetectionReport> {
    noise.validate()?;
    cooling.validate()?;
    if repetitions == 0 {
        return Err(Error::Domain("detection needs at least one repetition".into()));
    }
    let modes = zone_modes(species, zone)?;
    let delta = spin_flip_shift(species, zone)?;
    let omega_reference = modes.omega_z + bottle_axial_shift(species, zone, -species.spin_moment())?;
    let omega_actual = if flip_occurred {
        omega_reference + delta
    } else {
        omega_reference
    };
    let n_th = cooling.thermal_occupation(&modes);
    let n_reheat = REHEAT_FACTOR * n_th;
    let wait = COOLING_WAIT_TAUS * cooling.tau_resistive;

    let mut votes_flip = 0u32;
    let mut occupation_sum = 0.0f64;
    for _ in 0..repetitions {
        let n_plus = resistive_cool(n_reheat, cooling, &modes, wait, rng)?;
        occupation_sum += n_plus as f64;
        // The pre-flip check sample costs detection time but the decision
        // compares against the calibrated reference.
        let _pre = axial_frequency_sample(omega_reference, noise, n_plus, rng)?;
        let post = axial_frequency_sample(omega_actual, noise, n_plus, rng)?;
        if post - omega_reference > delta / 2.0 {
            votes_flip += 1;
        }
    }
    // Ties (even repetition counts) fall on the conservative "no flip" side.
    let flip_detected = votes_flip * 2 > repetitions;

    // Analytic error probability at the expected post-wait occupation.
    let n_expected = n_th + (n_reheat - n_th) * (-COOLING_WAIT_TAUS).exp();
    let error_prob = majority_error_probability(delta, noise, n_expected, repetitions)?;

    Ok(DetectionReport {
        flip_detected,
        error_prob,
        wall_time: f64::from(repetitions) * (wait + 2.0 * noise.detection_time),
        mean_occupation: occupation_sum / f64::from(repetitions),
    })
}

/// Probability that a majority vote over `repetitions` single-shot threshold
/// decisions is wrong, for shift `delta` and occupation `n_plus_mean`.
fn majority_error_probability(
    delta: f64,
    noise: &AxialNoiseModel,
    n_plus_mean: f64,
    repetitions: u32,
) -> Result<f64> {
    let sigma = noise.sigma0 * (n_plus_mean + 1.0).sqrt();
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let gauss = GaussCdf::new(0.0, 1.0).expect("unit normal");
    let p_shot_error = gauss.cdf(-delta / (2.0 * sigma));
    let n = u64::from(repetitions);
    let binom = Binomial::new(1.0 - p_shot_error, n)
        .map_err(|e| Error::Numerical(format!("binomial build failed: {e}")))?;
    // Majority is wrong when correct votes <= floor(n/2).
    Ok(binom.cdf(n / 2))
}

/// Detect a spin flip that truly occurred, by majority vote over
/// `repetitions` cool-and-measure cycles.
pub fn detect_spin_flip(
    species: &Species,
    zone: &TrapZone,
    noise: &AxialNoiseModel,
    cooling: &CoolingModel,
    repetitions: u32,
    rng: &mut ChaCha12Rng,
) -> Result<DetectionReport> {
    run_detection(species, zone, noise, cooling, repetitions, true, rng)
}

/// Campaign-facing discriminator: observe whether a (possibly absent) flip is
/// claimed. Same statistics and wall time as [`detect_spin_flip`].
pub(crate) fn discriminate_flip(
    species: &Species,
    zone: &TrapZone,
    noise: &AxialNoiseModel,
    cooling: &CoolingModel,
    repetitions: u32,
    flip_occurred: bool,
    rng: &mut ChaCha12Rng,
) -> Result<DetectionReport> {
    run_detection(species, zone, noise, cooling, repetitions, flip_occurred, rng)
}

/// Analytic majority-vote error probability for a given repetition count,
/// evaluated at the expected post-wait occupation — the same value a
/// detection run reports.
pub fn detection_error_probability(
    species: &Species,
    zone: &TrapZone,
    noise: &AxialNoiseModel,
    cooling: &CoolingModel,
    repetitions: u32,
) -> Result<f64> {
    noise.validate()?;
    cooling.validate()?;
    if repetitions == 0 {
        return Err(Error::Domain("detection needs at least one repetition".into()));
    }
    let modes = zone_modes(species, zone)?;
    let delta = spin_flip_shift(species, zone)?;
    let n_th = cooling.thermal_occupation(&modes);
    let n_expected = n_th + (REHEAT_FACTOR * n_th - n_th) * (-COOLING_WAIT_TAUS).exp();
    majority_error_probability(delta, noise, n_expected, repetitions)
}

/// Deterministic wall time of a detection run: repetitions times (cooling
/// wait plus two axial measurements).
pub fn detection_wall_time(
    noise: &AxialNoiseModel,
    cooling: &CoolingModel,
    repetitions: u32,
) -> f64 {
    f64::from(repetitions) * (COOLING_WAIT_TAUS * cooling.tau_resistive + 2.0 * noise.detection_time)
}

/// Smallest repetition count whose analytic majority error drops below
/// `target_error`, capped at 1001.
pub fn required_repetitions(
    species: &Species,
    zone: &TrapZone,
    noise: &AxialNoiseModel,
    cooling: &CoolingModel,
    target_error: f64,
) -> Result<u32> {
    if !(target_error > 0.0 && target_error < 1.0) {
        return Err(Error::Domain(format!(
            "target error must lie in (0, 1), got {target_error}"
        )));
    }
    noise.validate()?;
    cooling.validate()?;
    let modes = zone_modes(species, zone)?;
    let delta = spin_flip_shift(species, zone)?;
    let n_th = cooling.thermal_occupation(&modes);
    let n_expected = n_th + (REHEAT_FACTOR * n_th - n_th) * (-COOLING_WAIT_TAUS).exp();
    for reps in (1..=1001u32).step_by(2) {
        if majority_error_probability(delta, noise, n_expected, reps)? < target_error {
            return Ok(reps);
        }
    }
    Err(Error::Estimation(format!(
        "even 1001 repetitions cannot reach error {target_error}; shift too small for the noise"
    )))
}

/// Total wall time of one classical double-trap cycle: transport out and
/// back, precision-zone interrogation, and the analysis-zone detection
/// blocks.
pub fn double_trap_cycle(timings: &DoubleTrapTimings, detection: &DetectionReport) -> f64 {
    2.0 * timings.transport_time
        + timings.precision_interrogation_time
        + f64::from(timings.analysis_detection_blocks) * detection.wall_time
}

//! Full g-factor measurement campaign.
//!
//! A campaign runs a configurable number of time windows. In each window the
//! spin resonance is scanned (quantum-logic readout or classical detection),
//! the free cyclotron frequency is read near the window midpoint through the
//! invariance combination of the three trap modes, and the window yields
//! g_w = 2 omega_L_hat / omega_c_hat. Windows are combined by inverse
//! variance. In quantum-logic mode a co-trapped flywheel ion is scanned in
//! interleaved shots: its fitted line tracks the drifting field so the scan
//! grids stay centered, and the per-window target/flywheel ratio record
//! demonstrates common-mode drift cancellation. Replicas rerun the whole
//! campaign on independent random substreams to measure the spread of the
//! final estimate.

use super::flywheel::{flywheel_correct, FlywheelResult, WindowEstimate};
use super::lineshape::{fit_resonance, rabi_flip_probability, LineshapeScan, ScanParams};
use super::readout::{run_readout, ReadoutSequence, StepModel};
use super::{DriftModel, DriftTracker};
use crate::classical::{
    detection_error_probability, detection_wall_time, discriminate_flip, double_trap_cycle,
    required_repetitions, AxialNoiseModel, CoolingModel, DetectionReport, DoubleTrapTimings,
};
use crate::rng::substream;
use crate::species::Species;
use crate::trap::{ideal_modes, perturbed_modes, ModeFrequencies, TrapZone};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which measurement protocol the campaign runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignMode {
    /// Quantum-logic readout with an interleaved flywheel ion.
    QuantumLogic,
    /// Continuous Stern-Gerlach detection with majority voting.
    Classical,
}

/// Noise model for the per-window cyclotron frequency read: each trap mode
/// is read with its own Gaussian uncertainty and the three reads are
/// combined through the invariance relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaCReadModel {
    /// One-sigma read noise on the modified cyclotron mode (rad/s).
    pub sigma_plus: f64,
    /// One-sigma read noise on the magnetron mode (rad/s).
    pub sigma_minus: f64,
    /// One-sigma read noise on the axial mode (rad/s).
    pub sigma_z: f64,
    /// Wall time of the combined read (s).
    pub read_time: f64,
}

impl OmegaCReadModel {
    pub fn validate(&self) -> Result<()> {
        for (label, s) in [
            ("sigma_plus", self.sigma_plus),
            ("sigma_minus", self.sigma_minus),
            ("sigma_z", self.sigma_z),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Domain(format!(
                    "cyclotron read {label} must be nonnegative, got {s}"
                )));
            }
        }
        if !(self.read_time >= 0.0) || !self.read_time.is_finite() {
            return Err(Error::Domain(format!(
                "cyclotron read time must be nonnegative, got {}",
                self.read_time
            )));
        }
        Ok(())
    }
}

/// Classical-mode detection machinery: where and how spin flips are
/// discriminated.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDetection {
    /// Analysis zone with the magnetic bottle.
    pub zone: TrapZone,
    /// Axial frequency measurement noise.
    pub noise: AxialNoiseModel,
    /// Resistive cooling of the cyclotron mode.
    pub cooling: CoolingModel,
    /// Transport and interrogation timings for one cycle.
    pub timings: DoubleTrapTimings,
    /// Majority-vote repetitions per detection; 0 sizes automatically from
    /// `target_error`.
    pub majority_repetitions: u32,
    /// Detection error budget used when sizing repetitions automatically.
    pub target_error: f64,
}

/// Everything a campaign needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub mode: CampaignMode,
    /// Master seed; every replica derives independent substreams from it.
    pub master_seed: u64,
    /// Number of independent campaign replicas.
    pub replicas: u32,
    /// Time windows per replica.
    pub windows: u32,
    /// Species under measurement.
    pub species: Species,
    /// Co-trapped field-tracking species (quantum-logic mode).
    pub flywheel_species: Species,
    /// Zone where the spin is interrogated and the cyclotron read happens.
    pub precision_zone: TrapZone,
    /// Spin resonance scan for the measured species.
    pub scan: ScanParams,
    /// Resonance scan for the flywheel species.
    pub flywheel_scan: ScanParams,
    /// Five-step readout chain (quantum-logic mode).
    pub readout: ReadoutSequence,
    /// Magnetic field drift model.
    pub drift: DriftModel,
    /// Cyclotron read noise model.
    pub omega_c_read: OmegaCReadModel,
    /// Motional ground-state cooling overhead at each window start (s),
    /// quantum-logic mode only.
    pub cooling_time: f64,
    /// Alternate target and flywheel shots within the window (true) or run
    /// the two scans back to back (false).
    pub interleave: bool,
    /// Replace Bernoulli sampling with exact expected fractions and disable
    /// read noise: used for closure checks.
    pub noiseless: bool,
    /// Classical detection machinery; required in classical mode.
    pub classical: Option<ClassicalDetection>,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Domain("campaign needs at least one replica".into()));
        }
        if self.windows == 0 {
            return Err(Error::Domain("campaign needs at least one window".into()));
        }
        self.scan.validate()?;
        self.drift.validate()?;
        self.omega_c_read.validate()?;
        self.precision_zone.validate()?;
        if !(self.cooling_time >= 0.0) || !self.cooling_time.is_finite() {
            return Err(Error::Domain(format!(
                "cooling time must be nonnegative, got {}",
                self.cooling_time
            )));
        }
        match self.mode {
            CampaignMode::QuantumLogic => {
                self.flywheel_scan.validate()?;
                self.readout.validate()?;
            }
            CampaignMode::Classical => {
                let Some(cl) = &self.classical else {
                    return Err(Error::Config(
                        "classical mode needs the classical detection section".into(),
                    ));
                };
                cl.zone.validate()?;
                cl.noise.validate()?;
                cl.cooling.validate()?;
                if !(cl.target_error > 0.0 && cl.target_error < 1.0) {
                    return Err(Error::Domain(format!(
                        "detection target error must lie in (0, 1), got {}",
                        cl.target_error
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One time window's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window: u32,
    /// Fitted spin resonance of the measured species.
    pub spin: WindowEstimate,
    /// Fitted flywheel resonance (quantum-logic mode only).
    pub flywheel: Option<WindowEstimate>,
    /// Invariance-combined cyclotron frequency read near the window middle.
    pub omega_c: WindowEstimate,
    /// True field at the cyclotron read (diagnostic).
    pub field_mid: f64,
    /// Window g value 2 omega_spin / omega_c.
    pub g_value: f64,
    /// One-sigma uncertainty of the window g value.
    pub g_sigma: f64,
}

/// One replica's full campaign outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub replica: u32,
    pub windows: Vec<WindowRecord>,
    /// Inverse-variance combination of the window g values.
    pub g_value: f64,
    pub g_sigma: f64,
    /// Target/flywheel ratio record (quantum-logic mode only).
    pub flywheel: Option<FlywheelResult>,
    /// Simulated wall time of the whole replica (s).
    pub elapsed: f64,
    /// Total shots taken.
    pub shots: u64,
}

/// One logged shot (kept for replica 0 only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Campaign clock at the start of the shot (s).
    pub timestamp: f64,
    /// "spin", "flywheel", or "classical".
    pub kind: String,
    /// Probe detuning from the window's grid center (rad/s).
    pub detuning: f64,
    /// Bright fraction: 0/1 for sampled shots, the expectation for
    /// noise-free runs.
    pub outcome: f64,
}

/// Campaign output across all replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub mode: CampaignMode,
    pub replicas: Vec<ReplicaResult>,
    /// Plain mean of the replica g values.
    pub g_mean: f64,
    /// Sample standard deviation of the replica g values (0 for one
    /// replica).
    pub g_std: f64,
    /// Shot-by-shot log of replica 0.
    pub shot_log: Vec<ShotRecord>,
}

/// Run the configured campaign, replicas in parallel.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    config.validate()?;
    let outcomes: Result<Vec<(ReplicaResult, Vec<ShotRecord>)>> = (0..config.replicas)
        .into_par_iter()
        .map(|r| run_replica(config, r))
        .collect();
    let mut outcomes = outcomes?;
    let shot_log = std::mem::take(&mut outcomes[0].1);
    let replicas: Vec<ReplicaResult> = outcomes.into_iter().map(|(r, _)| r).collect();
    let g_values: Vec<f64> = replicas.iter().map(|r| r.g_value).collect();
    let g_mean = g_values.iter().sum::<f64>() / g_values.len() as f64;
    let g_std = if g_values.len() < 2 {
        0.0
    } else {
        let var = g_values.iter().map(|g| (g - g_mean).powi(2)).sum::<f64>()
            / (g_values.len() as f64 - 1.0);
        var.sqrt()
    };
    Ok(CampaignReport {
        mode: config.mode,
        replicas,
        g_mean,
        g_std,
        shot_log,
    })
}

/// Inverse-variance combination; a plain mean when every input is exact.
fn combine_windows(values: &[f64], sigmas: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Domain("no windows to combine".into()));
    }
    let all_exact = sigmas.iter().all(|&s| s == 0.0);
    if all_exact {
        return Ok((values.iter().sum::<f64>() / values.len() as f64, 0.0));
    }
    if sigmas.iter().any(|&s| s == 0.0) {
        return Err(Error::Domain(
            "cannot mix exact and noisy windows in one combination".into(),
        ));
    }
    let mut wsum = 0.0;
    let mut msum = 0.0;
    for (v, s) in values.iter().zip(sigmas) {
        let w = 1.0 / (s * s);
        wsum += w;
        msum += w * v;
    }
    Ok((msum / wsum, (1.0 / wsum).sqrt()))
}

fn zone_modes(species: &Species, zone: &TrapZone) -> Result<ModeFrequencies> {
    if zone.tilt == 0.0 && zone.ellipticity == 0.0 {
        ideal_modes(species, zone)
    } else {
        perturbed_modes(species, zone)
    }
}

/// Read the free cyclotron frequency at field `b_mid`: each mode frequency
/// is read with Gaussian noise and the three reads combine through the
/// invariance relation omega_c^2 = sum of squared mode frequencies.
fn read_omega_c(
    species: &Species,
    zone: &TrapZone,
    b_mid: f64,
    model: &OmegaCReadModel,
    noiseless: bool,
    rng: &mut ChaCha12Rng,
) -> Result<(f64, f64)> {
    let mut read_zone = zone.clone();
    read_zone.b0 = b_mid;
    let modes = zone_modes(species, &read_zone)?;
    let draw = |truth: f64, sigma: f64, rng: &mut ChaCha12Rng| -> f64 {
        if noiseless || sigma == 0.0 {
            truth
        } else {
            let dist = Normal::new(0.0, sigma).expect("positive read sigma");
            truth + dist.sample(rng)
        }
    };
    let wp = draw(modes.omega_plus, model.sigma_plus, rng);
    let wz = draw(modes.omega_z, model.sigma_z, rng);
    let wm = draw(modes.omega_minus, model.sigma_minus, rng);
    let omega_hat = (wp * wp + wz * wz + wm * wm).sqrt();
    let sigma = if noiseless {
        0.0
    } else {
        ((modes.omega_plus * model.sigma_plus).powi(2)
            + (modes.omega_z * model.sigma_z).powi(2)
            + (modes.omega_minus * model.sigma_minus).powi(2))
        .sqrt()
            / modes.invariance_cyclotron()
    };
    Ok((omega_hat, sigma))
}

/// The measured species' shot sequence: the configured readout chain with
/// the probe step stretched to the scan's probe time.
fn spin_sequence(readout: &ReadoutSequence, probe_time: f64) -> ReadoutSequence {
    let mut seq = *readout;
    seq.probe.duration = probe_time;
    seq
}

/// The flywheel shot sequence: same probe and fluorescence fidelity, no
/// transfer steps (the flywheel ion is read out directly).
fn flywheel_sequence(readout: &ReadoutSequence, probe_time: f64) -> ReadoutSequence {
    ReadoutSequence {
        probe: StepModel {
            fidelity: readout.probe.fidelity,
            duration: probe_time,
        },
        proton_sideband: StepModel::perfect(),
        exchange: StepModel::perfect(),
        be_sideband: StepModel::perfect(),
        fluorescence: readout.fluorescence,
    }
}

/// Next window's grid center: linear extrapolation of the last two fits,
/// falling back to the last fit, falling back to the nominal center.
fn tracked_guess(history: &[f64], nominal: f64) -> f64 {
    match history.len() {
        0 => nominal,
        1 => history[0],
        n => 2.0 * history[n - 1] - history[n - 2],
    }
}

struct ShotLoopOutcome {
    scan: LineshapeScan,
    flywheel_scan: Option<LineshapeScan>,
    field_mid: f64,
}

/// State for one species' scan inside the interleaved shot loop.
struct ScanTrack<'a> {
    grid: Vec<f64>,
    guess: f64,
    params: &'a ScanParams,
    sequence: ReadoutSequence,
    omega_per_tesla: f64,
    bright: Vec<f64>,
    taken: u32,
    kind: &'static str,
}

impl<'a> ScanTrack<'a> {
    fn new(
        guess: f64,
        params: &'a ScanParams,
        sequence: ReadoutSequence,
        omega_per_tesla: f64,
        kind: &'static str,
    ) -> Self {
        ScanTrack {
            grid: params.grid(guess),
            guess,
            params,
            sequence,
            omega_per_tesla,
            bright: vec![0.0; params.points as usize],
            taken: 0,
            kind,
        }
    }

    fn total_shots(&self) -> u32 {
        self.params.points * self.params.shots_per_point
    }

    fn remaining(&self) -> bool {
        self.taken < self.total_shots()
    }

    /// Fire one shot at the current clock. Returns the shot record data.
    fn fire(
        &mut self,
        field: f64,
        noiseless: bool,
        rng: &mut ChaCha12Rng,
    ) -> Result<(f64, f64)> {
        let point = (self.taken / self.params.shots_per_point) as usize;
        let probe_frequency = self.grid[point];
        let line_center = self.omega_per_tesla * field;
        let p_flip = rabi_flip_probability(
            self.params.probe_rabi,
            probe_frequency - line_center,
            self.params.probe_time,
        );
        let bright_fraction = if noiseless {
            let pc = self.sequence.correct_assignment_probability();
            pc * p_flip + (1.0 - pc) * (1.0 - p_flip)
        } else {
            let flipped = rng.random_bool(p_flip);
            if run_readout(&self.sequence, flipped, rng)? {
                1.0
            } else {
                0.0
            }
        };
        self.bright[point] += bright_fraction;
        self.taken += 1;
        Ok((probe_frequency - self.guess, bright_fraction))
    }

    fn into_scan(self, elapsed: f64) -> LineshapeScan {
        LineshapeScan {
            probe_frequencies: self.grid,
            bright_counts: self.bright,
            shots: vec![self.params.shots_per_point; self.params.points as usize],
            elapsed,
        }
    }
}

/// Run the quantum-logic window shot loop: target and flywheel scans over a
/// shared clock, capturing the field at the shot nearest the window middle.
#[allow(clippy::too_many_arguments)]
fn quantum_shot_loop(
    mut spin: ScanTrack,
    mut fly: ScanTrack,
    interleave: bool,
    drift: &mut DriftTracker,
    clock: &mut f64,
    noiseless: bool,
    rng: &mut ChaCha12Rng,
    log: Option<&mut Vec<ShotRecord>>,
) -> Result<ShotLoopOutcome> {
    let spin_cost = spin.sequence.total_duration();
    let fly_cost = fly.sequence.total_duration();
    let total_time =
        f64::from(spin.total_shots()) * spin_cost + f64::from(fly.total_shots()) * fly_cost;
    let t_mid = *clock + total_time / 2.0;
    let t_start = *clock;
    let mut field_mid: Option<f64> = None;
    let mut last_field = drift.model().b0;
    let mut log = log;

    let fire = |track: &mut ScanTrack,
                    drift: &mut DriftTracker,
                    clock: &mut f64,
                    field_mid: &mut Option<f64>,
                    last_field: &mut f64,
                    log: &mut Option<&mut Vec<ShotRecord>>,
                    rng: &mut ChaCha12Rng|
     -> Result<()> {
        let field = drift.field_at(*clock)?;
        *last_field = field;
        if field_mid.is_none() && *clock >= t_mid {
            *field_mid = Some(field);
        }
        let timestamp = *clock;
        let (detuning, outcome) = track.fire(field, noiseless, rng)?;
        if let Some(records) = log.as_deref_mut() {
            records.push(ShotRecord {
                timestamp,
                kind: track.kind.to_string(),
                detuning,
                outcome,
            });
        }
        *clock += track.sequence.total_duration();
        Ok(())
    };

    if interleave {
        while spin.remaining() || fly.remaining() {
            if spin.remaining() {
                fire(
                    &mut spin,
                    drift,
                    clock,
                    &mut field_mid,
                    &mut last_field,
                    &mut log,
                    rng,
                )?;
            }
            if fly.remaining() {
                fire(
                    &mut fly,
                    drift,
                    clock,
                    &mut field_mid,
                    &mut last_field,
                    &mut log,
                    rng,
                )?;
            }
        }
    } else {
        while spin.remaining() {
            fire(
                &mut spin,
                drift,
                clock,
                &mut field_mid,
                &mut last_field,
                &mut log,
                rng,
            )?;
        }
        while fly.remaining() {
            fire(
                &mut fly,
                drift,
                clock,
                &mut field_mid,
                &mut last_field,
                &mut log,
                rng,
            )?;
        }
    }

    let elapsed = *clock - t_start;
    Ok(ShotLoopOutcome {
        scan: spin.into_scan(elapsed),
        flywheel_scan: Some(fly.into_scan(elapsed)),
        field_mid: field_mid.unwrap_or(last_field),
    })
}

fn run_replica(config: &CampaignConfig, replica: u32) -> Result<(ReplicaResult, Vec<ShotRecord>)> {
    match config.mode {
        CampaignMode::QuantumLogic => run_quantum_replica(config, replica),
        CampaignMode::Classical => run_classical_replica(config, replica),
    }
}

fn run_quantum_replica(
    config: &CampaignConfig,
    replica: u32,
) -> Result<(ReplicaResult, Vec<ShotRecord>)> {
    let idx = u64::from(replica);
    let mut shots_rng = substream(config.master_seed, "shots", idx);
    let drift_rng = substream(config.master_seed, &config.drift.seed_stream, idx);
    let mut omega_c_rng = substream(config.master_seed, "omega_c", idx);
    let mut drift = DriftTracker::new(config.drift.clone(), drift_rng)?;

    let k_spin = config.species.larmor_frequency(1.0)?;
    let k_fly = config.flywheel_species.larmor_frequency(1.0)?;
    let nominal_spin = k_spin * config.drift.b0;
    let nominal_fly = k_fly * config.drift.b0;

    let mut clock = 0.0f64;
    let mut log: Vec<ShotRecord> = Vec::new();
    let mut spin_history: Vec<f64> = Vec::new();
    let mut fly_history: Vec<f64> = Vec::new();
    let mut windows = Vec::with_capacity(config.windows as usize);
    let mut total_shots = 0u64;

    for w in 0..config.windows {
        clock += config.cooling_time;
        let t_start = clock;
        let spin_guess = tracked_guess(&spin_history, nominal_spin);
        let fly_guess = tracked_guess(&fly_history, nominal_fly);
        let spin_track = ScanTrack::new(
            spin_guess,
            &config.scan,
            spin_sequence(&config.readout, config.scan.probe_time),
            k_spin,
            "spin",
        );
        let fly_track = ScanTrack::new(
            fly_guess,
            &config.flywheel_scan,
            flywheel_sequence(&config.readout, config.flywheel_scan.probe_time),
            k_fly,
            "flywheel",
        );
        total_shots += u64::from(spin_track.total_shots()) + u64::from(fly_track.total_shots());
        let loop_log = if replica == 0 { Some(&mut log) } else { None };
        let outcome = quantum_shot_loop(
            spin_track,
            fly_track,
            config.interleave,
            &mut drift,
            &mut clock,
            config.noiseless,
            &mut shots_rng,
            loop_log,
        )?;
        clock += config.omega_c_read.read_time;
        let t_end = clock;

        let spin_seq = spin_sequence(&config.readout, config.scan.probe_time);
        let fly_seq = flywheel_sequence(&config.readout, config.flywheel_scan.probe_time);
        let spin_fit = fit_resonance(&outcome.scan, &config.scan, &spin_seq, spin_guess)?;
        let fly_fit = fit_resonance(
            outcome.flywheel_scan.as_ref().expect("flywheel scan present"),
            &config.flywheel_scan,
            &fly_seq,
            fly_guess,
        )?;
        spin_history.push(spin_fit.center);
        fly_history.push(fly_fit.center);

        let (omega_c_hat, omega_c_sigma) = read_omega_c(
            &config.species,
            &config.precision_zone,
            outcome.field_mid,
            &config.omega_c_read,
            config.noiseless,
            &mut omega_c_rng,
        )?;

        let g_value = 2.0 * spin_fit.center / omega_c_hat;
        let g_sigma = g_value
            * ((spin_fit.center_sigma / spin_fit.center).powi(2)
                + (omega_c_sigma / omega_c_hat).powi(2))
            .sqrt();

        windows.push(WindowRecord {
            window: w,
            spin: WindowEstimate {
                window: w,
                t_start,
                t_end,
                omega_hat: spin_fit.center,
                sigma: spin_fit.center_sigma,
            },
            flywheel: Some(WindowEstimate {
                window: w,
                t_start,
                t_end,
                omega_hat: fly_fit.center,
                sigma: fly_fit.center_sigma,
            }),
            omega_c: WindowEstimate {
                window: w,
                t_start,
                t_end,
                omega_hat: omega_c_hat,
                sigma: omega_c_sigma,
            },
            field_mid: outcome.field_mid,
            g_value,
            g_sigma,
        });
    }

    let g_values: Vec<f64> = windows.iter().map(|w| w.g_value).collect();
    let g_sigmas: Vec<f64> = windows.iter().map(|w| w.g_sigma).collect();
    let (g_value, g_sigma) = combine_windows(&g_values, &g_sigmas)?;
    let spin_estimates: Vec<WindowEstimate> = windows.iter().map(|w| w.spin).collect();
    let fly_estimates: Vec<WindowEstimate> =
        windows.iter().filter_map(|w| w.flywheel).collect();
    let flywheel = Some(flywheel_correct(&spin_estimates, &fly_estimates)?);

    Ok((
        ReplicaResult {
            replica,
            windows,
            g_value,
            g_sigma,
            flywheel,
            elapsed: clock,
            shots: total_shots,
        },
        log,
    ))
}

fn run_classical_replica(
    config: &CampaignConfig,
    replica: u32,
) -> Result<(ReplicaResult, Vec<ShotRecord>)> {
    let cl = config.classical.as_ref().expect("validated classical section");
    let idx = u64::from(replica);
    let mut shots_rng = substream(config.master_seed, "shots", idx);
    let drift_rng = substream(config.master_seed, &config.drift.seed_stream, idx);
    let mut omega_c_rng = substream(config.master_seed, "omega_c", idx);
    let mut detect_rng = substream(config.master_seed, &cl.cooling.seed_stream, idx);
    let mut drift = DriftTracker::new(config.drift.clone(), drift_rng)?;

    let repetitions = if cl.majority_repetitions > 0 {
        cl.majority_repetitions
    } else {
        required_repetitions(
            &config.species,
            &cl.zone,
            &cl.noise,
            &cl.cooling,
            cl.target_error,
        )?
    };
    let error_prob = detection_error_probability(
        &config.species,
        &cl.zone,
        &cl.noise,
        &cl.cooling,
        repetitions,
    )?;
    // The whole detection chain is one binary symmetric channel on the flip
    // bit, so the lineshape fit reuses the readout machinery with a single
    // imperfect step.
    let pseudo_sequence = ReadoutSequence {
        probe: StepModel {
            fidelity: 1.0 - error_prob,
            duration: config.scan.probe_time,
        },
        proton_sideband: StepModel::perfect(),
        exchange: StepModel::perfect(),
        be_sideband: StepModel::perfect(),
        fluorescence: StepModel::perfect(),
    };
    let nominal_wall = detection_wall_time(&cl.noise, &cl.cooling, repetitions);
    let nominal_report = DetectionReport {
        flip_detected: false,
        error_prob,
        wall_time: nominal_wall,
        mean_occupation: 0.0,
    };
    let cycle_nominal = double_trap_cycle(&cl.timings, &nominal_report);

    let k_spin = config.species.larmor_frequency(1.0)?;
    let nominal_spin = k_spin * config.drift.b0;
    let mut clock = 0.0f64;
    let mut log: Vec<ShotRecord> = Vec::new();
    let mut spin_history: Vec<f64> = Vec::new();
    let mut windows = Vec::with_capacity(config.windows as usize);
    let mut total_shots = 0u64;

    for w in 0..config.windows {
        let t_start = clock;
        let guess = tracked_guess(&spin_history, nominal_spin);
        let grid = config.scan.grid(guess);
        let n_shots = config.scan.points * config.scan.shots_per_point;
        let t_mid = clock + f64::from(n_shots) * cycle_nominal / 2.0;
        let mut field_mid: Option<f64> = None;
        let mut last_field = config.drift.b0;
        let mut bright = vec![0.0f64; grid.len()];
        for shot in 0..n_shots {
            let point = (shot / config.scan.shots_per_point) as usize;
            let field = drift.field_at(clock)?;
            last_field = field;
            if field_mid.is_none() && clock >= t_mid {
                field_mid = Some(field);
            }
            let line_center = k_spin * field;
            let p_flip = rabi_flip_probability(
                config.scan.probe_rabi,
                grid[point] - line_center,
                config.scan.probe_time,
            );
            let timestamp = clock;
            let (bright_fraction, cycle) = if config.noiseless {
                let pc = 1.0 - error_prob;
                (pc * p_flip + (1.0 - pc) * (1.0 - p_flip), cycle_nominal)
            } else {
                let flipped = shots_rng.random_bool(p_flip);
                let report = discriminate_flip(
                    &config.species,
                    &cl.zone,
                    &cl.noise,
                    &cl.cooling,
                    repetitions,
                    flipped,
                    &mut detect_rng,
                )?;
                let fraction = if report.flip_detected { 1.0 } else { 0.0 };
                let cycle = double_trap_cycle(&cl.timings, &report);
                (fraction, cycle)
            };
            bright[point] += bright_fraction;
            if replica == 0 {
                log.push(ShotRecord {
                    timestamp,
                    kind: "classical".to_string(),
                    detuning: grid[point] - guess,
                    outcome: bright_fraction,
                });
            }
            clock += cycle;
        }
        total_shots += u64::from(n_shots);
        clock += config.omega_c_read.read_time;
        let t_end = clock;

        let scan = LineshapeScan {
            probe_frequencies: grid,
            bright_counts: bright,
            shots: vec![config.scan.shots_per_point; config.scan.points as usize],
            elapsed: t_end - t_start,
        };
        let fit = fit_resonance(&scan, &config.scan, &pseudo_sequence, guess)?;
        spin_history.push(fit.center);

        let (omega_c_hat, omega_c_sigma) = read_omega_c(
            &config.species,
            &config.precision_zone,
            field_mid.unwrap_or(last_field),
            &config.omega_c_read,
            config.noiseless,
            &mut omega_c_rng,
        )?;

        let g_value = 2.0 * fit.center / omega_c_hat;
        let g_sigma = g_value
            * ((fit.center_sigma / fit.center).powi(2) + (omega_c_sigma / omega_c_hat).powi(2))
                .sqrt();

        windows.push(WindowRecord {
            window: w,
            spin: WindowEstimate {
                window: w,
                t_start,
                t_end,
                omega_hat: fit.center,
                sigma: fit.center_sigma,
            },
            flywheel: None,
            omega_c: WindowEstimate {
                window: w,
                t_start,
                t_end,
                omega_hat: omega_c_hat,
                sigma: omega_c_sigma,
            },
            field_mid: field_mid.unwrap_or(last_field),
            g_value,
            g_sigma,
        });
    }

    let g_values: Vec<f64> = windows.iter().map(|w| w.g_value).collect();
    let g_sigmas: Vec<f64> = windows.iter().map(|w| w.g_sigma).collect();
    let (g_value, g_sigma) = combine_windows(&g_values, &g_sigmas)?;

    Ok((
        ReplicaResult {
            replica,
            windows,
            g_value,
            g_sigma,
            flywheel: None,
            elapsed: clock,
            shots: total_shots,
        },
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PROTON_G;
    use approx::assert_relative_eq;

    fn precision_zone() -> TrapZone {
        let p = Species::proton();
        let wz = 2.0 * std::f64::consts::PI * 640.0e3;
        let d = 3.5e-3;
        let mut z = TrapZone::homogeneous(1.9, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d);
        z.tilt = 0.003;
        z.ellipticity = 0.002;
        z
    }

    fn analysis_zone() -> TrapZone {
        let p = Species::proton();
        let wz = 2.0 * std::f64::consts::PI * 680.0e3;
        let d = 1.8e-3;
        TrapZone {
            b2: 3.0e5,
            ..TrapZone::homogeneous(1.2, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d)
        }
    }

    fn readout() -> ReadoutSequence {
        ReadoutSequence {
            probe: StepModel {
                fidelity: 0.995,
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

    fn quantum_config() -> CampaignConfig {
        CampaignConfig {
            mode: CampaignMode::QuantumLogic,
            master_seed: 9001,
            replicas: 1,
            windows: 3,
            species: Species::proton(),
            flywheel_species: Species::be9_plus(),
            precision_zone: precision_zone(),
            scan: ScanParams {
                probe_rabi: 2.0 * std::f64::consts::PI * 10.0,
                probe_time: 0.05,
                points: 9,
                span: 150.0,
                shots_per_point: 100,
            },
            flywheel_scan: ScanParams {
                probe_rabi: 2.0 * std::f64::consts::PI * 500.0,
                probe_time: 1.0e-3,
                points: 9,
                span: 4000.0,
                shots_per_point: 100,
            },
            readout: readout(),
            drift: DriftModel {
                b0: 1.9,
                linear_rate: 3.0e-11,
                random_walk: 1.0e-10,
                seed_stream: "drift".into(),
            },
            omega_c_read: OmegaCReadModel {
                sigma_plus: 0.15,
                sigma_minus: 0.6,
                sigma_z: 0.6,
                read_time: 5.0,
            },
            cooling_time: 10.0,
            interleave: true,
            noiseless: false,
            classical: None,
        }
    }

    fn classical_config() -> CampaignConfig {
        let mut cfg = quantum_config();
        cfg.mode = CampaignMode::Classical;
        cfg.windows = 1;
        cfg.scan.points = 5;
        cfg.scan.shots_per_point = 2;
        cfg.drift = DriftModel::frozen(1.9);
        cfg.classical = Some(ClassicalDetection {
            zone: analysis_zone(),
            noise: AxialNoiseModel {
                sigma0: 0.05,
                detection_time: 60.0,
            },
            cooling: CoolingModel {
                tau_resistive: 100.0,
                t_equilibrium: 0.35,
                seed_stream: "classical".into(),
            },
            timings: DoubleTrapTimings {
                transport_time: 10.0,
                precision_interrogation_time: 5.0,
                analysis_detection_blocks: 1,
            },
            majority_repetitions: 0,
            target_error: 0.01,
        });
        cfg
    }

    #[test]
    fn noiseless_quantum_campaign_recovers_g_exactly() {
        let mut cfg = quantum_config();
        cfg.noiseless = true;
        cfg.drift = DriftModel::frozen(1.9);
        cfg.windows = 2;
        let report = run_campaign(&cfg).unwrap();
        let g = report.replicas[0].g_value;
        assert!(
            (g - PROTON_G).abs() / PROTON_G < 1.0e-10,
            "noiseless quantum-logic closure failed: got {g}, want {PROTON_G}"
        );
        for w in &report.replicas[0].windows {
            assert!((w.g_value - PROTON_G).abs() / PROTON_G < 1.0e-10);
            assert_eq!(w.omega_c.sigma, 0.0);
        }
    }

    #[test]
    fn noiseless_classical_campaign_recovers_g_exactly() {
        let mut cfg = classical_config();
        cfg.noiseless = true;
        let report = run_campaign(&cfg).unwrap();
        let g = report.replicas[0].g_value;
        assert!(
            (g - PROTON_G).abs() / PROTON_G < 1.0e-10,
            "noiseless classical closure failed: got {g}, want {PROTON_G}"
        );
    }

    #[test]
    fn noisy_replicas_cover_the_true_g() {
        let mut cfg = quantum_config();
        cfg.replicas = 30;
        cfg.windows = 2;
        let report = run_campaign(&cfg).unwrap();
        let mut within = 0;
        for r in &report.replicas {
            assert!(r.g_sigma > 0.0);
            if (r.g_value - PROTON_G).abs() < 3.0 * r.g_sigma {
                within += 1;
            }
        }
        assert!(
            within >= 28,
            "only {within}/30 replicas within 3 sigma of the true g"
        );
        // The replica spread should agree with the claimed sigma to within a
        // small factor.
        let typical_sigma = report.replicas[0].g_sigma;
        assert!(report.g_std < 3.0 * typical_sigma);
        assert!(report.g_std > typical_sigma / 3.0);
    }

    #[test]
    fn flywheel_ratio_stays_flat_while_raw_frequency_drifts() {
        let mut cfg = quantum_config();
        cfg.windows = 6;
        cfg.drift = DriftModel {
            b0: 1.9,
            linear_rate: 1.0e-10,
            random_walk: 0.0,
            seed_stream: "drift".into(),
        };
        let report = run_campaign(&cfg).unwrap();
        let replica = &report.replicas[0];
        let fly = replica.flywheel.as_ref().unwrap();
        // Raw spin frequency visibly walks across the campaign.
        let first = replica.windows.first().unwrap().spin.omega_hat;
        let last = replica.windows.last().unwrap().spin.omega_hat;
        assert!(
            last - first > 10.0,
            "expected a visible drift, got {} rad/s",
            last - first
        );
        // Per-window spin/flywheel ratios do not follow the drift.
        let mean_ratio = fly.window_ratios.iter().sum::<f64>() / fly.window_ratios.len() as f64;
        for r in &fly.window_ratios {
            assert!(
                (r / mean_ratio - 1.0).abs() < 1.0e-7,
                "ratio {r} strays from mean {mean_ratio}"
            );
        }
        // And the combined ratio matches the true moment ratio.
        let k_spin = Species::proton().larmor_frequency(1.0).unwrap();
        let k_fly = Species::be9_plus().larmor_frequency(1.0).unwrap();
        assert_relative_eq!(fly.ratio, k_spin / k_fly, max_relative = 1.0e-6);
    }

    #[test]
    fn campaign_is_deterministic_across_thread_counts() {
        let mut cfg = quantum_config();
        cfg.replicas = 4;
        cfg.windows = 2;
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_campaign(&cfg))
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_campaign(&cfg))
            .unwrap();
        assert_eq!(single, four);
        let again = run_campaign(&cfg).unwrap();
        assert_eq!(single, again);
    }

    #[test]
    fn classical_campaign_burns_hours_where_quantum_logic_takes_minutes() {
        let classical = run_campaign(&classical_config()).unwrap();
        let mut qcfg = quantum_config();
        qcfg.windows = 1;
        let quantum = run_campaign(&qcfg).unwrap();
        let classical_elapsed = classical.replicas[0].elapsed;
        let quantum_elapsed = quantum.replicas[0].elapsed;
        // Ten classical shots at ~4 hours each vs ~a minute of quantum-logic
        // shots.
        assert!(
            classical_elapsed > 3600.0,
            "classical campaign finished suspiciously fast: {classical_elapsed} s"
        );
        assert!(
            quantum_elapsed < 600.0,
            "quantum-logic campaign too slow: {quantum_elapsed} s"
        );
        assert!(classical_elapsed > 50.0 * quantum_elapsed);
        assert!(classical.replicas[0].flywheel.is_none());
        assert!(classical.replicas[0].windows[0].flywheel.is_none());
    }

    #[test]
    fn shot_log_covers_only_replica_zero_and_both_kinds() {
        let mut cfg = quantum_config();
        cfg.replicas = 2;
        cfg.windows = 1;
        let report = run_campaign(&cfg).unwrap();
        let expected = (cfg.scan.points * cfg.scan.shots_per_point
            + cfg.flywheel_scan.points * cfg.flywheel_scan.shots_per_point)
            as usize;
        assert_eq!(report.shot_log.len(), expected);
        assert!(report.shot_log.iter().any(|s| s.kind == "spin"));
        assert!(report.shot_log.iter().any(|s| s.kind == "flywheel"));
        // Timestamps never run backwards.
        for pair in report.shot_log.windows(2) {
            assert!(pair[1].timestamp >= pair[0].timestamp);
        }
    }

    #[test]
    fn classical_mode_without_classical_section_is_a_config_error() {
        let mut cfg = quantum_config();
        cfg.mode = CampaignMode::Classical;
        cfg.classical = None;
        let err = run_campaign(&cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_replicas_or_windows_are_rejected() {
        let mut cfg = quantum_config();
        cfg.replicas = 0;
        assert!(run_campaign(&cfg).is_err());
        let mut cfg = quantum_config();
        cfg.windows = 0;
        assert!(run_campaign(&cfg).is_err());
    }
}

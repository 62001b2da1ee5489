//! Configuration loading: a strict TOML schema in which every field is
//! optional and defaults to a working single-proton setup. Unknown keys are
//! rejected, omitted fields are reported, and a resolved configuration can
//! be re-emitted as canonical TOML that round-trips to itself.

use crate::classical::{AxialNoiseModel, CoolingModel, DoubleTrapTimings};
use crate::protocol::{
    CampaignConfig, CampaignMode, ClassicalDetection, DriftModel, OmegaCReadModel, ReadoutSequence,
    ScanParams, StepModel,
};
use crate::qdyn::{DecayModel, PulseKind, SidebandDrive, DEFAULT_TRUNCATION_GUARD};
use crate::species::Species;
use crate::trap::TrapZone;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// Raw schema: everything optional, unknown keys rejected.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    species: Option<BTreeMap<String, RawSpecies>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zones: Option<BTreeMap<String, RawZone>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resistive_cooling: Option<RawResistiveCooling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    axial_detection: Option<RawAxialDetection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    double_trap: Option<RawDoubleTrap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    double_well: Option<RawDoubleWell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantum: Option<RawQuantum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drives: Option<BTreeMap<String, RawDrive>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_state_cooling: Option<RawGroundStateCooling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    readout: Option<RawReadout>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<RawScan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flywheel_scan: Option<RawScan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<RawDrift>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_c_measurement: Option<RawOmegaC>,
    #[serde(skip_serializing_if = "Option::is_none")]
    campaign: Option<RawCampaign>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpecies {
    #[serde(skip_serializing_if = "Option::is_none")]
    charge_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZone {
    #[serde(skip_serializing_if = "Option::is_none")]
    b0_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b2_t_per_m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v0_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_char_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tilt_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ellipticity: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResistiveCooling {
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_stream: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxialDetection {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma0_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoubleTrap {
    #[serde(skip_serializing_if = "Option::is_none")]
    transport_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision_interrogation_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analysis_detection_blocks: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection_majority_repetitions: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoubleWell {
    #[serde(skip_serializing_if = "Option::is_none")]
    species_a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    species_b: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_a_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_b_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    separation_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuantum {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_guard: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<PulseKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega0_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detuning_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroundStateCooling {
    #[serde(skip_serializing_if = "Option::is_none")]
    drive: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_n_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_n_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_pulses: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reset_failure_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heating_rate_quanta_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dephasing_rate_per_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReadout {
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proton_sideband_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    proton_sideband_duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exchange_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exchange_duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    be_sideband_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    be_sideband_duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fluorescence_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fluorescence_duration_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_rabi_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    span_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots_per_point: Option<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrift {
    #[serde(skip_serializing_if = "Option::is_none")]
    linear_t_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    random_walk_t_per_sqrt_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_stream: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOmegaC {
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_plus_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_minus_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_z_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    read_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<CampaignMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicas: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    windows: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    species: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flywheel_species: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision_zone: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analysis_zone: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interleave: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cooling_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noiseless: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection_target_error: Option<f64>,
}

// ---------------------------------------------------------------------------
// Resolved configuration.
// ---------------------------------------------------------------------------

/// Double-trap timing settings plus the detection repetition policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleTrapSettings {
    pub timings: DoubleTrapTimings,
    /// Majority repetitions per detection; 0 sizes from the campaign's
    /// detection error target.
    pub majority_repetitions: u32,
}

/// Two coupled axial wells for the motional exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWellSettings {
    pub species_a: String,
    pub species_b: String,
    pub omega_a: f64,
    pub omega_b: f64,
    pub separation: f64,
}

/// Fock space size and the truncation guard.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSettings {
    pub n_max: usize,
    pub truncation_guard: f64,
}

/// Ground-state cooling run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateCoolingSettings {
    /// Name of the drive in the drives table.
    pub drive: String,
    pub initial_n_bar: f64,
    pub target_n_bar: f64,
    pub max_pulses: usize,
    pub decay: DecayModel,
}

/// Field drift settings; the base field comes from the campaign's precision
/// zone when a drift model is built.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSettings {
    pub linear_rate: f64,
    pub random_walk: f64,
    pub seed_stream: String,
}

/// Campaign section with symbolic species and zone references.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSettings {
    pub mode: CampaignMode,
    pub replicas: u32,
    pub windows: u32,
    pub species: String,
    pub flywheel_species: String,
    pub precision_zone: String,
    pub analysis_zone: String,
    pub interleave: bool,
    pub cooling_time: f64,
    pub noiseless: bool,
    pub detection_target_error: f64,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub species: BTreeMap<String, Species>,
    pub zones: BTreeMap<String, TrapZone>,
    pub resistive_cooling: CoolingModel,
    pub axial_detection: AxialNoiseModel,
    pub double_trap: DoubleTrapSettings,
    pub double_well: DoubleWellSettings,
    pub quantum: QuantumSettings,
    pub drives: BTreeMap<String, SidebandDrive>,
    pub ground_state_cooling: GroundStateCoolingSettings,
    pub readout: ReadoutSequence,
    pub scan: ScanParams,
    pub flywheel_scan: ScanParams,
    pub drift: DriftSettings,
    pub omega_c_read: OmegaCReadModel,
    pub campaign: CampaignSettings,
    /// Dotted paths of every field that fell back to its default.
    pub defaulted: Vec<String>,
}

/// Names of the built-in species.
pub const BUILTIN_SPECIES: [&str; 3] = ["proton", "antiproton", "be9plus"];

fn builtin_species() -> BTreeMap<String, Species> {
    BTreeMap::from([
        ("proton".to_string(), Species::proton()),
        ("antiproton".to_string(), Species::antiproton()),
        ("be9plus".to_string(), Species::be9_plus()),
    ])
}

fn builtin_zones() -> BTreeMap<String, TrapZone> {
    let proton = Species::proton();
    let precision = {
        let omega_z = 2.0 * std::f64::consts::PI * 640.0e3;
        let d = 3.5e-3;
        TrapZone::homogeneous(1.9, TrapZone::voltage_for_axial(&proton, omega_z, d, 0.5), d)
    };
    let analysis = {
        let omega_z = 2.0 * std::f64::consts::PI * 680.0e3;
        let d = 1.8e-3;
        TrapZone {
            b2: 3.0e5,
            ..TrapZone::homogeneous(1.2, TrapZone::voltage_for_axial(&proton, omega_z, d, 0.5), d)
        }
    };
    BTreeMap::from([
        ("precision".to_string(), precision),
        ("analysis".to_string(), analysis),
    ])
}

fn default_drives() -> BTreeMap<String, SidebandDrive> {
    BTreeMap::from([(
        "cooling_red".to_string(),
        SidebandDrive {
            omega0: 2.0 * std::f64::consts::PI * 50.0e3,
            eta: 0.1,
            detuning: 0.0,
            phase: 0.0,
            kind: PulseKind::RedSideband,
        },
    )])
}

/// Parse strict TOML into a resolved configuration. Unknown keys and type
/// mismatches are configuration errors carrying the TOML parser's location
/// report; omitted fields default and are listed in `defaulted`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::Config(format!("configuration rejected: {e}")))?;
    resolve(raw)
}

/// Load a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

struct DefaultLog {
    entries: Vec<String>,
}

impl DefaultLog {
    fn take<T>(&mut self, value: Option<T>, path: &str, fallback: T) -> T {
        match value {
            Some(v) => v,
            None => {
                self.entries.push(path.to_string());
                fallback
            }
        }
    }
}

#[allow(clippy::too_many_lines)]
fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let mut log = DefaultLog {
        entries: Vec::new(),
    };

    let master_seed = log.take(raw.master_seed, "master_seed", 12345);

    // Species: builtins plus user additions; a user table with a builtin
    // name overrides that builtin field by field.
    let mut species = builtin_species();
    if let Some(user) = raw.species {
        for (name, s) in user {
            let base = species.get(&name);
            let charge_e = match (s.charge_e, base) {
                (Some(v), _) => v,
                (None, Some(b)) => b.charge() / crate::constants::ELEMENTARY_CHARGE,
                (None, None) => {
                    return Err(Error::Config(format!(
                        "species.{name}: charge_e is required for a new species"
                    )))
                }
            };
            let mass_kg = match (s.mass_kg, base) {
                (Some(v), _) => v,
                (None, Some(b)) => b.mass(),
                (None, None) => {
                    return Err(Error::Config(format!(
                        "species.{name}: mass_kg is required for a new species"
                    )))
                }
            };
            let g_factor = match (s.g_factor, base) {
                (Some(v), _) => v,
                (None, Some(b)) => b.g_factor(),
                (None, None) => {
                    return Err(Error::Config(format!(
                        "species.{name}: g_factor is required for a new species"
                    )))
                }
            };
            let rebuilt = Species::new(
                &name,
                charge_e * crate::constants::ELEMENTARY_CHARGE,
                mass_kg,
                g_factor,
            )?;
            species.insert(name, rebuilt);
        }
    } else {
        log.entries.push("species".to_string());
    }

    // Zones: builtins plus user additions, same override rules.
    let mut zones = builtin_zones();
    if let Some(user) = raw.zones {
        for (name, z) in user {
            let base = zones.get(&name).cloned();
            let field = |v: Option<f64>, get: fn(&TrapZone) -> f64, label: &str| -> Result<f64> {
                match (v, &base) {
                    (Some(x), _) => Ok(x),
                    (None, Some(b)) => Ok(get(b)),
                    (None, None) => Err(Error::Config(format!(
                        "zones.{name}: {label} is required for a new zone"
                    ))),
                }
            };
            let zone = TrapZone {
                b0: field(z.b0_t, |b| b.b0, "b0_t")?,
                b2: z.b2_t_per_m2.unwrap_or_else(|| {
                    base.as_ref().map(|b| b.b2).unwrap_or(0.0)
                }),
                v0: field(z.v0_v, |b| b.v0, "v0_v")?,
                d_char: field(z.d_char_m, |b| b.d_char, "d_char_m")?,
                c2: z.c2.unwrap_or_else(|| base.as_ref().map(|b| b.c2).unwrap_or(0.5)),
                tilt: z
                    .tilt_rad
                    .unwrap_or_else(|| base.as_ref().map(|b| b.tilt).unwrap_or(0.0)),
                ellipticity: z
                    .ellipticity
                    .unwrap_or_else(|| base.as_ref().map(|b| b.ellipticity).unwrap_or(0.0)),
            };
            zone.validate()
                .map_err(|e| Error::Config(format!("zones.{name}: {e}")))?;
            zones.insert(name, zone);
        }
    } else {
        log.entries.push("zones".to_string());
    }

    let rc = raw.resistive_cooling.unwrap_or_default();
    let resistive_cooling = CoolingModel {
        tau_resistive: log.take(rc.tau_s, "resistive_cooling.tau_s", 100.0),
        t_equilibrium: log.take(rc.temperature_k, "resistive_cooling.temperature_k", 0.35),
        seed_stream: log.take(
            rc.seed_stream,
            "resistive_cooling.seed_stream",
            "classical".to_string(),
        ),
    };
    resistive_cooling.validate()?;

    let ad = raw.axial_detection.unwrap_or_default();
    let axial_detection = AxialNoiseModel {
        sigma0: log.take(ad.sigma0_rad_per_s, "axial_detection.sigma0_rad_per_s", 0.05),
        detection_time: log.take(ad.detection_time_s, "axial_detection.detection_time_s", 60.0),
    };
    axial_detection.validate()?;

    let dt = raw.double_trap.unwrap_or_default();
    let double_trap = DoubleTrapSettings {
        timings: DoubleTrapTimings {
            transport_time: log.take(dt.transport_time_s, "double_trap.transport_time_s", 10.0),
            precision_interrogation_time: log.take(
                dt.precision_interrogation_time_s,
                "double_trap.precision_interrogation_time_s",
                5.0,
            ),
            analysis_detection_blocks: log.take(
                dt.analysis_detection_blocks,
                "double_trap.analysis_detection_blocks",
                1,
            ),
        },
        majority_repetitions: log.take(
            dt.detection_majority_repetitions,
            "double_trap.detection_majority_repetitions",
            0,
        ),
    };

    let dw = raw.double_well.unwrap_or_default();
    let double_well = DoubleWellSettings {
        species_a: log.take(dw.species_a, "double_well.species_a", "proton".to_string()),
        species_b: log.take(dw.species_b, "double_well.species_b", "be9plus".to_string()),
        omega_a: log.take(
            dw.omega_a_rad_per_s,
            "double_well.omega_a_rad_per_s",
            2.0 * std::f64::consts::PI * 1.0e6,
        ),
        omega_b: log.take(
            dw.omega_b_rad_per_s,
            "double_well.omega_b_rad_per_s",
            2.0 * std::f64::consts::PI * 1.0e6,
        ),
        separation: log.take(dw.separation_m, "double_well.separation_m", 3.0e-4),
    };
    for name in [&double_well.species_a, &double_well.species_b] {
        if !species.contains_key(name) {
            return Err(Error::Config(format!(
                "double_well references unknown species {name:?}"
            )));
        }
    }

    let q = raw.quantum.unwrap_or_default();
    let quantum = QuantumSettings {
        n_max: log.take(q.n_max, "quantum.n_max", 40) as usize,
        truncation_guard: log.take(
            q.truncation_guard,
            "quantum.truncation_guard",
            DEFAULT_TRUNCATION_GUARD,
        ),
    };
    if quantum.n_max < 2 {
        return Err(Error::Config(format!(
            "quantum.n_max must be at least 2, got {}",
            quantum.n_max
        )));
    }
    if !(quantum.truncation_guard > 0.0 && quantum.truncation_guard < 1.0) {
        return Err(Error::Config(format!(
            "quantum.truncation_guard must lie in (0, 1), got {}",
            quantum.truncation_guard
        )));
    }

    let mut drives = default_drives();
    if let Some(user) = raw.drives {
        for (name, d) in user {
            let base = drives.get(&name).cloned();
            let drive = SidebandDrive {
                kind: match (d.kind, &base) {
                    (Some(k), _) => k,
                    (None, Some(b)) => b.kind,
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "drives.{name}: kind is required for a new drive"
                        )))
                    }
                },
                omega0: match (d.omega0_rad_per_s, &base) {
                    (Some(v), _) => v,
                    (None, Some(b)) => b.omega0,
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "drives.{name}: omega0_rad_per_s is required for a new drive"
                        )))
                    }
                },
                eta: match (d.eta, &base) {
                    (Some(v), _) => v,
                    (None, Some(b)) => b.eta,
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "drives.{name}: eta is required for a new drive"
                        )))
                    }
                },
                detuning: d
                    .detuning_rad_per_s
                    .unwrap_or_else(|| base.as_ref().map(|b| b.detuning).unwrap_or(0.0)),
                phase: d
                    .phase_rad
                    .unwrap_or_else(|| base.as_ref().map(|b| b.phase).unwrap_or(0.0)),
            };
            drive
                .validate()
                .map_err(|e| Error::Config(format!("drives.{name}: {e}")))?;
            drives.insert(name, drive);
        }
    } else {
        log.entries.push("drives".to_string());
    }

    let gsc = raw.ground_state_cooling.unwrap_or_default();
    let ground_state_cooling = GroundStateCoolingSettings {
        drive: log.take(
            gsc.drive,
            "ground_state_cooling.drive",
            "cooling_red".to_string(),
        ),
        initial_n_bar: log.take(gsc.initial_n_bar, "ground_state_cooling.initial_n_bar", 2.0),
        target_n_bar: log.take(gsc.target_n_bar, "ground_state_cooling.target_n_bar", 0.01),
        max_pulses: log.take(gsc.max_pulses, "ground_state_cooling.max_pulses", 200) as usize,
        decay: DecayModel {
            reset_failure_prob: log.take(
                gsc.reset_failure_prob,
                "ground_state_cooling.reset_failure_prob",
                0.02,
            ),
            heating_rate: log.take(
                gsc.heating_rate_quanta_per_s,
                "ground_state_cooling.heating_rate_quanta_per_s",
                0.0,
            ),
            dephasing_rate: log.take(
                gsc.dephasing_rate_per_s,
                "ground_state_cooling.dephasing_rate_per_s",
                0.0,
            ),
        },
    };
    ground_state_cooling.decay.validate()?;
    if !drives.contains_key(&ground_state_cooling.drive) {
        return Err(Error::Config(format!(
            "ground_state_cooling references unknown drive {:?}",
            ground_state_cooling.drive
        )));
    }
    if !(ground_state_cooling.initial_n_bar >= 0.0) {
        return Err(Error::Config(format!(
            "ground_state_cooling.initial_n_bar must be nonnegative, got {}",
            ground_state_cooling.initial_n_bar
        )));
    }

    let ro = raw.readout.unwrap_or_default();
    let readout = ReadoutSequence {
        probe: StepModel {
            fidelity: log.take(ro.probe_fidelity, "readout.probe_fidelity", 0.995),
            duration: log.take(ro.probe_duration_s, "readout.probe_duration_s", 0.05),
        },
        proton_sideband: StepModel {
            fidelity: log.take(
                ro.proton_sideband_fidelity,
                "readout.proton_sideband_fidelity",
                0.97,
            ),
            duration: log.take(
                ro.proton_sideband_duration_s,
                "readout.proton_sideband_duration_s",
                2.0e-3,
            ),
        },
        exchange: StepModel {
            fidelity: log.take(ro.exchange_fidelity, "readout.exchange_fidelity", 0.98),
            duration: log.take(ro.exchange_duration_s, "readout.exchange_duration_s", 5.8e-3),
        },
        be_sideband: StepModel {
            fidelity: log.take(ro.be_sideband_fidelity, "readout.be_sideband_fidelity", 0.97),
            duration: log.take(
                ro.be_sideband_duration_s,
                "readout.be_sideband_duration_s",
                2.0e-4,
            ),
        },
        fluorescence: StepModel {
            fidelity: log.take(
                ro.fluorescence_fidelity,
                "readout.fluorescence_fidelity",
                0.99,
            ),
            duration: log.take(
                ro.fluorescence_duration_s,
                "readout.fluorescence_duration_s",
                5.0e-3,
            ),
        },
    };
    readout.validate()?;

    let scan_defaults = (
        2.0 * std::f64::consts::PI * 10.0,
        0.05,
        9,
        150.0,
        100,
    );
    let sc = raw.scan.unwrap_or_default();
    let scan = ScanParams {
        probe_rabi: log.take(sc.probe_rabi_rad_per_s, "scan.probe_rabi_rad_per_s", scan_defaults.0),
        probe_time: log.take(sc.probe_time_s, "scan.probe_time_s", scan_defaults.1),
        points: log.take(sc.points, "scan.points", scan_defaults.2),
        span: log.take(sc.span_rad_per_s, "scan.span_rad_per_s", scan_defaults.3),
        shots_per_point: log.take(sc.shots_per_point, "scan.shots_per_point", scan_defaults.4),
    };
    scan.validate()?;

    let fsc = raw.flywheel_scan.unwrap_or_default();
    let flywheel_scan = ScanParams {
        probe_rabi: log.take(
            fsc.probe_rabi_rad_per_s,
            "flywheel_scan.probe_rabi_rad_per_s",
            2.0 * std::f64::consts::PI * 500.0,
        ),
        probe_time: log.take(fsc.probe_time_s, "flywheel_scan.probe_time_s", 1.0e-3),
        points: log.take(fsc.points, "flywheel_scan.points", 9),
        span: log.take(fsc.span_rad_per_s, "flywheel_scan.span_rad_per_s", 4000.0),
        shots_per_point: log.take(fsc.shots_per_point, "flywheel_scan.shots_per_point", 100),
    };
    flywheel_scan.validate()?;

    let dr = raw.drift.unwrap_or_default();
    let drift = DriftSettings {
        linear_rate: log.take(dr.linear_t_per_s, "drift.linear_t_per_s", 3.0e-11),
        random_walk: log.take(
            dr.random_walk_t_per_sqrt_s,
            "drift.random_walk_t_per_sqrt_s",
            1.0e-10,
        ),
        seed_stream: log.take(dr.seed_stream, "drift.seed_stream", "drift".to_string()),
    };
    if !drift.linear_rate.is_finite() || !drift.random_walk.is_finite() || drift.random_walk < 0.0 {
        return Err(Error::Config(
            "drift rates must be finite (walk amplitude nonnegative)".into(),
        ));
    }

    let oc = raw.omega_c_measurement.unwrap_or_default();
    let omega_c_read = OmegaCReadModel {
        sigma_plus: log.take(
            oc.sigma_plus_rad_per_s,
            "omega_c_measurement.sigma_plus_rad_per_s",
            0.15,
        ),
        sigma_minus: log.take(
            oc.sigma_minus_rad_per_s,
            "omega_c_measurement.sigma_minus_rad_per_s",
            0.6,
        ),
        sigma_z: log.take(oc.sigma_z_rad_per_s, "omega_c_measurement.sigma_z_rad_per_s", 0.6),
        read_time: log.take(oc.read_time_s, "omega_c_measurement.read_time_s", 5.0),
    };
    omega_c_read.validate()?;

    let cp = raw.campaign.unwrap_or_default();
    let campaign = CampaignSettings {
        mode: log.take(cp.mode, "campaign.mode", CampaignMode::QuantumLogic),
        replicas: log.take(cp.replicas, "campaign.replicas", 1),
        windows: log.take(cp.windows, "campaign.windows", 3),
        species: log.take(cp.species, "campaign.species", "proton".to_string()),
        flywheel_species: log.take(
            cp.flywheel_species,
            "campaign.flywheel_species",
            "be9plus".to_string(),
        ),
        precision_zone: log.take(
            cp.precision_zone,
            "campaign.precision_zone",
            "precision".to_string(),
        ),
        analysis_zone: log.take(
            cp.analysis_zone,
            "campaign.analysis_zone",
            "analysis".to_string(),
        ),
        interleave: log.take(cp.interleave, "campaign.interleave", true),
        cooling_time: log.take(cp.cooling_time_s, "campaign.cooling_time_s", 10.0),
        noiseless: log.take(cp.noiseless, "campaign.noiseless", false),
        detection_target_error: log.take(
            cp.detection_target_error,
            "campaign.detection_target_error",
            0.01,
        ),
    };
    for (label, name) in [
        ("campaign.species", &campaign.species),
        ("campaign.flywheel_species", &campaign.flywheel_species),
    ] {
        if !species.contains_key(name) {
            return Err(Error::Config(format!(
                "{label} references unknown species {name:?}"
            )));
        }
    }
    for (label, name) in [
        ("campaign.precision_zone", &campaign.precision_zone),
        ("campaign.analysis_zone", &campaign.analysis_zone),
    ] {
        if !zones.contains_key(name) {
            return Err(Error::Config(format!(
                "{label} references unknown zone {name:?}"
            )));
        }
    }
    if !(campaign.detection_target_error > 0.0 && campaign.detection_target_error < 1.0) {
        return Err(Error::Config(format!(
            "campaign.detection_target_error must lie in (0, 1), got {}",
            campaign.detection_target_error
        )));
    }

    Ok(RunConfig {
        master_seed,
        species,
        zones,
        resistive_cooling,
        axial_detection,
        double_trap,
        double_well,
        quantum,
        drives,
        ground_state_cooling,
        readout,
        scan,
        flywheel_scan,
        drift,
        omega_c_read,
        campaign,
        defaulted: log.entries,
    })
}

impl RunConfig {
    /// Look up a species by name.
    pub fn species(&self, name: &str) -> Result<&Species> {
        self.species
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown species {name:?}")))
    }

    /// Look up a zone by name.
    pub fn zone(&self, name: &str) -> Result<&TrapZone> {
        self.zones
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown zone {name:?}")))
    }

    /// Build the campaign configuration, resolving all symbolic references.
    pub fn campaign_config(&self) -> Result<CampaignConfig> {
        let species = self.species(&self.campaign.species)?.clone();
        let flywheel_species = self.species(&self.campaign.flywheel_species)?.clone();
        let precision_zone = self.zone(&self.campaign.precision_zone)?.clone();
        let analysis_zone = self.zone(&self.campaign.analysis_zone)?.clone();
        let classical = match self.campaign.mode {
            CampaignMode::Classical => Some(ClassicalDetection {
                zone: analysis_zone,
                noise: self.axial_detection.clone(),
                cooling: self.resistive_cooling.clone(),
                timings: self.double_trap.timings.clone(),
                majority_repetitions: self.double_trap.majority_repetitions,
                target_error: self.campaign.detection_target_error,
            }),
            CampaignMode::QuantumLogic => None,
        };
        let config = CampaignConfig {
            mode: self.campaign.mode,
            master_seed: self.master_seed,
            replicas: self.campaign.replicas,
            windows: self.campaign.windows,
            species,
            flywheel_species,
            precision_zone: precision_zone.clone(),
            scan: self.scan,
            flywheel_scan: self.flywheel_scan,
            readout: self.readout,
            drift: DriftModel {
                b0: precision_zone.b0,
                linear_rate: self.drift.linear_rate,
                random_walk: self.drift.random_walk,
                seed_stream: self.drift.seed_stream.clone(),
            },
            omega_c_read: self.omega_c_read,
            cooling_time: self.campaign.cooling_time,
            interleave: self.campaign.interleave,
            noiseless: self.campaign.noiseless,
            classical,
        };
        config.validate()?;
        Ok(config)
    }

    /// Emit the resolved configuration as canonical TOML: every field
    /// explicit, keys in schema order. Parsing the emission reproduces this
    /// configuration with an empty defaulted list.
    pub fn to_canonical_toml(&self) -> Result<String> {
        let raw = RawConfig {
            master_seed: Some(self.master_seed),
            species: Some(
                self.species
                    .iter()
                    .map(|(name, s)| {
                        (
                            name.clone(),
                            RawSpecies {
                                charge_e: Some(s.charge() / crate::constants::ELEMENTARY_CHARGE),
                                mass_kg: Some(s.mass()),
                                g_factor: Some(s.g_factor()),
                            },
                        )
                    })
                    .collect(),
            ),
            zones: Some(
                self.zones
                    .iter()
                    .map(|(name, z)| {
                        (
                            name.clone(),
                            RawZone {
                                b0_t: Some(z.b0),
                                b2_t_per_m2: Some(z.b2),
                                v0_v: Some(z.v0),
                                d_char_m: Some(z.d_char),
                                c2: Some(z.c2),
                                tilt_rad: Some(z.tilt),
                                ellipticity: Some(z.ellipticity),
                            },
                        )
                    })
                    .collect(),
            ),
            resistive_cooling: Some(RawResistiveCooling {
                tau_s: Some(self.resistive_cooling.tau_resistive),
                temperature_k: Some(self.resistive_cooling.t_equilibrium),
                seed_stream: Some(self.resistive_cooling.seed_stream.clone()),
            }),
            axial_detection: Some(RawAxialDetection {
                sigma0_rad_per_s: Some(self.axial_detection.sigma0),
                detection_time_s: Some(self.axial_detection.detection_time),
            }),
            double_trap: Some(RawDoubleTrap {
                transport_time_s: Some(self.double_trap.timings.transport_time),
                precision_interrogation_time_s: Some(
                    self.double_trap.timings.precision_interrogation_time,
                ),
                analysis_detection_blocks: Some(self.double_trap.timings.analysis_detection_blocks),
                detection_majority_repetitions: Some(self.double_trap.majority_repetitions),
            }),
            double_well: Some(RawDoubleWell {
                species_a: Some(self.double_well.species_a.clone()),
                species_b: Some(self.double_well.species_b.clone()),
                omega_a_rad_per_s: Some(self.double_well.omega_a),
                omega_b_rad_per_s: Some(self.double_well.omega_b),
                separation_m: Some(self.double_well.separation),
            }),
            quantum: Some(RawQuantum {
                n_max: Some(self.quantum.n_max as u32),
                truncation_guard: Some(self.quantum.truncation_guard),
            }),
            drives: Some(
                self.drives
                    .iter()
                    .map(|(name, d)| {
                        (
                            name.clone(),
                            RawDrive {
                                kind: Some(d.kind),
                                omega0_rad_per_s: Some(d.omega0),
                                eta: Some(d.eta),
                                detuning_rad_per_s: Some(d.detuning),
                                phase_rad: Some(d.phase),
                            },
                        )
                    })
                    .collect(),
            ),
            ground_state_cooling: Some(RawGroundStateCooling {
                drive: Some(self.ground_state_cooling.drive.clone()),
                initial_n_bar: Some(self.ground_state_cooling.initial_n_bar),
                target_n_bar: Some(self.ground_state_cooling.target_n_bar),
                max_pulses: Some(self.ground_state_cooling.max_pulses as u32),
                reset_failure_prob: Some(self.ground_state_cooling.decay.reset_failure_prob),
                heating_rate_quanta_per_s: Some(self.ground_state_cooling.decay.heating_rate),
                dephasing_rate_per_s: Some(self.ground_state_cooling.decay.dephasing_rate),
            }),
            readout: Some(RawReadout {
                probe_fidelity: Some(self.readout.probe.fidelity),
                probe_duration_s: Some(self.readout.probe.duration),
                proton_sideband_fidelity: Some(self.readout.proton_sideband.fidelity),
                proton_sideband_duration_s: Some(self.readout.proton_sideband.duration),
                exchange_fidelity: Some(self.readout.exchange.fidelity),
                exchange_duration_s: Some(self.readout.exchange.duration),
                be_sideband_fidelity: Some(self.readout.be_sideband.fidelity),
                be_sideband_duration_s: Some(self.readout.be_sideband.duration),
                fluorescence_fidelity: Some(self.readout.fluorescence.fidelity),
                fluorescence_duration_s: Some(self.readout.fluorescence.duration),
            }),
            scan: Some(RawScan {
                probe_rabi_rad_per_s: Some(self.scan.probe_rabi),
                probe_time_s: Some(self.scan.probe_time),
                points: Some(self.scan.points),
                span_rad_per_s: Some(self.scan.span),
                shots_per_point: Some(self.scan.shots_per_point),
            }),
            flywheel_scan: Some(RawScan {
                probe_rabi_rad_per_s: Some(self.flywheel_scan.probe_rabi),
                probe_time_s: Some(self.flywheel_scan.probe_time),
                points: Some(self.flywheel_scan.points),
                span_rad_per_s: Some(self.flywheel_scan.span),
                shots_per_point: Some(self.flywheel_scan.shots_per_point),
            }),
            drift: Some(RawDrift {
                linear_t_per_s: Some(self.drift.linear_rate),
                random_walk_t_per_sqrt_s: Some(self.drift.random_walk),
                seed_stream: Some(self.drift.seed_stream.clone()),
            }),
            omega_c_measurement: Some(RawOmegaC {
                sigma_plus_rad_per_s: Some(self.omega_c_read.sigma_plus),
                sigma_minus_rad_per_s: Some(self.omega_c_read.sigma_minus),
                sigma_z_rad_per_s: Some(self.omega_c_read.sigma_z),
                read_time_s: Some(self.omega_c_read.read_time),
            }),
            campaign: Some(RawCampaign {
                mode: Some(self.campaign.mode),
                replicas: Some(self.campaign.replicas),
                windows: Some(self.campaign.windows),
                species: Some(self.campaign.species.clone()),
                flywheel_species: Some(self.campaign.flywheel_species.clone()),
                precision_zone: Some(self.campaign.precision_zone.clone()),
                analysis_zone: Some(self.campaign.analysis_zone.clone()),
                interleave: Some(self.campaign.interleave),
                cooling_time_s: Some(self.campaign.cooling_time),
                noiseless: Some(self.campaign.noiseless),
                detection_target_error: Some(self.campaign.detection_target_error),
            }),
        };
        let value = toml::Value::try_from(&raw)
            .map_err(|e| Error::Config(format!("canonical emission failed: {e}")))?;
        emit_document(&value)
    }
}

// Canonical TOML printing. The stock serializer writes small floats as long
// decimal expansions; this emitter uses the shortest round-trip form
// instead, so the emitted file is readable and still parses back bit for
// bit.

fn emit_scalar(value: &toml::Value) -> Result<String> {
    Ok(match value {
        toml::Value::Float(x) => {
            let s = crate::output::fmt_f64(*x);
            // A TOML float needs a dot or exponent to stay a float.
            if s.contains('.') || s.contains('e') || s.contains('E') {
                s
            } else {
                format!("{s}.0")
            }
        }
        toml::Value::Integer(n) => n.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::String(s) => emit_string(s),
        other => {
            return Err(Error::Config(format!(
                "canonical emission hit an unexpected value kind: {other:?}"
            )))
        }
    })
}

fn emit_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn emit_key(key: &str) -> String {
    let bare = !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if bare {
        key.to_string()
    } else {
        emit_string(key)
    }
}

fn emit_entries(out: &mut String, table: &toml::map::Map<String, toml::Value>) -> Result<()> {
    for (key, value) in table {
        out.push_str(&emit_key(key));
        out.push_str(" = ");
        out.push_str(&emit_scalar(value)?);
        out.push('\n');
    }
    Ok(())
}

fn emit_document(root: &toml::Value) -> Result<String> {
    let top = root
        .as_table()
        .ok_or_else(|| Error::Config("canonical emission needs a table at the root".into()))?;
    let mut out = String::new();
    for (key, value) in top {
        if !value.is_table() {
            out.push_str(&emit_key(key));
            out.push_str(" = ");
            out.push_str(&emit_scalar(value)?);
            out.push('\n');
        }
    }
    for (key, value) in top {
        let Some(section) = value.as_table() else {
            continue;
        };
        let nested = section.values().any(toml::Value::is_table);
        if nested {
            // A map of tables, like [species.proton].
            for (name, sub) in section {
                let sub_table = sub.as_table().ok_or_else(|| {
                    Error::Config(format!("section {key} mixes tables and scalars"))
                })?;
                out.push('\n');
                out.push_str(&format!("[{}.{}]\n", emit_key(key), emit_key(name)));
                emit_entries(&mut out, sub_table)?;
            }
        } else {
            out.push('\n');
            out.push_str(&format!("[{}]\n", emit_key(key)));
            emit_entries(&mut out, section)?;
        }
    }
    Ok(out)
}

/// Set a dotted-path key in a TOML document, creating intermediate tables as
/// needed. The result must still pass schema validation, so typos surface as
/// unknown-key errors at the next parse.
pub fn set_path(root: &mut toml::Value, dotted: &str, new_value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed parameter path {dotted:?}")));
    }
    let mut cursor = root;
    for part in &parts[..parts.len() - 1] {
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("path {dotted:?} crosses a non-table value")))?;
        cursor = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = cursor
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("path {dotted:?} crosses a non-table value")))?;
    table.insert(parts[parts.len() - 1].to_string(), new_value);
    Ok(())
}

/// Parse a sweep value: integer, then float, then boolean, falling back to a
/// string.
pub fn parse_scalar(text: &str) -> toml::Value {
    if let Ok(v) = text.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = text.parse::<f64>() {
        return toml::Value::Float(v);
    }
    if let Ok(v) = text.parse::<bool>() {
        return toml::Value::Boolean(v);
    }
    toml::Value::String(text.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_config_resolves_to_full_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.master_seed, 12345);
        assert!(cfg.species.contains_key("proton"));
        assert!(cfg.species.contains_key("antiproton"));
        assert!(cfg.species.contains_key("be9plus"));
        assert!(cfg.zones.contains_key("precision"));
        assert!(cfg.zones.contains_key("analysis"));
        assert!(cfg.defaulted.contains(&"master_seed".to_string()));
        assert!(cfg.defaulted.contains(&"scan.points".to_string()));
        assert_eq!(cfg.campaign.mode, CampaignMode::QuantumLogic);
        // The default campaign must build.
        cfg.campaign_config().unwrap();
    }

    #[test]
    fn explicit_fields_are_not_reported_as_defaulted() {
        let cfg = parse_config("master_seed = 7\n[scan]\npoints = 11\n").unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.scan.points, 11);
        assert!(!cfg.defaulted.contains(&"master_seed".to_string()));
        assert!(!cfg.defaulted.contains(&"scan.points".to_string()));
        assert!(cfg.defaulted.contains(&"scan.span_rad_per_s".to_string()));
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = parse_config("master_sead = 7\n").unwrap_err();
        let Error::Config(msg) = err else {
            panic!("wrong error type");
        };
        assert!(msg.contains("master_sead"), "{msg}");
        assert!(msg.contains("line 1"), "missing location in {msg}");
        let err = parse_config("[scan]\npoints = 9\nspam = 1\n").unwrap_err();
        let Error::Config(msg) = err else {
            panic!("wrong error type");
        };
        assert!(msg.contains("spam"), "{msg}");
        assert!(msg.contains("line 3"), "missing location in {msg}");
    }

    #[test]
    fn type_mismatches_are_config_errors() {
        let err = parse_config("[scan]\npoints = \"nine\"\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn builtin_species_can_be_partially_overridden() {
        let cfg = parse_config("[species.proton]\ng_factor = 5.6\n").unwrap();
        let p = cfg.species("proton").unwrap();
        assert_relative_eq!(p.g_factor(), 5.6);
        // Charge and mass keep their builtin values.
        assert_relative_eq!(p.mass(), crate::constants::PROTON_MASS);
        let q = p.charge() / crate::constants::ELEMENTARY_CHARGE;
        assert_relative_eq!(q, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn new_species_requires_all_fields() {
        let err = parse_config("[species.muon]\ncharge_e = 1.0\n").unwrap_err();
        let Error::Config(msg) = err else {
            panic!("wrong error type");
        };
        assert!(msg.contains("mass_kg"), "{msg}");
        let cfg = parse_config(
            "[species.heavy]\ncharge_e = 1.0\nmass_kg = 3.0e-27\ng_factor = 4.0\n",
        )
        .unwrap();
        assert!(cfg.species.contains_key("heavy"));
    }

    #[test]
    fn new_zone_requires_core_fields_and_validates() {
        let err = parse_config("[zones.side]\nb0_t = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = parse_config(
            "[zones.side]\nb0_t = -1.0\nv0_v = 1.0\nd_char_m = 1.0e-3\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn campaign_cross_references_are_checked() {
        let err = parse_config("[campaign]\nspecies = \"unobtainium\"\n").unwrap_err();
        let Error::Config(msg) = err else {
            panic!("wrong error type");
        };
        assert!(msg.contains("unobtainium"), "{msg}");
        let err = parse_config("[campaign]\nprecision_zone = \"nowhere\"\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err =
            parse_config("[ground_state_cooling]\ndrive = \"missing_drive\"\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn canonical_emission_round_trips() {
        let cfg = parse_config("master_seed = 99\n[scan]\npoints = 11\n").unwrap();
        let canonical = cfg.to_canonical_toml().unwrap();
        let reparsed = parse_config(&canonical).unwrap();
        assert!(
            reparsed.defaulted.is_empty(),
            "canonical emission left defaults: {:?}",
            reparsed.defaulted
        );
        // Identical up to the defaulted bookkeeping.
        let mut a = cfg.clone();
        a.defaulted = Vec::new();
        let mut b = reparsed.clone();
        b.defaulted = Vec::new();
        assert_eq!(a, b);
        // Emission is idempotent.
        assert_eq!(canonical, reparsed.to_canonical_toml().unwrap());
    }

    #[test]
    fn classical_campaign_config_builds_with_detection_section() {
        let cfg = parse_config("[campaign]\nmode = \"classical\"\n").unwrap();
        let campaign = cfg.campaign_config().unwrap();
        assert_eq!(campaign.mode, CampaignMode::Classical);
        assert!(campaign.classical.is_some());
    }

    #[test]
    fn drift_base_field_follows_the_precision_zone() {
        let cfg = parse_config("[zones.precision]\nb0_t = 2.5\n").unwrap();
        let campaign = cfg.campaign_config().unwrap();
        assert_relative_eq!(campaign.drift.b0, 2.5);
    }

    #[test]
    fn set_path_updates_and_creates_tables() {
        let mut doc: toml::Value = toml::from_str("[scan]\npoints = 9\n").unwrap();
        set_path(&mut doc, "scan.points", toml::Value::Integer(15)).unwrap();
        set_path(&mut doc, "drift.linear_t_per_s", parse_scalar("2.0e-11")).unwrap();
        let text = toml::to_string(&doc).unwrap();
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.scan.points, 15);
        assert_relative_eq!(cfg.drift.linear_rate, 2.0e-11);
        // A typo in the swept path surfaces at the next parse.
        set_path(&mut doc, "scann.points", toml::Value::Integer(3)).unwrap();
        let text = toml::to_string(&doc).unwrap();
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
    }

    #[test]
    fn scalar_parsing_prefers_numbers() {
        assert_eq!(parse_scalar("42"), toml::Value::Integer(42));
        assert_eq!(parse_scalar("2.5e-3"), toml::Value::Float(2.5e-3));
        assert_eq!(parse_scalar("true"), toml::Value::Boolean(true));
        assert_eq!(
            parse_scalar("classical"),
            toml::Value::String("classical".into())
        );
    }

    #[test]
    fn drive_tables_resolve_with_defaults_and_overrides() {
        let cfg = parse_config(
            "[drives.blue_probe]\nkind = \"blue_sideband\"\nomega0_rad_per_s = 1000.0\neta = 0.2\n",
        )
        .unwrap();
        let d = cfg.drives.get("blue_probe").unwrap();
        assert_eq!(d.kind, PulseKind::BlueSideband);
        assert_relative_eq!(d.phase, 0.0);
        // The builtin cooling drive is still present and overridable.
        let cfg = parse_config("[drives.cooling_red]\neta = 0.15\n").unwrap();
        let d = cfg.drives.get("cooling_red").unwrap();
        assert_relative_eq!(d.eta, 0.15);
        assert_eq!(d.kind, PulseKind::RedSideband);
    }
}

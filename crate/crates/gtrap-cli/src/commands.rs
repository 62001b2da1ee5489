//! Implementations of the CLI subcommands. Each command writes its files
//! into the output directory under a name prefix (sweeps rename the prefix
//! per run) and returns the paths it created.

use crate::SweepTarget;
use gtrap::classical::{
    detection_error_probability, detection_wall_time, double_trap_cycle, required_repetitions,
    spin_flip_shift, DetectionReport, COOLING_WAIT_TAUS, REHEAT_FACTOR,
};
use gtrap::config::{parse_config, parse_scalar, set_path, RunConfig};
use gtrap::output::{fmt_f64, write_csv_file, write_json_file, OutputFormat};
use gtrap::protocol::{run_campaign, ReplicaResult};
use gtrap::qdyn::{evolve_exchange, DoubleWell, SpinMotionState};
use gtrap::rng::{derived_master, substream};
use gtrap::species::Species;
use gtrap::trap::{ideal_modes, perturbed_modes, ModeFrequencies, TrapZone};
use gtrap::{Error, Result};
use rand::Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// One table cell; CSV stringifies it, JSON keeps the type.
enum Cell {
    Str(String),
    F64(f64),
    U64(u64),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::F64(x) => fmt_f64(*x),
            Cell::U64(n) => n.to_string(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => serde_json::Value::from(s.as_str()),
            Cell::F64(x) => serde_json::Value::from(*x),
            Cell::U64(n) => serde_json::Value::from(*n),
        }
    }
}

/// Write a table as `<prefix>.csv` or `<prefix>.json` (array of objects).
fn write_table(
    out: &Path,
    prefix: &str,
    format: OutputFormat,
    headers: &[&str],
    rows: &[Vec<Cell>],
) -> Result<PathBuf> {
    let path = out.join(format!("{prefix}.{}", format.extension()));
    match format {
        OutputFormat::Csv => {
            let string_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| r.iter().map(Cell::to_csv).collect())
                .collect();
            write_csv_file(&path, headers, &string_rows)?;
        }
        OutputFormat::Json => {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    if r.len() != headers.len() {
                        return Err(Error::Domain(format!(
                            "table row has {} cells for {} headers",
                            r.len(),
                            headers.len()
                        )));
                    }
                    let mut map = serde_json::Map::new();
                    for (h, c) in headers.iter().zip(r) {
                        map.insert((*h).to_string(), c.to_json());
                    }
                    Ok(serde_json::Value::Object(map))
                })
                .collect::<Result<_>>()?;
            write_json_file(&path, &objects)?;
        }
    }
    Ok(path)
}

fn zone_modes(species: &Species, zone: &TrapZone) -> Result<ModeFrequencies> {
    if zone.tilt == 0.0 && zone.ellipticity == 0.0 {
        ideal_modes(species, zone)
    } else {
        perturbed_modes(species, zone)
    }
}

const MODES_HEADERS: [&str; 7] = [
    "variant",
    "omega_plus_rad_per_s",
    "omega_minus_rad_per_s",
    "omega_z_rad_per_s",
    "omega_c_free_rad_per_s",
    "invariance_omega_c_rad_per_s",
    "invariance_residual",
];

fn modes_row(variant: &str, m: &ModeFrequencies) -> Vec<Cell> {
    vec![
        Cell::Str(variant.to_string()),
        Cell::F64(m.omega_plus),
        Cell::F64(m.omega_minus),
        Cell::F64(m.omega_z),
        Cell::F64(m.omega_c_free),
        Cell::F64(m.invariance_cyclotron()),
        Cell::F64(m.invariance_residual()),
    ]
}

pub fn modes(
    cfg: &RunConfig,
    species: Option<&str>,
    zone: Option<&str>,
    out: &Path,
    format: OutputFormat,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    let species_name = species.unwrap_or(&cfg.campaign.species);
    let zone_name = zone.unwrap_or(&cfg.campaign.precision_zone);
    let species = cfg.species(species_name)?;
    let zone = cfg.zone(zone_name)?;

    let ideal = ideal_modes(species, zone)?;
    let perturbed = perturbed_modes(species, zone)?;
    let rows = vec![modes_row("ideal", &ideal), modes_row("perturbed", &perturbed)];
    let table = write_table(out, prefix, format, &MODES_HEADERS, &rows)?;

    println!(
        "{species_name} in {zone_name}: omega_plus = {} rad/s, omega_z = {} rad/s, \
         omega_minus = {} rad/s (invariance residual {})",
        fmt_f64(perturbed.omega_plus),
        fmt_f64(perturbed.omega_z),
        fmt_f64(perturbed.omega_minus),
        fmt_f64(perturbed.invariance_residual()),
    );
    Ok(vec![table])
}

#[derive(Serialize)]
struct InvarianceSummary {
    count: u32,
    tolerance: f64,
    max_residual: f64,
    master_seed: u64,
}

pub fn invariance_check(cfg: &RunConfig, count: u32, tolerance: f64, out: &Path) -> Result<()> {
    if count == 0 {
        return Err(Error::Domain("invariance check needs at least one trap".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let species: Vec<&Species> = cfg.species.values().collect();
    let mut rng = substream(cfg.master_seed, "invariance", 0);
    let mut max_residual = 0.0f64;
    for i in 0..count {
        let sp = species[i as usize % species.len()];
        let b0: f64 = rng.random_range(0.8..7.0);
        let omega_c = sp.charge().abs() * b0 / sp.mass();
        // Stay comfortably inside the stability hierarchy.
        let omega_z = omega_c * rng.random_range(0.02..0.2);
        let d_char: f64 = rng.random_range(1.0e-3..6.0e-3);
        let zone = TrapZone {
            tilt: rng.random_range(0.0..0.05),
            ellipticity: rng.random_range(0.0..0.05),
            ..TrapZone::homogeneous(
                b0,
                TrapZone::voltage_for_axial(sp, omega_z, d_char, 0.5),
                d_char,
            )
        };
        let m = perturbed_modes(sp, &zone)?;
        max_residual = max_residual.max(m.invariance_residual());
    }
    let summary = InvarianceSummary {
        count,
        tolerance,
        max_residual,
        master_seed: cfg.master_seed,
    };
    write_json_file(&out.join("invariance_summary.json"), &summary)?;
    println!(
        "invariance residual over {count} randomized traps: max {}",
        fmt_f64(max_residual)
    );
    if max_residual > tolerance {
        return Err(Error::Numerical(format!(
            "invariance residual {max_residual:e} exceeds tolerance {tolerance:e}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ExchangeSummary {
    species_a: String,
    species_b: String,
    omega_ex_rad_per_s: f64,
    swap_time_s: f64,
    separation_m: f64,
    detuning_rad_per_s: f64,
    /// Largest population seen in the receiving well over the history.
    max_transfer: f64,
}

pub fn exchange(
    cfg: &RunConfig,
    steps: u32,
    swaps: f64,
    out: &Path,
    format: OutputFormat,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    if steps == 0 {
        return Err(Error::Domain("exchange history needs at least one step".into()));
    }
    if !(swaps > 0.0) || !swaps.is_finite() {
        return Err(Error::Domain(format!(
            "history length must be a positive number of swaps, got {swaps}"
        )));
    }
    let dw = &cfg.double_well;
    let a = cfg.species(&dw.species_a)?;
    let b = cfg.species(&dw.species_b)?;
    let well = DoubleWell::new(a, b, dw.omega_a, dw.omega_b, dw.separation)?;
    let omega_ex = well.exchange_rate();
    let swap_time = well.swap_time();

    // One shared quantum, starting in well a.
    let initial = SpinMotionState::basis_two(cfg.quantum.n_max, false, 1, 0)?
        .with_truncation_guard(cfg.quantum.truncation_guard);
    let receive_idx = initial.index_two(false, 0, 1);
    let total_time = swaps * swap_time;
    let mut rows = Vec::new();
    let mut max_transfer = 0.0f64;
    for k in 0..=steps {
        let t = total_time * f64::from(k) / f64::from(steps);
        let state = evolve_exchange(&initial, &well, t)?;
        let populations = state.populations();
        max_transfer = max_transfer.max(populations[receive_idx]);
        for (idx, &p) in populations.iter().enumerate() {
            if p > 1.0e-9 {
                rows.push(vec![
                    Cell::F64(t),
                    Cell::Str(state.basis_label(idx)),
                    Cell::F64(p),
                ]);
            }
        }
    }
    let table = write_table(
        out,
        prefix,
        format,
        &["time_s", "basis_label", "population"],
        &rows,
    )?;
    let summary = ExchangeSummary {
        species_a: dw.species_a.clone(),
        species_b: dw.species_b.clone(),
        omega_ex_rad_per_s: omega_ex,
        swap_time_s: swap_time,
        separation_m: dw.separation,
        detuning_rad_per_s: well.detuning(),
        max_transfer,
    };
    let summary_path = out.join(format!("{prefix}_summary.json"));
    write_json_file(&summary_path, &summary)?;
    println!(
        "exchange rate {} rad/s, swap time {} s, peak transfer {}",
        fmt_f64(omega_ex),
        fmt_f64(swap_time),
        fmt_f64(max_transfer)
    );
    Ok(vec![table, summary_path])
}

#[derive(Serialize)]
struct ReadoutSummary {
    shots_per_state: u64,
    analytic_correct_prob: f64,
    empirical_correct_up: f64,
    empirical_correct_down: f64,
    total_duration_s: f64,
}

pub fn readout_sim(
    cfg: &RunConfig,
    shots: u64,
    out: &Path,
    format: OutputFormat,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    if shots == 0 {
        return Err(Error::Domain("readout simulation needs at least one shot".into()));
    }
    let seq = &cfg.readout;
    let mut rng = substream(cfg.master_seed, "readout_sim", 0);
    let mut correct = [0u64; 2];
    for (slot, spin_up) in [(0usize, true), (1usize, false)] {
        for _ in 0..shots {
            let bright = gtrap::protocol::run_readout(seq, spin_up, &mut rng)?;
            if bright == spin_up {
                correct[slot] += 1;
            }
        }
    }

    let named = [
        ("probe", seq.probe),
        ("proton_sideband", seq.proton_sideband),
        ("exchange", seq.exchange),
        ("be_sideband", seq.be_sideband),
        ("fluorescence", seq.fluorescence),
    ];
    let rows: Vec<Vec<Cell>> = named
        .iter()
        .map(|(name, step)| {
            vec![
                Cell::Str((*name).to_string()),
                Cell::F64(step.fidelity),
                Cell::F64(step.duration),
            ]
        })
        .collect();
    let table = write_table(
        out,
        prefix,
        format,
        &["step", "fidelity", "duration_s"],
        &rows,
    )?;

    let summary = ReadoutSummary {
        shots_per_state: shots,
        analytic_correct_prob: seq.correct_assignment_probability(),
        empirical_correct_up: correct[0] as f64 / shots as f64,
        empirical_correct_down: correct[1] as f64 / shots as f64,
        total_duration_s: seq.total_duration(),
    };
    let summary_path = out.join(format!("{prefix}_summary.json"));
    write_json_file(&summary_path, &summary)?;
    println!(
        "readout: analytic correct probability {}, empirical {} (up) / {} (down) over {shots} shots",
        fmt_f64(summary.analytic_correct_prob),
        fmt_f64(summary.empirical_correct_up),
        fmt_f64(summary.empirical_correct_down),
    );
    Ok(vec![table, summary_path])
}

#[derive(Serialize)]
struct ClassicalSummary {
    species: String,
    zone: String,
    thermal_occupation: f64,
    effective_occupation: f64,
    spin_flip_shift_rad_per_s: f64,
    axial_sigma_rad_per_s: f64,
    single_shot_error: f64,
    repetitions: u32,
    error_prob: f64,
    detection_wall_time_s: f64,
    cycle_time_s: f64,
}

pub fn classical_baseline(
    cfg: &RunConfig,
    out: &Path,
    format: OutputFormat,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    let species = cfg.species(&cfg.campaign.species)?;
    let zone = cfg.zone(&cfg.campaign.analysis_zone)?;
    let noise = &cfg.axial_detection;
    let cooling = &cfg.resistive_cooling;

    let modes = zone_modes(species, zone)?;
    let n_th = cooling.thermal_occupation(&modes);
    let n_eff = n_th + (REHEAT_FACTOR * n_th - n_th) * (-COOLING_WAIT_TAUS).exp();
    let delta = spin_flip_shift(species, zone)?;

    let repetitions = if cfg.double_trap.majority_repetitions > 0 {
        cfg.double_trap.majority_repetitions
    } else {
        required_repetitions(
            species,
            zone,
            noise,
            cooling,
            cfg.campaign.detection_target_error,
        )?
    };
    let error_prob = detection_error_probability(species, zone, noise, cooling, repetitions)?;
    let wall = detection_wall_time(noise, cooling, repetitions);
    let single_shot_error = detection_error_probability(species, zone, noise, cooling, 1)?;
    let cycle = double_trap_cycle(
        &cfg.double_trap.timings,
        &DetectionReport {
            flip_detected: false,
            error_prob,
            wall_time: wall,
            mean_occupation: n_eff,
        },
    );

    let mut rows = Vec::new();
    let mut r = 1u32;
    while r <= repetitions {
        rows.push(vec![
            Cell::U64(u64::from(r)),
            Cell::F64(detection_error_probability(species, zone, noise, cooling, r)?),
            Cell::F64(detection_wall_time(noise, cooling, r)),
        ]);
        r += 2;
    }
    let table = write_table(
        out,
        prefix,
        format,
        &["repetitions", "error_prob", "wall_time_s"],
        &rows,
    )?;

    let summary = ClassicalSummary {
        species: cfg.campaign.species.clone(),
        zone: cfg.campaign.analysis_zone.clone(),
        thermal_occupation: n_th,
        effective_occupation: n_eff,
        spin_flip_shift_rad_per_s: delta,
        axial_sigma_rad_per_s: noise.sigma(n_eff.round() as u64),
        single_shot_error,
        repetitions,
        error_prob,
        detection_wall_time_s: wall,
        cycle_time_s: cycle,
    };
    let summary_path = out.join(format!("{prefix}_summary.json"));
    write_json_file(&summary_path, &summary)?;
    println!(
        "classical detection: shift {} rad/s against sigma {} rad/s; {} repetition(s) \
         reach error {} in {} s per detection ({} s per double-trap cycle)",
        fmt_f64(delta),
        fmt_f64(summary.axial_sigma_rad_per_s),
        repetitions,
        fmt_f64(error_prob),
        fmt_f64(wall),
        fmt_f64(cycle),
    );
    Ok(vec![table, summary_path])
}

#[derive(Serialize)]
struct CampaignSummary<'a> {
    mode: gtrap::protocol::CampaignMode,
    g_mean: f64,
    g_std: f64,
    replicas: &'a [ReplicaResult],
}

pub fn campaign(
    cfg: &RunConfig,
    out: &Path,
    _format: OutputFormat,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    let campaign_cfg = cfg.campaign_config()?;
    let report = run_campaign(&campaign_cfg)?;

    let summary = CampaignSummary {
        mode: report.mode,
        g_mean: report.g_mean,
        g_std: report.g_std,
        replicas: &report.replicas,
    };
    let summary_path = out.join(format!("{prefix}_summary.json"));
    write_json_file(&summary_path, &summary)?;

    let shot_rows: Vec<Vec<String>> = report
        .shot_log
        .iter()
        .map(|s| {
            vec![
                fmt_f64(s.timestamp),
                s.kind.clone(),
                fmt_f64(s.detuning),
                fmt_f64(s.outcome),
            ]
        })
        .collect();
    let shots_path = out.join(format!("{prefix}_shots.csv"));
    write_csv_file(
        &shots_path,
        &["timestamp_s", "kind", "detuning_rad_s", "outcome"],
        &shot_rows,
    )?;

    let windows = report.replicas.first().map_or(0, |r| r.windows.len());
    println!(
        "campaign g = {} +/- {} ({} replica(s), {} window(s), {} logged shot(s))",
        fmt_f64(report.g_mean),
        fmt_f64(report.g_std),
        report.replicas.len(),
        windows,
        report.shot_log.len(),
    );
    Ok(vec![summary_path, shots_path])
}

#[derive(Serialize)]
struct SweepEntry {
    index: usize,
    value: String,
    master_seed: u64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct SweepIndex<'a> {
    target: &'a str,
    param: &'a str,
    entries: Vec<SweepEntry>,
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    base_text: &str,
    target: SweepTarget,
    param: &str,
    values: &[String],
    seed_override: Option<u64>,
    out: &Path,
    format: OutputFormat,
) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain("sweep needs at least one value".into()));
    }
    let base_cfg = parse_config(base_text)?;
    let base_master = seed_override.unwrap_or(base_cfg.master_seed);
    let doc: toml::Value = toml::from_str(base_text)
        .map_err(|e| Error::Config(format!("configuration rejected: {e}")))?;

    let mut entries = Vec::new();
    for (index, value_text) in values.iter().enumerate() {
        let mut child_doc = doc.clone();
        set_path(&mut child_doc, param, parse_scalar(value_text))?;
        let child_text = toml::to_string(&child_doc)
            .map_err(|e| Error::Config(format!("sweep document emission failed: {e}")))?;
        let mut child_cfg = parse_config(&child_text)?;
        child_cfg.master_seed = derived_master(base_master, "sweep", index as u64);

        let prefix = format!("{}_sweep_{index}", target.name());
        println!("[sweep {index}] {param} = {value_text}");
        let files = match target {
            SweepTarget::Modes => modes(&child_cfg, None, None, out, format, &prefix)?,
            SweepTarget::Exchange => exchange(&child_cfg, 200, 2.0, out, format, &prefix)?,
            SweepTarget::ReadoutSim => readout_sim(&child_cfg, 10000, out, format, &prefix)?,
            SweepTarget::ClassicalBaseline => classical_baseline(&child_cfg, out, format, &prefix)?,
            SweepTarget::Campaign => campaign(&child_cfg, out, format, &prefix)?,
        };
        entries.push(SweepEntry {
            index,
            value: value_text.clone(),
            master_seed: child_cfg.master_seed,
            files: files
                .iter()
                .map(|p| {
                    p.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string())
                })
                .collect(),
        });
    }
    let index = SweepIndex {
        target: target.name(),
        param,
        entries,
    };
    write_json_file(&out.join("sweep_index.json"), &index)?;
    Ok(())
}

//! Penning-trap zones and their eigenmode structure.
//!
//! A zone is a static electrode stack in a magnetic field: quadrupole
//! potential of strength `v0` over characteristic dimension `d_char`,
//! homogeneous field `b0`, optional magnetic-bottle curvature `b2`, and two
//! imperfection knobs (tilt of the trap axis against the field, ellipticity
//! of the radial potential). Ideal-mode frequencies come from the classic
//! closed forms; perturbed modes come from the eigenvalues of the full
//! linearized equation of motion, which keeps the invariance-theorem
//! combination sqrt(sum of squared modes) exact under both imperfections.

use crate::species::Species;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// One region of the trap stack.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapZone {
    /// Homogeneous magnetic field (T), along the field axis.
    pub b0: f64,
    /// Magnetic-bottle curvature B2 (T/m^2); zero for a homogeneous zone.
    pub b2: f64,
    /// Effective trapping voltage amplitude (V), positive by convention.
    pub v0: f64,
    /// Characteristic trap dimension (m).
    pub d_char: f64,
    /// Dimensionless quadrupole coefficient; 1/2 for the ideal geometry.
    pub c2: f64,
    /// Angle between trap axis and magnetic field (rad).
    pub tilt: f64,
    /// Radial potential ellipticity (dimensionless, |eps| < 1).
    pub ellipticity: f64,
}

impl TrapZone {
    /// A perfectly aligned, homogeneous-field zone with ideal geometry.
    pub fn homogeneous(b0: f64, v0: f64, d_char: f64) -> Self {
        Self {
            b0,
            b2: 0.0,
            v0,
            d_char,
            c2: 0.5,
            tilt: 0.0,
            ellipticity: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str, v: f64| {
            Err(Error::Domain(format!("trap zone: {what} invalid, got {v}")))
        };
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return fail("field b0 (must be > 0)", self.b0);
        }
        if !(self.v0 > 0.0) || !self.v0.is_finite() {
            return fail("voltage v0 (must be > 0)", self.v0);
        }
        if !(self.d_char > 0.0) || !self.d_char.is_finite() {
            return fail("dimension d_char (must be > 0)", self.d_char);
        }
        if !(self.c2 > 0.0) || !self.c2.is_finite() {
            return fail("coefficient c2 (must be > 0)", self.c2);
        }
        if !self.b2.is_finite() {
            return fail("bottle curvature b2", self.b2);
        }
        if !self.tilt.is_finite() || self.tilt.abs() >= std::f64::consts::FRAC_PI_2 {
            return fail("tilt (|tilt| < pi/2)", self.tilt);
        }
        if !self.ellipticity.is_finite() || self.ellipticity.abs() >= 1.0 {
            return fail("ellipticity (|eps| < 1)", self.ellipticity);
        }
        Ok(())
    }

    /// The trapping voltage that puts the axial frequency of `species` at
    /// `omega_z`: V0 = m omega_z^2 d^2 / (|q| c2).
    pub fn voltage_for_axial(species: &Species, omega_z: f64, d_char: f64, c2: f64) -> f64 {
        species.mass() * omega_z * omega_z * d_char * d_char / (species.charge().abs() * c2)
    }
}

/// The three trap eigenfrequencies plus the free-space cyclotron frequency,
/// all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequencies {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub omega_z: f64,
    pub omega_c_free: f64,
}

impl ModeFrequencies {
    fn checked(omega_plus: f64, omega_minus: f64, omega_z: f64, omega_c_free: f64) -> Result<Self> {
        for (name, v) in [
            ("omega_plus", omega_plus),
            ("omega_minus", omega_minus),
            ("omega_z", omega_z),
            ("omega_c_free", omega_c_free),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::UnstableTrap(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(omega_minus < omega_z && omega_z < omega_plus) {
            return Err(Error::UnstableTrap(format!(
                "mode hierarchy violated: need omega_minus < omega_z < omega_plus, \
                 got {omega_minus} / {omega_z} / {omega_plus}"
            )));
        }
        Ok(Self {
            omega_plus,
            omega_minus,
            omega_z,
            omega_c_free,
        })
    }

    /// Free-cyclotron frequency reconstructed through the invariance theorem:
    /// sqrt(omega_plus^2 + omega_minus^2 + omega_z^2).
    pub fn invariance_cyclotron(&self) -> f64 {
        (self.omega_plus * self.omega_plus
            + self.omega_minus * self.omega_minus
            + self.omega_z * self.omega_z)
            .sqrt()
    }

    /// Relative residual of the invariance theorem against the free
    /// cyclotron frequency.
    pub fn invariance_residual(&self) -> f64 {
        let sum = self.omega_plus * self.omega_plus
            + self.omega_minus * self.omega_minus
            + self.omega_z * self.omega_z;
        let wc2 = self.omega_c_free * self.omega_c_free;
        ((sum - wc2) / wc2).abs()
    }
}

fn axial_frequency_squared(species: &Species, zone: &TrapZone) -> f64 {
    species.charge().abs() * zone.v0 * zone.c2 / (species.mass() * zone.d_char * zone.d_char)
}

/// Eigenfrequencies of the ideal (aligned, circular) trap.
///
/// omega_z = sqrt(|q| V0 c2 / (m d^2)), omega_+- = omega_c/2 +- sqrt(
/// omega_c^2/4 - omega_z^2/2); the magnetron root is evaluated through the
/// product identity omega_+ omega_- = omega_z^2 / 2 to avoid cancellation.
pub fn ideal_modes(species: &Species, zone: &TrapZone) -> Result<ModeFrequencies> {
    zone.validate()?;
    let wz2 = axial_frequency_squared(species, zone);
    let wz = wz2.sqrt();
    let wc = species.free_cyclotron_frequency(zone.b0)?;
    let disc = wc * wc / 4.0 - wz2 / 2.0;
    if disc <= 0.0 {
        return Err(Error::UnstableTrap(format!(
            "radial confinement lost: omega_c^2 = {:e} must exceed 2 omega_z^2 = {:e}",
            wc * wc,
            2.0 * wz2
        )));
    }
    let omega_plus = wc / 2.0 + disc.sqrt();
    let omega_minus = wz2 / 2.0 / omega_plus;
    ModeFrequencies::checked(omega_plus, omega_minus, wz, wc)
}

/// Refine one eigenvalue of `m` by inverse iteration with Rayleigh-quotient
/// updates. Falls back to the input if the iteration misbehaves.
fn polish_eigenvalue(m: &DMatrix<Complex64>, lambda0: Complex64) -> Complex64 {
    let n = m.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut x = DVector::<Complex64>::from_fn(n, |i, _| {
        Complex64::new(1.0, 0.17 * (i as f64 + 1.0))
    });
    let nx = x.norm();
    x.unscale_mut(nx);
    let mut lambda = lambda0;
    for _ in 0..3 {
        let shifted = m - &id * lambda;
        let Some(y) = shifted.lu().solve(&x) else {
            // Singular shift: lambda is already an eigenvalue to machine
            // precision.
            return lambda;
        };
        let ny = y.norm();
        if !ny.is_finite() || ny == 0.0 {
            return lambda;
        }
        x = y.unscale(ny);
        let mx = m * &x;
        let rayleigh = x.dotc(&mx);
        if !rayleigh.re.is_finite() || !rayleigh.im.is_finite() {
            return lambda;
        }
        lambda = rayleigh;
    }
    if (lambda - lambda0).norm() > 1e-6 * lambda0.norm() {
        // Wandered off to a different eigenvalue; keep the unpolished one.
        return lambda0;
    }
    lambda
}

/// Eigenfrequencies of a trap with axis tilt and radial ellipticity, from the
/// complex eigenvalues of the 6x6 linearized equation of motion (positions
/// and velocities, time in units of 1/omega_c).
///
/// The invariance-theorem combination of the returned modes reproduces the
/// free cyclotron frequency exactly, which is the content of the invariance
/// theorem for real (imperfect) traps.
pub fn perturbed_modes(species: &Species, zone: &TrapZone) -> Result<ModeFrequencies> {
    // The zone must be a stable, hierarchy-respecting trap before
    // perturbations are considered.
    let ideal = ideal_modes(species, zone)?;
    let wc = ideal.omega_c_free;
    let r = (ideal.omega_z / wc).powi(2);
    let (sin_t, cos_t) = zone.tilt.sin_cos();
    let e = zone.ellipticity;

    let mut m = DMatrix::<f64>::zeros(6, 6);
    m[(0, 3)] = 1.0;
    m[(1, 4)] = 1.0;
    m[(2, 5)] = 1.0;
    // Electrostatic acceleration: repulsive in the radial plane, confining
    // axially; ellipticity splits the radial curvatures.
    m[(3, 0)] = r * (1.0 - e) / 2.0;
    m[(4, 1)] = r * (1.0 + e) / 2.0;
    m[(5, 2)] = -r;
    // Lorentz coupling for a field tilted by `tilt` in the x-z plane.
    m[(3, 4)] = cos_t;
    m[(4, 3)] = -cos_t;
    m[(4, 5)] = sin_t;
    m[(5, 4)] = -sin_t;

    let eigen = m.complex_eigenvalues();
    let mc = m.map(|v| Complex64::new(v, 0.0));
    let mut mode_freqs: Vec<f64> = Vec::with_capacity(3);
    for lambda in eigen.iter().filter(|l| l.im > 0.0) {
        let polished = polish_eigenvalue(&mc, *lambda);
        if polished.re.abs() > 1e-8 {
            return Err(Error::UnstableTrap(format!(
                "perturbation destabilizes the trap: eigenvalue {polished} has a growing part"
            )));
        }
        mode_freqs.push(polished.im * wc);
    }
    if mode_freqs.len() != 3 {
        return Err(Error::UnstableTrap(format!(
            "expected 3 oscillatory mode pairs, found {}",
            mode_freqs.len()
        )));
    }
    mode_freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ModeFrequencies::checked(mode_freqs[2], mode_freqs[0], mode_freqs[1], wc)
}

/// Axial frequency shift produced by a magnetic bottle acting on a magnetic
/// moment `mu_eff` (J/T): sqrt(omega_z^2 + 2 mu_eff B2 / m) - omega_z,
/// evaluated in a cancellation-free form.
pub fn bottle_axial_shift(species: &Species, zone: &TrapZone, mu_eff: f64) -> Result<f64> {
    zone.validate()?;
    let wz2 = axial_frequency_squared(species, zone);
    let wz = wz2.sqrt();
    let extra = 2.0 * mu_eff * zone.b2 / species.mass();
    let radicand = wz2 + extra;
    if radicand <= 0.0 {
        return Err(Error::Domain(format!(
            "bottle overwhelms axial confinement: omega_z^2 + 2 mu B2 / m = {radicand:e}"
        )));
    }
    // sqrt(wz^2 + x) - wz == x / (sqrt(wz^2 + x) + wz), exactly.
    Ok(extra / (radicand.sqrt() + wz))
}

/// Total effective magnetic moment of a particle with cyclotron quantum
/// number `n_plus` and the given spin orientation:
/// +-mu_s + (n_plus + 1/2) hbar |q| omega_plus / (m omega_c).
pub fn effective_moment(
    species: &Species,
    zone: &TrapZone,
    n_plus: u64,
    spin_up: bool,
) -> Result<f64> {
    let modes = ideal_modes(species, zone)?;
    let sign = if spin_up { 1.0 } else { -1.0 };
    let orbital = (n_plus as f64 + 0.5) * crate::constants::HBAR * species.charge().abs()
        / species.mass()
        * (modes.omega_plus / modes.omega_c_free);
    Ok(sign * species.spin_moment() + orbital)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use gtrap_testutil::characteristic_mode_frequencies;
    use rand::Rng;

    /// Proton zone with omega_z/2pi = 600 kHz at 1 T (ideal geometry).
    fn reference_zone() -> TrapZone {
        let wz = 2.0 * std::f64::consts::PI * 600.0e3;
        let p = Species::proton();
        let d = 3.0e-3;
        TrapZone::homogeneous(1.0, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d)
    }

    #[test]
    fn ideal_modes_match_hand_derived_values() {
        let modes = ideal_modes(&Species::proton(), &reference_zone()).unwrap();
        assert_relative_eq!(modes.omega_z, 3_769_911.184_307_751_7, max_relative = 1e-12);
        assert_relative_eq!(modes.omega_plus, 95_714_088.412_093_31, max_relative = 1e-12);
        assert_relative_eq!(modes.omega_minus, 74_243.147_343_046_96, max_relative = 1e-12);
        assert_relative_eq!(modes.omega_c_free, 95_788_331.559_436_37, max_relative = 1e-12);
    }

    #[test]
    fn ideal_modes_satisfy_both_identities() {
        let modes = ideal_modes(&Species::proton(), &reference_zone()).unwrap();
        assert!(modes.invariance_residual() < 1e-10);
        assert_relative_eq!(
            modes.omega_plus * modes.omega_minus,
            modes.omega_z * modes.omega_z / 2.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn weak_trapping_limit_sends_magnetron_to_zero() {
        let p = Species::proton();
        let mut zone = reference_zone();
        zone.v0 *= 1e-8;
        let modes = ideal_modes(&p, &zone).unwrap();
        assert!(modes.omega_minus < 1.0);
        assert_relative_eq!(modes.omega_plus, modes.omega_c_free, max_relative = 1e-8);
    }

    #[test]
    fn losing_radial_confinement_is_an_error() {
        let p = Species::proton();
        let wz = 2.0 * std::f64::consts::PI * 600.0e3;
        let d = 3.0e-3;
        let v0 = TrapZone::voltage_for_axial(&p, wz, d, 0.5);
        // Field so low that omega_c^2 < 2 omega_z^2.
        let wc_marginal = wz * 2.0f64.sqrt();
        let b_marginal = wc_marginal * p.mass() / p.charge().abs();
        let zone = TrapZone {
            b0: 0.99 * b_marginal,
            ..TrapZone::homogeneous(1.0, v0, d)
        };
        assert!(matches!(ideal_modes(&p, &zone), Err(Error::UnstableTrap(_))));
    }

    #[test]
    fn formally_stable_band_without_hierarchy_is_rejected() {
        // For omega_c between sqrt(2) omega_z and 1.5 omega_z the radial
        // discriminant is positive but omega_plus < omega_z.
        let p = Species::proton();
        let wz = 2.0 * std::f64::consts::PI * 600.0e3;
        let d = 3.0e-3;
        let v0 = TrapZone::voltage_for_axial(&p, wz, d, 0.5);
        let b = 1.45 * wz * p.mass() / p.charge().abs();
        let zone = TrapZone {
            b0: b,
            ..TrapZone::homogeneous(1.0, v0, d)
        };
        let err = ideal_modes(&p, &zone).unwrap_err();
        assert!(matches!(err, Error::UnstableTrap(_)));
        assert!(err.to_string().contains("hierarchy"));
    }

    #[test]
    fn perturbed_repro_at_zero_perturbation_is_exact() {
        let p = Species::proton();
        let zone = reference_zone();
        let ideal = ideal_modes(&p, &zone).unwrap();
        let pert = perturbed_modes(&p, &zone).unwrap();
        assert_relative_eq!(pert.omega_plus, ideal.omega_plus, max_relative = 1e-12);
        assert_relative_eq!(pert.omega_z, ideal.omega_z, max_relative = 1e-12);
        assert_relative_eq!(pert.omega_minus, ideal.omega_minus, max_relative = 1e-12);
    }

    #[test]
    fn perturbed_modes_match_characteristic_polynomial_oracle() {
        let p = Species::proton();
        let zone = TrapZone {
            tilt: 0.0087,
            ellipticity: 0.005,
            ..reference_zone()
        };
        let modes = perturbed_modes(&p, &zone).unwrap();
        let wc = modes.omega_c_free;
        let wz_ideal = ideal_modes(&p, &TrapZone { tilt: 0.0, ellipticity: 0.0, ..zone })
            .unwrap()
            .omega_z;
        let [om, oz, op] = characteristic_mode_frequencies(wc, wz_ideal, 0.0087, 0.005);
        assert_relative_eq!(modes.omega_minus, om, max_relative = 1e-10);
        assert_relative_eq!(modes.omega_z, oz, max_relative = 1e-10);
        assert_relative_eq!(modes.omega_plus, op, max_relative = 1e-10);
    }

    #[test]
    fn tilt_shifts_modes_but_preserves_the_invariance_sum() {
        let p = Species::proton();
        let zone = TrapZone {
            tilt: 0.0087, // 0.5 degrees
            ellipticity: 0.005,
            ..reference_zone()
        };
        let ideal = ideal_modes(&p, &zone).unwrap();
        let pert = perturbed_modes(&p, &zone).unwrap();
        // The individual modes move...
        assert!((pert.omega_minus - ideal.omega_minus).abs() / ideal.omega_minus > 1e-8);
        // ...but the quadrature sum does not.
        assert!(pert.invariance_residual() < 1e-10);
        assert_relative_eq!(pert.invariance_cyclotron(), ideal.omega_c_free, max_relative = 1e-10);
    }

    #[test]
    fn randomized_invariance_holds_at_one_part_per_billion() {
        let p = Species::proton();
        let mut rng = crate::rng::substream(2026, "trap-invariance-unit", 0);
        for _ in 0..200 {
            let b0 = rng.random_range(1.0..5.0);
            let fz = rng.random_range(200.0e3..800.0e3);
            let wz = 2.0 * std::f64::consts::PI * fz;
            let d = rng.random_range(1.0e-3..5.0e-3);
            let zone = TrapZone {
                tilt: rng.random_range(-0.05..0.05),
                ellipticity: rng.random_range(-0.2..0.2),
                ..TrapZone::homogeneous(b0, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d)
            };
            let modes = perturbed_modes(&p, &zone).unwrap();
            assert!(
                modes.invariance_residual() <= 1e-9,
                "residual {} at b0={b0} fz={fz} tilt={} eps={}",
                modes.invariance_residual(),
                zone.tilt,
                zone.ellipticity
            );
        }
    }

    #[test]
    fn antiproton_modes_match_proton_modes() {
        let zone = TrapZone {
            tilt: 0.02,
            ellipticity: -0.1,
            ..reference_zone()
        };
        let mp = perturbed_modes(&Species::proton(), &zone).unwrap();
        let ma = perturbed_modes(&Species::antiproton(), &zone).unwrap();
        assert_relative_eq!(mp.omega_plus, ma.omega_plus, max_relative = 1e-13);
        assert_relative_eq!(mp.omega_minus, ma.omega_minus, max_relative = 1e-13);
        assert_relative_eq!(mp.omega_z, ma.omega_z, max_relative = 1e-13);
    }

    /// Analysis-trap-like zone: 1.2 T, bottle 3e5 T/m^2, omega_z/2pi = 680 kHz.
    fn analysis_zone() -> TrapZone {
        let p = Species::proton();
        let wz = 2.0 * std::f64::consts::PI * 680.0e3;
        let d = 1.8e-3;
        TrapZone {
            b2: 3.0e5,
            ..TrapZone::homogeneous(1.2, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d)
        }
    }

    #[test]
    fn bottle_shift_vanishes_without_bottle() {
        let p = Species::proton();
        let zone = reference_zone();
        let shift = bottle_axial_shift(&p, &zone, p.spin_moment()).unwrap();
        assert_eq!(shift, 0.0);
    }

    #[test]
    fn spin_flip_shift_matches_hand_value_and_first_order() {
        let p = Species::proton();
        let zone = analysis_zone();
        let up = bottle_axial_shift(&p, &zone, p.spin_moment()).unwrap();
        let down = bottle_axial_shift(&p, &zone, -p.spin_moment()).unwrap();
        let delta = up - down;
        // Hand value for these parameters: 1.1843 rad/s (0.188 Hz).
        assert_relative_eq!(delta, 1.184_324_344_620_108_6, max_relative = 1e-9);
        // First-order estimate mu B2 / (m omega_z) per orientation.
        let wz = ideal_modes(&p, &zone).unwrap().omega_z;
        let first_order = p.spin_moment() * zone.b2 / (p.mass() * wz);
        assert!((up - first_order).abs() <= 1e-3 * up.abs());
    }

    #[test]
    fn bottle_shift_scales_inversely_with_mass_at_fixed_omega_z() {
        let p = Species::proton();
        let heavy = Species::new("heavy", p.charge(), 2.0 * p.mass(), p.g_factor()).unwrap();
        let wz = 2.0 * std::f64::consts::PI * 680.0e3;
        let d = 1.8e-3;
        let mu = p.spin_moment();
        let zone_light = TrapZone {
            b2: 3.0e5,
            ..TrapZone::homogeneous(1.2, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d)
        };
        let zone_heavy = TrapZone {
            b2: 3.0e5,
            ..TrapZone::homogeneous(1.2, TrapZone::voltage_for_axial(&heavy, wz, d, 0.5), d)
        };
        let s_light = bottle_axial_shift(&p, &zone_light, mu).unwrap();
        let s_heavy = bottle_axial_shift(&heavy, &zone_heavy, mu).unwrap();
        assert_relative_eq!(s_heavy, s_light / 2.0, max_relative = 1e-4);
    }

    #[test]
    fn bottle_can_overwhelm_confinement() {
        let p = Species::proton();
        let mut zone = analysis_zone();
        zone.v0 *= 1e-12;
        let err = bottle_axial_shift(&p, &zone, -p.spin_moment()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn spin_flip_changes_moment_by_twice_the_spin_moment() {
        let p = Species::proton();
        let zone = analysis_zone();
        for n in [0u64, 5, 1000] {
            let up = effective_moment(&p, &zone, n, true).unwrap();
            let down = effective_moment(&p, &zone, n, false).unwrap();
            assert_relative_eq!(up - down, 2.0 * p.spin_moment(), max_relative = 1e-13);
        }
    }

    #[test]
    fn one_cyclotron_quantum_adds_one_orbital_step() {
        let p = Species::proton();
        let zone = analysis_zone();
        let modes = ideal_modes(&p, &zone).unwrap();
        let step = crate::constants::HBAR * p.charge().abs() / p.mass()
            * (modes.omega_plus / modes.omega_c_free);
        let m0 = effective_moment(&p, &zone, 7, true).unwrap();
        let m1 = effective_moment(&p, &zone, 8, true).unwrap();
        assert_relative_eq!(m1 - m0, step, max_relative = 1e-11);
    }

    #[test]
    fn hot_cyclotron_orbital_moment_dwarfs_the_spin_moment() {
        // In a 1.9 T zone with omega_z/2pi = 640 kHz, n_plus = 1000 puts the
        // orbital moment at ~716 mu_p (hand value).
        let p = Species::proton();
        let wz = 2.0 * std::f64::consts::PI * 640.0e3;
        let d = 3.5e-3;
        let zone = TrapZone::homogeneous(1.9, TrapZone::voltage_for_axial(&p, wz, d, 0.5), d);
        let up = effective_moment(&p, &zone, 1000, true).unwrap();
        let orbital = up - p.spin_moment();
        assert_relative_eq!(orbital / p.spin_moment(), 716.298_172_283_089, max_relative = 1e-9);
    }

    #[test]
    fn invalid_zone_parameters_are_rejected() {
        let bad = TrapZone::homogeneous(-1.0, 5.0, 3.0e-3);
        assert!(matches!(bad.validate(), Err(Error::Domain(_))));
        let bad = TrapZone::homogeneous(1.0, 0.0, 3.0e-3);
        assert!(matches!(bad.validate(), Err(Error::Domain(_))));
        let bad = TrapZone {
            ellipticity: 1.5,
            ..TrapZone::homogeneous(1.0, 5.0, 3.0e-3)
        };
        assert!(matches!(bad.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_bottle_shift_is_exactly_zero_even_for_negative_moment() {
        let p = Species::proton();
        let zone = reference_zone();
        assert_abs_diff_eq!(
            bottle_axial_shift(&p, &zone, -p.spin_moment()).unwrap(),
            0.0
        );
    }
}

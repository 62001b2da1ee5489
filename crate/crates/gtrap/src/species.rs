//! Trapped particle species: charge, mass, g-factor, and the spin moment and
//! characteristic frequencies that follow from them.

use crate::constants::{
    BE9_EFFECTIVE_G, BE9_ION_MASS, ELEMENTARY_CHARGE, HBAR, PROTON_G, PROTON_MASS,
};
use crate::{Error, Result};

/// A spin-1/2 charged particle in the trap.
///
/// The spin magnetic moment is always derived as mu = g |q| hbar / (4 m), so
/// the triplet (charge, mass, g) fully determines the particle. Species whose
/// physical moment does not arise from their own cyclotron motion (the 9Be+
/// qubit) encode it through an effective g-factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    name: String,
    charge: f64,
    mass: f64,
    g_factor: f64,
    spin_moment: f64,
}

impl Species {
    /// Build a species from a signed charge (C), mass (kg) and g-factor.
    pub fn new(name: &str, charge: f64, mass: f64, g_factor: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!(
                "species {name}: mass must be positive and finite, got {mass}"
            )));
        }
        if charge == 0.0 || !charge.is_finite() {
            return Err(Error::Domain(format!(
                "species {name}: charge must be nonzero and finite, got {charge}"
            )));
        }
        if !(g_factor > 0.0) || !g_factor.is_finite() {
            return Err(Error::Domain(format!(
                "species {name}: g-factor must be positive and finite, got {g_factor}"
            )));
        }
        let spin_moment = g_factor * charge.abs() * HBAR / (4.0 * mass);
        Ok(Self {
            name: name.to_string(),
            charge,
            mass,
            g_factor,
            spin_moment,
        })
    }

    pub fn proton() -> Self {
        Self::new("proton", ELEMENTARY_CHARGE, PROTON_MASS, PROTON_G).unwrap()
    }

    /// CPT twin of the proton: identical mass and |g|, opposite charge.
    pub fn antiproton() -> Self {
        Self::new("antiproton", -ELEMENTARY_CHARGE, PROTON_MASS, PROTON_G).unwrap()
    }

    /// The 9Be+ co-trapped qubit ion (singly charged).
    pub fn be9_plus() -> Self {
        Self::new("be9plus", ELEMENTARY_CHARGE, BE9_ION_MASS, BE9_EFFECTIVE_G).unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Signed charge (C).
    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// Mass (kg).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn g_factor(&self) -> f64 {
        self.g_factor
    }

    /// Spin magnetic moment mu = g |q| hbar / (4 m), in J/T.
    pub fn spin_moment(&self) -> f64 {
        self.spin_moment
    }

    /// Free-space cyclotron angular frequency |q| B / m (rad/s).
    pub fn free_cyclotron_frequency(&self, b_field: f64) -> Result<f64> {
        check_field(b_field)?;
        Ok(self.charge.abs() / self.mass * b_field)
    }

    /// Larmor (spin precession) angular frequency (g/2)(|q|/m) B (rad/s).
    pub fn larmor_frequency(&self, b_field: f64) -> Result<f64> {
        check_field(b_field)?;
        Ok(self.g_factor / 2.0 * self.charge.abs() / self.mass * b_field)
    }
}

fn check_field(b_field: f64) -> Result<()> {
    if !(b_field > 0.0) || !b_field.is_finite() {
        return Err(Error::Domain(format!(
            "magnetic field must be positive and finite, got {b_field}"
        )));
    }
    Ok(())
}

/// Recover the g-factor from measured Larmor and free-cyclotron frequencies:
/// g = 2 omega_L / omega_c.
pub fn g_from_frequencies(omega_larmor: f64, omega_cyclotron: f64) -> Result<f64> {
    if !(omega_larmor > 0.0) || !(omega_cyclotron > 0.0) {
        return Err(Error::Domain(format!(
            "frequencies must be positive: omega_L = {omega_larmor}, omega_c = {omega_cyclotron}"
        )));
    }
    Ok(2.0 * omega_larmor / omega_cyclotron)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn proton_charge_to_mass_ratio_matches_hand_value() {
        let p = Species::proton();
        // e / m_p from CODATA inputs, worked out by hand.
        assert_relative_eq!(
            p.charge().abs() / p.mass(),
            9.578_833_155_943_637e7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            p.free_cyclotron_frequency(1.0).unwrap(),
            9.578_833_155_943_637e7,
            max_relative = 1e-12
        );
    }

    #[test]
    fn proton_larmor_at_one_tesla_matches_hand_value() {
        let p = Species::proton();
        // (g/2)(e/m_p): 2.792847... * 9.5788e7.
        assert_relative_eq!(
            p.larmor_frequency(1.0).unwrap(),
            2.675_221_874_442_256_7e8,
            max_relative = 1e-12
        );
    }

    #[test]
    fn proton_spin_moment_matches_hand_value() {
        // mu_p = g e hbar / (4 m_p) = 1.41060679650e-26 J/T.
        let p = Species::proton();
        assert_relative_eq!(p.spin_moment(), 1.410_606_796_504_358_3e-26, max_relative = 1e-12);
    }

    #[test]
    fn moment_identity_holds_for_all_builtins() {
        for s in [Species::proton(), Species::antiproton(), Species::be9_plus()] {
            let mu = s.g_factor() * s.charge().abs() * HBAR / (4.0 * s.mass());
            assert_relative_eq!(s.spin_moment(), mu, max_relative = 1e-14);
        }
    }

    #[test]
    fn be9_moment_is_electron_like() {
        // (g_J / 2) mu_B with g_J = 2.00226: 9.28449e-24 J/T.
        let be = Species::be9_plus();
        assert_relative_eq!(be.spin_moment(), 9.284_489_709_688_48e-24, max_relative = 1e-10);
    }

    #[test]
    fn g_equal_two_makes_larmor_equal_cyclotron() {
        let s = Species::new("electronish", -ELEMENTARY_CHARGE, 9.109e-31, 2.0).unwrap();
        let b = 2.5;
        assert_eq!(
            s.larmor_frequency(b).unwrap(),
            s.free_cyclotron_frequency(b).unwrap()
        );
    }

    #[test]
    fn antiproton_frequencies_match_proton_exactly() {
        let p = Species::proton();
        let pbar = Species::antiproton();
        for b in [0.5, 1.0, 1.9, 7.0] {
            assert_eq!(
                p.free_cyclotron_frequency(b).unwrap(),
                pbar.free_cyclotron_frequency(b).unwrap()
            );
            assert_eq!(p.larmor_frequency(b).unwrap(), pbar.larmor_frequency(b).unwrap());
        }
        assert_eq!(p.spin_moment(), pbar.spin_moment());
        assert!(pbar.charge() < 0.0);
    }

    #[test]
    fn g_recovery_round_trips() {
        let p = Species::proton();
        for b in [0.8, 1.9, 3.7] {
            let g = g_from_frequencies(
                p.larmor_frequency(b).unwrap(),
                p.free_cyclotron_frequency(b).unwrap(),
            )
            .unwrap();
            assert_relative_eq!(g, PROTON_G, max_relative = 1e-12);
        }
    }

    #[test]
    fn g_recovery_matches_worked_example() {
        // omega_L = 2.7928473446 omega_c gives g = 5.5856946893.
        let omega_c = 1.0e8;
        let g = g_from_frequencies(2.792_847_344_65 * omega_c, omega_c).unwrap();
        assert_relative_eq!(g, 5.585_694_689_3, max_relative = 1e-10);
    }

    #[test]
    fn invalid_inputs_are_domain_errors() {
        assert!(matches!(
            Species::new("x", 0.0, 1e-27, 2.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Species::new("x", 1e-19, -1e-27, 2.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Species::new("x", 1e-19, 1e-27, 0.0),
            Err(Error::Domain(_))
        ));
        let p = Species::proton();
        assert!(matches!(p.larmor_frequency(0.0), Err(Error::Domain(_))));
        assert!(matches!(p.free_cyclotron_frequency(-1.0), Err(Error::Domain(_))));
        assert!(matches!(g_from_frequencies(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(g_from_frequencies(1.0, -2.0), Err(Error::Domain(_))));
    }
}

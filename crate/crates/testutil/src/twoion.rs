//! Classical normal-mode oracle for two harmonically confined ions coupled by
//! the Coulomb interaction, treated to quadratic order about equilibrium.
//!
//! The per-well frequencies passed in are the dressed values (curvature of the
//! well including the static Coulomb contribution), so only the cross term
//! -2 beta z_a z_b with beta = q_a q_b / (4 pi eps0 d^3) enters off-diagonal.
//! Mass-weighted coordinates u_i = sqrt(m_i) z_i turn the problem into a
//! symmetric 2x2 eigenproblem solved in closed form.

/// Vacuum permittivity (F/m); local copy so this oracle is self-contained.
const EPS0: f64 = 8.854_187_812_8e-12;

/// Normal-mode angular frequencies (lower, upper) in rad/s for two coupled
/// wells with dressed frequencies `omega_a`, `omega_b`, masses `m_a`, `m_b`,
/// charges `q_a`, `q_b`, separated by `d`.
pub fn coupled_axial_splitting(
    m_a: f64,
    m_b: f64,
    omega_a: f64,
    omega_b: f64,
    q_a: f64,
    q_b: f64,
    d: f64,
) -> (f64, f64) {
    assert!(m_a > 0.0 && m_b > 0.0 && d > 0.0);
    assert!(omega_a > 0.0 && omega_b > 0.0);
    let beta = q_a * q_b / (4.0 * std::f64::consts::PI * EPS0 * d.powi(3));
    // Mass-weighted stiffness matrix [[wa^2, -c], [-c, wb^2]].
    let c = 2.0 * beta / (m_a * m_b).sqrt();
    let half_sum = (omega_a * omega_a + omega_b * omega_b) / 2.0;
    let half_diff = (omega_a * omega_a - omega_b * omega_b) / 2.0;
    let disc = (half_diff * half_diff + c * c).sqrt();
    let lam_hi = half_sum + disc;
    let lam_lo = half_sum - disc;
    assert!(lam_lo > 0.0, "coupling exceeds confinement; lower mode unstable");
    (lam_lo.sqrt(), lam_hi.sqrt())
}

//! Independent dense Hamiltonian builders for spin-motion systems, assembled
//! from explicit ladder operators and Kronecker products. Basis conventions
//! match the library (spin slowest, down = 0, up = 1; then mode a, then mode
//! b), but construction goes through operator algebra rather than the
//! library's coupled-pair enumeration.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Which joint ladder a drive addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleDriveKind {
    Carrier,
    RedSideband,
    BlueSideband,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Lowering operator on `l` Fock levels: a |n> = sqrt(n) |n-1>.
fn lowering(l: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::<Complex64>::zeros(l, l);
    for n in 1..l {
        a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    a
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::<Complex64>::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::ZERO {
                continue;
            }
            for k in 0..br {
                for m in 0..bc {
                    out[(i * br + k, j * bc + m)] = aij * b[(k, m)];
                }
            }
        }
    }
    out
}

/// Drive Hamiltonian (angular-frequency units, i.e. H/hbar) for one spin and
/// one mode with `l` Fock levels. Index layout: s * l + n with down = 0.
pub fn sideband_hamiltonian(
    kind: OracleDriveKind,
    l: usize,
    omega0: f64,
    eta: f64,
    detuning: f64,
    phase: f64,
) -> DMatrix<Complex64> {
    let a = lowering(l);
    let id = DMatrix::<Complex64>::identity(l, l);
    let mut sigma_plus = DMatrix::<Complex64>::zeros(2, 2);
    sigma_plus[(1, 0)] = c(1.0, 0.0); // |up><down|
    let sigma_minus = sigma_plus.adjoint();
    let mut sigma_z = DMatrix::<Complex64>::zeros(2, 2);
    sigma_z[(0, 0)] = c(-1.0, 0.0);
    sigma_z[(1, 1)] = c(1.0, 0.0);

    let (strength, mode_op) = match kind {
        OracleDriveKind::Carrier => (omega0 / 2.0, id.clone()),
        OracleDriveKind::RedSideband => (eta * omega0 / 2.0, a.clone()),
        OracleDriveKind::BlueSideband => (eta * omega0 / 2.0, a.adjoint()),
    };
    let raise_part =
        kron(&sigma_plus, &mode_op).map(|z| z * strength * c(phase.cos(), phase.sin()));
    let lower_part = kron(&sigma_minus, &mode_op.adjoint())
        .map(|z| z * strength * c(phase.cos(), -phase.sin()));
    let id_full = DMatrix::<Complex64>::identity(l, l);
    let detune_part = kron(&sigma_z, &id_full).map(|z| z * (detuning / 2.0));
    raise_part + lower_part + detune_part
}

/// Exchange Hamiltonian (H/hbar) for two modes of `l` Fock levels each plus a
/// spectator spin: Omega (a b+ + a+ b) + delta * n_b. Index layout:
/// s * l^2 + n_a * l + n_b.
pub fn exchange_hamiltonian(l: usize, omega_ex: f64, delta: f64) -> DMatrix<Complex64> {
    let a = lowering(l);
    let ad = a.adjoint();
    let id = DMatrix::<Complex64>::identity(l, l);
    let id_spin = DMatrix::<Complex64>::identity(2, 2);
    let mut nb = DMatrix::<Complex64>::zeros(l, l);
    for n in 0..l {
        nb[(n, n)] = c(n as f64, 0.0);
    }
    let swap = kron(&a, &ad) + kron(&ad, &a);
    let modes = swap.map(|z| z * omega_ex) + kron(&id, &nb).map(|z| z * delta);
    kron(&id_spin, &modes)
}

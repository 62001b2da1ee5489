//! Dense matrix exponential via degree-13 Pade approximation with scaling and
//! squaring (Higham 2005), over complex matrices. The linear solve is a
//! hand-written Gaussian elimination with partial pivoting so this route is
//! fully independent of the decompositions used elsewhere.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Pade-13 numerator coefficients b_0..b_13 (exactly representable in f64).
const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled Pade-13 approximant is accurate.
const THETA_13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let col_sum: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        if col_sum > best {
            best = col_sum;
        }
    }
    best
}

/// Solve A X = B by Gaussian elimination with partial pivoting.
fn solve_dense(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let mut m = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = m[(k, k)].norm();
        for r in (k + 1)..n {
            let mag = m[(r, k)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        assert!(pivot_mag > 0.0, "singular matrix in Pade solve");
        if pivot_row != k {
            m.swap_rows(k, pivot_row);
            x.swap_rows(k, pivot_row);
        }
        let pivot = m[(k, k)];
        for r in (k + 1)..n {
            let factor = m[(r, k)] / pivot;
            if factor == Complex64::ZERO {
                continue;
            }
            for c in k..n {
                let delta = factor * m[(k, c)];
                m[(r, c)] -= delta;
            }
            for c in 0..x.ncols() {
                let delta = factor * x[(k, c)];
                x[(r, c)] -= delta;
            }
        }
    }
    for k in (0..n).rev() {
        for c in 0..x.ncols() {
            let mut acc = x[(k, c)];
            for j in (k + 1)..n {
                acc -= m[(k, j)] * x[(j, c)];
            }
            x[(k, c)] = acc / m[(k, k)];
        }
    }
    x
}

/// exp(A) for a square complex matrix.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "expm needs a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new((0.5f64).powi(squarings as i32), 0.0);
    let a1 = a.map(|z| z * scale);

    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let cb = |i: usize| Complex64::new(B[i], 0.0);
    // u = A * (A6*(b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let u_inner = &a6 * (&a6 * cb(13) + &a4 * cb(11) + &a2 * cb(9))
        + &a6 * cb(7)
        + &a4 * cb(5)
        + &a2 * cb(3)
        + &id * cb(1);
    let u = &a1 * u_inner;
    // v = A6*(b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let v = &a6 * (&a6 * cb(12) + &a4 * cb(10) + &a2 * cb(8))
        + &a6 * cb(6)
        + &a4 * cb(4)
        + &a2 * cb(2)
        + &id * cb(0);

    let mut r = solve_dense(&(&v - &u), &(&v + &u));
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::<Complex64>::zeros(4, 4);
        let e = expm(&z);
        let id = DMatrix::<Complex64>::identity(4, 4);
        assert_abs_diff_eq!((e - id).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_matrix_exponentiates_entrywise() {
        let mut a = DMatrix::<Complex64>::zeros(3, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(-2.0, 3.0);
        a[(2, 2)] = c(0.0, -7.0);
        let e = expm(&a);
        for i in 0..3 {
            let expect = a[(i, i)].exp();
            assert_abs_diff_eq!((e[(i, i)] - expect).norm(), 0.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_x_rotation_matches_closed_form() {
        // exp(-i theta sigma_x / 2) = cos(theta/2) I - i sin(theta/2) sigma_x
        let theta = 1.234_f64;
        let mut h = DMatrix::<Complex64>::zeros(2, 2);
        h[(0, 1)] = c(0.0, -theta / 2.0);
        h[(1, 0)] = c(0.0, -theta / 2.0);
        let e = expm(&h);
        let cos = (theta / 2.0).cos();
        let sin = (theta / 2.0).sin();
        assert_abs_diff_eq!((e[(0, 0)] - c(cos, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e[(0, 1)] - c(0.0, -sin)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e[(1, 0)] - c(0.0, -sin)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e[(1, 1)] - c(cos, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn nilpotent_matrix_is_exact() {
        // exp([[0, 1], [0, 0]]) = [[1, 1], [0, 1]]
        let mut a = DMatrix::<Complex64>::zeros(2, 2);
        a[(0, 1)] = c(1.0, 0.0);
        let e = expm(&a);
        assert_abs_diff_eq!((e[(0, 0)] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e[(0, 1)] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e[(1, 1)] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hermitian_generator_gives_unitary_result() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(41);
        for _ in 0..5 {
            let n = 12;
            let mut h = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let re = rng.random_range(-2.0..2.0);
                    let im = if i == j { 0.0 } else { rng.random_range(-2.0..2.0) };
                    h[(i, j)] = c(re, im);
                    h[(j, i)] = c(re, -im);
                }
            }
            // Scale so the 1-norm is large enough to force squaring steps.
            let g = h.map(|z| z * c(0.0, -4.0));
            let u = expm(&g);
            let gram = u.adjoint() * &u;
            let id = DMatrix::<Complex64>::identity(n, n);
            assert_abs_diff_eq!((gram - id).norm(), 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn large_norm_matrix_matches_small_step_product() {
        // exp(A) == exp(A/16)^16 exercised against independent splitting.
        let mut a = DMatrix::<Complex64>::zeros(3, 3);
        a[(0, 1)] = c(7.0, 1.0);
        a[(1, 0)] = c(-7.0, 1.0);
        a[(1, 2)] = c(0.0, 9.0);
        a[(2, 1)] = c(0.0, 9.0);
        a[(0, 0)] = c(0.0, -3.0);
        let whole = expm(&a);
        let part = expm(&a.map(|z| z / c(16.0, 0.0)));
        let mut acc = DMatrix::<Complex64>::identity(3, 3);
        for _ in 0..16 {
            acc = &acc * &part;
        }
        assert_abs_diff_eq!((whole - acc).norm(), 0.0, epsilon = 1e-11);
    }
}

//! Rate-equation oracle for pulsed resolved-sideband cooling.
//!
//! Works purely with analytic two-level transfer probabilities: a red-sideband
//! pulse timed as a pi pulse on ladder level k moves population between
//! |down, n> and |up, n-1> with probability sin^2((pi/2) sqrt(n/k)). The pulse
//! policy mirrors the library's (dominant spin-down level above the ground
//! state, ties broken toward smaller n), so histories are comparable shot for
//! shot, but none of the propagator code is shared.

/// Outcome of the rate-equation cooling run.
#[derive(Debug, Clone)]
pub struct RateCoolOutcome {
    pub final_n_bar: f64,
    pub pulses: u32,
    pub converged: bool,
    /// Mean occupation before each pulse, plus the final value.
    pub history: Vec<f64>,
}

fn n_bar(p_down: &[f64], p_up: &[f64]) -> f64 {
    p_down
        .iter()
        .zip(p_up.iter())
        .enumerate()
        .map(|(n, (d, u))| n as f64 * (d + u))
        .sum()
}

/// Cool an initial spin-down Fock distribution `p0` until the mean occupation
/// drops below `target`, spending at most `max_pulses` pulses. After each
/// pulse the spin is reset to down with probability `1 - reset_failure`.
pub fn rate_equation_cool(
    p0: &[f64],
    target: f64,
    max_pulses: u32,
    reset_failure: f64,
) -> RateCoolOutcome {
    let n_levels = p0.len();
    let mut p_down = p0.to_vec();
    let mut p_up = vec![0.0f64; n_levels];
    let mut history = Vec::new();
    let mut pulses = 0u32;
    let mut converged = false;

    loop {
        let nb = n_bar(&p_down, &p_up);
        history.push(nb);
        if nb < target {
            converged = true;
            break;
        }
        if pulses >= max_pulses {
            break;
        }
        // Dominant spin-down level above ground, ties toward smaller n.
        let mut k = 0usize;
        let mut best = 0.0f64;
        for (n, &p) in p_down.iter().enumerate().skip(1) {
            if p > best {
                best = p;
                k = n;
            }
        }
        if best < 1e-15 {
            break; // nothing left to address; spin stuck up or all in ground
        }
        // Red-sideband pair (down,n) <-> (up,n-1) exchanges population with
        // probability sin^2((pi/2) sqrt(n/k)).
        let mut new_down = p_down.clone();
        let mut new_up = p_up.clone();
        for n in 1..n_levels {
            let s = ((std::f64::consts::PI / 2.0) * (n as f64 / k as f64).sqrt())
                .sin()
                .powi(2);
            let a = p_down[n];
            let b = p_up[n - 1];
            new_down[n] = (1.0 - s) * a + s * b;
            new_up[n - 1] = s * a + (1.0 - s) * b;
        }
        p_down = new_down;
        p_up = new_up;
        // Spin reset (repump): up population returns to down at the same n.
        for n in 0..n_levels {
            let recovered = (1.0 - reset_failure) * p_up[n];
            p_down[n] += recovered;
            p_up[n] -= recovered;
        }
        pulses += 1;
    }

    RateCoolOutcome {
        final_n_bar: *history.last().unwrap(),
        pulses,
        converged,
        history,
    }
}

//! The factorized early-time model.
//!
//! Before a photon has had time to cross between the cavities, every basis
//! state with a crossed excitation can be deleted from the two-excitation
//! problem. What remains is a nine-state system that factorizes exactly
//! into a left and a right three-state copy of [`SingleSystem`], so the
//! left and right systems stay unentangled. The amplitudes carry closed
//! forms as sums of decaying exponentials, whose leading Taylor
//! coefficients explain the phase dependence of the joint detection
//! densities.

use num_complex::Complex64 as C64;

use crate::model::single::{SideMode, SingleSystem};
use crate::model::{AtomState, BasisState, SystemParams};
use crate::Result;

use super::EvolutionConfig;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Pairs (left component, right component) defining d1..d9, in the
/// conventional order: both atoms excited first, then one atom plus one
/// photon, then the four photon-photon products.
const D_PAIRS: [(usize, usize); 9] =
    [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0), (1, 1), (1, 2), (2, 1), (2, 2)];

/// Full-space basis states corresponding to d1..d9.
pub fn d_basis_states() -> [BasisState; 9] {
    use AtomState::{Excited as E, Ground as G};
    let left = |i: usize| match i {
        0 => (E, 0u8, 0u8),
        1 => (G, 1, 0),
        _ => (G, 0, 1),
    };
    let right = |i: usize| match i {
        0 => (E, 0u8, 0u8),
        1 => (G, 1, 0),
        _ => (G, 0, 1),
    };
    D_PAIRS.map(|(l, r)| {
        let (al, n1, n2) = left(l);
        let (ar, n3, n4) = right(r);
        BasisState::new(al, n1, n2, ar, n3, n4)
    })
}

/// One term `alpha * exp(lambda t)` of a closed-form amplitude.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialMode {
    pub lambda: C64,
    pub alpha: C64,
}

/// Closed-form structure of the photon-photon amplitudes d6, d7, d8 (the
/// only ones entering the early-time detection densities).
#[derive(Debug, Clone)]
pub struct EarlyTimeModes {
    pub d6: Vec<ExponentialMode>,
    pub d7: Vec<ExponentialMode>,
    pub d8: Vec<ExponentialMode>,
    /// Σ α λ²/2 for d6: the second-order Taylor coefficient.
    pub second_order_d6: C64,
    /// Σ α λ²/2 for the sum d7 + d8.
    pub second_order_d7_plus_d8: C64,
}

impl EarlyTimeModes {
    /// Evaluate a closed-form amplitude at time `t`.
    pub fn eval(modes: &[ExponentialMode], t: f64) -> C64 {
        modes.iter().map(|m| m.alpha * (m.lambda * t).exp()).sum()
    }

    /// Taylor coefficient Σ α λ^order / order! of a closed-form amplitude.
    pub fn taylor_coefficient(modes: &[ExponentialMode], order: u32) -> C64 {
        let factorial: f64 = (1..=order).map(f64::from).product::<f64>().max(1.0);
        modes
            .iter()
            .map(|m| m.alpha * m.lambda.powu(order) / factorial)
            .sum()
    }
}

/// The early-time solution: product amplitudes d1..d9 on the output grid
/// plus the exponential decomposition of d6, d7, d8.
#[derive(Debug, Clone)]
pub struct EarlyTimeSolution {
    pub times: Vec<f64>,
    pub amplitudes: Vec<[C64; 9]>,
    pub modes: EarlyTimeModes,
}

impl EarlyTimeSolution {
    /// d amplitudes at the grid point closest to `t`.
    pub fn amplitudes_at(&self, t: f64) -> &[C64; 9] {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - t).abs().partial_cmp(&(**b - t).abs()).expect("finite times")
            })
            .map(|(i, _)| i)
            .expect("nonempty grid");
        &self.amplitudes[idx]
    }
}

/// Product of the exponential decompositions of one left and one right
/// amplitude, grouped by (merged) exponent.
fn product_modes(
    left: &[SideMode],
    right: &[SideMode],
    left_component: usize,
    right_component: usize,
) -> Vec<ExponentialMode> {
    let mut out: Vec<ExponentialMode> = Vec::new();
    for l in left {
        for r in right {
            let alpha = l.weight * l.vector[left_component] * r.weight * r.vector[right_component];
            let lambda = l.exponent + r.exponent;
            if let Some(existing) = out.iter_mut().find(|m| (m.lambda - lambda).norm() < 1e-10) {
                existing.alpha += alpha;
            } else {
                out.push(ExponentialMode { lambda, alpha });
            }
        }
    }
    out.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .expect("finite exponents")
    });
    out
}

/// Integrate the nine-state early-time model (both atoms excited at t = 0).
///
/// The left and right three-state systems are integrated separately and
/// multiplied, which is exact for this model: its Hamiltonian is the
/// Kronecker sum of the two sides, so the product form is preserved.
pub fn early_time_model(
    params: &SystemParams,
    config: &EvolutionConfig,
) -> Result<EarlyTimeSolution> {
    params.validate()?;
    config.validate()?;

    let left = SingleSystem::new(params.g_left(), params.delta, params.kappa);
    let right = SingleSystem::new(params.g_right(), params.delta, params.kappa);
    let left_modes = left.eigenmodes()?;
    let right_modes = right.eigenmodes()?;

    let steps = config.steps();
    let mut psi_l = [C64::new(1.0, 0.0), ZERO, ZERO];
    let mut psi_r = psi_l;

    let mut times = Vec::new();
    let mut amplitudes = Vec::new();
    let record = |t: f64,
                  l: &[C64; 3],
                  r: &[C64; 3],
                  times: &mut Vec<f64>,
                  amps: &mut Vec<[C64; 9]>| {
        times.push(t);
        amps.push(D_PAIRS.map(|(il, ir)| l[il] * r[ir]));
    };
    record(0.0, &psi_l, &psi_r, &mut times, &mut amplitudes);
    for step in 1..=steps {
        psi_l = left.rk4_step(&psi_l, config.dt);
        psi_r = right.rk4_step(&psi_r, config.dt);
        if step % config.output_stride == 0 || step == steps {
            record(step as f64 * config.dt, &psi_l, &psi_r, &mut times, &mut amplitudes);
        }
    }

    let modes = EarlyTimeModes {
        d6: product_modes(&left_modes, &right_modes, 1, 1),
        d7: product_modes(&left_modes, &right_modes, 1, 2),
        d8: product_modes(&left_modes, &right_modes, 2, 1),
        second_order_d6: ZERO,
        second_order_d7_plus_d8: ZERO,
    };
    let second_order_d6 = EarlyTimeModes::taylor_coefficient(&modes.d6, 2);
    let second_order_d7_plus_d8 = EarlyTimeModes::taylor_coefficient(&modes.d7, 2)
        + EarlyTimeModes::taylor_coefficient(&modes.d8, 2);
    let modes = EarlyTimeModes { second_order_d6, second_order_d7_plus_d8, ..modes };

    Ok(EarlyTimeSolution { times, amplitudes, modes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> SystemParams {
        SystemParams { g_mag: 0.25, delta: 0.5, ..SystemParams::default() }
    }

    fn config() -> EvolutionConfig {
        EvolutionConfig { dt: 1e-3, t_max: 1.0, output_stride: 50 }
    }

    #[test]
    fn starts_with_both_atoms_excited() {
        let sol = early_time_model(&params(), &config()).unwrap();
        let d0 = &sol.amplitudes[0];
        assert_abs_diff_eq!(d0[0].re, 1.0, epsilon = 1e-14);
        for k in 1..9 {
            assert!(d0[k].norm() < 1e-14);
        }
    }

    #[test]
    fn closed_form_matches_the_integrated_amplitudes() {
        let mut p = params();
        p.phi = std::f64::consts::FRAC_PI_8;
        let sol = early_time_model(&p, &config()).unwrap();
        for (i, t) in sol.times.iter().enumerate() {
            let d6 = EarlyTimeModes::eval(&sol.modes.d6, *t);
            let d7 = EarlyTimeModes::eval(&sol.modes.d7, *t);
            let d8 = EarlyTimeModes::eval(&sol.modes.d8, *t);
            assert_abs_diff_eq!(d6.re, sol.amplitudes[i][5].re, epsilon = 1e-9);
            assert_abs_diff_eq!(d6.im, sol.amplitudes[i][5].im, epsilon = 1e-9);
            assert_abs_diff_eq!(d7.re, sol.amplitudes[i][6].re, epsilon = 1e-9);
            assert_abs_diff_eq!(d7.im, sol.amplitudes[i][6].im, epsilon = 1e-9);
            assert_abs_diff_eq!(d8.re, sol.amplitudes[i][7].re, epsilon = 1e-9);
            assert_abs_diff_eq!(d8.im, sol.amplitudes[i][7].im, epsilon = 1e-9);
        }
    }

    #[test]
    fn zeroth_and_first_taylor_terms_vanish() {
        for phi in [0.0, std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4] {
            let mut p = params();
            p.phi = phi;
            let sol = early_time_model(&p, &config()).unwrap();
            for modes in [&sol.modes.d6, &sol.modes.d7, &sol.modes.d8] {
                assert!(EarlyTimeModes::taylor_coefficient(modes, 0).norm() < 1e-12);
                assert!(EarlyTimeModes::taylor_coefficient(modes, 1).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn second_order_coefficient_dominates_small_times() {
        let sol = early_time_model(&params(), &config()).unwrap();
        let t = 0.01;
        let exact = EarlyTimeModes::eval(&sol.modes.d6, t);
        let taylor = sol.modes.second_order_d6 * t * t;
        assert!((exact - taylor).norm() < 1e-2 * taylor.norm().max(1e-12));
    }
}

//! One isolated atom-cavity system (three states: excited atom, photon in
//! the first mode, photon in the second mode).
//!
//! This is the building block of two things: the interference-free
//! comparison baseline (two of these systems, never talking to each other)
//! and the factorized early-time model, where the full dynamics reduces to
//! a product of one left and one right copy with couplings `g_L` and `g_R`.

use num_complex::Complex64 as C64;

use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Non-Hermitian three-state model of a single atom-cavity system under
/// photodetection of both output modes, with no fiber attached.
#[derive(Debug, Clone, Copy)]
pub struct SingleSystem {
    /// Coupling of the first mode; the second mode couples with its
    /// conjugate.
    pub g: C64,
    pub delta: f64,
    pub kappa: f64,
}

/// One decaying exponential of the closed-form solution, `weight * vector *
/// exp(exponent * t)` with the initial state fixed to the excited atom.
#[derive(Debug, Clone, Copy)]
pub struct SideMode {
    /// Exponent of the amplitude evolution (eigenvalue of -iH).
    pub exponent: C64,
    pub vector: [C64; 3],
    pub weight: C64,
}

impl SingleSystem {
    pub fn new(g: C64, delta: f64, kappa: f64) -> Self {
        Self { g, delta, kappa }
    }

    /// Dense non-Hermitian Hamiltonian in the basis
    /// (excited atom, photon in first mode, photon in second mode).
    pub fn hamiltonian(&self) -> [[C64; 3]; 3] {
        let damp = C64::new(0.0, -0.5 * self.kappa);
        [
            [C64::new(self.delta, 0.0), self.g.conj(), self.g],
            [self.g, damp, ZERO],
            [self.g.conj(), ZERO, damp],
        ]
    }

    fn derivative(&self, psi: &[C64; 3]) -> [C64; 3] {
        let h = self.hamiltonian();
        let mut out = [ZERO; 3];
        for r in 0..3 {
            let mut acc = ZERO;
            for c in 0..3 {
                acc += h[r][c] * psi[c];
            }
            out[r] = C64::new(0.0, -1.0) * acc;
        }
        out
    }

    pub fn rk4_step(&self, psi: &[C64; 3], dt: f64) -> [C64; 3] {
        let k1 = self.derivative(psi);
        let k2 = self.derivative(&add_scaled(psi, &k1, 0.5 * dt));
        let k3 = self.derivative(&add_scaled(psi, &k2, 0.5 * dt));
        let k4 = self.derivative(&add_scaled(psi, &k3, dt));
        let mut out = *psi;
        for i in 0..3 {
            out[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        out
    }

    /// Detection rates (first mode, second mode) of an (possibly
    /// unnormalized) state.
    pub fn rates(&self, psi: &[C64; 3]) -> (f64, f64) {
        (self.kappa * psi[1].norm_sqr(), self.kappa * psi[2].norm_sqr())
    }

    /// Closed-form eigenmodes of the evolution started from the excited atom.
    ///
    /// The amplitudes are `psi_k(t) = Σ_m weight_m vector_m[k]
    /// exp(exponent_m t)`. The spectrum consists of a dark mode at
    /// `-i(-i kappa/2)` (which carries no weight for this initial state)
    /// and the two roots of the coupled atom-bright-mode problem.
    pub fn eigenmodes(&self) -> Result<Vec<SideMode>> {
        let i = C64::i();
        if self.g.norm() == 0.0 {
            // Uncoupled atom: it just sits there (no spontaneous emission).
            return Ok(vec![SideMode {
                exponent: -i * C64::new(self.delta, 0.0),
                vector: [C64::new(1.0, 0.0), ZERO, ZERO],
                weight: C64::new(1.0, 0.0),
            }]);
        }
        let delta = C64::new(self.delta, 0.0);
        let damp = C64::new(0.0, -0.5 * self.kappa);
        let g2 = C64::new(2.0 * self.g.norm_sqr(), 0.0);

        // Eigenvalues of H other than `damp` solve
        // (delta - lambda)(damp - lambda) = 2|g|^2.
        let b = delta + damp;
        let c = delta * damp - g2;
        let disc = (b * b - 4.0 * c).sqrt();
        let lam_plus = 0.5 * (b + disc);
        let lam_minus = 0.5 * (b - disc);
        if (lam_plus - lam_minus).norm() < 1e-12 * (1.0 + lam_plus.norm()) {
            return Err(Error::InvalidParams(
                "degenerate single-system spectrum; eigenmode expansion unavailable".into(),
            ));
        }

        let mode_for = |lam: C64| -> [C64; 3] {
            let denom = lam - damp;
            [C64::new(1.0, 0.0), self.g / denom, self.g.conj() / denom]
        };
        let v_plus = mode_for(lam_plus);
        let v_minus = mode_for(lam_minus);
        // Dark mode: orthogonal photon combination, decoupled from the atom.
        let norm = C64::new(std::f64::consts::SQRT_2 * self.g.norm(), 0.0);
        let v_dark = [ZERO, self.g / norm, -self.g.conj() / norm];

        // Expand (1, 0, 0) in the eigenbasis.
        let mut v = [
            [v_plus[0], v_minus[0], v_dark[0]],
            [v_plus[1], v_minus[1], v_dark[1]],
            [v_plus[2], v_minus[2], v_dark[2]],
        ];
        let mut rhs = [C64::new(1.0, 0.0), ZERO, ZERO];
        solve3(&mut v, &mut rhs)?;

        Ok(vec![
            SideMode { exponent: -i * lam_plus, vector: v_plus, weight: rhs[0] },
            SideMode { exponent: -i * lam_minus, vector: v_minus, weight: rhs[1] },
            SideMode { exponent: -i * damp, vector: v_dark, weight: rhs[2] },
        ])
    }

    /// Closed-form amplitudes at time `t`, starting from the excited atom.
    pub fn amplitudes_at(&self, modes: &[SideMode], t: f64) -> [C64; 3] {
        let mut out = [ZERO; 3];
        for m in modes {
            let factor = m.weight * (m.exponent * t).exp();
            for k in 0..3 {
                out[k] += factor * m.vector[k];
            }
        }
        out
    }
}

fn add_scaled(a: &[C64; 3], b: &[C64; 3], s: f64) -> [C64; 3] {
    [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s]
}

/// Gaussian elimination with partial pivoting for a 3x3 complex system;
/// the solution replaces `rhs`.
fn solve3(a: &mut [[C64; 3]; 3], rhs: &mut [C64; 3]) -> Result<()> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&r1, &r2| {
                a[r1][col].norm().partial_cmp(&a[r2][col].norm()).expect("finite matrix")
            })
            .expect("nonempty range");
        if a[pivot][col].norm() < 1e-300 {
            return Err(Error::InvalidParams("singular eigenvector matrix".into()));
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                let upper = a[col][k];
                a[row][k] -= factor * upper;
            }
            let upper = rhs[col];
            rhs[row] -= factor * upper;
        }
    }
    for col in (0..3).rev() {
        let mut acc = rhs[col];
        for k in (col + 1)..3 {
            acc -= a[col][k] * rhs[k];
        }
        rhs[col] = acc / a[col][col];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn norm_sqr(psi: &[C64; 3]) -> f64 {
        psi.iter().map(|v| v.norm_sqr()).sum()
    }

    #[test]
    fn closed_form_matches_rk4() {
        let sys = SingleSystem::new(C64::from_polar(0.25, 0.3), 0.5, 1.0);
        let modes = sys.eigenmodes().unwrap();
        let dt = 1e-3;
        let mut psi = [C64::new(1.0, 0.0), ZERO, ZERO];
        for step in 1..=4000 {
            psi = sys.rk4_step(&psi, dt);
            if step % 800 == 0 {
                let exact = sys.amplitudes_at(&modes, step as f64 * dt);
                for k in 0..3 {
                    assert_abs_diff_eq!(psi[k].re, exact[k].re, epsilon = 1e-9);
                    assert_abs_diff_eq!(psi[k].im, exact[k].im, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn weights_reproduce_the_initial_state() {
        let sys = SingleSystem::new(C64::from_polar(0.4, -0.9), -0.5, 1.0);
        let modes = sys.eigenmodes().unwrap();
        let psi0 = sys.amplitudes_at(&modes, 0.0);
        assert_abs_diff_eq!(psi0[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi0[0].im, 0.0, epsilon = 1e-12);
        assert!(psi0[1].norm() < 1e-12 && psi0[2].norm() < 1e-12);
    }

    #[test]
    fn dark_mode_carries_no_weight() {
        let sys = SingleSystem::new(C64::from_polar(0.25, 0.0), 0.5, 1.0);
        let modes = sys.eigenmodes().unwrap();
        // The dark mode is the one whose vector has no atomic component.
        let dark = modes.iter().find(|m| m.vector[0].norm() < 1e-14).unwrap();
        assert!(dark.weight.norm() < 1e-12);
    }

    #[test]
    fn norm_decay_balances_detection_rates() {
        // d‖ψ‖²/dt = -q(t) exactly, so survival plus the emitted probability
        // is 1 at every time, finished or not.
        let sys = SingleSystem::new(C64::new(0.25, 0.0), 0.5, 1.0);
        let dt = 1e-3;
        let mut psi = [C64::new(1.0, 0.0), ZERO, ZERO];
        let mut emitted = 0.0;
        for step in 1..=40_000 {
            let (ra, rb) = sys.rates(&psi);
            psi = sys.rk4_step(&psi, dt);
            let (ra2, rb2) = sys.rates(&psi);
            emitted += 0.5 * dt * (ra + rb + ra2 + rb2);
            if step % 10_000 == 0 {
                assert_abs_diff_eq!(norm_sqr(&psi) + emitted, 1.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn uncoupled_atom_never_emits() {
        let sys = SingleSystem::new(ZERO, 0.5, 1.0);
        let modes = sys.eigenmodes().unwrap();
        let psi = sys.amplitudes_at(&modes, 7.3);
        assert_abs_diff_eq!(norm_sqr(&psi), 1.0, epsilon = 1e-12);
    }
}

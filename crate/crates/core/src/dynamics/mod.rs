//! Conditional (no-jump) evolution, quantum jumps, and the unconditional
//! master-equation oracle.

mod early_time;
mod master;

pub use early_time::{
    d_basis_states, early_time_model, EarlyTimeModes, EarlyTimeSolution, ExponentialMode,
};
pub use master::{evolve_master_equation, DensityMatrix, MasterSolution};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::model::{BasisState, HilbertSpace, SparseOperator};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Complex amplitudes over a [`HilbertSpace`], possibly unnormalized (the
/// no-jump state's squared norm is the survival probability).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(dim: usize) -> Self {
        Self { amps: vec![ZERO; dim] }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    /// Basis ket |state⟩.
    pub fn basis_ket(space: &HilbertSpace, state: BasisState) -> Result<Self> {
        let idx = space.index_of(&state).ok_or_else(|| {
            Error::InvalidParams(format!("state {state} is outside the truncated space"))
        })?;
        let mut amps = vec![ZERO; space.dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n < 1e-150 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        Ok(Self { amps: self.amps.iter().map(|v| v / n).collect() })
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n2 = self.norm_sqr();
        if (n2 - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm_sqr: n2 });
        }
        Ok(())
    }

    /// Highest excitation sector with any amplitude above `tol`.
    pub fn max_occupied_sector(&self, space: &HilbertSpace, tol: f64) -> u8 {
        let mut top = 0;
        for (i, amp) in self.amps.iter().enumerate() {
            if amp.norm_sqr() > tol * tol {
                top = top.max(space.state(i).excitations());
            }
        }
        top
    }
}

/// Fixed-step integrator controls. Times are in units of `1/kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// RK4 step size.
    pub dt: f64,
    /// Integration horizon.
    pub t_max: f64,
    /// Record every `output_stride`-th step (the initial point is always
    /// recorded).
    pub output_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_max: 20.0, output_stride: 10 }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dt > 0.01 + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "dt must be <= 0.01 for reliable RK4 accuracy, got {}",
                self.dt
            )));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParams(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidParams("output_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round().max(1.0) as usize
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }
}

/// Scratch buffers for RK4 so the integrators never allocate per step.
pub(crate) struct Rk4Scratch {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Scratch {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![ZERO; dim],
            k2: vec![ZERO; dim],
            k3: vec![ZERO; dim],
            k4: vec![ZERO; dim],
            tmp: vec![ZERO; dim],
        }
    }
}

/// One RK4 step of the Schrödinger equation `dψ/dt = -i H ψ` (H may be
/// non-Hermitian); writes the advanced state into `psi`.
pub(crate) fn rk4_step(
    h: &SparseOperator,
    psi: &mut [C64],
    dt: f64,
    scratch: &mut Rk4Scratch,
) {
    let minus_i = C64::new(0.0, -1.0);
    let dim = psi.len();

    h.apply_into(psi, &mut scratch.k1);
    for v in scratch.k1.iter_mut() {
        *v *= minus_i;
    }
    for i in 0..dim {
        scratch.tmp[i] = psi[i] + scratch.k1[i] * (0.5 * dt);
    }
    h.apply_into(&scratch.tmp, &mut scratch.k2);
    for v in scratch.k2.iter_mut() {
        *v *= minus_i;
    }
    for i in 0..dim {
        scratch.tmp[i] = psi[i] + scratch.k2[i] * (0.5 * dt);
    }
    h.apply_into(&scratch.tmp, &mut scratch.k3);
    for v in scratch.k3.iter_mut() {
        *v *= minus_i;
    }
    for i in 0..dim {
        scratch.tmp[i] = psi[i] + scratch.k3[i] * dt;
    }
    h.apply_into(&scratch.tmp, &mut scratch.k4);
    for v in scratch.k4.iter_mut() {
        *v *= minus_i;
    }
    for i in 0..dim {
        psi[i] += (scratch.k1[i] + 2.0 * scratch.k2[i] + 2.0 * scratch.k3[i] + scratch.k4[i])
            * (dt / 6.0);
    }
}

/// The no-jump trajectory: unnormalized states on the output grid and their
/// squared norms (survival probabilities).
#[derive(Debug, Clone)]
pub struct NoJumpSolution {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub survival: Vec<f64>,
}

impl NoJumpSolution {
    /// Index of the grid point closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - t).abs().partial_cmp(&(**b - t).abs()).expect("finite times")
            })
            .map(|(i, _)| i)
            .expect("nonempty grid")
    }
}

/// Integrate `dψ̃/dt = -i H_NH ψ̃` from a normalized initial state.
///
/// The survival probability `‖ψ̃‖²` must never increase; an increase beyond
/// 1e-8 between consecutive steps aborts with a diagnostic, since it signals
/// an unstable step size.
pub fn evolve_nojump(
    h_nh: &SparseOperator,
    psi0: &StateVector,
    config: &EvolutionConfig,
) -> Result<NoJumpSolution> {
    config.validate()?;
    h_nh.check_dim(psi0.dim())?;
    psi0.check_normalized(1e-10)?;

    let steps = config.steps();
    let mut psi = psi0.amplitudes().to_vec();
    let mut scratch = Rk4Scratch::new(psi.len());

    let mut times = Vec::with_capacity(steps / config.output_stride + 2);
    let mut states = Vec::with_capacity(times.capacity());
    let mut survival = Vec::with_capacity(times.capacity());

    let record = |t: f64,
                  psi: &[C64],
                  times: &mut Vec<f64>,
                  states: &mut Vec<StateVector>,
                  survival: &mut Vec<f64>| {
        times.push(t);
        let sv = StateVector::from_amplitudes(psi.to_vec());
        survival.push(sv.norm_sqr());
        states.push(sv);
    };

    record(0.0, &psi, &mut times, &mut states, &mut survival);
    let mut prev_norm = 1.0;
    for step in 1..=steps {
        rk4_step(h_nh, &mut psi, config.dt, &mut scratch);
        let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>();
        if norm > prev_norm + 1e-8 {
            return Err(Error::NormInstability {
                t: step as f64 * config.dt,
                increase: norm - prev_norm,
            });
        }
        prev_norm = norm;
        if step % config.output_stride == 0 || step == steps {
            record(step as f64 * config.dt, &psi, &mut times, &mut states, &mut survival);
        }
    }
    Ok(NoJumpSolution { times, states, survival })
}

/// Instantaneous detection rates `Π_j = ⟨ψ|J_j†J_j|ψ⟩ = ‖J_j ψ‖²`.
///
/// `psi` may be unnormalized, in which case the rates carry the survival
/// weighting.
pub fn jump_rates(psi: &StateVector, j_a: &SparseOperator, j_b: &SparseOperator) -> (f64, f64) {
    let jap = j_a.apply(psi.amplitudes());
    let jbp = j_b.apply(psi.amplitudes());
    (
        jap.iter().map(|v| v.norm_sqr()).sum(),
        jbp.iter().map(|v| v.norm_sqr()).sum(),
    )
}

/// State reset after a detection: `ψ -> Jψ / ‖Jψ‖`.
pub fn apply_jump(psi: &StateVector, j: &SparseOperator) -> Result<StateVector> {
    j.check_dim(psi.dim())?;
    let jumped = j.apply(psi.amplitudes());
    let rate: f64 = jumped.iter().map(|v| v.norm_sqr()).sum();
    if rate <= 1e-14 {
        return Err(Error::DarkStateJump { rate });
    }
    let norm = rate.sqrt();
    Ok(StateVector::from_amplitudes(jumped.into_iter().map(|v| v / norm).collect()))
}

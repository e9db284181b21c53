//! Unconditional dynamics: the Lindblad-form master equation whose no-jump
//! part reproduces the non-Hermitian Hamiltonian and whose jump part uses
//! exactly the two collective detector operators. It serves as the
//! verification oracle for the trajectory unraveling.

use num_complex::Complex64 as C64;

use crate::linalg;
use crate::model::{HilbertSpace, ModelOperators, SparseOperator, SystemParams};
use crate::{Error, Result};

use super::{EvolutionConfig, StateVector};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense Hermitian density matrix on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn from_entries(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    /// Pure-state projector |ψ⟩⟨ψ|.
    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let amps = psi.amplitudes();
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = amps[r] * amps[c].conj();
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += (self.data[r * self.dim + c] * self.data[c * self.dim + r]).re;
            }
        }
        acc
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(self.dim, &self.data)
    }

    pub fn max_hermiticity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let diff = self.data[r * self.dim + c] - self.data[c * self.dim + r].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    /// Hermitian within `herm_tol`, unit trace within `trace_tol`, and no
    /// eigenvalue below `-eig_tol`.
    pub fn check_physical(&self, herm_tol: f64, trace_tol: f64, eig_tol: f64) -> Result<()> {
        let herm = self.max_hermiticity_violation();
        if herm > herm_tol {
            return Err(Error::NonPhysical(format!("hermiticity violation {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::NonPhysical(format!("trace {tr}")));
        }
        if let Some(min) = self.eigenvalues().first() {
            if *min < -eig_tol {
                return Err(Error::NonPhysical(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }

    /// (1/2) Σ |eigenvalues of (self - other)|.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        let diff: Vec<C64> = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        0.5 * linalg::hermitian_eigenvalues(self.dim, &diff)
            .iter()
            .map(|l| l.abs())
            .sum::<f64>()
    }

    /// Expectation value Tr(A ρ) of a sparse observable.
    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        let mut acc = ZERO;
        for &(r, c, v) in op.entries() {
            acc += v * self.data[c * self.dim + r];
        }
        acc
    }

    /// Add `weight * |ψ⟩⟨ψ|` in place (ensemble accumulation).
    pub fn accumulate_pure(&mut self, psi: &[C64], weight: f64) {
        assert_eq!(psi.len(), self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                self.data[r * self.dim + c] += weight * psi[r] * psi[c].conj();
            }
        }
    }
}

/// Output of the master-equation oracle on the strided grid.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl MasterSolution {
    pub fn state_at(&self, t: f64) -> &DensityMatrix {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - t).abs().partial_cmp(&(**b - t).abs()).expect("finite times")
            })
            .map(|(i, _)| i)
            .expect("nonempty grid");
        &self.states[idx]
    }
}

/// `tmp = op * rho` for sparse `op`, dense `rho`.
fn sparse_dense(dim: usize, op: &SparseOperator, rho: &[C64], out: &mut [C64]) {
    out.fill(ZERO);
    for &(r, k, v) in op.entries() {
        for c in 0..dim {
            out[r * dim + c] += v * rho[k * dim + c];
        }
    }
}

/// `out += rho * op† * scale` for sparse `op`.
fn dense_sparse_dagger_add(dim: usize, rho: &[C64], op: &SparseOperator, scale: f64, out: &mut [C64]) {
    for &(jr, jc, v) in op.entries() {
        let w = v.conj() * scale;
        for r in 0..dim {
            out[r * dim + jr] += rho[r * dim + jc] * w;
        }
    }
}

struct MasterRhs {
    dim: usize,
    h: SparseOperator,
    jumps: Vec<SparseOperator>,
    /// Σ J†J, precomposed.
    damping: SparseOperator,
    tmp: Vec<C64>,
}

impl MasterRhs {
    fn new(dim: usize, h: SparseOperator, jumps: Vec<SparseOperator>) -> Self {
        let damping = jumps
            .iter()
            .map(|j| j.dagger().compose(j))
            .fold(SparseOperator::zero(dim), |acc, jj| acc.add(&jj));
        Self { dim, h, jumps, damping, tmp: vec![ZERO; dim * dim] }
    }

    /// dρ/dt = -i[H, ρ] + Σ_j (J ρ J† - ½{J†J, ρ})
    fn eval(&mut self, rho: &[C64], out: &mut [C64]) {
        let dim = self.dim;
        out.fill(ZERO);

        // -i (H rho - rho H): H is Hermitian, so rho H = (H rho†)† = (H rho)†
        // for Hermitian rho; but rho is only approximately Hermitian during
        // integration, so compute both sides directly.
        sparse_dense(dim, &self.h, rho, &mut self.tmp);
        for r in 0..dim {
            for c in 0..dim {
                let commutator = self.tmp[r * dim + c] - self.tmp[c * dim + r].conj();
                out[r * dim + c] += C64::new(0.0, -1.0) * commutator;
            }
        }

        // Jump feeding terms J rho J†.
        for j in &self.jumps {
            sparse_dense(dim, j, rho, &mut self.tmp);
            let fed = std::mem::replace(&mut self.tmp, vec![ZERO; dim * dim]);
            dense_sparse_dagger_add(dim, &fed, j, 1.0, out);
            self.tmp = fed;
        }

        // -(1/2){Σ J†J, rho}.
        sparse_dense(dim, &self.damping, rho, &mut self.tmp);
        for r in 0..dim {
            for c in 0..dim {
                let anti = self.tmp[r * dim + c] + self.tmp[c * dim + r].conj();
                out[r * dim + c] -= 0.5 * anti;
            }
        }
    }
}

/// Integrate the unconditional master equation from `rho0`.
///
/// Aborts if the trace drifts from 1 by more than 1e-8; positivity is
/// verified (eigenvalues >= -1e-9) at every recorded output.
pub fn evolve_master_equation(
    params: &SystemParams,
    space: &HilbertSpace,
    rho0: &DensityMatrix,
    config: &EvolutionConfig,
) -> Result<MasterSolution> {
    params.validate()?;
    config.validate()?;
    if rho0.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: rho0.dim() });
    }
    rho0.check_physical(1e-10, 1e-8, 1e-9)?;

    let ops = ModelOperators::build(params, space);
    let dim = space.dim();
    let mut rhs = MasterRhs::new(
        dim,
        ops.h_unconditional.clone(),
        vec![ops.j_a.clone(), ops.j_b.clone()],
    );

    let steps = config.steps();
    let mut rho = rho0.entries().to_vec();
    let mut k1 = vec![ZERO; dim * dim];
    let mut k2 = vec![ZERO; dim * dim];
    let mut k3 = vec![ZERO; dim * dim];
    let mut k4 = vec![ZERO; dim * dim];
    let mut stage = vec![ZERO; dim * dim];

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut record = |t: f64, rho: &[C64]| -> Result<()> {
        let dm = DensityMatrix::from_entries(dim, rho.to_vec());
        dm.check_physical(1e-8, 1e-8, 1e-9)?;
        times.push(t);
        states.push(dm);
        Ok(())
    };
    record(0.0, &rho)?;

    let dt = config.dt;
    for step in 1..=steps {
        rhs.eval(&rho, &mut k1);
        for i in 0..rho.len() {
            stage[i] = rho[i] + k1[i] * (0.5 * dt);
        }
        rhs.eval(&stage, &mut k2);
        for i in 0..rho.len() {
            stage[i] = rho[i] + k2[i] * (0.5 * dt);
        }
        rhs.eval(&stage, &mut k3);
        for i in 0..rho.len() {
            stage[i] = rho[i] + k3[i] * dt;
        }
        rhs.eval(&stage, &mut k4);
        for i in 0..rho.len() {
            rho[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }

        let trace: C64 = (0..dim).map(|i| rho[i * dim + i]).sum();
        if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
            return Err(Error::TraceDrift { t: step as f64 * dt, trace: trace.re });
        }
        if step % config.output_stride == 0 || step == steps {
            record(step as f64 * dt, &rho)?;
        }
    }
    Ok(MasterSolution { times, states })
}

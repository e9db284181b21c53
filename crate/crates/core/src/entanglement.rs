//! Partial traces and the three entanglement measures: von Neumann entropy
//! of the left/right bipartition, Wootters concurrence between the atoms,
//! and negativity for either cut.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    apply_jump, evolve_nojump, jump_rates, DensityMatrix, EvolutionConfig, StateVector,
};
use crate::linalg;
use crate::model::{
    enumerate_basis, AtomState, BasisState, Detector, HilbertSpace, ModelOperators, SystemParams,
};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// The two bipartitions of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bipartition {
    /// Left system (atom_L, modes 1 and 2) vs right system (atom_R, modes 3
    /// and 4).
    LeftRight,
    /// The two atoms, tracing out all four cavity modes.
    Atoms,
}

/// Which factor a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    LeftSystem,
    RightSystem,
    Atoms,
}

/// One side's configuration (atom, first mode, second mode).
type SideState = (AtomState, u8, u8);

fn split(state: &BasisState) -> (SideState, SideState) {
    ((state.atom_l, state.n1, state.n2), (state.atom_r, state.n3, state.n4))
}

/// Enumerate all one-side configurations with at most `max_excitations`
/// excitations, in a deterministic order shared by both sides.
fn side_states(max_excitations: u8) -> Vec<SideState> {
    let mut out = Vec::new();
    for atom in [AtomState::Ground, AtomState::Excited] {
        for n_first in 0..=max_excitations {
            for n_second in 0..=max_excitations {
                let exc = u8::from(atom == AtomState::Excited) + n_first + n_second;
                if exc <= max_excitations {
                    out.push((atom, n_first, n_second));
                }
            }
        }
    }
    out
}

fn side_index(states: &[SideState]) -> HashMap<SideState, usize> {
    states.iter().enumerate().map(|(i, s)| (*s, i)).collect()
}

/// Atomic pair index in the two-qubit basis (gg, ge, eg, ee), left qubit
/// first.
fn atom_pair_index(state: &BasisState) -> usize {
    2 * usize::from(state.atom_l == AtomState::Excited)
        + usize::from(state.atom_r == AtomState::Excited)
}

/// Partial trace of a normalized pure state over everything but `keep`.
pub fn reduced_density(
    psi: &StateVector,
    space: &HilbertSpace,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    psi.check_normalized(1e-10)?;
    if psi.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: psi.dim() });
    }
    let amps = psi.amplitudes();
    match keep {
        Subsystem::Atoms => {
            let mut rho = DensityMatrix::zeros(4);
            for (s_idx, s) in space.states().iter().enumerate() {
                for (t_idx, t) in space.states().iter().enumerate() {
                    let (sl, sr) = split(s);
                    let (tl, tr) = split(t);
                    // Photon slots must coincide for the trace over modes.
                    if (sl.1, sl.2, sr.1, sr.2) == (tl.1, tl.2, tr.1, tr.2) {
                        let r = atom_pair_index(s);
                        let c = atom_pair_index(t);
                        rho.entries_mut()[r * 4 + c] += amps[s_idx] * amps[t_idx].conj();
                    }
                }
            }
            Ok(rho)
        }
        Subsystem::LeftSystem | Subsystem::RightSystem => {
            let factor = side_states(space.max_excitations());
            let index = side_index(&factor);
            let dim = factor.len();
            let mut rho = DensityMatrix::zeros(dim);
            for (s_idx, s) in space.states().iter().enumerate() {
                for (t_idx, t) in space.states().iter().enumerate() {
                    let (sl, sr) = split(s);
                    let (tl, tr) = split(t);
                    let (kept_s, kept_t, traced_match) = match keep {
                        Subsystem::LeftSystem => (sl, tl, sr == tr),
                        Subsystem::RightSystem => (sr, tr, sl == tl),
                        Subsystem::Atoms => unreachable!(),
                    };
                    if traced_match {
                        let r = index[&kept_s];
                        let c = index[&kept_t];
                        rho.entries_mut()[r * dim + c] += amps[s_idx] * amps[t_idx].conj();
                    }
                }
            }
            Ok(rho)
        }
    }
}

/// Base-2 von Neumann entropy of a density matrix.
///
/// Eigenvalues below 1e-12 contribute zero; an eigenvalue below -1e-9 means
/// the input is not a physical state.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let mut entropy = 0.0;
    for lambda in rho.eigenvalues() {
        if lambda < -1e-9 {
            return Err(Error::NonPhysical(format!("eigenvalue {lambda:.3e}")));
        }
        if lambda > 1e-12 {
            entropy -= lambda * lambda.log2();
        }
    }
    Ok(entropy)
}

/// The spin-flip matrix sigma_y (x) sigma_y in the (gg, ge, eg, ee) basis.
fn spin_flip() -> Vec<C64> {
    let mut f = vec![ZERO; 16];
    f[3] = C64::new(-1.0, 0.0); // (gg, ee)
    f[6] = C64::new(1.0, 0.0); // (ge, eg)
    f[9] = C64::new(1.0, 0.0); // (eg, ge)
    f[12] = C64::new(-1.0, 0.0); // (ee, gg)
    f
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// The eigenvalues of the spin-flipped product are obtained from the
/// Hermitian equivalent sqrt(rho) rho_tilde sqrt(rho), which shares its
/// spectrum.
pub fn concurrence(rho_atoms: &DensityMatrix) -> Result<f64> {
    if rho_atoms.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho_atoms.dim() });
    }
    let f = spin_flip();
    let conj: Vec<C64> = rho_atoms.entries().iter().map(|v| v.conj()).collect();
    let rho_tilde = linalg::matmul(4, &linalg::matmul(4, &f, &conj), &f);
    let sqrt_rho = linalg::hermitian_sqrt(4, rho_atoms.entries());
    let m = linalg::matmul(4, &linalg::matmul(4, &sqrt_rho, &rho_tilde), &sqrt_rho);
    let raw = linalg::hermitian_eigenvalues(4, &m);
    // Eigenvalues that are exact zeros in real arithmetic come back as
    // O(1e-16) noise; the square root would amplify that to 1e-8, so clamp
    // relative to the leading eigenvalue before taking roots.
    let top = raw.iter().cloned().fold(0.0, f64::max);
    let mut roots: Vec<f64> = raw
        .into_iter()
        .map(|l| if l < 1e-13 * top { 0.0 } else { l.sqrt() })
        .collect();
    roots.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).max(0.0))
}

/// Closed-form concurrence 2 |f1| |f2| of the single-excitation family,
/// where f1 and f2 are the amplitudes of (left atom excited) and (right
/// atom excited).
pub fn concurrence_closed_form(psi: &StateVector, space: &HilbertSpace) -> Result<f64> {
    use AtomState::{Excited as E, Ground as G};
    let f1 = space
        .index_of(&BasisState::new(E, 0, 0, G, 0, 0))
        .ok_or_else(|| Error::InvalidParams("space lacks the single-excitation kets".into()))?;
    let f2 = space
        .index_of(&BasisState::new(G, 0, 0, E, 0, 0))
        .ok_or_else(|| Error::InvalidParams("space lacks the single-excitation kets".into()))?;
    let amps = psi.amplitudes();
    Ok(2.0 * amps[f1].norm() * amps[f2].norm())
}

fn negative_eigenvalue_sum(dim: usize, matrix: &[C64]) -> f64 {
    linalg::hermitian_eigenvalues(dim, matrix)
        .into_iter()
        .filter(|l| *l < 0.0)
        .sum()
}

/// Negativity of a two-qubit density matrix, partial transpose on the
/// second qubit. The (gg, ge, eg, ee) basis includes the doubly excited
/// ket, which the partial transpose populates even for single-excitation
/// states.
fn atomic_negativity(rho_atoms: &DensityMatrix) -> Result<f64> {
    if rho_atoms.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho_atoms.dim() });
    }
    let mut pt = vec![ZERO; 16];
    for a1 in 0..2 {
        for b1 in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    pt[(2 * a1 + b1) * 4 + (2 * a2 + b2)] =
                        rho_atoms.entry(2 * a1 + b2, 2 * a2 + b1);
                }
            }
        }
    }
    Ok((-2.0 * negative_eigenvalue_sum(4, &pt)).max(0.0))
}

/// Negativity of a normalized pure state for the chosen bipartition:
/// `N = max(0, -2 sum_i lambda_i)` over the negative eigenvalues of the
/// partially transposed density matrix, transposing the right factor (the
/// right system, or atom B).
pub fn negativity(psi: &StateVector, space: &HilbertSpace, cut: Bipartition) -> Result<f64> {
    psi.check_normalized(1e-10)?;
    match cut {
        Bipartition::Atoms => atomic_negativity(&reduced_density(psi, space, Subsystem::Atoms)?),
        Bipartition::LeftRight => {
            // Embed into the (left side) (x) (right side) product space. The
            // factor truncation only needs to hold the state's actual
            // excitation content.
            let top = psi.max_occupied_sector(space, 1e-12);
            let factor = side_states(top.max(1));
            let index = side_index(&factor);
            let fd = factor.len();
            let dim = fd * fd;
            let mut embedded = vec![ZERO; dim];
            for (s_idx, s) in space.states().iter().enumerate() {
                let (l, r) = split(s);
                if let (Some(&li), Some(&ri)) = (index.get(&l), index.get(&r)) {
                    embedded[li * fd + ri] = psi.amplitudes()[s_idx];
                } else if psi.amplitudes()[s_idx].norm() > 1e-12 {
                    return Err(Error::Internal(
                        "state has weight outside the embedding truncation".into(),
                    ));
                }
            }
            let mut pt = vec![ZERO; dim * dim];
            for l1 in 0..fd {
                for r1 in 0..fd {
                    for l2 in 0..fd {
                        for r2 in 0..fd {
                            // rho[(l1 r2), (l2 r1)] with rho = |psi><psi|.
                            pt[(l1 * fd + r1) * dim + (l2 * fd + r2)] =
                                embedded[l1 * fd + r2] * embedded[l2 * fd + r1].conj();
                        }
                    }
                }
            }
            Ok((-2.0 * negative_eigenvalue_sum(dim, &pt)).max(0.0))
        }
    }
}

/// Negativity of a pure bipartite state from its Schmidt spectrum:
/// `(sum_i mu_i)^2 - 1` with mu the singular values. Used as the
/// independent cross-check of the partial-transpose route.
pub fn negativity_schmidt(psi: &StateVector, space: &HilbertSpace) -> Result<f64> {
    let rho_left = reduced_density(psi, space, Subsystem::LeftSystem)?;
    let sum: f64 = rho_left.eigenvalues().iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((sum * sum - 1.0).max(0.0))
}

/// Initial condition of a single-excitation run.
#[derive(Debug, Clone)]
pub enum PostDetectionInit {
    /// Apply the chosen detector's jump to the two-excitation no-jump state.
    /// With `time = None` the jump happens at the most likely click time
    /// (the argmax of the total detection rate).
    FirstJump { detector: Detector, time: Option<f64> },
    /// The left atom excited, everything else empty.
    LeftAtomExcited,
    /// An explicit normalized state on the single-excitation space.
    State(StateVector),
}

/// Time series of the entanglement measures along a conditional (no-jump)
/// evolution.
///
/// The plotted object is the unnormalized no-jump state: every measure is
/// weighted by the survival probability, so the curves decay to zero as the
/// excitations get detected instead of settling on the long-lived
/// (subradiant) eigenmode that dominates the normalized conditional state.
/// The entropy is additionally expressed as a fraction of its maximum
/// `log2(d)` on the one-side factor, so 1 means maximal entanglement.
#[derive(Debug, Clone)]
pub struct EntanglementSeries {
    pub times: Vec<f64>,
    /// Normalized conditional states on the output grid.
    pub states: Vec<StateVector>,
    /// Squared norm of the no-jump state at each grid point.
    pub survival: Vec<f64>,
    pub entropy: Vec<f64>,
    pub concurrence: Vec<f64>,
    pub negativity_atoms: Vec<f64>,
    pub negativity_lr: Vec<f64>,
}

/// Entropy of the survival-weighted spectrum, as a fraction of log2(d).
fn weighted_entropy_fraction(rho: &DensityMatrix, survival: f64) -> f64 {
    let mut entropy = 0.0;
    for lambda in rho.eigenvalues() {
        let weighted = lambda.max(0.0) * survival;
        if weighted > 1e-12 {
            entropy -= weighted * weighted.log2();
        }
    }
    entropy / (rho.dim() as f64).log2()
}

impl EntanglementSeries {
    fn measure(
        times: Vec<f64>,
        states: Vec<StateVector>,
        survival: Vec<f64>,
        space: &HilbertSpace,
    ) -> Result<Self> {
        let mut entropy = Vec::with_capacity(states.len());
        let mut conc = Vec::with_capacity(states.len());
        let mut neg_atoms = Vec::with_capacity(states.len());
        let mut neg_lr = Vec::with_capacity(states.len());
        for (psi, n2) in states.iter().zip(&survival) {
            let rho_left = reduced_density(psi, space, Subsystem::LeftSystem)?;
            entropy.push(weighted_entropy_fraction(&rho_left, *n2));
            let rho_atoms = reduced_density(psi, space, Subsystem::Atoms)?;
            // Concurrence and negativity are degree-1 in the spectrum, so
            // the unnormalized-state value is survival times the
            // normalized-state value.
            conc.push(n2 * concurrence(&rho_atoms)?);
            neg_atoms.push(n2 * atomic_negativity(&rho_atoms)?);
            neg_lr.push(n2 * negativity(psi, space, Bipartition::LeftRight)?);
        }
        Ok(Self {
            times,
            states,
            survival,
            entropy,
            concurrence: conc,
            negativity_atoms: neg_atoms,
            negativity_lr: neg_lr,
        })
    }
}

fn normalized_series(
    ops: &ModelOperators,
    psi0: &StateVector,
    config: &EvolutionConfig,
) -> Result<(Vec<f64>, Vec<StateVector>, Vec<f64>)> {
    let solution = evolve_nojump(&ops.h_nh, psi0, config)?;
    let states = solution
        .states
        .iter()
        .map(StateVector::normalized)
        .collect::<Result<Vec<_>>>()?;
    Ok((solution.times, states, solution.survival))
}

/// Entanglement measures along the two-excitation no-jump evolution
/// (both atoms initially excited).
pub fn entanglement_series(
    params: &SystemParams,
    config: &EvolutionConfig,
) -> Result<EntanglementSeries> {
    params.validate()?;
    let space = enumerate_basis(2)?;
    let ops = ModelOperators::build(params, &space);
    let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    let (times, states, survival) = normalized_series(&ops, &psi0, config)?;
    EntanglementSeries::measure(times, states, survival, &space)
}

/// Left/right entropy only (cheap fine-grid variant of
/// [`entanglement_series`]), in the same survival-weighted
/// fraction-of-maximum convention.
pub fn entropy_series(
    params: &SystemParams,
    config: &EvolutionConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    let space = enumerate_basis(2)?;
    let ops = ModelOperators::build(params, &space);
    let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    let (times, states, survival) = normalized_series(&ops, &psi0, config)?;
    let mut entropy = Vec::with_capacity(states.len());
    for (psi, n2) in states.iter().zip(&survival) {
        let rho_left = reduced_density(psi, &space, Subsystem::LeftSystem)?;
        entropy.push(weighted_entropy_fraction(&rho_left, *n2));
    }
    Ok((times, entropy))
}

/// Restrict a state supported on excitation sectors 0 and 1 of the
/// two-excitation space to the single-excitation space (the shared sectors
/// have identical ordering in both truncations).
fn restrict_to_single_excitation(
    psi: &StateVector,
    space2: &HilbertSpace,
    space1: &HilbertSpace,
) -> Result<StateVector> {
    if psi.max_occupied_sector(space2, 1e-12) > 1 {
        return Err(Error::InvalidParams(
            "state still holds two excitations; detect one photon first".into(),
        ));
    }
    let amps = psi.amplitudes()[..space1.dim()].to_vec();
    debug_assert_eq!(space1.states(), &space2.states()[..space1.dim()]);
    Ok(StateVector::from_amplitudes(amps))
}

/// Single-excitation (post-detection) run: evolve the six-amplitude no-jump
/// state and report all measures on the normalized state.
pub fn post_detection_run(
    params: &SystemParams,
    init: &PostDetectionInit,
    config: &EvolutionConfig,
) -> Result<EntanglementSeries> {
    params.validate()?;
    let space1 = enumerate_basis(1)?;

    let psi0 = match init {
        PostDetectionInit::LeftAtomExcited => StateVector::basis_ket(
            &space1,
            BasisState::new(AtomState::Excited, 0, 0, AtomState::Ground, 0, 0),
        )?,
        PostDetectionInit::State(state) => {
            state.check_normalized(1e-10)?;
            if state.dim() == space1.dim() {
                state.clone()
            } else {
                let space2 = enumerate_basis(2)?;
                if state.dim() != space2.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: space1.dim(),
                        got: state.dim(),
                    });
                }
                restrict_to_single_excitation(state, &space2, &space1)?
            }
        }
        PostDetectionInit::FirstJump { detector, time } => {
            let space2 = enumerate_basis(2)?;
            let params2 = SystemParams { max_excitations: 2, ..*params };
            let ops2 = ModelOperators::build(&params2, &space2);
            let psi0 = StateVector::basis_ket(&space2, BasisState::both_atoms_excited())?;
            let fine = EvolutionConfig { output_stride: 1, ..*config };
            let solution = evolve_nojump(&ops2.h_nh, &psi0, &fine)?;
            let idx = match time {
                Some(t) => solution.index_at(*t),
                None => {
                    // Most likely first-click time: argmax of the total
                    // (unnormalized) detection rate.
                    let mut best = 0;
                    let mut best_rate = f64::NEG_INFINITY;
                    for (i, state) in solution.states.iter().enumerate() {
                        let (pa, pb) = jump_rates(state, &ops2.j_a, &ops2.j_b);
                        if pa + pb > best_rate {
                            best_rate = pa + pb;
                            best = i;
                        }
                    }
                    best
                }
            };
            let jumped = apply_jump(&solution.states[idx], ops2.jump(*detector))?;
            restrict_to_single_excitation(&jumped, &space2, &space1)?
        }
    };

    let params1 = SystemParams { max_excitations: 1, ..*params };
    let ops1 = ModelOperators::build(&params1, &space1);
    let (times, states, survival) = normalized_series(&ops1, &psi0, config)?;
    EntanglementSeries::measure(times, states, survival, &space1)
}

/// Amplitudes (f1..f6) of a single-excitation state: the two atomic
/// excitations, then photons in modes 1, 2, 3, 4.
pub fn f_amplitudes(psi: &StateVector, space: &HilbertSpace) -> Result<[C64; 6]> {
    use AtomState::{Excited as E, Ground as G};
    let kets = [
        BasisState::new(E, 0, 0, G, 0, 0),
        BasisState::new(G, 0, 0, E, 0, 0),
        BasisState::new(G, 1, 0, G, 0, 0),
        BasisState::new(G, 0, 1, G, 0, 0),
        BasisState::new(G, 0, 0, G, 1, 0),
        BasisState::new(G, 0, 0, G, 0, 1),
    ];
    let mut out = [ZERO; 6];
    for (slot, ket) in kets.iter().enumerate() {
        let idx = space
            .index_of(ket)
            .ok_or_else(|| Error::InvalidParams("space lacks the single-excitation kets".into()))?;
        out[slot] = psi.amplitudes()[idx];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use AtomState::{Excited as E, Ground as G};

    fn ket2(state: BasisState) -> (HilbertSpace, StateVector) {
        let space = enumerate_basis(2).unwrap();
        let psi = StateVector::basis_ket(&space, state).unwrap();
        (space, psi)
    }

    fn random_state(space: &HilbertSpace, rng: &mut impl Rng) -> StateVector {
        let amps: Vec<C64> = (0..space.dim())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        StateVector::from_amplitudes(amps).normalized().unwrap()
    }

    #[test]
    fn product_state_has_pure_marginal() {
        let (space, psi) = ket2(BasisState::new(E, 0, 0, G, 0, 0));
        let rho = reduced_density(&psi, &space, Subsystem::LeftSystem).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(von_neumann_entropy(&rho).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_state_marginal_is_maximally_mixed() {
        let space = enumerate_basis(2).unwrap();
        let mut amps = vec![ZERO; space.dim()];
        let w = C64::new(1.0 / 2f64.sqrt(), 0.0);
        amps[space.index_of(&BasisState::new(G, 1, 0, G, 0, 0)).unwrap()] = w;
        amps[space.index_of(&BasisState::new(G, 0, 0, G, 1, 0)).unwrap()] = w;
        let psi = StateVector::from_amplitudes(amps);
        let rho = reduced_density(&psi, &space, Subsystem::LeftSystem).unwrap();
        // diag(1/2, 1/2) on {vacuum, photon in mode 1}; everything else 0.
        let evs = rho.eigenvalues();
        assert_abs_diff_eq!(evs[evs.len() - 1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(evs[evs.len() - 2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(von_neumann_entropy(&rho).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            negativity(&psi, &space, Bipartition::LeftRight).unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn atomic_marginal_has_the_three_population_structure() {
        // A single-excitation superposition reduces to the mixed atomic
        // state with populations |f1|^2, |f2|^2 and 1 - |f1|^2 - |f2|^2.
        let space = enumerate_basis(1).unwrap();
        let mut amps = vec![ZERO; space.dim()];
        let f1 = C64::new(0.6, 0.0);
        let f2 = C64::new(0.0, 0.5);
        let f3 = C64::new((1.0f64 - 0.36 - 0.25).sqrt(), 0.0);
        amps[space.index_of(&BasisState::new(E, 0, 0, G, 0, 0)).unwrap()] = f1;
        amps[space.index_of(&BasisState::new(G, 0, 0, E, 0, 0)).unwrap()] = f2;
        amps[space.index_of(&BasisState::new(G, 1, 0, G, 0, 0)).unwrap()] = f3;
        let psi = StateVector::from_amplitudes(amps);
        let rho = reduced_density(&psi, &space, Subsystem::Atoms).unwrap();
        assert_abs_diff_eq!(rho.entry(2, 2).re, 0.36, epsilon = 1e-12); // eg
        assert_abs_diff_eq!(rho.entry(1, 1).re, 0.25, epsilon = 1e-12); // ge
        assert_abs_diff_eq!(rho.entry(0, 0).re, 0.39, epsilon = 1e-12); // gg
        assert_abs_diff_eq!(rho.entry(3, 3).re, 0.0, epsilon = 1e-12); // ee
        let coherence = rho.entry(2, 1);
        let expected = f1 * f2.conj();
        assert_abs_diff_eq!(coherence.re, expected.re, epsilon = 1e-12);
        assert_abs_diff_eq!(coherence.im, expected.im, epsilon = 1e-12);
        // Concurrence: closed form 2 |f1| |f2| = 0.6.
        assert_abs_diff_eq!(concurrence(&rho).unwrap(), 0.6, epsilon = 1e-10);
    }

    #[test]
    fn concurrence_reference_values() {
        let mk = |f1: C64, f2: C64| {
            let space = enumerate_basis(1).unwrap();
            let mut amps = vec![ZERO; space.dim()];
            amps[space.index_of(&BasisState::new(E, 0, 0, G, 0, 0)).unwrap()] = f1;
            amps[space.index_of(&BasisState::new(G, 0, 0, E, 0, 0)).unwrap()] = f2;
            let rest = (1.0 - f1.norm_sqr() - f2.norm_sqr()).max(0.0).sqrt();
            amps[space.index_of(&BasisState::new(G, 0, 1, G, 0, 0)).unwrap()] = C64::new(rest, 0.0);
            let psi = StateVector::from_amplitudes(amps).normalized().unwrap();
            reduced_density(&psi, &space, Subsystem::Atoms).unwrap()
        };
        let w = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(
            concurrence(&mk(C64::new(w, 0.0), C64::new(w, 0.0))).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        // Phase-insensitive: f2 imaginary.
        assert_abs_diff_eq!(
            concurrence(&mk(C64::new(0.6, 0.0), C64::new(0.0, 0.8))).unwrap(),
            0.96,
            epsilon = 1e-10
        );
        // Separable diagonal state.
        let mut diag = DensityMatrix::zeros(4);
        diag.entries_mut()[0] = C64::new(0.25, 0.0);
        diag.entries_mut()[5] = C64::new(0.25, 0.0);
        diag.entries_mut()[10] = C64::new(0.25, 0.0);
        diag.entries_mut()[15] = C64::new(0.25, 0.0);
        assert_abs_diff_eq!(concurrence(&diag).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn negativity_reference_values() {
        // Two-qubit Bell state between the atoms.
        let space = enumerate_basis(2).unwrap();
        let mut amps = vec![ZERO; space.dim()];
        let w = C64::new(1.0 / 2f64.sqrt(), 0.0);
        amps[space.index_of(&BasisState::new(E, 0, 0, G, 0, 0)).unwrap()] = w;
        amps[space.index_of(&BasisState::new(G, 0, 0, E, 0, 0)).unwrap()] = w;
        let psi = StateVector::from_amplitudes(amps);
        assert_abs_diff_eq!(
            negativity(&psi, &space, Bipartition::Atoms).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            negativity(&psi, &space, Bipartition::LeftRight).unwrap(),
            1.0,
            epsilon = 1e-10
        );

        // Product state: no entanglement in any cut.
        let (space, product) = ket2(BasisState::new(E, 0, 0, G, 0, 0));
        assert_abs_diff_eq!(
            negativity(&product, &space, Bipartition::Atoms).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            negativity(&product, &space, Bipartition::LeftRight).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_is_side_symmetric_and_pt_matches_schmidt() {
        let space = enumerate_basis(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..12 {
            let psi = random_state(&space, &mut rng);
            let left = reduced_density(&psi, &space, Subsystem::LeftSystem).unwrap();
            let right = reduced_density(&psi, &space, Subsystem::RightSystem).unwrap();
            let el = von_neumann_entropy(&left).unwrap();
            let er = von_neumann_entropy(&right).unwrap();
            assert_abs_diff_eq!(el, er, epsilon = 1e-9);

            // The Schmidt route takes square roots of the marginal spectrum,
            // which amplifies O(1e-16) eigenvalue noise to O(1e-8); the
            // tolerance reflects that, not the PT route's accuracy.
            let pt = negativity(&psi, &space, Bipartition::LeftRight).unwrap();
            let schmidt = negativity_schmidt(&psi, &space).unwrap();
            assert_abs_diff_eq!(pt, schmidt, epsilon = 1e-6);
        }
    }

    #[test]
    fn post_detection_dark_jump_is_an_error() {
        // At t = 0 both excitations are atomic, so a detection is impossible.
        let params = SystemParams { g_mag: 0.25, delta: 0.5, ..SystemParams::default() };
        let init = PostDetectionInit::FirstJump { detector: Detector::A, time: Some(0.0) };
        let config = EvolutionConfig { dt: 1e-3, t_max: 1.0, output_stride: 10 };
        assert!(matches!(
            post_detection_run(&params, &init, &config),
            Err(Error::DarkStateJump { .. })
        ));
    }

    #[test]
    fn post_detection_measures_satisfy_the_orderings() {
        let params = SystemParams { g_mag: 2.0, delta: 0.5, ..SystemParams::default() };
        let init = PostDetectionInit::FirstJump { detector: Detector::A, time: None };
        let config = EvolutionConfig { dt: 1e-3, t_max: 10.0, output_stride: 100 };
        let series = post_detection_run(&params, &init, &config).unwrap();
        let space1 = enumerate_basis(1).unwrap();
        for (i, psi) in series.states.iter().enumerate() {
            // Wootters route equals the closed form along the whole run
            // (both on the normalized state).
            let wootters =
                concurrence(&reduced_density(psi, &space1, Subsystem::Atoms).unwrap()).unwrap();
            let closed = concurrence_closed_form(psi, &space1).unwrap();
            assert_abs_diff_eq!(wootters, closed, epsilon = 1e-10);
            // Negativity orderings; the shared survival weight preserves
            // pointwise inequalities.
            assert!(series.negativity_atoms[i] <= series.concurrence[i] + 1e-9);
            assert!(series.negativity_atoms[i] <= series.negativity_lr[i] + 1e-9);
        }
    }

    #[test]
    fn measures_decay_at_long_times() {
        // Weak coupling: the slowest mode decays at ~0.09 kappa, so 200
        // cavity lifetimes empty the system completely. (At g = 2 kappa and
        // phi = 0 the antisymmetric combinations are subradiant with rate
        // ~2e-3 kappa; the decay happens there too, just on a ~550/kappa
        // timescale.)
        let params = SystemParams { g_mag: 0.25, delta: 0.5, ..SystemParams::default() };
        let init = PostDetectionInit::LeftAtomExcited;
        let config = EvolutionConfig { dt: 5e-3, t_max: 200.0, output_stride: 1000 };
        let series = post_detection_run(&params, &init, &config).unwrap();
        let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
        let last = series.times.len() - 1;
        assert!(series.concurrence[last] < 0.05 * max(&series.concurrence));
        assert!(series.negativity_lr[last] < 0.05 * max(&series.negativity_lr));
        assert!(series.entropy[last] < 0.05 * max(&series.entropy));
    }
}

//! The acceptance battery behind `cavities validate`.
//!
//! Each criterion pins its tolerances in code and reports the measured
//! values; any failure makes the battery (and the CLI) fail. The same
//! functions back the `acceptance` integration test suite.

use std::time::Instant;

use crate::dynamics::{
    early_time_model, evolve_master_equation, evolve_nojump, jump_rates, DensityMatrix,
    EvolutionConfig, StateVector,
};
use crate::entanglement::{
    concurrence, concurrence_closed_form, entropy_series, post_detection_run, reduced_density,
    PostDetectionInit, Subsystem,
};
use crate::model::{BasisState, ModelOperators, SystemParams};
use crate::observables::{count_local_maxima, equal_time_densities, phi_sweep, SweepModel};
use crate::trajectories::{run_ensemble, run_ensemble_with_density, EnsembleStats};
use crate::Result;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("[{status}] {} ({:.1}s): {}", self.name, self.seconds, self.details)
    }
}

fn fig2a() -> SystemParams {
    SystemParams { g_mag: 0.25, delta: 0.5, delta_t: 0.1, ..SystemParams::default() }
}

fn report(
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionReport {
    let start = Instant::now();
    let (passed, details) = match body() {
        Ok(outcome) => outcome,
        Err(err) => (false, format!("errored: {err}")),
    };
    CriterionReport { name, passed, details, seconds: start.elapsed().as_secs_f64() }
}

fn densities_for(
    params: &SystemParams,
    t_max: f64,
) -> Result<crate::observables::DetectionDensities> {
    let space = params.space()?;
    let ops = ModelOperators::build(params, &space);
    let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    let config = EvolutionConfig { dt: 1e-3, t_max, output_stride: 10 };
    let solution = evolve_nojump(&ops.h_nh, &psi0, &config)?;
    equal_time_densities(&solution, params, &space)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Same-detector fraction of 20,000 trajectories at the weak-coupling
/// reference parameters: 0.62/0.38 within +-0.02.
pub fn same_detector_fraction() -> CriterionReport {
    report("same-detector fraction (n=20000)", || {
        let config = EvolutionConfig { dt: 1e-3, t_max: 40.0, output_stride: 10 };
        let records = run_ensemble(&fig2a(), 20_000, 7, &config)?;
        let stats = EnsembleStats::from_records(&records);
        let passed = (0.60..=0.64).contains(&stats.fraction_same)
            && (0.36..=0.40).contains(&stats.fraction_diff);
        Ok((
            passed,
            format!(
                "same = {:.4} (need 0.60..0.64), diff = {:.4} (need 0.36..0.40), \
                 {} incomplete of {}",
                stats.fraction_same, stats.fraction_diff, stats.n_incomplete, stats.n_requested
            ),
        ))
    })
}

/// Density curve shapes: one maximum for ab/ba, two for aa/bb, and the
/// contrast between them grows as the coupling weakens.
pub fn density_curve_shapes() -> CriterionReport {
    report("detection density shapes", || {
        let a = densities_for(&fig2a(), 20.0)?;
        let b = densities_for(&SystemParams { g_mag: 0.1, ..fig2a() }, 20.0)?;
        let maxima_p2 = count_local_maxima(&a.p2);
        let maxima_p11 = count_local_maxima(&a.p11);
        let contrast_a = max_of(&a.p2) / max_of(&a.p11);
        let contrast_b = max_of(&b.p2) / max_of(&b.p11);
        let passed = maxima_p11 == 1
            && maxima_p2 == 2
            && max_of(&a.p2) > max_of(&a.p11)
            && max_of(&b.p11) < max_of(&a.p11)
            && contrast_b > contrast_a;
        Ok((
            passed,
            format!(
                "maxima(p2) = {maxima_p2} (need 2), maxima(p11) = {maxima_p11} (need 1), \
                 max p2/p11 = {:.3e}/{:.3e}; weaker coupling: max p11 {:.3e} (must drop), \
                 contrast {:.2} -> {:.2} (must grow)",
                max_of(&a.p2),
                max_of(&a.p11),
                max_of(&b.p11),
                contrast_a,
                contrast_b
            ),
        ))
    })
}

/// Phase sweep at t = 0.4: ab/ba strictly decreasing, aa/bb flat to 5%.
pub fn phi_sweep_monotonicity() -> CriterionReport {
    report("phase sweep at t=0.4", || {
        let phis: Vec<f64> = (0..=4).map(|k| k as f64 * std::f64::consts::PI / 16.0).collect();
        let config = EvolutionConfig { dt: 1e-3, t_max: 0.4, output_stride: 1 };
        let points = phi_sweep(&fig2a(), &phis, 0.4, SweepModel::Full, &config)?;
        let monotone = points.windows(2).all(|w| w[1].p11 < w[0].p11);
        let p2s: Vec<f64> = points.iter().map(|p| p.p2).collect();
        let p2_spread = (max_of(&p2s) - p2s.iter().cloned().fold(f64::INFINITY, f64::min))
            / max_of(&p2s);
        let passed = monotone && p2_spread < 0.05;
        Ok((
            passed,
            format!(
                "p11 strictly decreasing: {monotone}; p2 relative spread = {:.2e} (need < 0.05)",
                p2_spread
            ),
        ))
    })
}

/// Entropy maxima: weak-coupling peak at 0.40 +- 0.05 of maximal, strong
/// peak smaller with at least three oscillation maxima before t = 5.
pub fn entropy_maxima() -> CriterionReport {
    report("entanglement entropy maxima", || {
        let config = EvolutionConfig { dt: 1e-3, t_max: 20.0, output_stride: 10 };
        let weak = SystemParams { g_mag: 0.25, ..fig2a() };
        let strong = SystemParams { g_mag: 5.0, ..fig2a() };
        let (_, e_weak) = entropy_series(&weak, &config)?;
        let (times, e_strong) = entropy_series(&strong, &config)?;
        let weak_max = max_of(&e_weak);
        let strong_max = max_of(&e_strong);
        let early_strong: Vec<f64> = times
            .iter()
            .zip(&e_strong)
            .filter(|(t, _)| **t <= 5.0)
            .map(|(_, e)| *e)
            .collect();
        let oscillations = crate::observables::count_significant_maxima(&early_strong, 0.08);
        let passed =
            (0.35..=0.45).contains(&weak_max) && strong_max < weak_max && oscillations >= 3;
        Ok((
            passed,
            format!(
                "weak max = {weak_max:.4} (need 0.35..0.45), strong max = {strong_max:.4} \
                 (must be smaller), strong maxima before t=5: {oscillations} (need >= 3)"
            ),
        ))
    })
}

/// Single-excitation negativity: the left/right peak reaches 0.46 +- 0.05
/// at the strong-coupling parameters, and the atomic negativity never
/// exceeds the concurrence or the left/right negativity.
pub fn negativity_bound() -> CriterionReport {
    report("negativity bound", || {
        let config = EvolutionConfig { dt: 1e-3, t_max: 30.0, output_stride: 20 };
        let strong = SystemParams { g_mag: 2.0, delta: 0.5, ..SystemParams::default() };
        let weak = SystemParams { g_mag: 0.2, delta: 0.1, ..SystemParams::default() };
        let init = PostDetectionInit::LeftAtomExcited;
        let strong_series = post_detection_run(&strong, &init, &config)?;
        let weak_series = post_detection_run(&weak, &init, &config)?;
        let peak = max_of(&strong_series.negativity_lr);
        let mut orderings = true;
        for series in [&strong_series, &weak_series] {
            for i in 0..series.times.len() {
                orderings &= series.negativity_atoms[i] <= series.negativity_lr[i] + 1e-9;
                orderings &= series.negativity_atoms[i] <= series.concurrence[i] + 1e-9;
            }
        }
        let passed = (0.41..=0.51).contains(&peak) && orderings;
        Ok((
            passed,
            format!(
                "strong-coupling max N_LR = {peak:.4} (need 0.41..0.51); \
                 N_atoms <= N_LR and N_atoms <= C pointwise on both parameter sets: {orderings}"
            ),
        ))
    })
}

/// Trajectory-ensemble average state vs the master equation, trace distance
/// at t in {1, 3, 6}.
pub fn oracle_equivalence() -> CriterionReport {
    report("trajectory/master-equation equivalence (n=10000)", || {
        let params = fig2a();
        let snapshot_times = [1.0, 3.0, 6.0];
        let config = EvolutionConfig { dt: 1e-3, t_max: 6.0, output_stride: 10 };
        let (times, ensemble, _) =
            run_ensemble_with_density(&params, 10_000, 11, &config, &snapshot_times)?;

        let space = params.space()?;
        let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
        let rho0 = DensityMatrix::from_pure(&psi0);
        let master_config = EvolutionConfig { dt: 1e-3, t_max: 6.0, output_stride: 50 };
        let master = evolve_master_equation(&params, &space, &rho0, &master_config)?;

        let mut worst = 0.0f64;
        let mut details = Vec::new();
        for (t, rho_ensemble) in times.iter().zip(&ensemble) {
            let distance = rho_ensemble.trace_distance(master.state_at(*t));
            worst = worst.max(distance);
            details.push(format!("t={t}: {distance:.4}"));
        }
        Ok((
            worst <= 0.02,
            format!("trace distances {} (all need <= 0.02)", details.join(", ")),
        ))
    })
}

/// survival(T) + integral of the detection rates equals 1 for a grid of
/// coupling magnitudes and phases.
pub fn norm_bookkeeping() -> CriterionReport {
    report("norm bookkeeping over (g, phi) grid", || {
        let mut worst = 0.0f64;
        for &g in &[0.1, 0.25, 1.0] {
            for &phi in &[0.0, std::f64::consts::PI / 8.0, std::f64::consts::PI / 4.0] {
                let params = SystemParams { g_mag: g, phi, ..fig2a() };
                let space = params.space()?;
                let ops = ModelOperators::build(&params, &space);
                let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
                let config = EvolutionConfig { dt: 1e-3, t_max: 20.0, output_stride: 1 };
                let solution = evolve_nojump(&ops.h_nh, &psi0, &config)?;
                let rates: Vec<f64> = solution
                    .states
                    .iter()
                    .map(|s| {
                        let (pa, pb) = jump_rates(s, &ops.j_a, &ops.j_b);
                        pa + pb
                    })
                    .collect();
                let emitted = crate::observables::trapezoid(&solution.times, &rates);
                let balance = solution.survival.last().unwrap() + emitted;
                worst = worst.max((balance - 1.0).abs());
            }
        }
        Ok((worst <= 1e-6, format!("worst |survival + emitted - 1| = {worst:.3e} (need <= 1e-6)")))
    })
}

/// Wootters eigenvalue concurrence equals 2|f1||f2| along a whole run.
pub fn concurrence_closed_form_agreement() -> CriterionReport {
    report("concurrence closed form", || {
        let params = SystemParams { g_mag: 2.0, delta: 0.5, ..SystemParams::default() };
        let config = EvolutionConfig { dt: 1e-3, t_max: 20.0, output_stride: 10 };
        let series = post_detection_run(&params, &PostDetectionInit::LeftAtomExcited, &config)?;
        let space = crate::model::enumerate_basis(1)?;
        let mut worst = 0.0f64;
        for psi in &series.states {
            let wootters = concurrence(&reduced_density(psi, &space, Subsystem::Atoms)?)?;
            let closed = concurrence_closed_form(psi, &space)?;
            worst = worst.max((wootters - closed).abs());
        }
        Ok((worst <= 1e-10, format!("worst |Wootters - 2|f1||f2|| = {worst:.3e} (need <= 1e-10)")))
    })
}

/// The jump-operator expectation forms of the joint densities equal the
/// amplitude forms at every grid point.
pub fn operator_amplitude_agreement() -> CriterionReport {
    report("operator vs amplitude detection densities", || {
        let params = fig2a();
        let space = params.space()?;
        let ops = ModelOperators::build(&params, &space);
        let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
        let config = EvolutionConfig { dt: 1e-3, t_max: 20.0, output_stride: 1 };
        let solution = evolve_nojump(&ops.h_nh, &psi0, &config)?;
        // equal_time_densities enforces 1e-10 agreement internally and
        // fails the criterion through the error path if it is violated.
        let densities = equal_time_densities(&solution, &params, &space)?;
        Ok((
            true,
            format!(
                "both routes agree to 1e-10 at all {} grid points",
                densities.times.len()
            ),
        ))
    })
}

/// The nine-state early-time model factorizes exactly and tracks the full
/// model to 2%.
///
/// Window: t <= 0.25. The one amplitude with a first-crossing correction
/// (photon in mode 2 with photon in mode 3, fed by the cascade from the
/// both-photons-left state) deviates quadratically in t and crosses 2%
/// near t = 0.29, so 0.25 keeps a 25% margin while the other eight
/// amplitudes stay below 0.01%.
pub fn early_time_factorization() -> CriterionReport {
    report("early-time factorization", || {
        let params = fig2a();
        let config = EvolutionConfig { dt: 1e-3, t_max: 0.25, output_stride: 10 };
        let early = early_time_model(&params, &config)?;

        let space = params.space()?;
        let ops = ModelOperators::build(&params, &space);
        let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
        let full = evolve_nojump(&ops.h_nh, &psi0, &config)?;

        let d_kets = crate::dynamics::d_basis_states();
        let d_indices: Vec<usize> =
            d_kets.iter().map(|k| space.index_of(k).expect("nine-state kets exist")).collect();

        let mut worst_purity_defect = 0.0f64;
        let mut min_full_purity = f64::INFINITY;
        let mut worst_relative = 0.0f64;
        for (i, t) in early.times.iter().enumerate() {
            // Embed the product amplitudes into the full space and check the
            // reduced state is exactly pure.
            let mut amps = vec![crate::C64::new(0.0, 0.0); space.dim()];
            for (slot, idx) in d_indices.iter().enumerate() {
                amps[*idx] = early.amplitudes[i][slot];
            }
            let embedded = StateVector::from_amplitudes(amps).normalized()?;
            let purity = reduced_density(&embedded, &space, Subsystem::LeftSystem)?.purity();
            worst_purity_defect = worst_purity_defect.max((purity - 1.0).abs());

            let full_state = &full.states[full.index_at(*t)];
            let full_normalized = full_state.normalized()?;
            let full_purity =
                reduced_density(&full_normalized, &space, Subsystem::LeftSystem)?.purity();
            min_full_purity = min_full_purity.min(full_purity);

            for (slot, idx) in d_indices.iter().enumerate() {
                let d = early.amplitudes[i][slot];
                if d.norm() > 1e-8 {
                    let c = full_state.amplitudes()[*idx];
                    worst_relative = worst_relative.max((c - d).norm() / d.norm());
                }
            }
        }
        let passed =
            worst_purity_defect <= 1e-12 && min_full_purity >= 0.99 && worst_relative <= 0.02;
        Ok((
            passed,
            format!(
                "nine-state purity defect = {worst_purity_defect:.2e} (need <= 1e-12), \
                 full-model purity >= {min_full_purity:.4} (need >= 0.99), \
                 worst amplitude deviation = {worst_relative:.4} (need <= 0.02)"
            ),
        ))
    })
}

/// Run the whole battery in a deterministic order.
pub fn run_all() -> Vec<CriterionReport> {
    vec![
        density_curve_shapes(),
        phi_sweep_monotonicity(),
        entropy_maxima(),
        negativity_bound(),
        norm_bookkeeping(),
        concurrence_closed_form_agreement(),
        operator_amplitude_agreement(),
        early_time_factorization(),
        oracle_equivalence(),
        same_detector_fraction(),
    ]
}

//! Monte Carlo quantum-jump sampling of full detection records.
//!
//! Jump times come from the norm-threshold (waiting-time distribution)
//! method: draw r uniform in (0,1), integrate the unnormalized no-jump
//! state until its squared norm crosses r, refine the crossing by bisection
//! to dt/16, then collapse with the detector chosen by the instantaneous
//! rates. This samples the exact waiting-time law up to integrator
//! accuracy, independently of the step size.
//!
//! Parallel determinism: trajectory i draws from a ChaCha stream keyed by
//! (master seed, i), so the ensemble is reproducible bit for bit no matter
//! how the work is scheduled.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{DensityMatrix, EvolutionConfig, Rk4Scratch, StateVector};
use crate::model::single::SingleSystem;
use crate::model::{
    BasisState, Detector, HilbertSpace, ModelOperators, SparseOperator, SystemParams,
};
use crate::{Error, Result};

/// Stream id namespace for the interference-free reference ensembles, so
/// coupled and independent runs never share random streams under one seed.
const INDEPENDENT_STREAM_BASE: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionEvent {
    pub time: f64,
    pub detector: Detector,
}

/// One Monte Carlo run's detection record.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub master_seed: u64,
    pub events: Vec<DetectionEvent>,
    /// False when an excitation was still inside the system at `t_max`.
    pub complete: bool,
}

impl TrajectoryRecord {
    pub fn first(&self) -> Option<&DetectionEvent> {
        self.events.first()
    }

    pub fn second(&self) -> Option<&DetectionEvent> {
        self.events.get(1)
    }

    /// Both clicks at the same detector? `None` for incomplete records.
    pub fn same_detector(&self) -> Option<bool> {
        match self.events.as_slice() {
            [a, b] => Some(a.detector == b.detector),
            _ => None,
        }
    }
}

fn rng_for(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Draw the norm threshold; (0,1) exclusive so the jump time is finite.
fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            return r;
        }
    }
}

fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|v| v.norm_sqr()).sum()
}

fn normalize(amps: &mut [C64]) {
    let n = norm_sqr(amps).sqrt();
    for v in amps.iter_mut() {
        *v /= n;
    }
}

/// The integrator state of one trajectory between jumps.
///
/// H_NH is block diagonal in the excitation number, so each no-jump segment
/// only ever touches one sector's block; stepping with the restricted
/// operator halves the work without changing a single amplitude.
struct Walker<'a> {
    h_blocks: &'a [SparseOperator],
    sector: usize,
    dt: f64,
    scratch: Rk4Scratch,
    /// Unnormalized no-jump amplitudes since the last jump.
    amps: Vec<C64>,
    t: f64,
}

impl<'a> Walker<'a> {
    /// Advance to the next threshold crossing; returns false if `t_max` was
    /// reached first. On true, `self.amps` holds the unnormalized state at
    /// the refined jump time (within dt/16) and `self.t` the jump time.
    fn advance_to_jump(&mut self, threshold: f64, t_max: f64, snaps: &mut SnapshotSink) -> bool {
        loop {
            if self.t >= t_max {
                return false;
            }
            let step = self.dt.min(t_max - self.t);
            let h = &self.h_blocks[self.sector];
            let mut next = self.amps.clone();
            crate::dynamics::rk4_step(h, &mut next, step, &mut self.scratch);
            if norm_sqr(&next) <= threshold {
                // Bisection on the step size: lo keeps norm > threshold,
                // hi crosses it. Four halvings resolve dt/16.
                let mut lo = 0.0;
                let mut hi = step;
                let mut state_hi = next;
                for _ in 0..4 {
                    let mid = 0.5 * (lo + hi);
                    let mut probe = self.amps.clone();
                    crate::dynamics::rk4_step(h, &mut probe, mid, &mut self.scratch);
                    if norm_sqr(&probe) <= threshold {
                        hi = mid;
                        state_hi = probe;
                    } else {
                        lo = mid;
                    }
                }
                snaps.drain_until(self.t + hi, |t_snap| self.partial_state(t_snap));
                self.t += hi;
                self.amps = state_hi;
                return true;
            }
            snaps.drain_until(self.t + step, |t_snap| self.partial_state(t_snap));
            self.t += step;
            self.amps = next;
        }
    }

    /// Normalized state a partial step ahead of the current time.
    fn partial_state(&mut self, t_snap: f64) -> Vec<C64> {
        let mut probe = self.amps.clone();
        let step = t_snap - self.t;
        if step > 0.0 {
            crate::dynamics::rk4_step(
                &self.h_blocks[self.sector],
                &mut probe,
                step,
                &mut self.scratch,
            );
        }
        normalize(&mut probe);
        probe
    }
}

/// Collects normalized states at requested times as integration passes them.
struct SnapshotSink {
    times: Vec<f64>,
    states: Vec<Vec<C64>>,
    cursor: usize,
}

impl SnapshotSink {
    fn new(times: &[f64]) -> Self {
        let mut sorted = times.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
        Self { times: sorted, states: Vec::new(), cursor: 0 }
    }

    fn drain_until(&mut self, t: f64, mut state_at: impl FnMut(f64) -> Vec<C64>) {
        while self.cursor < self.times.len() && self.times[self.cursor] <= t {
            let snap = state_at(self.times[self.cursor]);
            self.states.push(snap);
            self.cursor += 1;
        }
    }

    fn fill_remaining(&mut self, state: &[C64]) {
        while self.cursor < self.times.len() {
            self.states.push(state.to_vec());
            self.cursor += 1;
        }
    }
}

/// Run one trajectory from an explicit normalized initial state.
///
/// `snapshot_times` (may be empty) requests the normalized conditional state
/// at those times; the returned states line up with the sorted times.
pub fn run_trajectory_from(
    ops: &ModelOperators,
    space: &HilbertSpace,
    initial: &StateVector,
    config: &EvolutionConfig,
    master_seed: u64,
    index: u64,
    snapshot_times: &[f64],
) -> Result<(TrajectoryRecord, Vec<StateVector>)> {
    config.validate()?;
    initial.check_normalized(1e-10)?;
    ops.h_nh.check_dim(initial.dim())?;

    let mut rng = rng_for(master_seed, index);
    let mut snaps = SnapshotSink::new(snapshot_times);
    let h_blocks: Vec<SparseOperator> = (0..=space.max_excitations())
        .map(|k| ops.h_nh.restrict_to(space.sector(k)))
        .collect();
    let mut excitations = initial.max_occupied_sector(space, 1e-12);
    let mut walker = Walker {
        h_blocks: &h_blocks,
        sector: excitations as usize,
        dt: config.dt,
        scratch: Rk4Scratch::new(initial.dim()),
        amps: initial.amplitudes().to_vec(),
        t: 0.0,
    };
    let mut events = Vec::with_capacity(excitations as usize);
    let mut complete = true;

    while excitations > 0 {
        let threshold = draw_threshold(&mut rng);
        if !walker.advance_to_jump(threshold, config.t_max, &mut snaps) {
            complete = false;
            break;
        }
        let psi = StateVector::from_amplitudes(walker.amps.clone());
        let (rate_a, rate_b) = crate::dynamics::jump_rates(&psi, &ops.j_a, &ops.j_b);
        let total = rate_a + rate_b;
        if total <= 1e-300 {
            return Err(Error::DarkStateJump { rate: total });
        }
        let detector =
            if rng.random::<f64>() < rate_a / total { Detector::A } else { Detector::B };
        let jumped = crate::dynamics::apply_jump(&psi, ops.jump(detector))?;
        events.push(DetectionEvent { time: walker.t, detector });
        walker.amps = jumped.amplitudes().to_vec();
        excitations -= 1;
        walker.sector = excitations as usize;
    }

    let mut final_state = walker.amps.clone();
    normalize(&mut final_state);
    snaps.fill_remaining(&final_state);

    let record = TrajectoryRecord { index, master_seed, events, complete };
    let states = snaps.states.into_iter().map(StateVector::from_amplitudes).collect();
    Ok((record, states))
}

/// Run one trajectory of the standard experiment (both atoms excited).
pub fn run_trajectory(
    params: &SystemParams,
    master_seed: u64,
    index: u64,
    config: &EvolutionConfig,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    let space = params.space()?;
    let ops = ModelOperators::build(params, &space);
    let initial = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    run_trajectory_from(&ops, &space, &initial, config, master_seed, index, &[])
        .map(|(record, _)| record)
}

/// Aggregate statistics of an ensemble of two-photon records.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub n_requested: usize,
    pub n_complete: usize,
    pub n_incomplete: usize,
    pub n_same: usize,
    pub n_diff: usize,
    pub fraction_same: f64,
    pub fraction_diff: f64,
    pub mean_wait_same: f64,
    pub mean_wait_diff: f64,
}

impl EnsembleStats {
    pub fn from_records(records: &[TrajectoryRecord]) -> Self {
        let mut n_same = 0;
        let mut n_diff = 0;
        let mut wait_same = 0.0;
        let mut wait_diff = 0.0;
        let mut n_incomplete = 0;
        for record in records {
            match record.same_detector() {
                Some(true) => {
                    n_same += 1;
                    wait_same += record.events[1].time - record.events[0].time;
                }
                Some(false) => {
                    n_diff += 1;
                    wait_diff += record.events[1].time - record.events[0].time;
                }
                None => n_incomplete += 1,
            }
        }
        let n_complete = n_same + n_diff;
        Self {
            n_requested: records.len(),
            n_complete,
            n_incomplete,
            n_same,
            n_diff,
            fraction_same: n_same as f64 / n_complete.max(1) as f64,
            fraction_diff: n_diff as f64 / n_complete.max(1) as f64,
            mean_wait_same: wait_same / n_same.max(1) as f64,
            mean_wait_diff: wait_diff / n_diff.max(1) as f64,
        }
    }
}

/// Run `n` independent trajectories in parallel. Records come back in index
/// order, so the aggregation is deterministic for a given master seed.
pub fn run_ensemble(
    params: &SystemParams,
    n: usize,
    master_seed: u64,
    config: &EvolutionConfig,
) -> Result<Vec<TrajectoryRecord>> {
    params.validate()?;
    config.validate()?;
    let space = params.space()?;
    let ops = ModelOperators::build(params, &space);
    let initial = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            run_trajectory_from(&ops, &space, &initial, config, master_seed, i, &[])
                .map(|(record, _)| record)
        })
        .collect()
}

/// Ensemble-averaged density matrices at the requested times, for the
/// master-equation cross-check. Returns (snapshot times sorted, mean density
/// matrix per time, records).
pub fn run_ensemble_with_density(
    params: &SystemParams,
    n: usize,
    master_seed: u64,
    config: &EvolutionConfig,
    snapshot_times: &[f64],
) -> Result<(Vec<f64>, Vec<DensityMatrix>, Vec<TrajectoryRecord>)> {
    params.validate()?;
    config.validate()?;
    let space = params.space()?;
    let ops = ModelOperators::build(params, &space);
    let initial = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    let mut sorted = snapshot_times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));

    let per_trajectory: Vec<(TrajectoryRecord, Vec<StateVector>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| run_trajectory_from(&ops, &space, &initial, config, master_seed, i, &sorted))
        .collect::<Result<Vec<_>>>()?;

    let weight = 1.0 / n as f64;
    let mut densities = vec![DensityMatrix::zeros(space.dim()); sorted.len()];
    let mut records = Vec::with_capacity(n);
    for (record, states) in per_trajectory {
        for (k, state) in states.iter().enumerate() {
            densities[k].accumulate_pure(state.amplitudes(), weight);
        }
        records.push(record);
    }
    Ok((sorted, densities, records))
}

/// One click of an isolated atom-cavity system sampled by the same
/// norm-threshold method on the three-state model. Returns `None` when the
/// photon has not escaped by `t_max`.
fn sample_single_system_click(
    sys: &SingleSystem,
    config: &EvolutionConfig,
    rng: &mut ChaCha8Rng,
) -> Option<DetectionEvent> {
    let threshold = draw_threshold(rng);
    let mut psi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let mut t = 0.0;
    let norm3 = |p: &[C64; 3]| -> f64 { p.iter().map(|v| v.norm_sqr()).sum() };
    while t < config.t_max {
        let step = config.dt.min(config.t_max - t);
        let next = sys.rk4_step(&psi, step);
        if norm3(&next) <= threshold {
            let mut lo = 0.0;
            let mut hi = step;
            let mut at_hi = next;
            for _ in 0..4 {
                let mid = 0.5 * (lo + hi);
                let probe = sys.rk4_step(&psi, mid);
                if norm3(&probe) <= threshold {
                    hi = mid;
                    at_hi = probe;
                } else {
                    lo = mid;
                }
            }
            let (rate_a, rate_b) = sys.rates(&at_hi);
            let detector = if rng.random::<f64>() < rate_a / (rate_a + rate_b) {
                Detector::A
            } else {
                Detector::B
            };
            return Some(DetectionEvent { time: t + hi, detector });
        }
        psi = next;
        t += step;
    }
    None
}

/// Reference ensemble: pairs of clicks from two isolated atom-cavity
/// systems that share nothing but the clock.
pub fn run_independent_ensemble(
    params: &SystemParams,
    n: usize,
    master_seed: u64,
    config: &EvolutionConfig,
) -> Result<Vec<TrajectoryRecord>> {
    params.validate()?;
    config.validate()?;
    let left = SingleSystem::new(params.g_left(), params.delta, params.kappa);
    let right = SingleSystem::new(params.g_right(), params.delta, params.kappa);
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(master_seed, INDEPENDENT_STREAM_BASE | i);
            let click_l = sample_single_system_click(&left, config, &mut rng);
            let click_r = sample_single_system_click(&right, config, &mut rng);
            let (events, complete) = match (click_l, click_r) {
                (Some(a), Some(b)) => {
                    let (first, second) = if a.time <= b.time { (a, b) } else { (b, a) };
                    (vec![first, second], true)
                }
                (Some(a), None) | (None, Some(a)) => (vec![a], false),
                (None, None) => (Vec::new(), false),
            };
            TrajectoryRecord { index: i, master_seed, events, complete }
        })
        .collect())
}

/// Frequency histogram over [0, n_bins * bin_width).
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn collect(values: impl Iterator<Item = f64>, bin_width: f64, n_bins: usize) -> Self {
        let mut counts = vec![0u64; n_bins];
        for v in values {
            let bin = (v / bin_width).floor() as usize;
            if let Some(slot) = counts.get_mut(bin) {
                *slot += 1;
            }
        }
        Self { bin_width, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_left(&self, i: usize) -> f64 {
        i as f64 * self.bin_width
    }
}

/// Histograms of T1, T2 and the waiting time T2 - T1, each split by
/// detection class (same detector, different detectors, independent
/// baseline).
#[derive(Debug, Clone, Serialize)]
pub struct HistogramSet {
    pub bin_width: f64,
    pub t1_same: Histogram,
    pub t1_diff: Histogram,
    pub t1_indep: Histogram,
    pub t2_same: Histogram,
    pub t2_diff: Histogram,
    pub t2_indep: Histogram,
    pub wait_same: Histogram,
    pub wait_diff: Histogram,
    pub wait_indep: Histogram,
}

/// Bin the completed records of a coupled ensemble and an independent
/// reference ensemble. Default bin width is 0.5 cavity lifetimes.
pub fn build_histograms(
    coupled: &[TrajectoryRecord],
    independent: &[TrajectoryRecord],
    bin_width: f64,
    t_max: f64,
) -> Result<HistogramSet> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParams(format!("bin_width must be > 0, got {bin_width}")));
    }
    let n_bins = (t_max / bin_width).ceil() as usize;
    let completed = |records: &[TrajectoryRecord], same: Option<bool>| -> Vec<(f64, f64)> {
        records
            .iter()
            .filter(|r| same.is_none() || r.same_detector() == same)
            .filter_map(|r| match r.events.as_slice() {
                [a, b] => Some((a.time, b.time)),
                _ => None,
            })
            .collect()
    };
    let same = completed(coupled, Some(true));
    let diff = completed(coupled, Some(false));
    let indep = completed(independent, None);
    let hist = |pairs: &[(f64, f64)], pick: fn(&(f64, f64)) -> f64| {
        Histogram::collect(pairs.iter().map(pick), bin_width, n_bins)
    };
    Ok(HistogramSet {
        bin_width,
        t1_same: hist(&same, |p| p.0),
        t1_diff: hist(&diff, |p| p.0),
        t1_indep: hist(&indep, |p| p.0),
        t2_same: hist(&same, |p| p.1),
        t2_diff: hist(&diff, |p| p.1),
        t2_indep: hist(&indep, |p| p.1),
        wait_same: hist(&same, |p| p.1 - p.0),
        wait_diff: hist(&diff, |p| p.1 - p.0),
        wait_indep: hist(&indep, |p| p.1 - p.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::enumerate_basis;
    use approx::assert_abs_diff_eq;

    fn fig2a() -> SystemParams {
        SystemParams { g_mag: 0.25, delta: 0.5, ..SystemParams::default() }
    }

    fn config() -> EvolutionConfig {
        EvolutionConfig { dt: 1e-3, t_max: 40.0, output_stride: 10 }
    }

    #[test]
    fn records_are_bit_for_bit_reproducible() {
        let params = fig2a();
        let a = run_trajectory(&params, 7, 3, &config()).unwrap();
        let b = run_trajectory(&params, 7, 3, &config()).unwrap();
        assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.events.iter().zip(&b.events) {
            assert_eq!(x.time.to_bits(), y.time.to_bits());
            assert_eq!(x.detector, y.detector);
        }
    }

    #[test]
    fn different_streams_differ() {
        let params = fig2a();
        let a = run_trajectory(&params, 7, 0, &config()).unwrap();
        let b = run_trajectory(&params, 7, 1, &config()).unwrap();
        assert!(
            a.events.first().map(|e| e.time) != b.events.first().map(|e| e.time),
            "independent streams produced identical first clicks"
        );
    }

    #[test]
    fn completed_records_have_exactly_two_ordered_events() {
        let params = fig2a();
        let records = run_ensemble(&params, 64, 11, &config()).unwrap();
        for record in records.iter().filter(|r| r.complete) {
            assert_eq!(record.events.len(), 2);
            assert!(record.events[1].time > record.events[0].time);
        }
    }

    #[test]
    fn uncoupled_photon_in_a_leftward_mode_hits_detector_b() {
        // g = 0, one photon in mode 2: it can only leave through detector b.
        use crate::model::AtomState::Ground as G;
        let params = SystemParams { g_mag: 0.0, ..fig2a() };
        let space = enumerate_basis(2).unwrap();
        let ops = ModelOperators::build(&params, &space);
        let initial =
            StateVector::basis_ket(&space, BasisState::new(G, 0, 1, G, 0, 0)).unwrap();
        for index in 0..16 {
            let (record, _) = run_trajectory_from(
                &ops, &space, &initial, &config(), 5, index, &[],
            )
            .unwrap();
            assert!(record.complete);
            assert_eq!(record.events.len(), 1);
            assert_eq!(record.events[0].detector, Detector::B);
        }
    }

    #[test]
    fn ensemble_stats_partition_the_records() {
        let params = fig2a();
        let records = run_ensemble(&params, 256, 13, &config()).unwrap();
        let stats = EnsembleStats::from_records(&records);
        assert_eq!(stats.n_complete + stats.n_incomplete, stats.n_requested);
        assert_eq!(stats.n_same + stats.n_diff, stats.n_complete);
        assert_abs_diff_eq!(stats.fraction_same + stats.fraction_diff, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn histogram_mass_equals_completed_records() {
        let params = fig2a();
        let coupled = run_ensemble(&params, 128, 17, &config()).unwrap();
        let indep = run_independent_ensemble(&params, 128, 17, &config()).unwrap();
        let set = build_histograms(&coupled, &indep, 0.5, 40.0).unwrap();
        let n_same = coupled.iter().filter(|r| r.same_detector() == Some(true)).count() as u64;
        let n_diff = coupled.iter().filter(|r| r.same_detector() == Some(false)).count() as u64;
        let n_indep = indep.iter().filter(|r| r.complete).count() as u64;
        assert_eq!(set.t1_same.total(), n_same);
        assert_eq!(set.t1_diff.total(), n_diff);
        // Waiting times and second clicks can only fall outside the grid if
        // t_max does not cover it; here it does by construction.
        assert_eq!(set.wait_same.total(), n_same);
        assert_eq!(set.t2_indep.total(), n_indep);
    }

    #[test]
    fn marginal_click_density_matches_the_master_equation() {
        // Detector-a click counts per 0.5-wide bin vs the unconditional
        // rate kappa <(a1 + a3)^dag (a1 + a3)> integrated from the master
        // equation, within 3 sigma Poisson error per bin.
        use crate::dynamics::{evolve_master_equation, DensityMatrix};

        let params = fig2a();
        let n = 2000;
        let t_max = 10.0;
        let config = EvolutionConfig { dt: 1e-3, t_max, output_stride: 10 };
        let records = run_ensemble(&params, n, 29, &config).unwrap();

        let bin_width = 0.5;
        let n_bins = (t_max / bin_width) as usize;
        let mut observed = vec![0.0f64; n_bins];
        let mut first_a = 0usize;
        let mut first_b = 0usize;
        for record in &records {
            for event in &record.events {
                let bin = (event.time / bin_width) as usize;
                if event.detector == Detector::A {
                    if let Some(slot) = observed.get_mut(bin) {
                        *slot += 1.0;
                    }
                }
            }
            match record.events.first().map(|e| e.detector) {
                Some(Detector::A) => first_a += 1,
                Some(Detector::B) => first_b += 1,
                None => {}
            }
        }

        let space = params.space().unwrap();
        let ops = ModelOperators::build(&params, &space);
        let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited()).unwrap();
        let master = evolve_master_equation(
            &params,
            &space,
            &DensityMatrix::from_pure(&psi0),
            &config,
        )
        .unwrap();
        let jj_a = ops.j_a.dagger().compose(&ops.j_a);
        let rate: Vec<f64> =
            master.states.iter().map(|rho| rho.expectation(&jj_a).re).collect();
        for bin in 0..n_bins {
            let lo = bin as f64 * bin_width;
            let hi = lo + bin_width;
            let mut expected = 0.0;
            for (k, t) in master.times.iter().enumerate().skip(1) {
                let t_prev = master.times[k - 1];
                if t_prev >= lo && *t <= hi {
                    expected += 0.5 * (t - t_prev) * (rate[k - 1] + rate[k]);
                }
            }
            expected *= n as f64;
            let sigma = expected.sqrt();
            let diff = (observed[bin] - expected).abs();
            assert!(
                diff <= 3.0 * sigma + 3.0,
                "bin {bin}: observed {} expected {expected:.1} (3 sigma = {:.1})",
                observed[bin],
                3.0 * sigma
            );
        }

        // Mirror symmetry: the first click lands on either detector with
        // equal probability.
        let total = (first_a + first_b) as f64;
        let asymmetry = (first_a as f64 - first_b as f64).abs() / total;
        assert!(asymmetry < 4.0 / total.sqrt(), "first-click asymmetry {asymmetry}");
    }

    #[test]
    fn fraction_same_is_stationary_under_doubling() {
        let params = fig2a();
        let config = EvolutionConfig { dt: 1e-3, t_max: 30.0, output_stride: 10 };
        let small = EnsembleStats::from_records(&run_ensemble(&params, 1000, 41, &config).unwrap());
        let large = EnsembleStats::from_records(&run_ensemble(&params, 2000, 41, &config).unwrap());
        // Two-sigma band on the pooled estimator.
        let sigma = (0.25f64 / 1000.0 + 0.25 / 2000.0).sqrt();
        assert!(
            (small.fraction_same - large.fraction_same).abs() <= 2.0 * sigma,
            "{} vs {}",
            small.fraction_same,
            large.fraction_same
        );
    }

    #[test]
    fn parallel_and_serial_ensembles_agree() {
        let params = fig2a();
        let par = run_ensemble(&params, 32, 19, &config()).unwrap();
        let ser: Vec<TrajectoryRecord> = (0..32)
            .map(|i| run_trajectory(&params, 19, i, &config()).unwrap())
            .collect();
        for (a, b) in par.iter().zip(&ser) {
            assert_eq!(a.events.len(), b.events.len());
            for (x, y) in a.events.iter().zip(&b.events) {
                assert_eq!(x.time.to_bits(), y.time.to_bits());
                assert_eq!(x.detector, y.detector);
            }
        }
    }
}

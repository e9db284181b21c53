//! Batch experiment runner: every study maps to a subcommand that writes
//! CSV artifacts plus a JSON run manifest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coupled_cavities::dynamics::{
    early_time_model, evolve_nojump, EvolutionConfig, StateVector,
};
use coupled_cavities::entanglement::{entanglement_series, post_detection_run, PostDetectionInit};
use coupled_cavities::io::{write_csv, write_csv_strings, RunManifest};
use coupled_cavities::model::{
    BasisState, Detector, ModelOperators, SystemParams,
};
use coupled_cavities::observables::{
    equal_time_densities, independent_baseline, phi_sweep, SweepModel,
};
use coupled_cavities::trajectories::{
    build_histograms, run_ensemble, run_independent_ensemble, EnsembleStats, HistogramSet,
    TrajectoryRecord,
};
use coupled_cavities::{validate, Error, Result};

#[derive(Parser)]
#[command(
    name = "cavities",
    version,
    about = "Two coupled atom-cavity systems: detection statistics and entanglement"
)]
struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Defaults to $CAVITIES_OUT_DIR, then ".".
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equal-time joint detection densities plus the independent baseline.
    Densities(DensityArgs),
    /// Emission density of one isolated atom-cavity system.
    Baseline(CommonArgs),
    /// Detection densities at a fixed time versus the coupling phase.
    PhiSweep(PhiSweepArgs),
    /// The factorized nine-state model: amplitudes and exponential modes.
    EarlyTime(CommonArgs),
    /// Monte Carlo detection records and their summary statistics.
    Trajectories(EnsembleArgs),
    /// Detection-time histograms split by detection class.
    Histograms(HistogramArgs),
    /// Entanglement measures along the two-excitation no-jump evolution.
    Entropy(CommonArgs),
    /// Entanglement measures after the system is down to one excitation.
    PostDetection(PostDetectionArgs),
    /// Dump all operators as JSON triplet lists.
    ExportOperators(CommonArgs),
    /// Run the acceptance battery; nonzero exit on any failure.
    Validate,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Coupling magnitude |g| in units of kappa.
    #[arg(long)]
    g: Option<f64>,
    /// Coupling phase (accepts forms like 0.39, pi/8, -3pi/16).
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Atomic detuning in units of kappa (either sign).
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Cavity leakage rate (sets the time unit).
    #[arg(long)]
    kappa: Option<f64>,
    /// Coincidence window multiplying the joint densities.
    #[arg(long = "delta-t", alias = "deltaT")]
    delta_t: Option<f64>,
    /// Integrator step.
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon.
    #[arg(long)]
    tmax: Option<f64>,
    /// Record every n-th integrator step.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the no-jump amplitudes to this file.
    #[arg(long)]
    amplitudes: Option<PathBuf>,
}

#[derive(Args)]
struct PhiSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Evaluation time.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated phase list (e.g. "0,pi/16,pi/8,3pi/16,pi/4").
    #[arg(long)]
    phis: Option<String>,
    /// Which dynamics to evaluate.
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of trajectories.
    #[arg(long)]
    n: Option<usize>,
    /// Master seed; trajectory i uses random stream (seed, i).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct HistogramArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Histogram bin width in cavity lifetimes.
    #[arg(long = "bin-width")]
    bin_width: Option<f64>,
}

#[derive(Args)]
struct PostDetectionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial condition of the single-excitation run.
    #[arg(long, value_enum)]
    initial: Option<InitialChoice>,
    /// First-click time for the jump-* initial conditions (default: the
    /// most likely click time).
    #[arg(long = "jump-time")]
    jump_time: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelChoice {
    Full,
    Early,
    Taylor,
}

impl From<ModelChoice> for SweepModel {
    fn from(choice: ModelChoice) -> Self {
        match choice {
            ModelChoice::Full => SweepModel::Full,
            ModelChoice::Early => SweepModel::EarlyTime,
            ModelChoice::Taylor => SweepModel::EarlyTimeTaylor,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum InitialChoice {
    /// Left atom excited, cavities empty.
    LeftAtom,
    /// Detector-a jump applied to the two-excitation no-jump state.
    JumpA,
    /// Detector-b jump applied to the two-excitation no-jump state.
    JumpB,
}

/// Keys accepted in the flat key=value config file.
const KNOWN_KEYS: &[&str] = &[
    "g", "phi", "delta", "kappa", "delta_t", "dt", "tmax", "stride", "n", "seed", "bin_width",
    "t", "phis", "model", "initial", "jump_time",
];

struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!("line {}: expected key = value", lineno + 1))
                })?;
                let key = key.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(Error::Config(format!("unknown config key '{key}'")));
                }
                map.insert(key, value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("cannot parse config key '{key}' = '{raw}'"))),
        }
    }

    fn get_raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

/// Parse an angle written as a float or a multiple of pi ("pi/8", "3pi/16",
/// "-pi/4", "2pi").
fn parse_angle(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Config(format!("cannot parse angle '{text}'"));
    if let Ok(value) = text.parse::<f64>() {
        return Ok(value);
    }
    let (sign, rest) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text),
    };
    let (numerator, denominator) = match rest.split_once('/') {
        Some((n, d)) => (n, d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (rest, 1.0),
    };
    let numerator = numerator.trim();
    let coefficient = match numerator.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c.trim().parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(sign * coefficient * std::f64::consts::PI / denominator)
}

struct Resolved {
    params: SystemParams,
    evolution: EvolutionConfig,
}

impl CommonArgs {
    /// Merge command line over config file over defaults.
    fn resolve(&self, file: &FileConfig) -> Result<Resolved> {
        let defaults = SystemParams::default();
        let phi = match (&self.phi, file.get_raw("phi")) {
            (Some(text), _) => parse_angle(text)?,
            (None, Some(text)) => parse_angle(text)?,
            (None, None) => defaults.phi,
        };
        let params = SystemParams {
            g_mag: self.g.or(file.get("g")?).unwrap_or(defaults.g_mag),
            phi,
            delta: self.delta.or(file.get("delta")?).unwrap_or(defaults.delta),
            kappa: self.kappa.or(file.get("kappa")?).unwrap_or(defaults.kappa),
            delta_t: self.delta_t.or(file.get("delta_t")?).unwrap_or(defaults.delta_t),
            max_excitations: 2,
        };
        params.validate()?;
        let grid = EvolutionConfig::default();
        let evolution = EvolutionConfig {
            dt: self.dt.or(file.get("dt")?).unwrap_or(grid.dt),
            t_max: self.tmax.or(file.get("tmax")?).unwrap_or(grid.t_max),
            output_stride: self.stride.or(file.get("stride")?).unwrap_or(grid.output_stride),
        };
        evolution.validate()?;
        Ok(Resolved { params, evolution })
    }
}

fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn finish_manifest(mut manifest: RunManifest, started: Instant, dir: &Path, name: &str) -> Result<()> {
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    let path = out_path(dir, name);
    manifest.write(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn extra(pairs: &[(&str, serde_json::Value)]) -> serde_json::Map<String, serde_json::Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn run_densities(args: &DensityArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, evolution } = args.common.resolve(file)?;
    let space = params.space()?;
    let ops = ModelOperators::build(&params, &space);
    let psi0 = StateVector::basis_ket(&space, BasisState::both_atoms_excited())?;
    let solution = evolve_nojump(&ops.h_nh, &psi0, &evolution)?;
    let densities = equal_time_densities(&solution, &params, &space)?;
    let baseline = independent_baseline(&params, &evolution)?;

    let manifest = RunManifest::new("densities", &params, &evolution, None, Default::default());
    let csv = out_path(dir, "densities.csv");
    write_csv(
        &csv,
        &manifest.hash,
        &["t", "p2", "p11", "baseline"],
        densities.times.iter().enumerate().map(|(i, t)| {
            vec![*t, densities.p2[i], densities.p11[i], baseline.product[i]]
        }),
    )?;
    println!("wrote {}", csv.display());

    if let Some(amp_path) = &args.amplitudes {
        let mut columns: Vec<String> = vec!["t".into()];
        for state in space.states() {
            columns.push(format!("re[{state}]"));
            columns.push(format!("im[{state}]"));
        }
        columns.push("survival".into());
        let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let path = dir.join(amp_path);
        write_csv(
            &path,
            &manifest.hash,
            &column_refs,
            solution.times.iter().enumerate().map(|(i, t)| {
                let mut row = Vec::with_capacity(columns.len());
                row.push(*t);
                for amp in solution.states[i].amplitudes() {
                    row.push(amp.re);
                    row.push(amp.im);
                }
                row.push(solution.survival[i]);
                row
            }),
        )?;
        println!("wrote {}", path.display());
    }
    finish_manifest(manifest, started, dir, "densities_manifest.json")
}

fn run_baseline(args: &CommonArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, evolution } = args.resolve(file)?;
    let baseline = independent_baseline(&params, &evolution)?;
    let manifest = RunManifest::new("baseline", &params, &evolution, None, Default::default());
    let csv = out_path(dir, "baseline.csv");
    write_csv(
        &csv,
        &manifest.hash,
        &["t", "emission", "product"],
        baseline
            .times
            .iter()
            .enumerate()
            .map(|(i, t)| vec![*t, baseline.emission[i], baseline.product[i]]),
    )?;
    println!("wrote {}", csv.display());
    finish_manifest(manifest, started, dir, "baseline_manifest.json")
}

fn run_phi_sweep(args: &PhiSweepArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, evolution } = args.common.resolve(file)?;
    let t_fixed = args.t.or(file.get("t")?).unwrap_or(0.4);
    let phis_text = args
        .phis
        .clone()
        .or(file.get_raw("phis").map(str::to_string))
        .unwrap_or_else(|| "0,pi/16,pi/8,3pi/16,pi/4".to_string());
    let phis = phis_text
        .split(',')
        .map(parse_angle)
        .collect::<Result<Vec<f64>>>()?;
    let model_choice = args.model.or(match file.get_raw("model") {
        None => None,
        Some("full") => Some(ModelChoice::Full),
        Some("early") => Some(ModelChoice::Early),
        Some("taylor") => Some(ModelChoice::Taylor),
        Some(other) => return Err(Error::Config(format!("unknown model '{other}'"))),
    });
    let model: SweepModel = model_choice.unwrap_or(ModelChoice::Full).into();
    let sweep_evolution = EvolutionConfig { t_max: t_fixed, ..evolution };
    let points = phi_sweep(&params, &phis, t_fixed, model, &sweep_evolution)?;

    let manifest = RunManifest::new(
        "phi-sweep",
        &params,
        &sweep_evolution,
        None,
        extra(&[
            ("t_fixed", t_fixed.into()),
            ("phis", serde_json::json!(phis)),
            ("model", serde_json::json!(format!("{model:?}"))),
        ]),
    );
    let csv = out_path(dir, "phi_sweep.csv");
    write_csv(
        &csv,
        &manifest.hash,
        &["phi", "p2", "p11"],
        points.iter().map(|p| vec![p.phi, p.p2, p.p11]),
    )?;
    println!("wrote {}", csv.display());
    finish_manifest(manifest, started, dir, "phi_sweep_manifest.json")
}

fn run_early_time(args: &CommonArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, evolution } = args.resolve(file)?;
    let solution = early_time_model(&params, &evolution)?;
    let manifest = RunManifest::new("early-time", &params, &evolution, None, Default::default());

    let mut columns: Vec<String> = vec!["t".into()];
    for k in 1..=9 {
        columns.push(format!("re_d{k}"));
        columns.push(format!("im_d{k}"));
    }
    columns.push("p2_early".into());
    columns.push("p11_early".into());
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let k2 = params.kappa * params.kappa;
    let csv = out_path(dir, "early_time.csv");
    write_csv(
        &csv,
        &manifest.hash,
        &column_refs,
        solution.times.iter().enumerate().map(|(i, t)| {
            let d = &solution.amplitudes[i];
            let mut row = Vec::with_capacity(columns.len());
            row.push(*t);
            for amp in d {
                row.push(amp.re);
                row.push(amp.im);
            }
            row.push(4.0 * k2 * d[5].norm_sqr() * params.delta_t);
            row.push(k2 * (d[6] + d[7]).norm_sqr() * params.delta_t);
            row
        }),
    )?;
    println!("wrote {}", csv.display());

    let modes_json = serde_json::json!({
        "d6": mode_list(&solution.modes.d6),
        "d7": mode_list(&solution.modes.d7),
        "d8": mode_list(&solution.modes.d8),
        "second_order_d6": [solution.modes.second_order_d6.re, solution.modes.second_order_d6.im],
        "second_order_d7_plus_d8": [
            solution.modes.second_order_d7_plus_d8.re,
            solution.modes.second_order_d7_plus_d8.im,
        ],
    });
    let modes_path = out_path(dir, "early_time_modes.json");
    std::fs::write(&modes_path, serde_json::to_string_pretty(&modes_json).unwrap() + "\n")?;
    println!("wrote {}", modes_path.display());
    finish_manifest(manifest, started, dir, "early_time_manifest.json")
}

fn mode_list(modes: &[coupled_cavities::dynamics::ExponentialMode]) -> serde_json::Value {
    serde_json::json!(modes
        .iter()
        .map(|m| {
            serde_json::json!({
                "lambda": [m.lambda.re, m.lambda.im],
                "alpha": [m.alpha.re, m.alpha.im],
            })
        })
        .collect::<Vec<_>>())
}

fn write_records(
    path: &Path,
    manifest_hash: &str,
    records: &[TrajectoryRecord],
) -> Result<()> {
    write_csv_strings(
        path,
        manifest_hash,
        &["index", "t1", "det1", "t2", "det2"],
        records.iter().filter(|r| r.events.len() == 2).map(|r| {
            vec![
                r.index.to_string(),
                format!("{:.12e}", r.events[0].time),
                r.events[0].detector.label().to_string(),
                format!("{:.12e}", r.events[1].time),
                r.events[1].detector.label().to_string(),
            ]
        }),
    )
}

fn run_trajectories(args: &EnsembleArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, mut evolution } = args.common.resolve(file)?;
    if args.common.tmax.is_none() && file.get_raw("tmax").is_none() {
        evolution.t_max = 40.0;
    }
    let n = args.n.or(file.get("n")?).unwrap_or(20_000);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(7);
    let records = run_ensemble(&params, n, seed, &evolution)?;
    let stats = EnsembleStats::from_records(&records);

    let manifest = RunManifest::new(
        "trajectories",
        &params,
        &evolution,
        Some(seed),
        extra(&[("n", n.into())]),
    );
    let records_path = out_path(dir, "records.csv");
    write_records(&records_path, &manifest.hash, &records)?;
    println!("wrote {}", records_path.display());

    let stats_path = out_path(dir, "stats.json");
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats).unwrap() + "\n")?;
    println!("wrote {}", stats_path.display());
    println!(
        "fraction_same = {:.4}, fraction_diff = {:.4} ({} complete, {} incomplete)",
        stats.fraction_same, stats.fraction_diff, stats.n_complete, stats.n_incomplete
    );
    finish_manifest(manifest, started, dir, "trajectories_manifest.json")
}

fn write_histogram_csv(
    path: &Path,
    hash: &str,
    same: &coupled_cavities::trajectories::Histogram,
    diff: &coupled_cavities::trajectories::Histogram,
    indep: &coupled_cavities::trajectories::Histogram,
) -> Result<()> {
    write_csv(
        path,
        hash,
        &["bin_left", "count_same", "count_diff", "count_indep"],
        (0..same.counts.len()).map(|i| {
            vec![
                same.bin_left(i),
                same.counts[i] as f64,
                diff.counts[i] as f64,
                indep.counts[i] as f64,
            ]
        }),
    )
}

fn run_histograms(args: &HistogramArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, mut evolution } = args.ensemble.common.resolve(file)?;
    if args.ensemble.common.tmax.is_none() && file.get_raw("tmax").is_none() {
        evolution.t_max = 40.0;
    }
    let n = args.ensemble.n.or(file.get("n")?).unwrap_or(20_000);
    let seed = args.ensemble.seed.or(file.get("seed")?).unwrap_or(7);
    let bin_width = args.bin_width.or(file.get("bin_width")?).unwrap_or(0.5);
    let coupled = run_ensemble(&params, n, seed, &evolution)?;
    let independent = run_independent_ensemble(&params, n, seed, &evolution)?;
    let set: HistogramSet = build_histograms(&coupled, &independent, bin_width, evolution.t_max)?;

    let manifest = RunManifest::new(
        "histograms",
        &params,
        &evolution,
        Some(seed),
        extra(&[("n", n.into()), ("bin_width", bin_width.into())]),
    );
    for (name, same, diff, indep) in [
        ("hist_t1.csv", &set.t1_same, &set.t1_diff, &set.t1_indep),
        ("hist_t2.csv", &set.t2_same, &set.t2_diff, &set.t2_indep),
        ("hist_wait.csv", &set.wait_same, &set.wait_diff, &set.wait_indep),
    ] {
        let path = out_path(dir, name);
        write_histogram_csv(&path, &manifest.hash, same, diff, indep)?;
        println!("wrote {}", path.display());
    }
    let stats = EnsembleStats::from_records(&coupled);
    let stats_path = out_path(dir, "stats.json");
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats).unwrap() + "\n")?;
    println!("wrote {}", stats_path.display());
    finish_manifest(manifest, started, dir, "histograms_manifest.json")
}

fn write_entanglement_csv(
    path: &Path,
    hash: &str,
    series: &coupled_cavities::entanglement::EntanglementSeries,
) -> Result<()> {
    write_csv(
        path,
        hash,
        &["t", "survival", "entropy", "concurrence", "negativity_atoms", "negativity_lr"],
        series.times.iter().enumerate().map(|(i, t)| {
            vec![
                *t,
                series.survival[i],
                series.entropy[i],
                series.concurrence[i],
                series.negativity_atoms[i],
                series.negativity_lr[i],
            ]
        }),
    )
}

fn run_entropy(args: &CommonArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, mut evolution } = args.resolve(file)?;
    if args.stride.is_none() && file.get_raw("stride").is_none() {
        evolution.output_stride = 50;
    }
    let series = entanglement_series(&params, &evolution)?;
    let manifest = RunManifest::new("entropy", &params, &evolution, None, Default::default());
    let csv = out_path(dir, "entanglement.csv");
    write_entanglement_csv(&csv, &manifest.hash, &series)?;
    println!("wrote {}", csv.display());
    finish_manifest(manifest, started, dir, "entropy_manifest.json")
}

fn run_post_detection(args: &PostDetectionArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, mut evolution } = args.common.resolve(file)?;
    if args.common.stride.is_none() && file.get_raw("stride").is_none() {
        evolution.output_stride = 50;
    }
    let choice = args.initial.or(match file.get_raw("initial") {
        None => None,
        Some("left-atom") => Some(InitialChoice::LeftAtom),
        Some("jump-a") => Some(InitialChoice::JumpA),
        Some("jump-b") => Some(InitialChoice::JumpB),
        Some(other) => return Err(Error::Config(format!("unknown initial condition '{other}'"))),
    });
    let jump_time = args.jump_time.or(file.get("jump_time")?);
    let init = match choice.unwrap_or(InitialChoice::LeftAtom) {
        InitialChoice::LeftAtom => PostDetectionInit::LeftAtomExcited,
        InitialChoice::JumpA => {
            PostDetectionInit::FirstJump { detector: Detector::A, time: jump_time }
        }
        InitialChoice::JumpB => {
            PostDetectionInit::FirstJump { detector: Detector::B, time: jump_time }
        }
    };
    let series = post_detection_run(&params, &init, &evolution)?;
    let manifest = RunManifest::new(
        "post-detection",
        &params,
        &evolution,
        None,
        extra(&[
            ("initial", serde_json::json!(choice.unwrap_or(InitialChoice::LeftAtom))),
            ("jump_time", serde_json::json!(jump_time)),
        ]),
    );
    let csv = out_path(dir, "post_detection.csv");
    write_entanglement_csv(&csv, &manifest.hash, &series)?;
    println!("wrote {}", csv.display());
    finish_manifest(manifest, started, dir, "post_detection_manifest.json")
}

fn run_export_operators(args: &CommonArgs, file: &FileConfig, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let Resolved { params, evolution } = args.resolve(file)?;
    let space = params.space()?;
    let ops = ModelOperators::build(&params, &space);
    let manifest =
        RunManifest::new("export-operators", &params, &evolution, None, Default::default());
    let json = serde_json::json!({
        "basis": space.states().iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        "h_s": ops.h_s.to_json(),
        "h_nh": ops.h_nh.to_json(),
        "h_unconditional": ops.h_unconditional.to_json(),
        "j_a": ops.j_a.to_json(),
        "j_b": ops.j_b.to_json(),
    });
    let path = out_path(dir, "operators.json");
    std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap() + "\n")?;
    println!("wrote {}", path.display());
    finish_manifest(manifest, started, dir, "operators_manifest.json")
}

fn run_validate() -> Result<()> {
    let reports = validate::run_all();
    let mut all_passed = true;
    for report in &reports {
        println!("{}", report.line());
        all_passed &= report.passed;
    }
    if all_passed {
        println!("all {} criteria passed", reports.len());
        Ok(())
    } else {
        Err(Error::Internal("acceptance criteria failed".into()))
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let dir = cli
        .out_dir
        .or_else(|| std::env::var_os("CAVITIES_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    match &cli.command {
        Command::Densities(args) => run_densities(args, &file, &dir),
        Command::Baseline(args) => run_baseline(args, &file, &dir),
        Command::PhiSweep(args) => run_phi_sweep(args, &file, &dir),
        Command::EarlyTime(args) => run_early_time(args, &file, &dir),
        Command::Trajectories(args) => run_trajectories(args, &file, &dir),
        Command::Histograms(args) => run_histograms(args, &file, &dir),
        Command::Entropy(args) => run_entropy(args, &file, &dir),
        Command::PostDetection(args) => run_post_detection(args, &file, &dir),
        Command::ExportOperators(args) => run_export_operators(args, &file, &dir),
        Command::Validate => run_validate(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

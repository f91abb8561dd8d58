//! Configuration-driven runs: single simulations, parameter sweeps,
//! phase-jitter ensembles, master-equation checks, and result persistence.
//!
//! Every entry point validates the whole configuration before computing, does
//! all computation in memory, and only then writes files (each one atomically)
//! followed by a `manifest.json` listing every file in the output directory
//! with its SHA-256.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, ExcitationBasis};
use crate::config::{SimulationConfig, SweepAxis};
use crate::dynamics::{
    make_initial_state, propagation_residual, AmplitudeTrajectory, InitialStateSpec, PropagationMethod, Propagator,
};
use crate::error::{Error, Result};
use crate::figures::{emit_figures, CORRELATIONS_CSV, POPULATIONS_CSV, SWEEP_CSV, THIRD_ORDER_CSV};
use crate::io::{fmt_f64, sha256_file, write_atomic, write_json};
use crate::kernel::{build_kernel, CouplingParams, InteractionKernel};
use crate::observables::{
    detect_tc, diffusion_speed, moment_series, participation_entropy, population_field, CorrelationSeries,
    DiffusionSpeed, Normalization, PopulationField, RoutingRecord,
};
use crate::oracle::{build_liouvillian, oracle_compare_with, DensityEvolver, OracleReport, PhaseConvention};

pub const MANIFEST: &str = "manifest.json";
pub const METADATA: &str = "metadata.json";

fn normalization(config: &SimulationConfig) -> Normalization {
    if config.output.renormalize {
        Normalization::Renormalized
    } else {
        Normalization::Raw
    }
}

/// `P_N(t)` at the last site. With raw populations and no need for the full
/// field, only the amplitudes of states occupying the last site are evolved.
fn end_site_series(
    propagator: &Propagator,
    basis: &ExcitationBasis,
    a0: &Array1<C64>,
    times: &[f64],
    norm: Normalization,
) -> Result<Vec<f64>> {
    let n = basis.n_sites();
    if norm == Normalization::Raw {
        let rows: Vec<usize> = (0..basis.dim()).filter(|&i| basis.state(i).contains(n)).collect();
        let amps = propagator.evolve_components(a0, times, &rows)?;
        return Ok(amps.rows().into_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect());
    }
    let traj = propagator.evolve(a0, times)?;
    Ok(population_field(times, &moment_series(&traj, basis, norm)?).site(n))
}

/// Wall-clock seconds spent in each stage.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub kernel: f64,
    pub propagation: f64,
    pub observables: f64,
    pub residual: f64,
    pub total: f64,
}

/// In-memory result of one configured simulation.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub params: CouplingParams,
    pub basis: ExcitationBasis,
    pub kernel: InteractionKernel,
    pub initial: Array1<C64>,
    pub trajectory: AmplitudeTrajectory,
    pub populations: Option<PopulationField>,
    pub correlations: Option<CorrelationSeries>,
    pub routing: Option<RoutingRecord>,
    pub speed: Option<DiffusionSpeed>,
    pub entropy: f64,
    pub residual: Option<f64>,
    pub timings: Timings,
}

/// Runs the configured simulation without touching the filesystem.
pub fn simulate(config: &SimulationConfig) -> Result<Simulation> {
    config.validate()?;
    let start = Instant::now();
    let params = config.coupling()?;
    let basis = enumerate_basis(params.n_sites, params.n_excitations)?;
    let kernel = build_kernel(&basis, &params)?;
    let mut timings = Timings {
        kernel: start.elapsed().as_secs_f64(),
        ..Timings::default()
    };

    let clock = Instant::now();
    let a0 = make_initial_state(&basis, &config.initial)?;
    let times = config.time.times();
    let trajectory = Propagator::new(&kernel)?.evolve(&a0, &times)?;
    timings.propagation = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let obs = &config.observables;
    let needs_moments = obs.populations || obs.correlations || obs.third_order || obs.routing || obs.speed;
    let (mut populations, mut correlations) = (None, None);
    if needs_moments {
        let moments = moment_series(&trajectory, &basis, normalization(config))?;
        populations = Some(population_field(&times, &moments));
        if obs.correlations || obs.third_order {
            let mut c = CorrelationSeries::from_moments(&times, &moments)?;
            if !obs.correlations {
                c.g2.clear();
            }
            if !obs.third_order {
                c.g3.clear();
            }
            correlations = Some(c);
        }
    }
    let entropy = participation_entropy(&a0)?;
    let field = populations.as_ref();
    let routing = match field.filter(|_| obs.routing) {
        Some(f) => Some(detect_tc(&times, &f.site(params.n_sites), config.output.refine_tc)?.with_entropy(entropy)),
        None => None,
    };
    let speed = match field.filter(|_| obs.speed) {
        Some(f) => Some(diffusion_speed(f, obs.speed_threshold)?),
        None => None,
    };
    if !obs.populations {
        populations = None;
    }
    timings.observables = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let residual = if config.output.residual {
        Some(propagation_residual(&kernel, &trajectory)?)
    } else {
        None
    };
    timings.residual = clock.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    Ok(Simulation {
        params,
        basis,
        kernel,
        initial: a0,
        trajectory,
        populations,
        correlations,
        routing,
        speed,
        entropy,
        residual,
        timings,
    })
}

/// Provenance written next to the data of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub version: String,
    pub config: SimulationConfig,
    pub params: CouplingParams,
    pub dim: usize,
    pub method: Option<PropagationMethod>,
    pub residual: Option<f64>,
    pub final_norm: Option<f64>,
    pub entropy: Option<f64>,
    pub timings: Timings,
    pub warnings: Vec<String>,
}

impl RunMetadata {
    fn new(command: &str, config: &SimulationConfig, params: CouplingParams) -> Self {
        RunMetadata {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            params,
            dim: 0,
            method: None,
            residual: None,
            final_norm: None,
            entropy: None,
            timings: Timings::default(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    /// Deterministic for a fixed configuration.
    Data,
    /// Run provenance (contains wall times).
    Metadata,
    Figure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: FileKind,
    pub bytes: u64,
    pub sha256: String,
}

/// Inventory of an output directory. `manifest.json` itself is not listed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn entry(&self, path: &str) -> Option<&ManifestEntry> {
        self.files.iter().find(|e| e.path == path)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

fn kind_of(path: &str) -> FileKind {
    if path.ends_with(".svg") {
        FileKind::Figure
    } else if matches!(path, METADATA | "trajectory.json" | "config.toml") {
        FileKind::Metadata
    } else {
        FileKind::Data
    }
}

/// Hashes every file under `dir` and writes `manifest.json`.
pub fn write_manifest(dir: &Path, warnings: Vec<String>) -> Result<Manifest> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut entries = Vec::with_capacity(files.len());
    for rel in files {
        let path = dir.join(&rel);
        let bytes = std::fs::metadata(&path).map_err(|e| Error::io(&path, e))?.len();
        entries.push(ManifestEntry {
            kind: kind_of(&rel),
            bytes,
            sha256: sha256_file(&path)?,
            path: rel,
        });
    }
    let manifest = Manifest {
        files: entries,
        warnings,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() {
            collect_files(root, &path, out)?;
            continue;
        }
        // skip in-flight temp files of the atomic writer
        if name.starts_with('.') && name.ends_with(".tmp") {
            continue;
        }
        let rel: Vec<String> = path
            .strip_prefix(root)
            .expect("walked from root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let rel = rel.join("/");
        if rel != MANIFEST {
            out.push(rel);
        }
    }
    Ok(())
}

/// A finished run: what was computed and where it was written.
#[derive(Clone, Debug)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub simulation: Simulation,
    pub metadata: RunMetadata,
    pub manifest: Manifest,
}

/// Simulates `config` and writes every requested output under `output.dir`.
pub fn run(config: &SimulationConfig) -> Result<ResultBundle> {
    let sim = simulate(config)?;
    let dir = config.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    if let Some(p) = &sim.populations {
        p.write_csv(&dir.join(POPULATIONS_CSV))?;
    }
    if let Some(c) = &sim.correlations {
        if !c.g2.is_empty() {
            c.write_g2_csv(&dir.join(CORRELATIONS_CSV))?;
        }
        if !c.g3.is_empty() {
            c.write_g3_csv(&dir.join(THIRD_ORDER_CSV))?;
        }
    }
    if let Some(r) = &sim.routing {
        r.write_json(&dir.join("routing.json"))?;
    }
    if let Some(s) = &sim.speed {
        write_json(&dir.join("speed.json"), s)?;
    }
    if config.observables.trajectory {
        sim.trajectory.write_csv(&dir.join("trajectory.csv"))?;
        sim.trajectory
            .metadata(&sim.params, sim.residual, sim.timings.propagation)
            .write_json(&dir.join("trajectory.json"))?;
    }
    if config.output.kernel {
        sim.kernel.write_csv(&dir.join("kernel.csv"))?;
    }
    if config.output.basis {
        let states: Vec<&[usize]> = sim.basis.states().iter().map(|s| s.sites()).collect();
        write_json(&dir.join("basis.json"), &states)?;
    }
    write_atomic(&dir.join("config.toml"), config.to_toml_string()?.as_bytes())?;

    let mut warnings = sim.trajectory.warnings.clone();
    if sim.entropy.is_nan() {
        warnings.push("initial-state entropy undefined".to_owned());
    }
    if sim.routing.as_ref().is_some_and(|r| r.t_c.is_none()) {
        warnings.push("end-site population is identically zero; t_c undefined".to_owned());
    }
    let mut metadata = RunMetadata::new("run", config, sim.params.clone());
    metadata.dim = sim.basis.dim();
    metadata.method = Some(sim.trajectory.method.clone());
    metadata.residual = sim.residual;
    metadata.final_norm = sim.trajectory.norms.last().copied();
    metadata.entropy = Some(sim.entropy);
    metadata.timings = sim.timings.clone();
    metadata.warnings = warnings;
    write_json(&dir.join(METADATA), &metadata)?;

    let mut manifest_warnings = Vec::new();
    if config.output.figures {
        manifest_warnings = emit_figures(&dir)?.warnings;
    }
    let manifest = write_manifest(&dir, manifest_warnings)?;
    Ok(ResultBundle {
        dir,
        simulation: sim,
        metadata,
        manifest,
    })
}

/// Re-renders figures from the data already in `dir` and refreshes the manifest.
pub fn figures(dir: &Path) -> Result<Manifest> {
    if !dir.is_dir() {
        return Err(Error::arg(format!("{} is not a result directory", dir.display())));
    }
    let report = emit_figures(dir)?;
    write_manifest(dir, report.warnings)
}

/// One evaluated sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Directionality of the series this point belongs to.
    pub series_d: f64,
    pub value: f64,
    pub routing: RoutingRecord,
    pub entropy: f64,
    /// NaN when the front tracker is disabled or degenerate.
    pub speed: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    /// Points of one directionality series, in sweep order.
    pub fn series(&self, d: f64) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.series_d == d).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = format!("series_d,{},t_c,p_max,entropy,speed\n", self.axis.label());
        for p in &self.points {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(p.series_d),
                fmt_f64(p.value),
                fmt_f64(p.routing.t_c.unwrap_or(f64::NAN)),
                fmt_f64(p.routing.p_max),
                fmt_f64(p.entropy),
                fmt_f64(p.speed)
            ));
        }
        write_atomic(path, text.as_bytes())
    }
}

struct Job {
    series_d: f64,
    value: f64,
    params: CouplingParams,
    initial: InitialStateSpec,
}

fn sweep_jobs(config: &SimulationConfig) -> Result<(SweepAxis, Vec<Job>)> {
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Validation(vec!["the sweep command needs a [sweep] table".to_owned()]))?;
    let base = config.coupling()?;
    let series = match (spec.axis, &spec.d_values) {
        (SweepAxis::D, _) | (_, None) => vec![base.directionality],
        (_, Some(ds)) => ds.clone(),
    };
    let mut jobs = Vec::new();
    for &d in &series {
        for value in spec.points() {
            let mut params = CouplingParams {
                directionality: d,
                ..base.clone()
            };
            let mut initial = config.initial.clone();
            let mut series_d = d;
            match spec.axis {
                SweepAxis::Theta => {
                    if let InitialStateSpec::ThetaPhi { theta, .. } = &mut initial {
                        *theta = value;
                    }
                }
                SweepAxis::D => {
                    params.directionality = value;
                    series_d = base.directionality;
                }
                SweepAxis::Xi => params.xi = value,
                SweepAxis::XiOverPi => params.xi = value * PI,
            }
            jobs.push(Job {
                series_d,
                value,
                params,
                initial,
            });
        }
    }
    Ok((spec.axis, jobs))
}

/// Evaluates the sweep in memory. Points sharing a kernel share its propagator.
pub fn compute_sweep(config: &SimulationConfig) -> Result<SweepResult> {
    config.validate()?;
    let (axis, jobs) = sweep_jobs(config)?;
    let basis = enumerate_basis(config.params.n_sites, config.params.n_excitations)?;

    let mut keys: Vec<(f64, f64)> = Vec::new();
    let job_key: Vec<usize> = jobs
        .iter()
        .map(|j| {
            let key = (j.params.directionality, j.params.xi);
            keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                keys.push(key);
                keys.len() - 1
            })
        })
        .collect();
    let base = config.coupling()?;
    let propagators: Vec<Propagator> = keys
        .par_iter()
        .map(|&(d, xi)| {
            let params = CouplingParams {
                directionality: d,
                xi,
                ..base.clone()
            };
            Propagator::new(&build_kernel(&basis, &params)?)
        })
        .collect::<Result<_>>()?;

    let times = config.time.times();
    let n = config.params.n_sites;
    let norm = normalization(config);
    let obs = &config.observables;
    let points: Vec<SweepPoint> = jobs
        .par_iter()
        .zip(job_key.par_iter())
        .map(|(job, &key)| {
            let a0 = make_initial_state(&basis, &job.initial)?;
            let entropy = participation_entropy(&a0)?;
            let (end_site, speed) = if obs.speed {
                let traj = propagators[key].evolve(&a0, &times)?;
                let field = population_field(&times, &moment_series(&traj, &basis, norm)?);
                (field.site(n), diffusion_speed(&field, obs.speed_threshold)?.speed)
            } else {
                (end_site_series(&propagators[key], &basis, &a0, &times, norm)?, f64::NAN)
            };
            let routing = detect_tc(&times, &end_site, config.output.refine_tc)?.with_entropy(entropy);
            Ok(SweepPoint {
                series_d: job.series_d,
                value: job.value,
                routing,
                entropy,
                speed,
            })
        })
        .collect::<Result<_>>()?;

    let mut warnings: Vec<String> = propagators.iter().flat_map(|p| p.warnings().to_vec()).collect();
    warnings.dedup();
    Ok(SweepResult {
        axis,
        points,
        warnings,
    })
}

/// Runs the sweep and writes `sweep.csv`, metadata, figures and manifest.
pub fn sweep(config: &SimulationConfig) -> Result<SweepResult> {
    let start = Instant::now();
    let result = compute_sweep(config)?;
    let dir = &config.output.dir;
    result.write_csv(&dir.join(SWEEP_CSV))?;
    write_atomic(&dir.join("config.toml"), config.to_toml_string()?.as_bytes())?;
    let mut metadata = RunMetadata::new("sweep", config, config.coupling()?);
    metadata.dim = crate::basis::binomial(config.params.n_sites, config.params.n_excitations) as usize;
    metadata.timings.total = start.elapsed().as_secs_f64();
    metadata.warnings = result.warnings.clone();
    write_json(&dir.join(METADATA), &metadata)?;
    let warnings = if config.output.figures {
        emit_figures(dir)?.warnings
    } else {
        Vec::new()
    };
    write_manifest(dir, warnings)?;
    Ok(result)
}

/// One perturbed initial state of a jitter ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterSample {
    pub theta: f64,
    pub phi: f64,
    pub t_c: Option<f64>,
    pub p_max: f64,
}

/// Spread of `t_c` over an ensemble of phase-perturbed initial states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterReport {
    pub theta: f64,
    pub phi: f64,
    pub sigma_theta: f64,
    pub sigma_phi: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// `t_c` of the unperturbed state.
    pub baseline_t_c: Option<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; 0 for one sample).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// `max - min`.
    pub spread: f64,
    pub relative_std: f64,
    pub max_relative_std: Option<f64>,
    pub within_bound: Option<bool>,
    /// Samples whose end-site population never rose above zero.
    pub undefined: usize,
    #[serde(skip)]
    pub samples: Vec<JitterSample>,
}

/// Draws the perturbed `(theta, phi)` pairs. Both normals are always drawn so
/// the `theta` stream does not depend on `sigma_phi`.
pub fn jitter_angles(theta: f64, phi: f64, sigma_theta: f64, sigma_phi: f64, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let zt: f64 = StandardNormal.sample(&mut rng);
            let zp: f64 = StandardNormal.sample(&mut rng);
            (theta + sigma_theta * zt, phi + sigma_phi * zp)
        })
        .collect()
}

/// Evaluates the jitter ensemble in memory.
pub fn compute_jitter(config: &SimulationConfig) -> Result<JitterReport> {
    config.validate()?;
    let spec = config
        .jitter
        .as_ref()
        .ok_or_else(|| Error::Validation(vec!["the jitter command needs a [jitter] table".to_owned()]))?;
    let InitialStateSpec::ThetaPhi { j, phi, theta } = config.initial else {
        unreachable!("validated as theta_phi");
    };
    let params = config.coupling()?;
    let basis = enumerate_basis(params.n_sites, params.n_excitations)?;
    let propagator = Propagator::new(&build_kernel(&basis, &params)?)?;
    let times = config.time.times();
    let norm = normalization(config);
    let evaluate = |theta: f64, phi: f64| -> Result<JitterSample> {
        let a0 = make_initial_state(&basis, &InitialStateSpec::ThetaPhi { j, phi, theta })?;
        let end_site = end_site_series(&propagator, &basis, &a0, &times, norm)?;
        let r = detect_tc(&times, &end_site, config.output.refine_tc)?;
        Ok(JitterSample {
            theta,
            phi,
            t_c: r.t_c,
            p_max: r.p_max,
        })
    };

    let baseline = evaluate(theta, phi)?;
    let angles = jitter_angles(theta, phi, spec.sigma_theta, spec.sigma_phi, spec.n_samples, spec.seed);
    let samples: Vec<JitterSample> = angles
        .par_iter()
        .map(|&(t, p)| evaluate(t, p))
        .collect::<Result<_>>()?;

    let tcs: Vec<f64> = samples.iter().filter_map(|s| s.t_c).collect();
    let count = tcs.len() as f64;
    let mean = tcs.iter().sum::<f64>() / count;
    let std = if tcs.len() > 1 {
        (tcs.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = tcs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = tcs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let relative_std = std / mean.abs();
    Ok(JitterReport {
        theta,
        phi,
        sigma_theta: spec.sigma_theta,
        sigma_phi: spec.sigma_phi,
        n_samples: spec.n_samples,
        seed: spec.seed,
        baseline_t_c: baseline.t_c,
        mean,
        std,
        min,
        max,
        spread: max - min,
        relative_std,
        max_relative_std: spec.max_relative_std,
        within_bound: spec.max_relative_std.map(|b| relative_std <= b),
        undefined: samples.len() - tcs.len(),
        samples,
    })
}

/// Runs the jitter ensemble and writes samples, summary and manifest.
pub fn jitter_study(config: &SimulationConfig) -> Result<JitterReport> {
    let start = Instant::now();
    let report = compute_jitter(config)?;
    let dir = &config.output.dir;
    let mut text = String::from("sample,theta,phi,t_c,p_max\n");
    for (i, s) in report.samples.iter().enumerate() {
        text.push_str(&format!(
            "{i},{},{},{},{}\n",
            fmt_f64(s.theta),
            fmt_f64(s.phi),
            fmt_f64(s.t_c.unwrap_or(f64::NAN)),
            fmt_f64(s.p_max)
        ));
    }
    write_atomic(&dir.join("jitter_samples.csv"), text.as_bytes())?;
    write_json(&dir.join("jitter.json"), &report)?;
    write_atomic(&dir.join("config.toml"), config.to_toml_string()?.as_bytes())?;
    let mut metadata = RunMetadata::new("jitter", config, config.coupling()?);
    metadata.timings.total = start.elapsed().as_secs_f64();
    write_json(&dir.join(METADATA), &metadata)?;
    write_manifest(dir, Vec::new())?;
    Ok(report)
}

/// Compares the sector amplitudes with the full master equation for the
/// configured chain, initial state and time grid.
pub fn compute_oracle(config: &SimulationConfig) -> Result<OracleReport> {
    config.validate()?;
    let params = config.coupling()?;
    let liouvillian = build_liouvillian(&params)?;
    let evolver = DensityEvolver::new(&liouvillian, &config.time.times())?;
    oracle_compare_with(&evolver, &params, &config.initial, PhaseConvention::default())
}

/// Runs [`compute_oracle`] and writes `oracle.json`. A failed comparison is
/// still written, then reported as a numeric error.
pub fn oracle_check(config: &SimulationConfig) -> Result<OracleReport> {
    let start = Instant::now();
    let report = compute_oracle(config)?;
    let dir = &config.output.dir;
    report.write_json(&dir.join("oracle.json"))?;
    write_atomic(&dir.join("config.toml"), config.to_toml_string()?.as_bytes())?;
    let mut metadata = RunMetadata::new("oracle-check", config, config.coupling()?);
    metadata.timings.total = start.elapsed().as_secs_f64();
    write_json(&dir.join(METADATA), &metadata)?;
    write_manifest(dir, Vec::new())?;
    if !report.pass {
        return Err(Error::numeric(format!(
            "master-equation check failed: block deviation {:.3e}, tolerance {:.1e}",
            report.max_block_deviation, report.tolerance
        )));
    }
    Ok(report)
}

//! Trajectory evolution and ensemble Monte Carlo.
//!
//! Every trajectory draws from its own ChaCha stream keyed by the master
//! seed, a fingerprint of the cell parameters and the trajectory index, so
//! results do not depend on the worker count, the scheduling, or the order
//! in which cells appear in a sweep.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, FixedPoint, ModelConfig, ModelVariant};
use crate::error::{Error, Result};
use crate::observables::{
    half_cut_entropy, order_parameter_afm, order_parameter_fm, tripartite_spectra, DEFAULT_S0_THRESHOLD,
};
use crate::qstate::StateVector;
use crate::stats;

/// A scalar recorded per trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    /// `O_AFM`
    OrderAfm,
    /// `O_FM`
    OrderFm,
    /// `I_3^(1)`
    TripartiteVonNeumann,
    /// `I_3^(0)` with the given zero cut-off.
    TripartiteHartley { threshold: f64 },
    /// von Neumann entropy of the half chain.
    HalfCut,
}

impl Observable {
    /// Order parameter matching the variant's target orbit.
    pub fn order_parameter_for(variant: ModelVariant) -> Self {
        match variant.fixed_point() {
            FixedPoint::Afm => Observable::OrderAfm,
            FixedPoint::Fm => Observable::OrderFm,
        }
    }

    pub fn hartley(threshold: f64) -> Self {
        Observable::TripartiteHartley { threshold }
    }

    pub fn name(&self) -> String {
        match self {
            Observable::OrderAfm => "O_AFM".into(),
            Observable::OrderFm => "O_FM".into(),
            Observable::TripartiteVonNeumann => "I3_1".into(),
            Observable::TripartiteHartley { threshold } if *threshold == DEFAULT_S0_THRESHOLD => "I3_0".into(),
            Observable::TripartiteHartley { threshold } => format!("I3_0@{threshold:e}"),
            Observable::HalfCut => "S_half".into(),
        }
    }

    fn needs_tripartite(&self) -> bool {
        matches!(self, Observable::TripartiteVonNeumann | Observable::TripartiteHartley { .. })
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "O_AFM" => Observable::OrderAfm,
            "O_FM" => Observable::OrderFm,
            "I3_1" => Observable::TripartiteVonNeumann,
            "I3_0" => Observable::hartley(DEFAULT_S0_THRESHOLD),
            "S_half" => Observable::HalfCut,
            other => match other.strip_prefix("I3_0@").map(str::parse::<f64>) {
                Some(Ok(t)) if t > 0.0 => Observable::hartley(t),
                _ => {
                    return Err(Error::Config(format!(
                        "unknown observable {other:?}; expected O_AFM, O_FM, I3_1, I3_0, I3_0@<threshold> or S_half"
                    )))
                }
            },
        })
    }
}

/// Starting state of every trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Uniformly random computational basis state.
    #[default]
    RandomBasis,
    /// Fixed computational basis state.
    Basis(u64),
    /// Product of Haar-random single-qubit states.
    RandomProduct,
}

/// Per-step recording of the half-cut entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSpec {
    /// Record every `stride` steps.
    pub stride: usize,
    /// Stop recording after this step (inclusive).
    pub max_t: Option<usize>,
}

impl TimeSeriesSpec {
    pub fn every_step() -> Self {
        Self { stride: 1, max_t: None }
    }

    pub fn times(&self, steps: usize) -> Vec<usize> {
        let last = self.max_t.map_or(steps, |m| m.min(steps));
        (1..=last).filter(|t| t % self.stride == 0).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOptions {
    pub observables: Vec<Observable>,
    pub time_series: Option<TimeSeriesSpec>,
    pub initial_state: InitialState,
    /// Observables are averaged over the last `average_window` steps (1 = final step only).
    pub average_window: usize,
}

impl TrajectoryOptions {
    pub fn new(observables: Vec<Observable>) -> Self {
        Self { observables, time_series: None, initial_state: InitialState::RandomBasis, average_window: 1 }
    }

    pub fn with_time_series(mut self, spec: TimeSeriesSpec) -> Self {
        self.time_series = Some(spec);
        self
    }

    pub fn with_initial_state(mut self, initial: InitialState) -> Self {
        self.initial_state = initial;
        self
    }

    fn validate(&self, config: &ModelConfig) -> Result<()> {
        if self.average_window == 0 || self.average_window > config.steps {
            return Err(Error::Config(format!(
                "average window {} must lie in [1, steps = {}]",
                self.average_window, config.steps
            )));
        }
        if let Some(ts) = &self.time_series {
            if ts.stride == 0 {
                return Err(Error::Config("time-series stride must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Result of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub config_id: u64,
    pub traj_index: u64,
    pub final_observables: Vec<(Observable, f64)>,
    /// `(t, S_{L/2}(t))` after step `t`.
    pub time_series: Option<Vec<(usize, f64)>>,
}

impl TrajectoryRecord {
    pub fn get(&self, obs: &Observable) -> Option<f64> {
        self.final_observables.iter().find(|(o, _)| o == obs).map(|(_, v)| *v)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of every cell parameter except the seed.
pub fn config_fingerprint(config: &ModelConfig) -> u64 {
    [
        config.variant.tag(),
        config.num_qubits as u64,
        config.p_ctrl.to_bits(),
        config.p_proj.to_bits(),
        config.p_global.to_bits(),
        config.steps as u64,
    ]
    .into_iter()
    .fold(0x5151_0b0b_cafe_f00d, |h, v| splitmix(h ^ v))
}

/// Independent stream for `(seed, key, index)` within a domain.
pub(crate) fn stream_rng(domain: &[u8; 8], seed: u64, key: u64, index: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&key.to_le_bytes());
    bytes[16..24].copy_from_slice(&index.to_le_bytes());
    bytes[24..].copy_from_slice(domain);
    ChaCha8Rng::from_seed(bytes)
}

/// Random stream of trajectory `traj_index` of `config`.
pub fn trajectory_rng(config: &ModelConfig, traj_index: u64) -> ChaCha8Rng {
    stream_rng(b"qtraject", config.seed, config_fingerprint(config), traj_index)
}

fn initial_state<R: Rng + ?Sized>(l: usize, init: InitialState, rng: &mut R) -> Result<StateVector> {
    match init {
        InitialState::RandomBasis => StateVector::basis_state(l, rng.random_range(0..1u64 << l)),
        InitialState::Basis(x) => StateVector::basis_state(l, x),
        InitialState::RandomProduct => StateVector::random_product(l, rng),
    }
}

fn evaluate(state: &StateVector, observables: &[Observable], out: &mut [f64]) -> Result<()> {
    let spectra = if observables.iter().any(Observable::needs_tripartite) {
        Some(tripartite_spectra(state)?)
    } else {
        None
    };
    for (obs, slot) in observables.iter().zip(out.iter_mut()) {
        *slot += match obs {
            Observable::OrderAfm => order_parameter_afm(state),
            Observable::OrderFm => order_parameter_fm(state),
            Observable::TripartiteVonNeumann => spectra.as_ref().expect("computed above").i3(1.0, 1.0)?,
            Observable::TripartiteHartley { threshold } => {
                spectra.as_ref().expect("computed above").i3(0.0, *threshold)?
            }
            Observable::HalfCut => half_cut_entropy(state, 1.0)?,
        };
    }
    Ok(())
}

/// Evolves one trajectory for `config.steps` steps and records its observables.
pub fn run_trajectory(config: &ModelConfig, traj_index: u64, options: &TrajectoryOptions) -> Result<TrajectoryRecord> {
    options.validate(config)?;
    let circuit = Circuit::new(config)?;
    let mut rng = trajectory_rng(config, traj_index);
    let mut state = initial_state(config.num_qubits, options.initial_state, &mut rng)?;

    let record_times = options.time_series.map(|ts| ts.times(config.steps));
    let mut series = record_times.as_ref().map(|t| Vec::with_capacity(t.len()));
    let mut next_record = 0;
    let window_start = config.steps - options.average_window + 1;
    let mut sums = vec![0.0; options.observables.len()];

    for t in 1..=config.steps {
        circuit.step(&mut state, &mut rng).map_err(|e| annotate(e, config, traj_index, t))?;
        if let (Some(times), Some(series)) = (&record_times, series.as_mut()) {
            if times.get(next_record) == Some(&t) {
                series.push((t, half_cut_entropy(&state, 1.0)?));
                next_record += 1;
            }
        }
        if t >= window_start {
            evaluate(&state, &options.observables, &mut sums).map_err(|e| annotate(e, config, traj_index, t))?;
        }
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > crate::qstate::NORM_TOLERANCE {
        return Err(annotate(
            Error::NumericalCorruption(format!("norm^2 drifted to {norm}")),
            config,
            traj_index,
            config.steps,
        ));
    }
    let w = options.average_window as f64;
    Ok(TrajectoryRecord {
        config_id: config_fingerprint(config),
        traj_index,
        final_observables: options.observables.iter().copied().zip(sums.into_iter().map(|s| s / w)).collect(),
        time_series: series,
    })
}

fn annotate(err: Error, config: &ModelConfig, traj: u64, t: usize) -> Error {
    match err {
        Error::NumericalCorruption(msg) => Error::NumericalCorruption(format!(
            "{msg} ({} L={} p_ctrl={} p_proj={} trajectory {traj} step {t})",
            config.variant, config.num_qubits, config.p_ctrl, config.p_proj
        )),
        other => other,
    }
}

/// Mean, standard error and raw samples of one observable over an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableStats {
    pub observable: Observable,
    pub mean: f64,
    pub sem: f64,
    pub samples: Vec<f64>,
}

impl ObservableStats {
    pub fn from_samples(observable: Observable, samples: Vec<f64>) -> Self {
        Self { observable, mean: stats::mean(&samples), sem: stats::sem(&samples), samples }
    }
}

/// Trajectory-averaged half-cut entropy versus time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesStats {
    pub times: Vec<usize>,
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
    /// `samples[k][j]` is trajectory `j` at `times[k]`.
    pub samples: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub config: ModelConfig,
    pub n_traj: usize,
    pub stats: Vec<ObservableStats>,
    pub time_series: Option<TimeSeriesStats>,
}

impl EnsembleSummary {
    pub fn get(&self, obs: &Observable) -> Option<&ObservableStats> {
        self.stats.iter().find(|s| &s.observable == obs)
    }

    fn from_records(config: &ModelConfig, options: &TrajectoryOptions, records: Vec<TrajectoryRecord>) -> Self {
        let stats = options
            .observables
            .iter()
            .enumerate()
            .map(|(k, obs)| {
                ObservableStats::from_samples(*obs, records.iter().map(|r| r.final_observables[k].1).collect())
            })
            .collect();
        let time_series = options.time_series.map(|ts| {
            let times = ts.times(config.steps);
            let samples: Vec<Vec<f64>> = (0..times.len())
                .map(|k| records.iter().map(|r| r.time_series.as_ref().expect("recorded")[k].1).collect())
                .collect();
            TimeSeriesStats {
                mean: samples.iter().map(|s| stats::mean(s)).collect(),
                sem: samples.iter().map(|s| stats::sem(s)).collect(),
                times,
                samples,
            }
        });
        Self { config: config.clone(), n_traj: records.len(), stats, time_series }
    }
}

/// Runs `n_traj` trajectories of one cell in parallel and aggregates them in index order.
pub fn run_ensemble(config: &ModelConfig, n_traj: usize, options: &TrajectoryOptions) -> Result<EnsembleSummary> {
    Ok(sweep(std::slice::from_ref(config), n_traj, options)?.remove(0))
}

/// Runs every cell of `grid`. Trajectories of all cells share one parallel pool.
pub fn sweep(grid: &[ModelConfig], n_traj: usize, options: &TrajectoryOptions) -> Result<Vec<EnsembleSummary>> {
    if grid.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    if n_traj < 2 {
        return Err(Error::Config(format!("need at least 2 trajectories per cell, got {n_traj}")));
    }
    for cell in grid {
        cell.validate()?;
        options.validate(cell)?;
    }
    let jobs: Vec<(usize, u64)> =
        (0..grid.len()).flat_map(|c| (0..n_traj as u64).map(move |j| (c, j))).collect();
    let results: Vec<Result<TrajectoryRecord>> =
        jobs.par_iter().map(|&(c, j)| run_trajectory(&grid[c], j, options)).collect();

    let mut results = results.into_iter();
    let mut out = Vec::with_capacity(grid.len());
    for cell in grid {
        let records = results.by_ref().take(n_traj).collect::<Result<Vec<_>>>()?;
        out.push(EnsembleSummary::from_records(cell, options, records));
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

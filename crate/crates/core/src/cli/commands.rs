use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::io::{
    read_raw, unix_now, write_json, write_raw, write_summary, write_timeseries, CellKey, CellResult, CellSeries, Manifest,
    RawRow,
};
use crate::circuits::{FixedPoint, ModelConfig};
use crate::classical::classical_transition_scan;
use crate::engine::{sweep, with_threads, EnsembleSummary, Observable, TimeSeriesSpec};
use crate::error::{Error, Result};
use crate::scaling::{
    collapsed_curve, fit_collapse, fit_dynamical_exponent, Bounds, CollapseFit, CollapsePoint, DynamicalFit, EntropySeries,
    FitOptions, TimeWindow,
};

fn cell_key(c: &ModelConfig, n_traj: usize) -> CellKey {
    CellKey {
        variant: c.variant.name().into(),
        l: c.num_qubits,
        p_ctrl: c.p_ctrl,
        p_proj: c.p_proj,
        p_global: c.p_global,
        steps: c.steps,
        n_traj,
    }
}

fn manifest(command: &str, cfg: &RunConfig, cells: Vec<serde_json::Value>, observables: Vec<String>, started: u64, outputs: Vec<PathBuf>) -> Result<Manifest> {
    Ok(Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: serde_json::to_value(cfg)?,
        cells,
        seed: cfg.seed,
        observables,
        started_unix: started,
        finished_unix: unix_now(),
        outputs,
    })
}

fn run_grid(cfg: &RunConfig, grid: &[ModelConfig], options: &crate::engine::TrajectoryOptions) -> Result<Vec<EnsembleSummary>> {
    eprintln!(
        "running {} cells x {} trajectories on {} threads",
        grid.len(),
        cfg.n_traj,
        if cfg.threads() == 0 { rayon::current_num_threads() } else { cfg.threads() }
    );
    with_threads(cfg.threads(), || sweep(grid, cfg.n_traj, options))?
}

fn series_of(results: &[EnsembleSummary]) -> Vec<CellSeries> {
    results
        .iter()
        .filter_map(|r| {
            r.time_series.as_ref().map(|ts| CellSeries {
                key: cell_key(&r.config, r.n_traj),
                times: ts.times.clone(),
                mean: ts.mean.clone(),
                sem: ts.sem.clone(),
            })
        })
        .collect()
}

/// Runs the quantum sweep and writes `summary.csv`, `raw.csv`, `manifest.json`
/// and, when recording, `timeseries.csv`. Returns the written paths.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let started = unix_now();
    let variant = cfg.variant()?;
    let grid = cfg.model_grid()?;
    let options = cfg.trajectory_options(variant)?;
    let results = run_grid(cfg, &grid, &options)?;

    fs::create_dir_all(out_dir)?;
    let cells: Vec<CellResult> =
        results.iter().map(|r| CellResult { key: cell_key(&r.config, r.n_traj), stats: r.stats.clone() }).collect();
    let mut outputs = vec![out_dir.join("summary.csv"), out_dir.join("raw.csv")];
    write_summary(&outputs[0], &cells)?;
    write_raw(&outputs[1], &cells)?;
    if options.time_series.is_some() {
        let path = out_dir.join("timeseries.csv");
        write_timeseries(&path, &series_of(&results))?;
        outputs.push(path);
    }
    let manifest_path = out_dir.join("manifest.json");
    let cell_json = grid.iter().map(serde_json::to_value).collect::<std::result::Result<_, _>>()?;
    let names = options.observables.iter().map(Observable::name).collect();
    write_json(&manifest_path, &manifest("sweep", cfg, cell_json, names, started, outputs.clone())?)?;
    outputs.push(manifest_path);
    Ok(outputs)
}

/// Classical analog of [`cmd_sweep`]; the variant column reads `classical-afm` or `classical-fm`.
pub fn cmd_classical(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let started = unix_now();
    cfg.validate_classical()?;
    let target = cfg.target()?;
    let p_grid = cfg.p_ctrl_grid.values()?;
    let variant = match target {
        FixedPoint::Afm => "classical-afm",
        FixedPoint::Fm => "classical-fm",
    };
    eprintln!("running {} classical cells x {} trajectories", cfg.sizes.len() * p_grid.len(), cfg.n_traj);
    let mut cells = Vec::new();
    let mut cell_json = Vec::new();
    let mut observable = String::new();
    for &l in &cfg.sizes {
        let scan = with_threads(cfg.threads(), || classical_transition_scan(l, target, &p_grid, cfg.n_traj, cfg.steps, cfg.seed))?
            .map_err(|e| match e {
                Error::InvalidArgument(m) => Error::Config(m),
                e => e,
            })?;
        for point in scan {
            observable = point.stats.observable.name();
            cell_json.push(serde_json::to_value(point.config)?);
            cells.push(CellResult {
                key: CellKey {
                    variant: variant.into(),
                    l,
                    p_ctrl: point.config.p_ctrl,
                    p_proj: 0.0,
                    p_global: 0.0,
                    steps: point.config.steps,
                    n_traj: cfg.n_traj,
                },
                stats: vec![point.stats],
            });
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut outputs = vec![out_dir.join("summary.csv"), out_dir.join("raw.csv")];
    write_summary(&outputs[0], &cells)?;
    write_raw(&outputs[1], &cells)?;
    let manifest_path = out_dir.join("manifest.json");
    write_json(&manifest_path, &manifest("classical", cfg, cell_json, vec![observable], started, outputs.clone())?)?;
    outputs.push(manifest_path);
    Ok(outputs)
}

/// Fit of the dynamical exponent as written to `fit_z.json`.
#[derive(Clone, Debug, Serialize)]
pub struct TimeSeriesFitReport {
    pub variant: String,
    pub p_ctrl: f64,
    pub p_proj: f64,
    pub p_global: f64,
    pub sizes: Vec<usize>,
    #[serde(flatten)]
    pub fit: DynamicalFit,
}

/// Records the half-cut entropy versus time and writes `timeseries.csv`,
/// `manifest.json` and, with `fit_z`, `fit_z.json`.
pub fn cmd_timeseries(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let started = unix_now();
    let variant = cfg.variant()?;
    let grid = cfg.model_grid()?;
    let mut cfg = cfg.clone();
    if cfg.observables.is_none() {
        cfg.observables = Some(vec![Observable::HalfCut.name()]);
    }
    let mut options = cfg.trajectory_options(variant)?;
    if options.time_series.is_none() {
        options = options.with_time_series(TimeSeriesSpec::every_step());
    }
    let results = run_grid(&cfg, &grid, &options)?;

    fs::create_dir_all(out_dir)?;
    let mut outputs = vec![out_dir.join("timeseries.csv")];
    write_timeseries(&outputs[0], &series_of(&results))?;

    let mut fit_result = Ok(());
    if cfg.fit_z.unwrap_or(false) {
        let first = &grid[0];
        if grid.iter().any(|c| (c.p_ctrl, c.p_proj, c.p_global) != (first.p_ctrl, first.p_proj, first.p_global)) {
            return Err(Error::Config("fitting z needs a single (p_ctrl, p_proj, p_global) point".into()));
        }
        let series: Vec<EntropySeries> = results
            .iter()
            .map(|r| EntropySeries::from_stats(r.config.num_qubits, r.time_series.as_ref().expect("recorded")))
            .collect();
        let d = TimeWindow::default();
        let window = TimeWindow {
            min_t: cfg.z_window_min_t.unwrap_or(d.min_t),
            max_fraction: cfg.z_window_max_fraction.unwrap_or(d.max_fraction),
            plateau_tail: d.plateau_tail,
        };
        let fit = fit_dynamical_exponent(
            &series,
            &window,
            cfg.z_initial.unwrap_or(1.5),
            (0.3, 4.0),
            cfg.z_bootstrap.unwrap_or(100),
            cfg.seed,
        )?;
        eprintln!("z = {} +- {}", fit.z, fit.err_z);
        if fit.at_bound {
            fit_result = Err(Error::Fit(format!("z = {} is pinned at a bound", fit.z)));
        }
        let report = TimeSeriesFitReport {
            variant: variant.name().into(),
            p_ctrl: first.p_ctrl,
            p_proj: first.p_proj,
            p_global: first.p_global,
            sizes: grid.iter().map(|c| c.num_qubits).collect(),
            fit,
        };
        let path = out_dir.join("fit_z.json");
        write_json(&path, &report)?;
        outputs.push(path);
    }
    let manifest_path = out_dir.join("manifest.json");
    let cell_json = grid.iter().map(serde_json::to_value).collect::<std::result::Result<_, _>>()?;
    let names = options.observables.iter().map(Observable::name).collect();
    write_json(&manifest_path, &manifest("timeseries", &cfg, cell_json, names, started, outputs.clone())?)?;
    outputs.push(manifest_path);
    fit_result.map(|_| outputs)
}

/// Parameter varied across the collapse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    PCtrl,
    PProj,
    PGlobal,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_ctrl" => Ok(Axis::PCtrl),
            "p_proj" => Ok(Axis::PProj),
            "p_global" => Ok(Axis::PGlobal),
            _ => Err(Error::Config(format!("unknown axis {s:?}; expected p_ctrl, p_proj or p_global"))),
        }
    }
}

impl Axis {
    fn split(self, r: &RawRow) -> (f64, [f64; 2]) {
        match self {
            Axis::PCtrl => (r.p_ctrl, [r.p_proj, r.p_global]),
            Axis::PProj => (r.p_proj, [r.p_ctrl, r.p_global]),
            Axis::PGlobal => (r.p_global, [r.p_ctrl, r.p_proj]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapseArgs {
    pub input: PathBuf,
    pub observable: String,
    pub axis: Axis,
    /// Inclusive range of the axis parameter; all points when absent.
    pub window: Option<(f64, f64)>,
    /// Restrict to these system sizes.
    pub sizes: Option<Vec<usize>>,
    /// Restrict to this variant when the file holds several.
    pub variant: Option<String>,
    /// `(p_c, nu)`; defaults to the window midpoint and 1.
    pub initial: Option<(f64, f64)>,
    pub bounds: Option<Bounds>,
    pub n_bootstrap: usize,
    pub seed: u64,
}

/// Contents of `fit.json`.
#[derive(Clone, Debug, Serialize)]
pub struct CollapseReport {
    pub input: PathBuf,
    pub variant: String,
    pub observable: String,
    pub axis: Axis,
    pub window: (f64, f64),
    pub sizes: Vec<usize>,
    /// Values of the two parameters held fixed, in `p_ctrl, p_proj, p_global` order.
    pub fixed: [f64; 2],
    pub initial: (f64, f64),
    pub bootstrap_seed: u64,
    #[serde(flatten)]
    pub fit: CollapseFit,
}

/// Groups raw samples of the selected observable into collapse points.
pub fn collapse_points(rows: &[RawRow], args: &CollapseArgs) -> Result<(Vec<CollapsePoint>, String, [f64; 2])> {
    let selected: Vec<&RawRow> = rows
        .iter()
        .filter(|r| r.observable == args.observable)
        .filter(|r| args.variant.as_ref().map_or(true, |v| &r.variant == v))
        .filter(|r| args.sizes.as_ref().map_or(true, |s| s.contains(&r.l)))
        .filter(|r| args.window.map_or(true, |(lo, hi)| (lo..=hi).contains(&args.axis.split(r).0)))
        .collect();
    if selected.is_empty() {
        return Err(Error::Config(format!("no raw samples of {} inside the window", args.observable)));
    }
    let variant = selected[0].variant.clone();
    if selected.iter().any(|r| r.variant != variant) {
        return Err(Error::Config("the input mixes variants; select one with --variant".into()));
    }
    let fixed = args.axis.split(selected[0]).1;
    if selected.iter().any(|r| args.axis.split(r).1 != fixed) {
        return Err(Error::Config("the input varies more than one parameter; collapse one line cut at a time".into()));
    }
    let mut groups: BTreeMap<(usize, u64), (usize, Vec<(usize, f64)>)> = BTreeMap::new();
    for r in &selected {
        let p = args.axis.split(r).0;
        let g = groups.entry((r.l, p.to_bits())).or_insert((r.n_traj, Vec::new()));
        if g.0 != r.n_traj {
            return Err(Error::Config(format!("inconsistent n_traj at L = {}, p = {p}", r.l)));
        }
        g.1.push((r.traj_index, r.value));
    }
    let mut points = Vec::with_capacity(groups.len());
    for ((l, bits), (n_traj, mut samples)) in groups {
        let p = f64::from_bits(bits);
        samples.sort_by_key(|s| s.0);
        samples.dedup_by_key(|s| s.0);
        if samples.len() != n_traj || n_traj < 2 {
            return Err(Error::Config(format!(
                "missing raw samples at L = {l}, p = {p}: found {} of {n_traj}",
                samples.len()
            )));
        }
        points.push(CollapsePoint::from_samples(p, l, samples.into_iter().map(|s| s.1).collect())?);
    }
    let mut sizes: Vec<usize> = points.iter().map(|q| q.l).collect();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::Config("the window holds a single system size; a collapse needs at least two".into()));
    }
    Ok((points, variant, fixed))
}

/// Fits the collapse and writes `fit.json` and `collapsed.csv`.
pub fn cmd_collapse(args: &CollapseArgs, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_raw(&args.input)?;
    let (points, variant, fixed) = collapse_points(&rows, args)?;
    let lo = points.iter().map(|q| q.p).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|q| q.p).fold(f64::NEG_INFINITY, f64::max);
    let bounds = args.bounds.unwrap_or_else(|| Bounds::default_for(&points));
    let initial = args.initial.unwrap_or((0.5 * (lo + hi), 1.0_f64.clamp(bounds.nu.0, bounds.nu.1)));
    let inside = |x: f64, (a, b): (f64, f64)| (a..=b).contains(&x);
    if !inside(initial.0, bounds.p_c) || !inside(initial.1, bounds.nu) {
        return Err(Error::Config(format!("initial guess {initial:?} lies outside the fit bounds {bounds:?}")));
    }
    let options = FitOptions { bounds: Some(bounds), n_bootstrap: args.n_bootstrap, seed: args.seed };
    eprintln!("fitting {} points of {}", points.len(), args.observable);
    let fit = fit_collapse(&points, initial, &options)?;
    eprintln!("p_c = {} +- {}, nu = {} +- {}", fit.p_c, fit.err_p_c, fit.nu, fit.err_nu);

    fs::create_dir_all(out_dir)?;
    let mut sizes: Vec<usize> = points.iter().map(|q| q.l).collect();
    sizes.dedup();
    let report = CollapseReport {
        input: args.input.clone(),
        variant,
        observable: args.observable.clone(),
        axis: args.axis,
        window: args.window.unwrap_or((lo, hi)),
        sizes,
        fixed,
        initial,
        bootstrap_seed: args.seed,
        fit: fit.clone(),
    };
    let fit_path = out_dir.join("fit.json");
    write_json(&fit_path, &report)?;

    let curve_path = out_dir.join("collapsed.csv");
    let mut w = csv::Writer::from_path(&curve_path)?;
    w.write_record(["x", "y", "sigma"])?;
    for (x, y, s) in collapsed_curve(&points, fit.p_c, fit.nu) {
        w.write_record([super::io::fmt_f64(x), super::io::fmt_f64(y), super::io::fmt_f64(s)])?;
    }
    w.flush()?;

    if fit.at_bound || !fit.converged {
        return Err(Error::Fit(format!(
            "collapse did not converge to an interior optimum (p_c = {}, nu = {}); outputs kept for inspection",
            fit.p_c, fit.nu
        )));
    }
    Ok(vec![fit_path, curve_path])
}

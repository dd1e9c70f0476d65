use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuits::{default_steps, FixedPoint, ModelConfig, ModelVariant};
use crate::engine::{InitialState, Observable, TimeSeriesSpec, TrajectoryOptions};
use crate::error::{Error, Result};
use crate::observables::DEFAULT_S0_THRESHOLD;

/// A list of numbers, a single number, or a `"start:stop:step"` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    List(Vec<f64>),
    Range(String),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::One(x) => vec![*x],
            Grid::List(v) => v.clone(),
            Grid::Range(s) => parse_range(s)?,
        };
        if v.is_empty() {
            return Err(Error::Config("empty parameter grid".into()));
        }
        Ok(v)
    }
}

/// `"start:stop:step"`, inclusive of `stop` up to rounding; values are rounded to 12 decimals.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("range {s:?} must look like start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!("range {s:?} needs step > 0 and stop >= start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Comma-separated list or range, as given on the command line.
pub fn parse_grid_arg(s: &str) -> Result<Grid> {
    if s.contains(':') {
        return Ok(Grid::Range(s.to_string()));
    }
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse {x:?} as a number"))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Grid::List(v))
}

pub fn parse_sizes_arg(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Config(format!("cannot parse {x:?} as a system size"))))
        .collect()
}

/// Run configuration shared by the `sweep`, `timeseries` and `classical` commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Quantum model (sweep, timeseries).
    pub variant: Option<ModelVariant>,
    /// Target orbit of the classical register: `"afm"` or `"fm"`.
    pub target: Option<String>,
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    pub p_ctrl_grid: Grid,
    #[serde(default = "zero_grid")]
    pub p_proj: Grid,
    #[serde(default = "zero_grid")]
    pub p_global: Grid,
    pub n_traj: usize,
    /// Defaults to `2 L^2` for each size.
    pub steps: Option<usize>,
    pub seed: u64,
    /// Observable names; defaults to the order parameter and `I3_1`.
    pub observables: Option<Vec<String>>,
    /// Zero cut-off of the plain `I3_0` observable.
    pub s0_threshold: Option<f64>,
    pub initial_state: Option<InitialState>,
    /// Worker threads; 0 or absent uses every core.
    pub threads: Option<usize>,
    /// Average the observables over the last this many steps.
    pub average_window: Option<usize>,
    /// Record `S_half` every this many steps.
    pub timeseries_stride: Option<usize>,
    pub timeseries_max_t: Option<usize>,
    /// Fit `z` after a `timeseries` run.
    pub fit_z: Option<bool>,
    pub z_initial: Option<f64>,
    pub z_window_min_t: Option<usize>,
    pub z_window_max_fraction: Option<f64>,
    pub z_bootstrap: Option<usize>,
}

fn zero_grid() -> Grid {
    Grid::One(0.0)
}

/// Every key of [`RunConfig`]; the manifest must echo all of them.
pub const CONFIG_KEYS: &[&str] = &[
    "variant",
    "target",
    "L",
    "p_ctrl_grid",
    "p_proj",
    "p_global",
    "n_traj",
    "steps",
    "seed",
    "observables",
    "s0_threshold",
    "initial_state",
    "threads",
    "average_window",
    "timeseries_stride",
    "timeseries_max_t",
    "fit_z",
    "z_initial",
    "z_window_min_t",
    "z_window_max_fraction",
    "z_bootstrap",
];

/// Command-line overrides.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub p_ctrl: Option<Grid>,
    pub sizes: Option<Vec<usize>>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub s0_threshold: Option<f64>,
    pub timeseries: bool,
}

impl RunConfig {
    pub fn from_str_with_format(text: &str, json: bool) -> Result<Self> {
        let cfg: RunConfig = if json {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML config: {e}")))?
        };
        Ok(cfg)
    }

    /// Reads a `.toml` or `.json` file. A `manifest.json` from an earlier run
    /// yields the configuration it recorded.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if json {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?;
            if let (Some(_), Some(config)) = (value.get("tool"), value.get("config")) {
                return serde_json::from_value(config.clone())
                    .map_err(|e| Error::Config(format!("invalid configuration in manifest: {e}")));
            }
        }
        Self::from_str_with_format(&text, json)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = &o.p_ctrl {
            self.p_ctrl_grid = g.clone();
        }
        if let Some(s) = &o.sizes {
            self.sizes = s.clone();
        }
        if let Some(n) = o.n_traj {
            self.n_traj = n;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(t) = o.s0_threshold {
            self.s0_threshold = Some(t);
        }
        if o.timeseries && self.timeseries_stride.is_none() {
            self.timeseries_stride = Some(1);
        }
    }

    pub fn variant(&self) -> Result<ModelVariant> {
        self.variant.ok_or_else(|| Error::Config("missing key `variant`".into()))
    }

    pub fn target(&self) -> Result<FixedPoint> {
        match self.target.as_deref().unwrap_or("afm") {
            "afm" => Ok(FixedPoint::Afm),
            "fm" => Ok(FixedPoint::Fm),
            other => Err(Error::Config(format!("unknown classical target {other:?}; expected \"afm\" or \"fm\""))),
        }
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or(0)
    }

    pub fn steps_for(&self, l: usize) -> usize {
        self.steps.unwrap_or_else(|| default_steps(l))
    }

    /// Observables in the order they are written.
    pub fn observables(&self, variant: ModelVariant) -> Result<Vec<Observable>> {
        let threshold = self.s0_threshold.unwrap_or(DEFAULT_S0_THRESHOLD);
        if !(threshold > 0.0) {
            return Err(Error::Config(format!("s0_threshold must be positive, got {threshold}")));
        }
        let names = match &self.observables {
            Some(n) if n.is_empty() => return Err(Error::Config("empty observable list".into())),
            Some(n) => n.clone(),
            None => vec![Observable::order_parameter_for(variant).name(), "I3_1".into()],
        };
        let mut out: Vec<Observable> = Vec::new();
        for name in names {
            let obs = match name.parse::<Observable>()? {
                Observable::TripartiteHartley { threshold: t } if t == DEFAULT_S0_THRESHOLD && name == "I3_0" => {
                    Observable::hartley(threshold)
                }
                o => o,
            };
            if out.contains(&obs) {
                return Err(Error::Config(format!("observable {name} listed twice")));
            }
            out.push(obs);
        }
        Ok(out)
    }

    pub fn trajectory_options(&self, variant: ModelVariant) -> Result<TrajectoryOptions> {
        let mut o = TrajectoryOptions::new(self.observables(variant)?);
        if let Some(init) = self.initial_state {
            o = o.with_initial_state(init);
        }
        if let Some(w) = self.average_window {
            o.average_window = w;
        }
        if let Some(stride) = self.timeseries_stride {
            o = o.with_time_series(TimeSeriesSpec { stride, max_t: self.timeseries_max_t });
        }
        Ok(o)
    }

    fn validate_common(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("`L` must list at least one system size".into()));
        }
        if self.n_traj < 2 {
            return Err(Error::Config(format!("n_traj must be at least 2, got {}", self.n_traj)));
        }
        if self.steps == Some(0) {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Full quantum grid, ordered by `L`, then `p_proj`, `p_global`, `p_ctrl`.
    pub fn model_grid(&self) -> Result<Vec<ModelConfig>> {
        self.validate_common()?;
        let variant = self.variant()?;
        let (pc, pp, pg) = (self.p_ctrl_grid.values()?, self.p_proj.values()?, self.p_global.values()?);
        let mut grid = Vec::new();
        for &l in &self.sizes {
            for &proj in &pp {
                for &glob in &pg {
                    for &ctrl in &pc {
                        let cfg = ModelConfig::new(variant, l, ctrl, self.seed)
                            .with_p_proj(proj)
                            .with_p_global(glob)
                            .with_steps(self.steps_for(l));
                        cfg.validate().map_err(|e| match e {
                            Error::Config(m) | Error::InvalidArgument(m) => Error::Config(m),
                            e => Error::Config(e.to_string()),
                        })?;
                        grid.push(cfg);
                    }
                }
            }
        }
        Ok(grid)
    }

    /// Checks the keys the classical command uses.
    pub fn validate_classical(&self) -> Result<()> {
        self.validate_common()?;
        self.target()?;
        if self.variant.is_some() {
            return Err(Error::Config("`variant` does not apply to the classical command; use `target`".into()));
        }
        let quantum_only = [
            ("observables", self.observables.is_some()),
            ("s0_threshold", self.s0_threshold.is_some()),
            ("initial_state", self.initial_state.is_some()),
            ("average_window", self.average_window.is_some()),
            ("timeseries_stride", self.timeseries_stride.is_some()),
            ("fit_z", self.fit_z.is_some()),
        ];
        if let Some((key, _)) = quantum_only.iter().find(|k| k.1) {
            return Err(Error::Config(format!("`{key}` does not apply to the classical command")));
        }
        let nonzero = |g: &Grid| g.values().map(|v| v.iter().any(|&x| x != 0.0));
        if nonzero(&self.p_proj)? || nonzero(&self.p_global)? {
            return Err(Error::Config("p_proj and p_global do not apply to the classical command".into()));
        }
        Ok(())
    }
}

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{fit_generic, CollapsePoint, MAX_BOOTSTRAP_FAILURE};
use crate::engine::{stream_rng, TimeSeriesStats};
use crate::error::{Error, Result};
use crate::stats;

/// Half-cut entropy versus time for one system size.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropySeries {
    pub l: usize,
    pub times: Vec<usize>,
    /// `samples[k][j]`: trajectory `j` at `times[k]`.
    pub samples: Vec<Vec<f64>>,
}

impl EntropySeries {
    pub fn from_stats(l: usize, ts: &TimeSeriesStats) -> Self {
        Self { l, times: ts.times.clone(), samples: ts.samples.clone() }
    }

    fn n_traj(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    fn mean(&self, k: usize) -> f64 {
        stats::mean(&self.samples[k])
    }

    /// Mean over the last `tail` fraction of recorded times.
    pub fn plateau(&self, tail: f64) -> f64 {
        let n = self.times.len();
        let m = ((n as f64 * tail).ceil() as usize).clamp(1, n);
        (n - m..n).map(|k| self.mean(k)).sum::<f64>() / m as f64
    }
}

/// Early-time growth window: times `t >= min_t` whose mean entropy is at most
/// `max_fraction` of that size's late-time plateau.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeWindow {
    pub min_t: usize,
    pub max_fraction: f64,
    /// Fraction of the recorded times, counted from the end, that defines the plateau.
    pub plateau_tail: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self { min_t: 1, max_fraction: 0.8, plateau_tail: 0.1 }
    }
}

/// `(series index, time index)` pairs inside the window.
pub fn select_early_time(series: &[EntropySeries], window: &TimeWindow) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (s, ser) in series.iter().enumerate() {
        let cap = window.max_fraction * ser.plateau(window.plateau_tail);
        for (k, &t) in ser.times.iter().enumerate() {
            if t >= window.min_t && ser.mean(k) <= cap {
                out.push((s, k));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicalFit {
    pub z: f64,
    /// `max(hessian, bootstrap)`.
    pub err_z: f64,
    pub hessian_err_z: Option<f64>,
    pub bootstrap_std_z: Option<f64>,
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub k_params: usize,
    pub window: TimeWindow,
    pub bounds: (f64, f64),
    pub at_bound: bool,
    pub n_bootstrap: usize,
    pub n_bootstrap_failed: usize,
}

fn points_for(series: &[EntropySeries], selected: &[(usize, usize)], picks: Option<&[Vec<usize>]>) -> Result<Vec<CollapsePoint>> {
    selected
        .iter()
        .map(|&(s, k)| {
            let raw = &series[s].samples[k];
            let samples = match picks {
                Some(p) => p[s].iter().map(|&j| raw[j]).collect(),
                None => raw.clone(),
            };
            CollapsePoint::from_samples(series[s].times[k] as f64, series[s].l, samples)
        })
        .collect()
}

fn raw_z(points: &[CollapsePoint], z0: f64, bounds: (f64, f64)) -> Result<super::RawFit> {
    let scale = |q: &CollapsePoint, t: &[f64]| q.p / (q.l as f64).powf(t[0]);
    fit_generic(points, &scale, &[z0], vec![bounds.0], vec![bounds.1])
}

/// Fits `z` in `S(t) = g(t / L^z)` over the early-time window, with `N - 1`
/// degrees of freedom. Bootstrap resamples whole trajectories per system size.
pub fn fit_dynamical_exponent(
    series: &[EntropySeries],
    window: &TimeWindow,
    initial_z: f64,
    bounds: (f64, f64),
    n_bootstrap: usize,
    seed: u64,
) -> Result<DynamicalFit> {
    let mut sizes: Vec<usize> = series.iter().map(|s| s.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::Fit("the dynamical exponent needs at least two system sizes".into()));
    }
    if series.iter().any(|s| s.times.is_empty() || s.n_traj() < 2) {
        return Err(Error::Fit("every series needs recorded times and at least two trajectories".into()));
    }
    let selected = select_early_time(series, window);
    let points = points_for(series, &selected, None)?;
    let raw = raw_z(&points, initial_z, bounds)?;
    let z = raw.theta[0];
    let hessian = raw.hessian_err.as_ref().map(|e| e[0]);

    let mut bootstrap_std = None;
    let mut n_failed = 0;
    if n_bootstrap > 0 {
        let results: Vec<Option<f64>> = (0..n_bootstrap as u64)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(b"bootdynz", seed, series.len() as u64, b);
                let picks: Vec<Vec<usize>> = series
                    .iter()
                    .map(|s| (0..s.n_traj()).map(|_| rng.random_range(0..s.n_traj())).collect())
                    .collect();
                let pts = points_for(series, &selected, Some(&picks)).ok()?;
                raw_z(&pts, z, bounds).ok().map(|r| r.theta[0])
            })
            .collect();
        let zs: Vec<f64> = results.into_iter().flatten().collect();
        n_failed = n_bootstrap - zs.len();
        if n_failed as f64 > MAX_BOOTSTRAP_FAILURE * n_bootstrap as f64 {
            return Err(Error::Fit(format!("{n_failed} of {n_bootstrap} bootstrap refits failed")));
        }
        bootstrap_std = Some(stats::spread(&zs));
    }
    let err_z = match (hessian, bootstrap_std) {
        (Some(h), Some(b)) => h.max(b),
        (h, b) => h.or(b).unwrap_or(f64::NAN),
    };
    Ok(DynamicalFit {
        z,
        err_z,
        hessian_err_z: hessian,
        bootstrap_std_z: bootstrap_std,
        chi2_reduced: raw.chi2_reduced,
        n_points: points.len(),
        k_params: 1,
        window: *window,
        bounds,
        at_bound: raw.at_bound,
        n_bootstrap,
        n_bootstrap_failed: n_failed,
    })
}

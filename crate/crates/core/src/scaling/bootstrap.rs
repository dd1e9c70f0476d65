use rand::Rng;
use rayon::prelude::*;

use super::{raw_collapse, CollapseFit, CollapsePoint, MAX_BOOTSTRAP_FAILURE};
use crate::engine::stream_rng;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSummary {
    pub std_p_c: f64,
    pub std_nu: f64,
    pub n_resamples: usize,
    pub n_failed: usize,
    /// `(p_c, nu)` of every successful refit, in resample order.
    pub estimates: Vec<(f64, f64)>,
}

/// Redraws each point's samples with replacement.
pub(crate) fn resample_point<R: Rng + ?Sized>(point: &CollapsePoint, rng: &mut R) -> CollapsePoint {
    let n = point.samples.len();
    let samples: Vec<f64> = (0..n).map(|_| point.samples[rng.random_range(0..n)]).collect();
    CollapsePoint { p: point.p, l: point.l, mean: stats::mean(&samples), sem: stats::sem(&samples), samples }
}

/// Standard deviation of `(p_c, nu)` over `n_resamples` refits of resampled
/// data, each started from the original optimum.
pub fn bootstrap_errors(points: &[CollapsePoint], fit: &CollapseFit, n_resamples: usize, seed: u64) -> Result<BootstrapSummary> {
    if n_resamples < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 bootstrap resamples, got {n_resamples}")));
    }
    if let Some(q) = points.iter().find(|q| q.samples.is_empty()) {
        return Err(Error::InvalidArgument(format!(
            "point p = {}, L = {} has no raw samples to resample",
            q.p, q.l
        )));
    }
    let results: Vec<Option<(f64, f64)>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(b"bootstrp", seed, points.len() as u64, b);
            let resampled: Vec<CollapsePoint> = points.iter().map(|q| resample_point(q, &mut rng)).collect();
            raw_collapse(&resampled, (fit.p_c, fit.nu), &fit.bounds).ok().map(|r| (r.theta[0], r.theta[1]))
        })
        .collect();
    let estimates: Vec<(f64, f64)> = results.iter().flatten().copied().collect();
    let n_failed = n_resamples - estimates.len();
    if n_failed as f64 > MAX_BOOTSTRAP_FAILURE * n_resamples as f64 {
        return Err(Error::Fit(format!("{n_failed} of {n_resamples} bootstrap refits failed")));
    }
    let pcs: Vec<f64> = estimates.iter().map(|e| e.0).collect();
    let nus: Vec<f64> = estimates.iter().map(|e| e.1).collect();
    Ok(BootstrapSummary { std_p_c: stats::spread(&pcs), std_nu: stats::spread(&nus), n_resamples, n_failed, estimates })
}

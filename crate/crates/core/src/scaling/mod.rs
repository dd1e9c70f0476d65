//! Finite-size scaling: data collapse onto `y = f((p - p_c) L^{1/nu})` by
//! minimizing a reduced chi-squared built from neighbor interpolation along
//! the scaling axis, and the same machinery for `S(t) = g(t / L^z)`.

mod bootstrap;
mod dynamical;
mod optimize;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats;

pub use bootstrap::{bootstrap_errors, BootstrapSummary};
pub use dynamical::{fit_dynamical_exponent, select_early_time, DynamicalFit, EntropySeries, TimeWindow};

use optimize::{invert, Problem};

/// Default bootstrap resample count.
pub const DEFAULT_BOOTSTRAP: usize = 100;
/// Abort when more than this fraction of bootstrap refits fail.
pub const MAX_BOOTSTRAP_FAILURE: f64 = 0.2;

/// One `(p, L)` data point with its per-trajectory samples.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsePoint {
    pub p: f64,
    pub l: usize,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub sem: f64,
}

impl CollapsePoint {
    pub fn from_samples(p: f64, l: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(format!("no samples at p = {p}, L = {l}")));
        }
        Ok(Self { p, l, mean: stats::mean(&samples), sem: stats::sem(&samples), samples })
    }

    /// A point known only through its mean and standard error; cannot be bootstrapped.
    pub fn from_summary(p: f64, l: usize, mean: f64, sem: f64) -> Self {
        Self { p, l, samples: Vec::new(), mean, sem }
    }
}

/// Fit bounds on `(p_c, nu)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounds {
    pub p_c: (f64, f64),
    pub nu: (f64, f64),
}

impl Bounds {
    /// `p_c` within the sampled range of `p`, `nu` in `[0.3, 3]`.
    pub fn default_for(points: &[CollapsePoint]) -> Self {
        let lo = points.iter().map(|q| q.p).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|q| q.p).fold(f64::NEG_INFINITY, f64::max);
        Self { p_c: (lo, hi), nu: (0.3, 3.0) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub bounds: Option<Bounds>,
    /// Bootstrap resamples; 0 keeps only the Hessian errors.
    pub n_bootstrap: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { bounds: None, n_bootstrap: DEFAULT_BOOTSTRAP, seed: 0 }
    }
}

impl FitOptions {
    pub fn without_bootstrap() -> Self {
        Self { n_bootstrap: 0, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseFit {
    pub p_c: f64,
    pub nu: f64,
    /// `max(hessian, bootstrap)`.
    pub err_p_c: f64,
    pub err_nu: f64,
    pub hessian_err_p_c: Option<f64>,
    pub hessian_err_nu: Option<f64>,
    pub bootstrap_std_p_c: Option<f64>,
    pub bootstrap_std_nu: Option<f64>,
    pub chi2_reduced: f64,
    pub n_points: usize,
    pub k_params: usize,
    pub n_bootstrap: usize,
    pub n_bootstrap_failed: usize,
    pub bounds: Bounds,
    /// The optimum touches a bound and should not be trusted.
    pub at_bound: bool,
    pub converged: bool,
}

/// Linear interpolation weights for the point at sorted position `s` from its
/// two neighbors, extrapolating from the two nearest at the ends.
fn neighbors(s: usize, n: usize) -> (usize, usize) {
    if s == 0 {
        (1, 2)
    } else if s == n - 1 {
        (n - 3, n - 2)
    } else {
        (s - 1, s + 1)
    }
}

/// Normalized residuals `(y_i - y'_i) / sigma_i`, in input order, for scaling variables `xs`.
pub(crate) fn residuals(points: &[CollapsePoint], xs: &[f64]) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Fit(format!("collapse needs at least 3 points, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        xs[a].total_cmp(&xs[b]).then(points[a].l.cmp(&points[b].l)).then(points[a].p.total_cmp(&points[b].p))
    });
    let mut out = vec![0.0; n];
    for s in 0..n {
        let (a, b) = neighbors(s, n);
        let (i, ia, ib) = (order[s], order[a], order[b]);
        let dx = xs[ib] - xs[ia];
        let (wa, wb) = if dx == 0.0 { (0.5, 0.5) } else { ((xs[ib] - xs[i]) / dx, (xs[i] - xs[ia]) / dx) };
        let y_interp = wa * points[ia].mean + wb * points[ib].mean;
        let var = points[i].sem.powi(2) + (wa * points[ia].sem).powi(2) + (wb * points[ib].sem).powi(2);
        if var <= 0.0 || !var.is_finite() {
            return Err(Error::Fit(format!(
                "zero uncertainty at p = {}, L = {}; the samples carry no variance",
                points[i].p, points[i].l
            )));
        }
        out[i] = (points[i].mean - y_interp) / var.sqrt();
    }
    Ok(out)
}

fn scaling_variables(points: &[CollapsePoint], p_c: f64, nu: f64) -> Vec<f64> {
    points.iter().map(|q| (q.p - p_c) * (q.l as f64).powf(1.0 / nu)).collect()
}

/// Reduced chi-squared of the collapse at `(p_c, nu)` with `N - 2` degrees of freedom.
pub fn collapse_loss(points: &[CollapsePoint], p_c: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
    }
    let r = residuals(points, &scaling_variables(points, p_c, nu))?;
    Ok(reduced(&r, 2))
}

fn reduced(r: &[f64], k: usize) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>() / (r.len() - k) as f64
}

/// `(x, y, sigma_y)` of every point at `(p_c, nu)`, sorted by `x`.
pub fn collapsed_curve(points: &[CollapsePoint], p_c: f64, nu: f64) -> Vec<(f64, f64, f64)> {
    let xs = scaling_variables(points, p_c, nu);
    let mut out: Vec<(f64, f64, f64)> = xs.into_iter().zip(points).map(|(x, q)| (x, q.mean, q.sem)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Result of the bare optimization, before bootstrap.
pub(crate) struct RawFit {
    pub theta: Vec<f64>,
    pub chi2_reduced: f64,
    pub hessian_err: Option<Vec<f64>>,
    pub at_bound: bool,
    pub converged: bool,
}

/// Minimizes the interpolation chi-squared over `theta`, where `scale` maps a
/// point and the parameters to its scaling variable.
pub(crate) fn fit_generic(
    points: &[CollapsePoint],
    scale: &(dyn Fn(&CollapsePoint, &[f64]) -> f64 + Sync),
    x0: &[f64],
    lower: Vec<f64>,
    upper: Vec<f64>,
) -> Result<RawFit> {
    let k = x0.len();
    if points.len() <= k {
        return Err(Error::Fit(format!("{} points cannot constrain {k} parameters", points.len())));
    }
    let f = |theta: &[f64]| -> Result<Vec<f64>> {
        let xs: Vec<f64> = points.iter().map(|q| scale(q, theta)).collect();
        residuals(points, &xs)
    };
    let problem = Problem { residuals: &f, lower, upper };
    let sol = problem.minimize(x0)?;
    let dof = (sol.n_residuals - k) as f64;
    let chi2_reduced = sol.cost / dof;
    if !chi2_reduced.is_finite() {
        return Err(Error::Fit("loss diverged".into()));
    }
    // Covariance (J^T J)^{-1} scaled by the reduced chi-squared.
    let hessian_err = invert(&sol.jtj).and_then(|cov| {
        let errs: Vec<f64> = (0..k).map(|j| (cov[j][j] * chi2_reduced).sqrt()).collect();
        errs.iter().all(|e| e.is_finite() && *e > 0.0).then_some(errs)
    });
    Ok(RawFit {
        at_bound: problem.at_bound(&sol.x),
        theta: sol.x,
        chi2_reduced,
        hessian_err,
        converged: sol.converged,
    })
}

pub(crate) fn raw_collapse(points: &[CollapsePoint], initial: (f64, f64), bounds: &Bounds) -> Result<RawFit> {
    // At p_c equal to a sampled p every size shares x = 0 and the loss jumps with
    // the tie order, so never start exactly there.
    let mut p0 = initial.0;
    if points.iter().any(|q| q.p == p0) {
        let nudge = 1e-6 * (bounds.p_c.1 - bounds.p_c.0);
        p0 = if p0 + nudge <= bounds.p_c.1 { p0 + nudge } else { p0 - nudge };
    }
    let initial = (p0, initial.1);
    let scale = |q: &CollapsePoint, t: &[f64]| (q.p - t[0]) * (q.l as f64).powf(1.0 / t[1]);
    fit_generic(
        points,
        &scale,
        &[initial.0, initial.1],
        vec![bounds.p_c.0, bounds.nu.0],
        vec![bounds.p_c.1, bounds.nu.1],
    )
}

fn combine(hessian: Option<f64>, bootstrap: Option<f64>) -> f64 {
    match (hessian, bootstrap) {
        (Some(h), Some(b)) => h.max(b),
        (Some(h), None) => h,
        (None, Some(b)) => b,
        (None, None) => f64::NAN,
    }
}

/// Fits `(p_c, nu)` from `initial`, with Hessian and (optionally) bootstrap errors.
pub fn fit_collapse(points: &[CollapsePoint], initial: (f64, f64), options: &FitOptions) -> Result<CollapseFit> {
    let bounds = options.bounds.unwrap_or_else(|| Bounds::default_for(points));
    let raw = raw_collapse(points, initial, &bounds)?;
    let mut fit = CollapseFit {
        p_c: raw.theta[0],
        nu: raw.theta[1],
        err_p_c: f64::NAN,
        err_nu: f64::NAN,
        hessian_err_p_c: raw.hessian_err.as_ref().map(|e| e[0]),
        hessian_err_nu: raw.hessian_err.as_ref().map(|e| e[1]),
        bootstrap_std_p_c: None,
        bootstrap_std_nu: None,
        chi2_reduced: raw.chi2_reduced,
        n_points: points.len(),
        k_params: 2,
        n_bootstrap: 0,
        n_bootstrap_failed: 0,
        bounds,
        at_bound: raw.at_bound,
        converged: raw.converged,
    };
    if options.n_bootstrap > 0 {
        let b = bootstrap_errors(points, &fit, options.n_bootstrap, options.seed)?;
        fit.bootstrap_std_p_c = Some(b.std_p_c);
        fit.bootstrap_std_nu = Some(b.std_nu);
        fit.n_bootstrap = b.n_resamples;
        fit.n_bootstrap_failed = b.n_failed;
    }
    fit.err_p_c = combine(fit.hessian_err_p_c, fit.bootstrap_std_p_c);
    fit.err_nu = combine(fit.hessian_err_nu, fit.bootstrap_std_nu);
    Ok(fit)
}

/// Fits from each start and returns the distinct local optima whose loss is
/// within twice the best, best first.
pub fn fit_collapse_multistart(
    points: &[CollapsePoint],
    starts: &[(f64, f64)],
    options: &FitOptions,
) -> Result<Vec<CollapseFit>> {
    let bounds = options.bounds.unwrap_or_else(|| Bounds::default_for(points));
    let mut optima: Vec<(f64, f64, f64)> = Vec::new();
    let mut last_err = None;
    for &s in starts {
        match raw_collapse(points, s, &bounds) {
            Ok(r) => optima.push((r.chi2_reduced, r.theta[0], r.theta[1])),
            Err(e) => last_err = Some(e),
        }
    }
    if optima.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Fit("no starting points".into())));
    }
    optima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = optima[0].0;
    let mut distinct: Vec<(f64, f64, f64)> = Vec::new();
    for o in optima.into_iter().filter(|o| o.0 <= 2.0 * best) {
        let dup = distinct.iter().any(|d| {
            (d.1 - o.1).abs() < 1e-3 * (bounds.p_c.1 - bounds.p_c.0) && (d.2 - o.2).abs() < 1e-3 * (bounds.nu.1 - bounds.nu.0)
        });
        if !dup {
            distinct.push(o);
        }
    }
    let opts = FitOptions { bounds: Some(bounds), ..options.clone() };
    distinct.iter().map(|&(_, p, nu)| fit_collapse(points, (p, nu), &opts)).collect()
}

#[cfg(test)]
pub(crate) mod synthetic {
    use super::CollapsePoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// `tanh((p - p_c) L^{1/nu})` sampled with Gaussian noise of width `noise`
    /// per trajectory.
    pub fn tanh_points(p_c: f64, nu: f64, sizes: &[usize], ps: &[f64], n: usize, noise: f64, seed: u64) -> Vec<CollapsePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, noise).unwrap();
        let mut out = Vec::new();
        for &l in sizes {
            for &p in ps {
                let y = ((p - p_c) * (l as f64).powf(1.0 / nu)).tanh();
                let samples = (0..n).map(|_| y + dist.sample(&mut rng)).collect();
                out.push(CollapsePoint::from_samples(p, l, samples).unwrap());
            }
        }
        out
    }

    pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::synthetic::*;
    use super::*;

    fn data(seed: u64) -> Vec<CollapsePoint> {
        tanh_points(0.5, 1.0, &[8, 12, 16, 24], &grid(0.4, 0.6, 11), 200, 0.1, seed)
    }

    #[test]
    fn loss_near_one_at_truth_and_large_when_shifted() {
        let pts = data(1);
        let at_truth = collapse_loss(&pts, 0.5, 1.0).unwrap();
        assert!((0.5..1.8).contains(&at_truth), "{at_truth}");
        let off = collapse_loss(&pts, 0.55, 1.0).unwrap();
        assert!(off > 20.0 * at_truth, "{off}");
    }

    #[test]
    fn loss_hand_computed() {
        // Three points on a line with unit errors: every residual is zero.
        let pts: Vec<CollapsePoint> =
            (0..3).map(|i| CollapsePoint::from_summary(i as f64, 1, 2.0 * i as f64, 1.0)).collect();
        assert!(collapse_loss(&pts, 0.0, 1.0).unwrap().abs() < 1e-15);
        // Bump the middle point: y' = 2, sigma^2 = 1 + 1/4 + 1/4.
        let mut pts = pts;
        pts[1].mean = 3.0;
        // Endpoints extrapolate: y'_0 = 3 - (4 - 3) = 2 (weights 2, -1), sigma^2 = 1 + 4 + 1.
        // y'_2 = 0 + 3*2 = 6 (weights -1, 2).
        let expect = (1.0 / 1.5) + (2.0f64 * 2.0 / 6.0) + (2.0f64 * 2.0 / 6.0);
        let got = collapse_loss(&pts, 0.0, 1.0).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn loss_errors() {
        let pts = data(2);
        assert!(collapse_loss(&pts, 0.5, 0.0).is_err());
        assert!(collapse_loss(&pts[..2], 0.5, 1.0).is_err());
        let flat: Vec<CollapsePoint> =
            (0..4).map(|i| CollapsePoint::from_samples(i as f64, 8, vec![1.0; 5]).unwrap()).collect();
        assert!(collapse_loss(&flat, 0.0, 1.0).is_err());
    }

    #[test]
    fn identical_x_is_finite() {
        let mut pts = vec![
            CollapsePoint::from_summary(0.5, 8, 0.1, 0.1),
            CollapsePoint::from_summary(0.5, 8, 0.2, 0.1),
            CollapsePoint::from_summary(0.6, 8, 0.3, 0.1),
            CollapsePoint::from_summary(0.7, 8, 0.4, 0.1),
        ];
        assert!(collapse_loss(&pts, 0.5, 1.0).unwrap().is_finite());
        pts.reverse();
        assert!(collapse_loss(&pts, 0.5, 1.0).unwrap().is_finite());
    }

    #[test]
    fn recovers_synthetic_exponents() {
        let pts = data(3);
        let fit = fit_collapse(&pts, (0.47, 1.3), &FitOptions::without_bootstrap()).unwrap();
        assert!((fit.p_c - 0.5).abs() < 0.01, "{fit:?}");
        assert!((fit.nu - 1.0).abs() < 0.05, "{fit:?}");
        assert!(!fit.at_bound && fit.hessian_err_p_c.is_some());
        assert!(fit.chi2_reduced > 0.3 && fit.chi2_reduced < 2.0);
    }

    #[test]
    fn shift_covariance() {
        let pts = data(4);
        let shifted: Vec<CollapsePoint> =
            pts.iter().map(|q| CollapsePoint { p: q.p + 0.125, ..q.clone() }).collect();
        let a = fit_collapse(&pts, (0.48, 1.1), &FitOptions::without_bootstrap()).unwrap();
        let b = fit_collapse(&shifted, (0.605, 1.1), &FitOptions::without_bootstrap()).unwrap();
        assert!((b.p_c - a.p_c - 0.125).abs() < 1e-5, "{} {}", a.p_c, b.p_c);
        assert!((b.nu - a.nu).abs() < 1e-4);
    }

    #[test]
    fn pinned_optimum_is_flagged() {
        let pts = data(5);
        let opts = FitOptions { bounds: Some(Bounds { p_c: (0.4, 0.6), nu: (1.5, 3.0) }), ..FitOptions::without_bootstrap() };
        let fit = fit_collapse(&pts, (0.5, 2.0), &opts).unwrap();
        assert!(fit.at_bound, "{fit:?}");
    }

    #[test]
    fn multistart_finds_the_optimum() {
        let pts = data(6);
        let starts = [(0.42, 0.6), (0.5, 1.0), (0.58, 2.0)];
        let fits = fit_collapse_multistart(&pts, &starts, &FitOptions::without_bootstrap()).unwrap();
        assert!(!fits.is_empty());
        assert!((fits[0].p_c - 0.5).abs() < 0.01 && (fits[0].nu - 1.0).abs() < 0.05, "{fits:?}");
        for w in fits.windows(2) {
            assert!(w[0].chi2_reduced <= w[1].chi2_reduced);
        }
    }
}

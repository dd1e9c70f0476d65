//! Box-constrained least squares: Levenberg-Marquardt with a finite-difference
//! Jacobian, polished by Nelder-Mead because the collapse residuals have kinks
//! wherever two points swap order along the scaling axis.

use crate::error::{Error, Result};

pub(crate) type ResidualFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a;

pub(crate) struct Problem<'a> {
    pub residuals: &'a ResidualFn<'a>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub x: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub n_residuals: usize,
    /// `J^T J` at `x`.
    pub jtj: Vec<Vec<f64>>,
    pub converged: bool,
}

const MAX_LM_ITER: usize = 300;
const MAX_NM_ITER: usize = 4000;

impl Problem<'_> {
    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.lower.iter().zip(&self.upper)).map(|(&v, (&lo, &hi))| v.clamp(lo, hi)).collect()
    }

    fn cost(&self, x: &[f64]) -> f64 {
        match (self.residuals)(x) {
            Ok(r) if r.iter().all(|v| v.is_finite()) => r.iter().map(|v| v * v).sum(),
            _ => f64::INFINITY,
        }
    }

    fn jacobian(&self, x: &[f64], r0: &[f64]) -> Result<Vec<Vec<f64>>> {
        let k = x.len();
        let mut jac = vec![vec![0.0; k]; r0.len()];
        for j in 0..k {
            let span = self.upper[j] - self.lower[j];
            // Independent of |x| so that shifting the data shifts the whole search.
            let h = 1e-6 * span;
            let (lo, hi) = (x[j] - h, x[j] + h);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            let (rp, rm, width) = if lo >= self.lower[j] && hi <= self.upper[j] {
                xp[j] = hi;
                xm[j] = lo;
                ((self.residuals)(&xp)?, (self.residuals)(&xm)?, 2.0 * h)
            } else if hi <= self.upper[j] {
                xp[j] = hi;
                ((self.residuals)(&xp)?, r0.to_vec(), h)
            } else {
                xm[j] = lo;
                (r0.to_vec(), (self.residuals)(&xm)?, h)
            };
            for i in 0..r0.len() {
                jac[i][j] = (rp[i] - rm[i]) / width;
            }
        }
        Ok(jac)
    }

    fn levenberg_marquardt(&self, x0: &[f64]) -> Result<Solution> {
        let k = x0.len();
        let mut x = self.clamp(x0);
        let mut r = (self.residuals)(&x)?;
        let mut cost: f64 = r.iter().map(|v| v * v).sum();
        if !cost.is_finite() {
            return Err(Error::Fit(format!("loss is not finite at the initial guess {x:?}")));
        }
        let mut lambda = 1e-3;
        let mut converged = false;
        for _ in 0..MAX_LM_ITER {
            let jac = self.jacobian(&x, &r)?;
            let (jtj, jtr) = normal_equations(&jac, &r);
            let mut accepted = None;
            while lambda < 1e12 {
                let mut m = jtj.clone();
                for (j, row) in m.iter_mut().enumerate() {
                    row[j] += lambda * jtj[j][j].max(1e-12);
                }
                let Some(delta) = solve(m, jtr.iter().map(|g| -g).collect()) else {
                    lambda *= 4.0;
                    continue;
                };
                let trial = self.clamp(&x.iter().zip(&delta).map(|(a, d)| a + d).collect::<Vec<_>>());
                let trial_cost = self.cost(&trial);
                if trial_cost < cost {
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = Some((trial, trial_cost));
                    break;
                }
                lambda *= 4.0;
            }
            let Some((trial, trial_cost)) = accepted else {
                converged = true;
                break;
            };
            let step: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let small = cost - trial_cost <= 1e-12 * cost && step <= 1e-10 * (scale + 1e-10);
            x = trial;
            cost = trial_cost;
            r = (self.residuals)(&x)?;
            if small {
                converged = true;
                break;
            }
        }
        let jac = self.jacobian(&x, &r)?;
        let (jtj, _) = normal_equations(&jac, &r);
        debug_assert_eq!(jtj.len(), k);
        Ok(Solution { x, cost, n_residuals: r.len(), jtj, converged })
    }

    fn nelder_mead(&self, x0: &[f64]) -> Vec<f64> {
        let k = x0.len();
        let mut simplex = vec![self.clamp(x0)];
        for j in 0..k {
            let mut v = simplex[0].clone();
            let d = 0.05 * (self.upper[j] - self.lower[j]);
            v[j] = if v[j] + d <= self.upper[j] { v[j] + d } else { v[j] - d };
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| self.cost(v)).collect();
        for _ in 0..MAX_NM_ITER {
            let mut order: Vec<usize> = (0..=k).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[k] - values[0];
            let size = simplex[1..]
                .iter()
                .flat_map(|v| v.iter().zip(&simplex[0]).enumerate().map(|(j, (a, b))| (a - b).abs() / (self.upper[j] - self.lower[j])))
                .fold(0.0, f64::max);
            if spread.is_finite() && spread <= 1e-13 * values[0].abs().max(1e-300) && size < 1e-10 {
                break;
            }
            let centroid: Vec<f64> =
                (0..k).map(|j| simplex[..k].iter().map(|v| v[j]).sum::<f64>() / k as f64).collect();
            let along = |t: f64| {
                self.clamp(&centroid.iter().zip(&simplex[k]).map(|(c, w)| c + t * (w - c)).collect::<Vec<_>>())
            };
            let reflected = along(-1.0);
            let fr = self.cost(&reflected);
            if fr < values[0] {
                let expanded = along(-2.0);
                let fe = self.cost(&expanded);
                if fe < fr {
                    simplex[k] = expanded;
                    values[k] = fe;
                } else {
                    simplex[k] = reflected;
                    values[k] = fr;
                }
            } else if fr < values[k - 1] {
                simplex[k] = reflected;
                values[k] = fr;
            } else {
                let contracted = if fr < values[k] { along(-0.5) } else { along(0.5) };
                let fc = self.cost(&contracted);
                if fc < values[k].min(fr) {
                    simplex[k] = contracted;
                    values[k] = fc;
                } else {
                    for i in 1..=k {
                        simplex[i] = simplex[i].iter().zip(&simplex[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                        values[i] = self.cost(&simplex[i]);
                    }
                }
            }
        }
        let best = (0..=k).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        simplex[best].clone()
    }

    /// LM from `x0`, then Nelder-Mead from the LM optimum; LM is rerun from the
    /// simplex result when that improved the loss.
    pub fn minimize(&self, x0: &[f64]) -> Result<Solution> {
        for (j, v) in x0.iter().enumerate() {
            if !(self.lower[j]..=self.upper[j]).contains(v) {
                return Err(Error::Fit(format!(
                    "initial guess {v} outside bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        let lm = self.levenberg_marquardt(x0);
        let start = match &lm {
            Ok(s) => s.x.clone(),
            Err(_) => x0.to_vec(),
        };
        let nm_x = self.nelder_mead(&start);
        let nm_cost = self.cost(&nm_x);
        match lm {
            Ok(s) if s.cost <= nm_cost * (1.0 + 1e-10) => Ok(s),
            _ if nm_cost.is_finite() => {
                let polished = self.levenberg_marquardt(&nm_x)?;
                if polished.cost <= nm_cost {
                    Ok(polished)
                } else {
                    let r = (self.residuals)(&nm_x)?;
                    let (jtj, _) = normal_equations(&self.jacobian(&nm_x, &r)?, &r);
                    Ok(Solution { x: nm_x, cost: nm_cost, n_residuals: r.len(), jtj, converged: true })
                }
            }
            Ok(s) => Ok(s),
            Err(e) => Err(e),
        }
    }

    /// True when a coordinate sits within a relative `1e-6` of its bound.
    pub fn at_bound(&self, x: &[f64]) -> bool {
        x.iter().enumerate().any(|(j, &v)| {
            let tol = 1e-6 * (self.upper[j] - self.lower[j]);
            v - self.lower[j] <= tol || self.upper[j] - v <= tol
        })
    }
}

fn normal_equations(jac: &[Vec<f64>], r: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = jac.first().map_or(0, Vec::len);
    let mut jtj = vec![vec![0.0; k]; k];
    let mut jtr = vec![0.0; k];
    for (row, &ri) in jac.iter().zip(r) {
        for a in 0..k {
            jtr[a] += row[a] * ri;
            for b in 0..k {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub(crate) fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 || !m[p][c].is_finite() {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for cc in c..n {
                m[r][cc] -= f * m[c][cc];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|j| m[c][j] * x[j]).sum();
        x[c] = (b[c] - s) / m[c][c];
    }
    Some(x)
}

/// Inverse of a small symmetric positive matrix; `None` when singular.
pub(crate) fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let cols: Option<Vec<Vec<f64>>> = (0..n)
        .map(|j| solve(m.to_vec(), (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()))
        .collect();
    let cols = cols?;
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

//! Order parameter and tripartite information of the global AFM control,
//! optionally with projective measurements in the chaotic step.
//!
//! ```text
//! cargo run --release --example global_afm_sweep -- [n_traj] [p_proj]
//! ```
//!
//! At `p_proj = 0` both observables cross at the same control rate; with
//! measurements the entanglement transition moves to smaller `p_ctrl`.

use qbernoulli::scaling::{fit_collapse, CollapsePoint, FitOptions};
use qbernoulli::{sweep, ModelConfig, ModelVariant, Observable, TrajectoryOptions};

fn main() -> qbernoulli::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_traj: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let p_proj: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.0);
    let variant = if p_proj > 0.0 { ModelVariant::GlobalAfmProj } else { ModelVariant::GlobalAfm };
    let sizes = [8, 12];
    let ps: Vec<f64> = (0..=8).map(|k| 0.3 + 0.04 * k as f64).collect();

    let grid: Vec<ModelConfig> = sizes
        .iter()
        .flat_map(|&l| ps.iter().map(move |&p| ModelConfig::new(variant, l, p, 2024).with_p_proj(p_proj)))
        .collect();
    let observables = [Observable::OrderAfm, Observable::TripartiteVonNeumann];
    let results = sweep(&grid, n_traj, &TrajectoryOptions::new(observables.to_vec()))?;

    println!("{:>3} {:>6} {:>10} {:>10}", "L", "p_ctrl", "O_AFM", "I3_1");
    for r in &results {
        let m = |o| r.get(&o).map_or(f64::NAN, |s| s.mean);
        println!("{:>3} {:>6.2} {:>10.4} {:>10.4}", r.config.num_qubits, r.config.p_ctrl, m(Observable::OrderAfm), m(Observable::TripartiteVonNeumann));
    }

    for obs in observables {
        let points = results
            .iter()
            .map(|r| CollapsePoint::from_samples(r.config.p_ctrl, r.config.num_qubits, r.get(&obs).unwrap().samples.clone()))
            .collect::<qbernoulli::Result<Vec<_>>>()?;
        match fit_collapse(&points, (0.45, 1.0), &FitOptions::without_bootstrap()) {
            Ok(f) => println!("{obs}: p_c = {:.3} +- {:.3}, nu = {:.2} +- {:.2}", f.p_c, f.err_p_c, f.nu, f.err_nu),
            Err(e) => println!("{obs}: {e}"),
        }
    }
    Ok(())
}

//! Local FM control: the entanglement transition happens at a smaller control
//! rate than the ordering transition.
//!
//! ```text
//! cargo run --release --example local_fm_split -- [n_traj]
//! ```

use qbernoulli::scaling::{fit_collapse, Bounds, CollapsePoint, FitOptions};
use qbernoulli::{sweep, EnsembleSummary, ModelConfig, ModelVariant, Observable, TrajectoryOptions};

fn fit(results: &[EnsembleSummary], obs: Observable, window: (f64, f64)) -> qbernoulli::Result<()> {
    let points = results
        .iter()
        .filter(|r| (window.0..=window.1).contains(&r.config.p_ctrl))
        .map(|r| CollapsePoint::from_samples(r.config.p_ctrl, r.config.num_qubits, r.get(&obs).unwrap().samples.clone()))
        .collect::<qbernoulli::Result<Vec<_>>>()?;
    let options = FitOptions { bounds: Some(Bounds { p_c: window, nu: (0.3, 3.0) }), ..FitOptions::without_bootstrap() };
    let f = fit_collapse(&points, (0.5 * (window.0 + window.1) + 0.013, 1.0), &options)?;
    println!("{obs:>5}: p_c = {:.3} +- {:.3}, nu = {:.2} +- {:.2}", f.p_c, f.err_p_c, f.nu, f.err_nu);
    Ok(())
}

fn main() -> qbernoulli::Result<()> {
    let n_traj: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let ps: Vec<f64> = (0..=10).map(|k| 0.15 + 0.05 * k as f64).collect();
    let grid: Vec<ModelConfig> = [8, 12]
        .iter()
        .flat_map(|&l| ps.iter().map(move |&p| ModelConfig::new(ModelVariant::LocalFm, l, p, 5)))
        .collect();
    let options = TrajectoryOptions::new(vec![Observable::OrderFm, Observable::TripartiteVonNeumann]);
    let results = sweep(&grid, n_traj, &options)?;

    for r in &results {
        println!(
            "L={:<3} p={:.2}  O_FM={:.4}  I3_1={:.4}",
            r.config.num_qubits,
            r.config.p_ctrl,
            r.get(&Observable::OrderFm).unwrap().mean,
            r.get(&Observable::TripartiteVonNeumann).unwrap().mean
        );
    }
    fit(&results, Observable::OrderFm, (0.35, 0.65))?;
    fit(&results, Observable::TripartiteVonNeumann, (0.15, 0.45))?;
    Ok(())
}

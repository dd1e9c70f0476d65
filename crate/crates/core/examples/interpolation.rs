//! Mixing global and local AFM control with probability `p_global`.
//!
//! ```text
//! cargo run --release --example interpolation -- [n_traj]
//! ```

use qbernoulli::{sweep, ModelConfig, ModelVariant, Observable, TrajectoryOptions};

fn main() -> qbernoulli::Result<()> {
    let n_traj: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(60);
    let ps: Vec<f64> = (0..=8).map(|k| 0.1 + 0.05 * k as f64).collect();
    let options = TrajectoryOptions::new(vec![Observable::OrderAfm, Observable::TripartiteVonNeumann]);

    for p_global in [0.0, 0.15, 0.5, 1.0] {
        let grid: Vec<ModelConfig> = [8, 12]
            .iter()
            .flat_map(|&l| {
                ps.iter().map(move |&p| ModelConfig::new(ModelVariant::InterpolatedAfm, l, p, 3).with_p_global(p_global))
            })
            .collect();
        let results = sweep(&grid, n_traj, &options)?;
        println!("p_global = {p_global}");
        for (a, b) in results[..ps.len()].iter().zip(&results[ps.len()..]) {
            let i3 = |r: &qbernoulli::EnsembleSummary| r.get(&Observable::TripartiteVonNeumann).unwrap().mean;
            let o = |r: &qbernoulli::EnsembleSummary| r.get(&Observable::OrderAfm).unwrap().mean;
            println!(
                "  p={:.2}  O_AFM {:.3} / {:.3}   I3_1 {:+.3} / {:+.3}",
                a.config.p_ctrl,
                o(a),
                o(b),
                i3(a),
                i3(b)
            );
        }
    }
    Ok(())
}

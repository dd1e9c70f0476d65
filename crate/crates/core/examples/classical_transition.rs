//! Control-induced transition of the classical Bernoulli map.
//!
//! ```text
//! cargo run --release --example classical_transition -- [n_traj]
//! ```

use qbernoulli::circuits::FixedPoint;
use qbernoulli::classical::classical_transition_scan;
use qbernoulli::scaling::{fit_collapse, CollapsePoint, FitOptions};

fn main() -> qbernoulli::Result<()> {
    let n_traj: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4000);
    let sizes = [16, 32, 64];
    let grid: Vec<f64> = (0..=10).map(|k| 0.4 + 0.02 * k as f64).collect();

    let mut points = Vec::new();
    println!("{:>6} {}", "p", sizes.map(|l| format!("{:>16}", format!("O_AFM(L={l})"))).join(""));
    let scans = sizes
        .iter()
        .map(|&l| classical_transition_scan(l, FixedPoint::Afm, &grid, n_traj, None, 7))
        .collect::<qbernoulli::Result<Vec<_>>>()?;
    for (k, p) in grid.iter().enumerate() {
        let row: String = scans.iter().map(|s| format!("{:>16.4}", s[k].stats.mean)).collect();
        println!("{p:>6.2} {row}");
    }
    for (scan, &l) in scans.iter().zip(&sizes) {
        for pt in scan {
            points.push(CollapsePoint::from_samples(pt.config.p_ctrl, l, pt.stats.samples.clone())?);
        }
    }

    let fit = fit_collapse(&points, (0.45, 1.2), &FitOptions::without_bootstrap())?;
    println!("collapse: p_c = {:.4} +- {:.4}, nu = {:.3} +- {:.3}, chi2/dof = {:.2}", fit.p_c, fit.err_p_c, fit.nu, fit.err_nu, fit.chi2_reduced);
    Ok(())
}

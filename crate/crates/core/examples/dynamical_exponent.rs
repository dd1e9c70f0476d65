//! Growth of the half-cut entropy and the dynamical exponent `z`.
//!
//! ```text
//! cargo run --release --example dynamical_exponent -- [p_ctrl] [p_proj] [n_traj]
//! ```
//!
//! `(0.5, 0)` sits on the control transition of the global AFM model, where the
//! entropy spreads diffusively. `(0, 0.19)` is the measurement-only transition.

use qbernoulli::engine::TimeSeriesSpec;
use qbernoulli::scaling::{fit_dynamical_exponent, EntropySeries, TimeWindow};
use qbernoulli::{sweep, ModelConfig, ModelVariant, Observable, TrajectoryOptions};

fn main() -> qbernoulli::Result<()> {
    let mut args = std::env::args().skip(1);
    let p_ctrl: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let p_proj: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.0);
    let n_traj: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(60);

    let sizes = [8, 12];
    let grid: Vec<ModelConfig> = sizes
        .iter()
        .map(|&l| ModelConfig::new(ModelVariant::GlobalAfmProj, l, p_ctrl, 9).with_p_proj(p_proj))
        .collect();
    let options = TrajectoryOptions::new(vec![Observable::HalfCut]).with_time_series(TimeSeriesSpec::every_step());
    let results = sweep(&grid, n_traj, &options)?;

    let series: Vec<EntropySeries> = results
        .iter()
        .map(|r| EntropySeries::from_stats(r.config.num_qubits, r.time_series.as_ref().unwrap()))
        .collect();
    for (s, r) in series.iter().zip(&results) {
        let ts = r.time_series.as_ref().unwrap();
        let every = ts.times.len() / 8;
        let row: Vec<String> = (0..ts.times.len()).step_by(every.max(1)).map(|k| format!("t={}:{:.3}", ts.times[k], ts.mean[k])).collect();
        println!("L={:<3} plateau {:.3}  {}", s.l, s.plateau(0.1), row.join(" "));
    }
    let fit = fit_dynamical_exponent(&series, &TimeWindow::default(), 1.5, (0.3, 4.0), 40, 1)?;
    println!("z = {:.4} +- {:.4} from {} points (chi2/dof {:.2})", fit.z, fit.err_z, fit.n_points, fit.chi2_reduced);
    Ok(())
}

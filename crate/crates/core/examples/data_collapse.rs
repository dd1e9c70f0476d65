//! Collapse fit of a `raw.csv` written by the `sweep` or `classical` commands.
//!
//! ```text
//! cargo run --release --example data_collapse -- out/raw.csv O_AFM [lo:hi]
//! ```
//!
//! Every local optimum from a grid of starting points is reported, which
//! exposes collapses that work almost equally well with different exponents.

use qbernoulli::cli::{collapse_points, read_raw, Axis, CollapseArgs};
use qbernoulli::scaling::{fit_collapse_multistart, FitOptions};

fn main() -> qbernoulli::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [input, observable, rest @ ..] = args.as_slice() else {
        eprintln!("usage: data_collapse <raw.csv> <observable> [lo:hi]");
        std::process::exit(1);
    };
    let window = rest.first().and_then(|w| {
        let (a, b) = w.split_once(':')?;
        Some((a.parse().ok()?, b.parse().ok()?))
    });
    let rows = read_raw(input.as_ref())?;
    let selection = CollapseArgs {
        input: input.into(),
        observable: observable.clone(),
        axis: Axis::PCtrl,
        window,
        sizes: None,
        variant: None,
        initial: None,
        bounds: None,
        n_bootstrap: 0,
        seed: 0,
    };
    let (points, variant, _) = collapse_points(&rows, &selection)?;
    let lo = points.iter().map(|q| q.p).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|q| q.p).fold(f64::NEG_INFINITY, f64::max);
    let mut starts = Vec::new();
    for i in 1..4 {
        for nu in [0.6, 1.0, 1.6] {
            starts.push((lo + (hi - lo) * (i as f64 / 4.0 + 0.01), nu));
        }
    }
    println!("{variant} {observable}: {} points", points.len());
    for f in fit_collapse_multistart(&points, &starts, &FitOptions { n_bootstrap: 50, ..FitOptions::default() })? {
        println!(
            "  p_c = {:.4} +- {:.4}  nu = {:.3} +- {:.3}  chi2/dof = {:.3}{}",
            f.p_c,
            f.err_p_c,
            f.nu,
            f.err_nu,
            f.chi2_reduced,
            if f.at_bound { "  (at bound)" } else { "" }
        );
    }
    Ok(())
}

//! Entanglement diagnostics on a few hand-built states.
//!
//! ```text
//! cargo run --example entanglement_basics
//! ```

use num_complex::Complex64;
use qbernoulli::observables::{half_cut_entropy, tripartite_mutual_information, DEFAULT_S0_THRESHOLD};
use qbernoulli::{StateVector, TwoQubitUnitary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(name: &str, s: &StateVector) -> qbernoulli::Result<()> {
    println!(
        "{name:<14} S_half = {:>8.5}  I3_1 = {:>8.5}  I3_0 = {:>8.5}",
        half_cut_entropy(s, 1.0)?,
        tripartite_mutual_information(s, 1.0, DEFAULT_S0_THRESHOLD)?,
        tripartite_mutual_information(s, 0.0, DEFAULT_S0_THRESHOLD)?,
    );
    Ok(())
}

fn main() -> qbernoulli::Result<()> {
    let l = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    report("neel", &StateVector::from_bits("01010101")?)?;
    report("product", &StateVector::random_product(l, &mut rng)?)?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << l];
    amps[0] = Complex64::new(h, 0.0);
    amps[(1 << l) - 1] = Complex64::new(h, 0.0);
    report("ghz", &StateVector::from_amplitudes(l, amps)?)?;

    report("haar", &StateVector::random_haar(l, &mut rng)?)?;

    // a Bernoulli-style brickwork: shift left, scramble the last pair
    let mut s = StateVector::basis_state(l, 0)?;
    for t in 1..=3 * l {
        s.shift_left();
        s.apply_two_qubit(l - 1, l, &TwoQubitUnitary::haar_random(&mut rng))?;
        if t % l == 0 {
            report(&format!("scrambled t={t}"), &s)?;
        }
    }
    Ok(())
}

//! Order parameters, Schmidt spectra, Renyi entropies and the tripartite
//! mutual information. Entropies use the natural logarithm.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::StateVector;

/// Default cut-off below which a Schmidt eigenvalue counts as zero for `S^(0)`.
pub const DEFAULT_S0_THRESHOLD: f64 = 1e-15;
/// Eigenvalues more negative than this indicate a corrupted decomposition.
pub const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-12;

/// Neel order `-(1/L) sum_i Z_i Z_{i+1}` (periodic) of a single bit string.
pub fn afm_order_of_bits(bits: u128, num_qubits: usize) -> f64 {
    let l = num_qubits as u32;
    let mask = if l == 128 { u128::MAX } else { (1u128 << l) - 1 };
    let x = bits & mask;
    let rotated = ((x << 1) | (x >> (l - 1))) & mask;
    let walls = (x ^ rotated).count_ones() as f64;
    (2.0 * walls - l as f64) / l as f64
}

/// Magnetization `(1/L) sum_i Z_i` of a single bit string.
pub fn fm_order_of_bits(bits: u128, num_qubits: usize) -> f64 {
    let l = num_qubits as u32;
    let mask = if l == 128 { u128::MAX } else { (1u128 << l) - 1 };
    let ones = (bits & mask).count_ones() as f64;
    (l as f64 - 2.0 * ones) / l as f64
}

fn diagonal_expectation(state: &StateVector, f: impl Fn(u128, usize) -> f64) -> f64 {
    let l = state.num_qubits();
    state.probabilities().enumerate().map(|(x, p)| if p == 0.0 { 0.0 } else { p * f(x as u128, l) }).sum()
}

/// `<O_AFM>`; 1 on the Neel states, -1 on `|0...0>`.
pub fn order_parameter_afm(state: &StateVector) -> f64 {
    diagonal_expectation(state, afm_order_of_bits)
}

/// `<O_FM>`; 1 on `|0...0>`.
pub fn order_parameter_fm(state: &StateVector) -> f64 {
    diagonal_expectation(state, fm_order_of_bits)
}

/// An ordered set of distinct qubits, possibly non-contiguous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitSubset {
    members: Vec<usize>,
    num_qubits: usize,
}

impl QubitSubset {
    pub fn new(members: Vec<usize>, num_qubits: usize) -> Result<Self> {
        let mut seen = vec![false; num_qubits + 1];
        for &q in &members {
            if q == 0 || q > num_qubits {
                return Err(Error::QubitIndex { qubit: q, num_qubits });
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidArgument(format!("qubit {q} repeated in subset")));
            }
        }
        Ok(Self { members, num_qubits })
    }

    /// Qubits `first..=last`.
    pub fn range(first: usize, last: usize, num_qubits: usize) -> Result<Self> {
        Self::new((first..=last).collect(), num_qubits)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn complement(&self) -> Self {
        let members = (1..=self.num_qubits).filter(|q| !self.members.contains(q)).collect();
        Self { members, num_qubits: self.num_qubits }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut members = self.members.clone();
        members.extend(other.members.iter().filter(|q| !self.members.contains(q)));
        members.sort_unstable();
        Self::new(members, self.num_qubits)
    }
}

/// Eigenvalues of a reduced density matrix in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    eigenvalues: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Validates and normalizes raw eigenvalues: tiny negatives are clipped to zero.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        for v in eigenvalues.iter_mut() {
            if *v < -NEGATIVE_EIGENVALUE_TOLERANCE || !v.is_finite() {
                return Err(Error::NumericalCorruption(format!("reduced density matrix eigenvalue {v:e}")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        eigenvalues.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Spectrum of the reduced density matrix of `subset`.
///
/// The amplitudes are reshaped into a matrix whose row index is made of the
/// subset's bits and whose column index is made of the remaining bits; the
/// squared singular values are the eigenvalues of `rho_subset`. The smaller
/// side of the bipartition is used as the row space.
pub fn schmidt_spectrum(state: &StateVector, subset: &QubitSubset) -> Result<SchmidtSpectrum> {
    let l = state.num_qubits();
    if subset.num_qubits != l {
        return Err(Error::InvalidArgument("subset built for a different register".into()));
    }
    if subset.is_empty() || subset.len() >= l {
        return Err(Error::InvalidArgument(format!(
            "subset must contain between 1 and {} qubits, got {}",
            l - 1,
            subset.len()
        )));
    }
    let rows_subset = if subset.len() <= l - subset.len() { subset.clone() } else { subset.complement() };
    let row_bits = rows_subset.members().to_vec();
    let col_bits = rows_subset.complement().members().to_vec();
    let nrows = 1usize << row_bits.len();
    let ncols = 1usize << col_bits.len();

    // Amplitude index of (row, col) is the OR of the two deposited bit patterns.
    let deposit = |bits: &[usize]| -> Vec<usize> {
        (0..1usize << bits.len())
            .map(|r| {
                bits.iter().enumerate().fold(0usize, |acc, (k, &q)| {
                    acc | (((r >> (bits.len() - 1 - k)) & 1) << (l - q))
                })
            })
            .collect()
    };
    let (row_part, col_part) = (deposit(&row_bits), deposit(&col_bits));
    let amps = state.amplitudes();
    let m = Mat::<Complex64>::from_fn(nrows, ncols, |r, c| amps[row_part[r] | col_part[c]]);
    let singular = m
        .singular_values()
        .map_err(|e| Error::NumericalCorruption(format!("SVD did not converge: {e:?}")))?;
    SchmidtSpectrum::new(singular.into_iter().map(|s| s * s).collect())
}

/// Renyi entropy of order `n` (natural log).
///
/// `n = 0` counts eigenvalues above `threshold` (Hartley entropy); `n = 1` is the
/// von Neumann entropy; other orders use `ln(sum lambda^n) / (1 - n)`.
pub fn renyi_entropy(spectrum: &SchmidtSpectrum, n: f64, threshold: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(Error::InvalidArgument(format!("Renyi index {n} must be non-negative")));
    }
    let ev = spectrum.eigenvalues();
    if n == 0.0 {
        if !(threshold > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold {threshold} must be positive")));
        }
        let rank = ev.iter().filter(|&&v| v > threshold).count();
        if rank == 0 {
            return Err(Error::NumericalCorruption("no eigenvalue above the threshold".into()));
        }
        return Ok((rank as f64).ln());
    }
    if ev.iter().all(|&v| v <= 0.0) {
        return Err(Error::NumericalCorruption("entropy of an all-zero spectrum".into()));
    }
    if n == 1.0 {
        let s: f64 = ev.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
        return Ok(s.max(0.0));
    }
    let sum: f64 = ev.iter().filter(|&&v| v > 0.0).map(|&v| v.powf(n)).sum();
    Ok((sum.ln() / (1.0 - n)).max(0.0))
}

/// The seven reduced spectra entering `I_3` for the quarters `A, B, C, D`.
///
/// Order: `A, B, C, AB, BC, AC, ABC`. The last one is computed from `D`,
/// which has the same spectrum for a pure state.
#[derive(Clone, Debug)]
pub struct TripartiteSpectra {
    pub spectra: [SchmidtSpectrum; 7],
}

/// Quarters `A = [1, L/4]`, `B`, `C`, `D = [3L/4 + 1, L]`.
pub fn quarters(num_qubits: usize) -> Result<[QubitSubset; 4]> {
    if num_qubits % 4 != 0 || num_qubits < 4 {
        return Err(Error::InvalidArgument(format!("I3 needs L divisible by 4, got {num_qubits}")));
    }
    let q = num_qubits / 4;
    Ok([
        QubitSubset::range(1, q, num_qubits)?,
        QubitSubset::range(q + 1, 2 * q, num_qubits)?,
        QubitSubset::range(2 * q + 1, 3 * q, num_qubits)?,
        QubitSubset::range(3 * q + 1, num_qubits, num_qubits)?,
    ])
}

pub fn tripartite_spectra(state: &StateVector) -> Result<TripartiteSpectra> {
    let [a, b, c, d] = quarters(state.num_qubits())?;
    let subsets = [a.clone(), b.clone(), c.clone(), a.union(&b)?, b.union(&c)?, a.union(&c)?, d];
    let mut out = Vec::with_capacity(7);
    for s in &subsets {
        out.push(schmidt_spectrum(state, s)?);
    }
    Ok(TripartiteSpectra { spectra: out.try_into().expect("seven spectra") })
}

impl TripartiteSpectra {
    /// `S_A + S_B + S_C - S_AB - S_BC - S_AC + S_ABC`.
    pub fn i3(&self, n: f64, threshold: f64) -> Result<f64> {
        const SIGNS: [f64; 7] = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 1.0];
        let mut total = 0.0;
        for (s, sign) in self.spectra.iter().zip(SIGNS) {
            total += sign * renyi_entropy(s, n, threshold)?;
        }
        Ok(total)
    }
}

/// Tripartite mutual information `I_3^(n)` of the four equal quarters.
pub fn tripartite_mutual_information(state: &StateVector, n: f64, threshold: f64) -> Result<f64> {
    tripartite_spectra(state)?.i3(n, threshold)
}

/// Renyi entropy of the left half `[1, L/2]`.
pub fn half_cut_entropy(state: &StateVector, n: f64) -> Result<f64> {
    let l = state.num_qubits();
    if l % 2 != 0 {
        return Err(Error::InvalidArgument(format!("half cut needs even L, got {l}")));
    }
    let spectrum = schmidt_spectrum(state, &QubitSubset::range(1, l / 2, l)?)?;
    renyi_entropy(&spectrum, n, DEFAULT_S0_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::TwoQubitUnitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ghz(l: usize) -> StateVector {
        let mut amps = vec![c(0.0); 1 << l];
        amps[0] = c(std::f64::consts::FRAC_1_SQRT_2);
        amps[(1 << l) - 1] = c(std::f64::consts::FRAC_1_SQRT_2);
        StateVector::from_amplitudes(l, amps).unwrap()
    }

    /// Reduced density matrix by explicit partial trace, then a dense Hermitian eigensolve.
    fn partial_trace_oracle(state: &StateVector, subset: &[usize]) -> Vec<f64> {
        let l = state.num_qubits();
        let k = subset.len();
        let dim = 1usize << k;
        let bit = |x: usize, q: usize| (x >> (l - q)) & 1;
        let key = |x: usize| subset.iter().fold(0usize, |acc, &q| (acc << 1) | bit(x, q));
        let rest = |x: usize| (1..=l).filter(|q| !subset.contains(q)).fold(0usize, |acc, q| (acc << 1) | bit(x, q));
        let amps = state.amplitudes();
        let mut rho = Mat::<Complex64>::zeros(dim, dim);
        for x in 0..amps.len() {
            for y in 0..amps.len() {
                if rest(x) == rest(y) {
                    rho[(key(x), key(y))] += amps[x] * amps[y].conj();
                }
            }
        }
        let mut ev = rho.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    #[test]
    fn order_parameter_examples() {
        let neel = StateVector::from_bits("010101").unwrap();
        assert_eq!(order_parameter_afm(&neel), 1.0);
        assert_eq!(order_parameter_afm(&StateVector::from_bits("101010").unwrap()), 1.0);
        assert_eq!(order_parameter_afm(&StateVector::from_bits("0000").unwrap()), -1.0);
        let dim = 1 << 6;
        let uniform = StateVector::from_amplitudes(6, vec![c(1.0 / (dim as f64).sqrt()); dim]).unwrap();
        assert!(order_parameter_afm(&uniform).abs() < 1e-10);

        assert_eq!(order_parameter_fm(&StateVector::from_bits("0000").unwrap()), 1.0);
        assert_eq!(order_parameter_fm(&StateVector::from_bits("1111").unwrap()), -1.0);
        assert_eq!(order_parameter_fm(&StateVector::from_bits("0101").unwrap()), 0.0);
    }

    #[test]
    fn order_parameters_are_linear_in_weights() {
        // Mixture of |0011> and |0101> with weights w and 1-w equals the
        // superposition with amplitudes sqrt(w), sqrt(1-w).
        let w: f64 = 0.3;
        let mut amps = vec![c(0.0); 16];
        amps[0b0011] = c(w.sqrt());
        amps[0b0101] = c((1.0 - w).sqrt());
        let s = StateVector::from_amplitudes(4, amps).unwrap();
        let a = StateVector::from_bits("0011").unwrap();
        let b = StateVector::from_bits("0101").unwrap();
        let mix_afm = w * order_parameter_afm(&a) + (1.0 - w) * order_parameter_afm(&b);
        let mix_fm = w * order_parameter_fm(&a) + (1.0 - w) * order_parameter_fm(&b);
        assert!((order_parameter_afm(&s) - mix_afm).abs() < 1e-14);
        assert!((order_parameter_fm(&s) - mix_fm).abs() < 1e-14);
    }

    #[test]
    fn subset_validation() {
        assert!(QubitSubset::new(vec![1, 1], 4).is_err());
        assert!(QubitSubset::new(vec![0], 4).is_err());
        assert!(QubitSubset::new(vec![5], 4).is_err());
        let s = QubitSubset::new(vec![1, 3], 4).unwrap();
        assert_eq!(s.complement().members(), &[2, 4]);
        let st = StateVector::from_bits("0000").unwrap();
        assert!(schmidt_spectrum(&st, &QubitSubset::new(vec![], 4).unwrap()).is_err());
        assert!(schmidt_spectrum(&st, &QubitSubset::range(1, 4, 4).unwrap()).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let s = StateVector::from_bits("0110").unwrap();
        let sp = schmidt_spectrum(&s, &QubitSubset::new(vec![2, 3], 4).unwrap()).unwrap();
        assert!((sp.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!(sp.eigenvalues()[1..].iter().all(|&v| v.abs() < 1e-14));

        let bell = ghz(2);
        let sp = schmidt_spectrum(&bell, &QubitSubset::new(vec![1], 2).unwrap()).unwrap();
        assert!((sp.eigenvalues()[0] - 0.5).abs() < 1e-14);
        assert!((sp.eigenvalues()[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn spectrum_matches_partial_trace_oracle() {
        let mut r = rng(1);
        let psi = StateVector::random_haar(6, &mut r).unwrap();
        let cases: Vec<Vec<usize>> =
            vec![vec![1, 4, 5], vec![1], vec![2, 6], vec![1, 2, 3, 4], vec![3, 1], vec![2, 3, 4, 5, 6]];
        for subset in cases {
            let got = schmidt_spectrum(&psi, &QubitSubset::new(subset.clone(), 6).unwrap()).unwrap();
            let want = partial_trace_oracle(&psi, &subset);
            for (i, g) in got.eigenvalues().iter().enumerate() {
                assert!((g - want[i]).abs() < 1e-10, "{subset:?}: {g} vs {}", want[i]);
            }
            // eigenvalues missing from the thin SVD are zero in the oracle
            for w in &want[got.eigenvalues().len()..] {
                assert!(w.abs() < 1e-10);
            }
            assert!((got.trace() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn renyi_examples() {
        let pure = SchmidtSpectrum::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(renyi_entropy(&pure, 1.0, DEFAULT_S0_THRESHOLD).unwrap(), 0.0);
        let bell = SchmidtSpectrum::new(vec![0.5, 0.5]).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((renyi_entropy(&bell, 1.0, 1e-15).unwrap() - ln2).abs() < 1e-15);
        assert!((renyi_entropy(&bell, 0.0, 1e-15).unwrap() - ln2).abs() < 1e-15);
        let s = SchmidtSpectrum::new(vec![0.9, 0.1]).unwrap();
        let s2 = renyi_entropy(&s, 2.0, 1e-15).unwrap();
        // -ln(0.81 + 0.01)
        assert!((s2 - (1.0f64 / 0.82).ln()).abs() < 1e-12);
        assert!((s2 - 0.19845).abs() < 1e-5);

        let zero = SchmidtSpectrum::new(vec![0.0, 0.0]).unwrap();
        assert!(renyi_entropy(&zero, 1.0, 1e-15).is_err());
        assert!(renyi_entropy(&bell, -1.0, 1e-15).is_err());
        assert!(SchmidtSpectrum::new(vec![1.0, -1e-9]).is_err());
        assert_eq!(SchmidtSpectrum::new(vec![1.0, -1e-13]).unwrap().eigenvalues(), &[1.0, 0.0]);
    }

    #[test]
    fn renyi_monotone_and_continuous() {
        let mut r = rng(2);
        for _ in 0..20 {
            let psi = StateVector::random_haar(8, &mut r).unwrap();
            let sp = schmidt_spectrum(&psi, &QubitSubset::new(vec![1, 3, 6], 8).unwrap()).unwrap();
            let s0 = renyi_entropy(&sp, 0.0, 1e-15).unwrap();
            let s1 = renyi_entropy(&sp, 1.0, 1e-15).unwrap();
            let s2 = renyi_entropy(&sp, 2.0, 1e-15).unwrap();
            assert!(s0 >= s1 && s1 >= s2);
            for eps in [1e-4, -1e-4] {
                let near = renyi_entropy(&sp, 1.0 + eps, 1e-15).unwrap();
                assert!((near - s1).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn hartley_non_increasing_in_threshold() {
        let sp = SchmidtSpectrum::new(vec![0.6, 0.3, 0.09, 1e-6, 1e-9, 1e-12, 1e-14, 0.0]).unwrap();
        let mut last = f64::INFINITY;
        for t in [1e-15, 1e-13, 1e-11, 1e-9, 1e-7, 1e-5, 1e-3] {
            let s = renyi_entropy(&sp, 0.0, t).unwrap();
            assert!(s <= last);
            last = s;
        }
    }

    #[test]
    fn purity_symmetry() {
        let mut r = rng(3);
        let psi = StateVector::random_haar(8, &mut r).unwrap();
        for subset in [vec![1, 2, 3], vec![2, 5], vec![1, 4, 6, 8, 7]] {
            let s = QubitSubset::new(subset, 8).unwrap();
            let a = renyi_entropy(&schmidt_spectrum(&psi, &s).unwrap(), 1.0, 1e-15).unwrap();
            let b = renyi_entropy(&schmidt_spectrum(&psi, &s.complement()).unwrap(), 1.0, 1e-15).unwrap();
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn i3_examples() {
        let prod = StateVector::from_bits("01101001").unwrap();
        assert!(tripartite_mutual_information(&prod, 1.0, 1e-15).unwrap().abs() < 1e-12);
        assert!(tripartite_mutual_information(&prod, 0.0, 1e-15).unwrap().abs() < 1e-12);
        let g = ghz(8);
        let ln2 = std::f64::consts::LN_2;
        // each of the seven terms is ln 2 by the oracle
        for subset in [vec![1, 2], vec![1, 2, 3, 4], vec![1, 2, 5, 6], vec![7, 8]] {
            let want = partial_trace_oracle(&g, &subset);
            assert!((want[0] - 0.5).abs() < 1e-12 && (want[1] - 0.5).abs() < 1e-12);
        }
        assert!((tripartite_mutual_information(&g, 1.0, 1e-15).unwrap() - ln2).abs() < 1e-10);
        assert!(tripartite_mutual_information(&StateVector::from_bits("010101").unwrap(), 1.0, 1e-15).is_err());
    }

    #[test]
    fn i3_negative_for_scrambled_state() {
        // A long brickwork of Haar gates produces a volume-law state with I3 < 0.
        let mut r = rng(4);
        let l = 12;
        let mut psi = StateVector::basis_state(l, 0).unwrap();
        for layer in 0..40 {
            let start = 1 + layer % 2;
            let mut q = start;
            while q < l {
                psi.apply_two_qubit(q, q + 1, &TwoQubitUnitary::haar_random(&mut r)).unwrap();
                q += 2;
            }
        }
        assert!(tripartite_mutual_information(&psi, 1.0, 1e-15).unwrap() < 0.0);
    }

    #[test]
    fn half_cut_examples() {
        assert_eq!(half_cut_entropy(&StateVector::from_bits("0110").unwrap(), 1.0).unwrap(), 0.0);
        // Bell pairs (1,4) and (2,3) across the cut of four qubits: 2 ln 2.
        let mut amps = vec![c(0.0); 16];
        for b1 in 0..2usize {
            for b2 in 0..2usize {
                let x = (b1 << 3) | (b2 << 2) | (b2 << 1) | b1;
                amps[x] = c(0.5);
            }
        }
        let pairs = StateVector::from_amplitudes(4, amps).unwrap();
        let s = half_cut_entropy(&pairs, 1.0).unwrap();
        assert!((s - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn half_cut_of_haar_state_near_page_value() {
        // Page: S = sum_{k=n+1}^{mn} 1/k - (m-1)/(2n) for m = n = 16.
        let (m, n) = (16usize, 16usize);
        let page: f64 = ((n + 1)..=(m * n)).map(|k| 1.0 / k as f64).sum::<f64>() - (m as f64 - 1.0) / (2.0 * n as f64);
        let mut r = rng(5);
        let trials = 50;
        let mean: f64 = (0..trials)
            .map(|_| half_cut_entropy(&StateVector::random_haar(8, &mut r).unwrap(), 1.0).unwrap())
            .sum::<f64>()
            / trials as f64;
        assert!((mean - page).abs() / page < 0.15, "mean {mean} page {page}");
    }
}

//! Dense statevector and the kernels the Bernoulli circuits are built from.
//!
//! Qubits are numbered `1..=L` and qubit 1 is the most significant bit of the
//! amplitude index, so the basis state `|b1 b2 ... bL>` lives at index
//! `sum_i b_i 2^(L-i)`, the integer whose binary fraction is `x = 0.b1 b2 ... bL`.
//! With this convention the cyclic shifts are integer rotations and the adder
//! of the control map is integer addition.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Smallest supported register.
pub const MIN_QUBITS: usize = 2;
/// Hard upper bound: 2^28 amplitudes is 4 GiB.
pub const MAX_QUBITS: usize = 28;
/// Tolerance on the unit-norm invariant.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Below this the total Born weight is treated as a corrupted state.
pub const CORRUPTION_THRESHOLD: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pure state of `L` qubits stored as `2^L` complex amplitudes.
#[derive(Clone, Debug)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
    // Reused by the permutation kernels so a step does not allocate.
    scratch: Vec<Complex64>,
}

fn check_qubit_count(num_qubits: usize) -> Result<()> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&num_qubits) {
        return Err(Error::QubitCount(num_qubits, MIN_QUBITS, MAX_QUBITS));
    }
    Ok(())
}

impl StateVector {
    /// Computational basis state `|x>` on `num_qubits` qubits.
    pub fn basis_state(num_qubits: usize, index: u64) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1u64 << num_qubits;
        if index >= dim {
            return Err(Error::BasisIndex { index, num_qubits });
        }
        let mut amps = vec![ZERO; dim as usize];
        amps[index as usize] = ONE;
        Ok(Self::from_parts(num_qubits, amps))
    }

    /// Basis state from a bit string such as `"0101"`, qubit 1 first.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let mut index = 0u64;
        for c in bits.chars() {
            index = match c {
                '0' => index << 1,
                '1' => (index << 1) | 1,
                other => return Err(Error::InvalidArgument(format!("bad bit {other:?}"))),
            };
        }
        Self::basis_state(bits.len(), index)
    }

    /// Wraps explicit amplitudes. The vector must have length `2^L` and unit norm.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        if amps.len() != 1usize << num_qubits {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                1usize << num_qubits,
                amps.len()
            )));
        }
        let state = Self::from_parts(num_qubits, amps);
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random_haar<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let mut amps: Vec<Complex64> = (0..1usize << num_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self::from_parts(num_qubits, amps))
    }

    /// Product of independent Haar-random single-qubit states.
    pub fn random_product<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let mut amps = vec![ONE];
        for _ in 0..num_qubits {
            let mut q = [
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            ];
            let n = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
            q.iter_mut().for_each(|a| *a /= n);
            // Appending a qubit on the right makes it the new least significant bit.
            amps = amps.iter().flat_map(|&a| [a * q[0], a * q[1]]).collect();
        }
        Ok(Self::from_parts(num_qubits, amps))
    }

    fn from_parts(num_qubits: usize, amps: Vec<Complex64>) -> Self {
        let scratch = vec![ZERO; amps.len()];
        Self { num_qubits, amps, scratch }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amps.iter().map(|a| a.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit mask of qubit `q` inside an amplitude index.
    pub fn qubit_mask(&self, q: usize) -> Result<usize> {
        self.check_qubit(q)?;
        Ok(1usize << (self.num_qubits - q))
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q == 0 || q > self.num_qubits {
            return Err(Error::QubitIndex { qubit: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    /// Mutable access for kernels elsewhere in the crate that maintain the norm themselves.
    pub(crate) fn amps_and_scratch(&mut self) -> (&mut Vec<Complex64>, &mut Vec<Complex64>) {
        (&mut self.amps, &mut self.scratch)
    }

    /// `T|b1 b2 ... bL> = |b2 ... bL b1>`: rotate-left of the index.
    pub fn shift_left(&mut self) {
        // new[y] = old[rotr(y)]: interleave the two halves of the old vector.
        let (lo, hi) = self.amps.split_at(self.amps.len() / 2);
        for ((pair, &a), &b) in self.scratch.chunks_exact_mut(2).zip(lo).zip(hi) {
            pair[0] = a;
            pair[1] = b;
        }
        std::mem::swap(&mut self.amps, &mut self.scratch);
    }

    /// `T^{-1}`: rotate-right of the index.
    pub fn shift_right(&mut self) {
        // new[y] = old[rotl(y)]: even entries fill the lower half, odd the upper.
        let (lo, hi) = self.scratch.split_at_mut(self.amps.len() / 2);
        for ((pair, a), b) in self.amps.chunks_exact(2).zip(lo.iter_mut()).zip(hi.iter_mut()) {
            *a = pair[0];
            *b = pair[1];
        }
        std::mem::swap(&mut self.amps, &mut self.scratch);
    }

    /// Pauli X on qubit `q`.
    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        let m = self.qubit_mask(q)?;
        for block in self.amps.chunks_exact_mut(2 * m) {
            let (zero, one) = block.split_at_mut(m);
            zero.swap_with_slice(one);
        }
        Ok(())
    }

    /// Applies `u` to the ordered pair `(q_hi, q_lo)`; the local basis index is
    /// `2 * b(q_hi) + b(q_lo)`.
    pub fn apply_two_qubit(&mut self, q_hi: usize, q_lo: usize, u: &TwoQubitUnitary) -> Result<()> {
        let m_hi = self.qubit_mask(q_hi)?;
        let m_lo = self.qubit_mask(q_lo)?;
        if m_hi == m_lo {
            return Err(Error::InvalidArgument(format!("two-qubit gate on repeated qubit {q_hi}")));
        }
        let (small, large) = if m_hi < m_lo { (m_hi, m_lo) } else { (m_lo, m_hi) };
        let u = &u.entries;
        if m_hi == 2 && m_lo == 1 {
            // Gate on the two least significant bits: contiguous blocks of four.
            for v in self.amps.chunks_exact_mut(4) {
                let w = [v[0], v[1], v[2], v[3]];
                for (r, out) in v.iter_mut().enumerate() {
                    *out = u[r][0] * w[0] + u[r][1] * w[1] + u[r][2] * w[2] + u[r][3] * w[3];
                }
            }
            return Ok(());
        }
        for k in 0..self.amps.len() / 4 {
            // Insert zero bits at both gate positions.
            let low = k & (small - 1);
            let t = ((k ^ low) << 1) | low;
            let mid = t & (large - 1);
            let base = ((t ^ mid) << 1) | mid;
            let idx = [base, base | m_lo, base | m_hi, base | m_hi | m_lo];
            let v = [self.amps[idx[0]], self.amps[idx[1]], self.amps[idx[2]], self.amps[idx[3]]];
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
            }
        }
        Ok(())
    }

    /// Born probability of outcome `m` on qubit `q`.
    pub fn born_probability(&self, q: usize, m: u8) -> Result<f64> {
        let [p0, p1] = self.outcome_weights(q)?;
        Ok(if m == 0 { p0 } else { p1 })
    }

    /// Born weights of both outcomes of qubit `q`, in one pass.
    pub(crate) fn outcome_weights(&self, q: usize) -> Result<[f64; 2]> {
        let m = self.qubit_mask(q)?;
        let mut w = [0.0; 2];
        for block in self.amps.chunks_exact(2 * m) {
            let (zero, one) = block.split_at(m);
            w[0] += zero.iter().map(|a| a.norm_sqr()).sum::<f64>();
            w[1] += one.iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        Ok(w)
    }

    /// Projects qubit `q` onto `|m>` and renormalizes. Returns the Born weight of the branch.
    pub fn project(&mut self, q: usize, m: u8) -> Result<f64> {
        let p = self.born_probability(q, m)?;
        if p < CORRUPTION_THRESHOLD {
            return Err(Error::NumericalCorruption(format!(
                "projection of qubit {q} onto {m} has weight {p:e}"
            )));
        }
        self.rescale_branch(q, m, p);
        Ok(p)
    }

    /// Born-rule measurement of qubit `q`; the state collapses onto the outcome.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<u8> {
        let [p0, p1] = self.outcome_weights(q)?;
        let total = p0 + p1;
        if p0 < CORRUPTION_THRESHOLD && p1 < CORRUPTION_THRESHOLD {
            return Err(Error::NumericalCorruption(format!(
                "measurement of qubit {q} on a state with weight {total:e}"
            )));
        }
        let r: f64 = rng.random();
        let m = if r * total < p0 { 0 } else { 1 };
        let p = if m == 0 { p0 } else { p1 };
        if p < CORRUPTION_THRESHOLD {
            return Err(Error::NumericalCorruption(format!(
                "projection of qubit {q} onto {m} has weight {p:e}"
            )));
        }
        self.rescale_branch(q, m, p);
        Ok(m)
    }

    /// Born weights `w[m1][mL]` of the joint outcomes of qubits 1 and `L`.
    pub(crate) fn first_last_weights(&self) -> [[f64; 2]; 2] {
        let mut w = [[0.0; 2]; 2];
        let (lo, hi) = self.amps.split_at(self.amps.len() / 2);
        for (m1, half) in [lo, hi].into_iter().enumerate() {
            for pair in half.chunks_exact(2) {
                w[m1][0] += pair[0].norm_sqr();
                w[m1][1] += pair[1].norm_sqr();
            }
        }
        w
    }

    /// Keeps the amplitudes at `x = start, start + 2, ...` below `end`, scales them
    /// by `scale` and moves each to `dest(x)`; everything else becomes zero.
    /// `dest` must be injective on the kept indices.
    pub(crate) fn project_and_permute(&mut self, start: usize, end: usize, scale: f64, dest: impl Fn(usize) -> usize) {
        self.scratch.fill(ZERO);
        for x in (start..end).step_by(2) {
            self.scratch[dest(x)] = self.amps[x] * scale;
        }
        std::mem::swap(&mut self.amps, &mut self.scratch);
    }

    /// `shift_left` followed by `u` on qubits `(L-1, L)`, in one pass.
    pub(crate) fn shift_left_and_gate_last_pair(&mut self, u: &TwoQubitUnitary) {
        let u = &u.entries;
        let (lo, hi) = self.amps.split_at(self.amps.len() / 2);
        for ((out, l2), h2) in self.scratch.chunks_exact_mut(4).zip(lo.chunks_exact(2)).zip(hi.chunks_exact(2)) {
            let w = [l2[0], h2[0], l2[1], h2[1]];
            for (r, o) in out.iter_mut().enumerate() {
                *o = u[r][0] * w[0] + u[r][1] * w[1] + u[r][2] * w[2] + u[r][3] * w[3];
            }
        }
        std::mem::swap(&mut self.amps, &mut self.scratch);
    }

    /// Zeroes the branch of qubit `q` opposite to `m` and divides the other by `sqrt(weight)`.
    fn rescale_branch(&mut self, q: usize, m: u8, weight: f64) {
        let mask = 1usize << (self.num_qubits - q);
        let scale = 1.0 / weight.sqrt();
        for block in self.amps.chunks_exact_mut(2 * mask) {
            let (zero, one) = block.split_at_mut(mask);
            let (keep, drop) = if m == 0 { (zero, one) } else { (one, zero) };
            keep.iter_mut().for_each(|a| *a *= scale);
            drop.fill(ZERO);
        }
    }
}

/// A 4x4 unitary acting on an ordered qubit pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitUnitary {
    /// Row-major entries.
    pub entries: [[Complex64; 4]; 4],
}

impl TwoQubitUnitary {
    pub fn identity() -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { entries }
    }

    pub fn swap() -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            entries[i][j] = ONE;
        }
        Self { entries }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.entries[j][i].conj();
            }
        }
        Self { entries }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut entries = [[ZERO; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..4).map(|k| self.entries[i][k] * other.entries[k][j]).sum();
            }
        }
        Self { entries }
    }

    /// Largest elementwise deviation of `U^dagger U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((p.entries[i][j] - target).norm());
            }
        }
        worst
    }

    /// Haar-random element of U(4).
    ///
    /// QR decomposition of a complex Ginibre matrix, with the phases of `R`'s
    /// diagonal absorbed into `Q`. Gram-Schmidt produces a real positive
    /// diagonal directly, which is that correction, so the resulting `Q` is
    /// exactly Haar distributed. The orthogonalization runs twice to keep
    /// `U^dagger U = 1` at machine precision.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut cols = [[ZERO; 4]; 4];
        for col in cols.iter_mut() {
            for z in col.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        for j in 0..4 {
            for _pass in 0..2 {
                for k in 0..j {
                    let proj: Complex64 = (0..4).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                    for i in 0..4 {
                        let v = cols[k][i];
                        cols[j][i] -= proj * v;
                    }
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in cols[j].iter_mut() {
                *z /= norm;
            }
        }
        let mut entries = [[ZERO; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = cols[j][i];
            }
        }
        Self { entries }
    }
}

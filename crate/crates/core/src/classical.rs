//! Classical Bernoulli map with probabilistic control, on an integer register.
//!
//! Doubling a random real at finite precision is a left shift with a fresh
//! random bit entering at the bottom, so registers of up to 128 bits can be
//! simulated exactly.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::FixedPoint;
use crate::engine::{stream_rng, ObservableStats, Observable};
use crate::error::{Error, Result};
use crate::observables::{afm_order_of_bits, fm_order_of_bits};

pub const MAX_BITS: usize = 128;

/// `x = 0.b_1 ... b_L` stored as an integer, `b_1` most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassicalRegister {
    bits: u128,
    num_bits: usize,
}

fn mask(num_bits: usize) -> u128 {
    if num_bits == 128 {
        u128::MAX
    } else {
        (1u128 << num_bits) - 1
    }
}

impl ClassicalRegister {
    pub fn new(num_bits: usize, bits: u128) -> Result<Self> {
        if !(2..=MAX_BITS).contains(&num_bits) || num_bits % 2 != 0 {
            return Err(Error::InvalidArgument(format!("register size must be even and in [2, {MAX_BITS}], got {num_bits}")));
        }
        if bits & !mask(num_bits) != 0 {
            return Err(Error::InvalidArgument(format!("value {bits} does not fit in {num_bits} bits")));
        }
        Ok(Self { bits, num_bits })
    }

    pub fn random<R: Rng + ?Sized>(num_bits: usize, rng: &mut R) -> Result<Self> {
        Self::new(num_bits, rng.random::<u128>() & mask(num_bits.min(MAX_BITS)))
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    /// The two Neel integers `0101...01` and `1010...10`.
    pub fn neel_pair(num_bits: usize) -> (u128, u128) {
        let lo = mask(num_bits) / 3;
        (lo, lo << 1)
    }

    /// Orbit point the control steers toward. For the AFM pair this is decided by
    /// the leading bit, which is the same as nearest integer distance (no ties for even L).
    pub fn target_of(&self, target: FixedPoint) -> u128 {
        match target {
            FixedPoint::Fm => 0,
            FixedPoint::Afm => {
                let (lo, hi) = Self::neel_pair(self.num_bits);
                if self.bits >> (self.num_bits - 1) == 0 {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    pub fn order_parameter(&self, target: FixedPoint) -> f64 {
        match target {
            FixedPoint::Fm => fm_order_of_bits(self.bits, self.num_bits),
            FixedPoint::Afm => afm_order_of_bits(self.bits, self.num_bits),
        }
    }

    /// Doubling: shift left, drop `b_1`, inject `bit` as `b_L`.
    pub fn chaotic(&mut self, bit: bool) {
        self.bits = ((self.bits << 1) | bit as u128) & mask(self.num_bits);
    }

    /// `x -> (x + x_f) / 2`, rounded the same way as the quantum reset-shift-add map.
    pub fn control(&mut self, target: FixedPoint) {
        let xf = self.target_of(target);
        self.bits = (self.bits >> 1) + xf.div_ceil(2);
    }
}

/// One step driven by a single 64-bit draw: the top 53 bits decide control,
/// the lowest bit is the injected chaotic bit.
pub fn classical_step<R: RngCore + ?Sized>(reg: &mut ClassicalRegister, p_ctrl: f64, target: FixedPoint, rng: &mut R) {
    let u = rng.next_u64();
    let coin = (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    if coin < p_ctrl {
        reg.control(target);
    } else {
        reg.chaotic(u & 1 == 1);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassicalConfig {
    pub num_bits: usize,
    pub target: FixedPoint,
    pub p_ctrl: f64,
    pub steps: usize,
    pub seed: u64,
}

impl ClassicalConfig {
    pub fn new(num_bits: usize, target: FixedPoint, p_ctrl: f64, seed: u64) -> Self {
        Self { num_bits, target, p_ctrl, steps: 2 * num_bits * num_bits, seed }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ClassicalRegister::new(self.num_bits, 0)?;
        if !(0.0..=1.0).contains(&self.p_ctrl) {
            return Err(Error::InvalidArgument(format!("p_ctrl = {} outside [0, 1]", self.p_ctrl)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        Ok(())
    }

    fn key(&self) -> u64 {
        let t = match self.target {
            FixedPoint::Fm => 1,
            FixedPoint::Afm => 2,
        };
        (self.num_bits as u64) ^ (t << 8) ^ self.p_ctrl.to_bits().rotate_left(17) ^ (self.steps as u64).rotate_left(41)
    }

    pub fn observable(&self) -> Observable {
        match self.target {
            FixedPoint::Fm => Observable::OrderFm,
            FixedPoint::Afm => Observable::OrderAfm,
        }
    }
}

/// Final order parameter of one trajectory from a uniformly random start.
pub fn classical_trajectory(config: &ClassicalConfig, traj_index: u64) -> Result<f64> {
    config.validate()?;
    let mut rng = stream_rng(b"classicl", config.seed, config.key(), traj_index);
    let mut reg = ClassicalRegister::random(config.num_bits, &mut rng)?;
    for _ in 0..config.steps {
        classical_step(&mut reg, config.p_ctrl, config.target, &mut rng);
    }
    Ok(reg.order_parameter(config.target))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalScanPoint {
    pub config: ClassicalConfig,
    pub stats: ObservableStats,
}

/// Order parameter versus `p_ctrl` at one register size.
pub fn classical_transition_scan(
    num_bits: usize,
    target: FixedPoint,
    p_grid: &[f64],
    n_traj: usize,
    steps: Option<usize>,
    seed: u64,
) -> Result<Vec<ClassicalScanPoint>> {
    if n_traj < 2 {
        return Err(Error::Config(format!("need at least 2 trajectories per cell, got {n_traj}")));
    }
    let configs: Vec<ClassicalConfig> = p_grid
        .iter()
        .map(|&p| {
            let c = ClassicalConfig::new(num_bits, target, p, seed);
            steps.map_or(c, |s| c.with_steps(s))
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len()).flat_map(|c| (0..n_traj as u64).map(move |j| (c, j))).collect();
    let values = jobs.par_iter().map(|&(c, j)| classical_trajectory(&configs[c], j)).collect::<Result<Vec<f64>>>()?;
    Ok(configs
        .iter()
        .zip(values.chunks(n_traj))
        .map(|(c, v)| ClassicalScanPoint { config: *c, stats: ObservableStats::from_samples(c.observable(), v.to_vec()) })
        .collect())
}

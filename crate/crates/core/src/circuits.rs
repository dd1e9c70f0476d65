//! One-step channels of the six stochastic Bernoulli circuits.
//!
//! Every step applies either the chaotic Bernoulli map `B = U T` (optionally
//! followed by feedback-free measurements of the last two qubits) or a
//! control map built from a reset, the right shift `T^{-1}` and, for the
//! global controls, an adder.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{StateVector, TwoQubitUnitary, CORRUPTION_THRESHOLD};

/// Residual weight allowed on `b1 = 1` when the adder runs.
pub const ADDER_RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Largest register accepted by [`ModelConfig::validate`].
pub const DESK_MAX_QUBITS: usize = 24;

/// Target orbit of a control map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedPoint {
    /// `x_F = {0}`, the ferromagnetic state `|0...0>`.
    Fm,
    /// `x_F = {1/3, 2/3}`, the two Neel states.
    Afm,
}

/// The six circuit families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    GlobalAfm,
    LocalFm,
    LocalAfm,
    GlobalAfmProj,
    LocalFmProj,
    InterpolatedAfm,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 6] = [
        ModelVariant::GlobalAfm,
        ModelVariant::LocalFm,
        ModelVariant::LocalAfm,
        ModelVariant::GlobalAfmProj,
        ModelVariant::LocalFmProj,
        ModelVariant::InterpolatedAfm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::GlobalAfm => "global-afm",
            ModelVariant::LocalFm => "local-fm",
            ModelVariant::LocalAfm => "local-afm",
            ModelVariant::GlobalAfmProj => "global-afm-proj",
            ModelVariant::LocalFmProj => "local-fm-proj",
            ModelVariant::InterpolatedAfm => "interpolated-afm",
        }
    }

    pub fn fixed_point(self) -> FixedPoint {
        match self {
            ModelVariant::LocalFm | ModelVariant::LocalFmProj => FixedPoint::Fm,
            _ => FixedPoint::Afm,
        }
    }

    /// Whether the chaotic map carries feedback-free measurements.
    pub fn has_projection(self) -> bool {
        matches!(self, ModelVariant::GlobalAfmProj | ModelVariant::LocalFmProj)
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
            Error::Config(format!("unknown variant {s:?}; valid variants are {}", names.join(", ")))
        })
    }
}

/// One simulation cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub num_qubits: usize,
    pub p_ctrl: f64,
    pub p_proj: f64,
    pub p_global: f64,
    pub steps: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Cell with `p_proj = p_global = 0` and the default `2 L^2` steps.
    pub fn new(variant: ModelVariant, num_qubits: usize, p_ctrl: f64, seed: u64) -> Self {
        Self {
            variant,
            num_qubits,
            p_ctrl,
            p_proj: 0.0,
            p_global: 0.0,
            steps: default_steps(num_qubits),
            seed,
        }
    }

    pub fn with_p_proj(mut self, p_proj: f64) -> Self {
        self.p_proj = p_proj;
        self
    }

    pub fn with_p_global(mut self, p_global: f64) -> Self {
        self.p_global = p_global;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.num_qubits;
        if l < 4 || l % 4 != 0 || l > DESK_MAX_QUBITS {
            return Err(Error::Config(format!(
                "L = {l} must be a positive multiple of 4 no larger than {DESK_MAX_QUBITS}"
            )));
        }
        for (name, p) in [("p_ctrl", self.p_ctrl), ("p_proj", self.p_proj), ("p_global", self.p_global)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.p_proj != 0.0 && !self.variant.has_projection() {
            return Err(Error::Config(format!(
                "variant {} has no projective measurements but p_proj = {}",
                self.variant, self.p_proj
            )));
        }
        Ok(())
    }
}

/// `2 L^2`, the number of steps after which the circuits are in steady state.
pub fn default_steps(num_qubits: usize) -> usize {
    2 * num_qubits * num_qubits
}

/// Finite-register form of the global AFM adder.
///
/// After the reset and right shift `b1 = 0`, so `x < 1/2`. The adder adds
/// `a_small` (the truncation of 1/6) when `b2 = 0` (`x < 1/4`) and `a_large`
/// (the truncation of 1/3) otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdderSpec {
    pub num_qubits: usize,
    pub a_small: u64,
    pub a_large: u64,
    /// Qubit whose value selects the branch.
    pub condition_qubit: usize,
}

/// Adder constants that make both Neel states exact fixed points of the global control.
pub fn make_adder_afm(num_qubits: usize) -> Result<AdderSpec> {
    if num_qubits % 2 != 0 || num_qubits < 2 || num_qubits > crate::qstate::MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("AFM adder needs even L, got {num_qubits}")));
    }
    // 0101...01
    let a_large = ((1u64 << num_qubits) - 1) / 3;
    Ok(AdderSpec { num_qubits, a_small: (a_large + 1) / 2, a_large, condition_qubit: 2 })
}

impl AdderSpec {
    /// Image of a basis index with `b1 = 0`.
    pub fn add(&self, x: u64) -> u64 {
        let cond = 1u64 << (self.num_qubits - self.condition_qubit);
        if x & cond == 0 {
            x + self.a_small
        } else {
            x + self.a_large
        }
    }
}

/// Scatters every amplitude on the `b1 = 0` half-space to `x + a(x)`.
pub fn apply_adder(state: &mut StateVector, adder: &AdderSpec) -> Result<()> {
    if state.num_qubits() != adder.num_qubits {
        return Err(Error::InvalidArgument("adder built for a different register".into()));
    }
    let half = state.dim() / 2;
    let (amps, scratch) = state.amps_and_scratch();
    let residual: f64 = amps[half..].iter().map(|a| a.norm_sqr()).sum();
    if residual > ADDER_RESIDUAL_TOLERANCE {
        return Err(Error::ProtocolOrder(format!(
            "adder applied with weight {residual:e} on b1 = 1"
        )));
    }
    scratch.iter_mut().for_each(|a| *a = num_complex::Complex64::new(0.0, 0.0));
    for (x, &a) in amps[..half].iter().enumerate() {
        scratch[adder.add(x as u64) as usize] = a;
    }
    std::mem::swap(amps, scratch);
    Ok(())
}

/// Which branch a step took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Chaotic,
    GlobalControl,
    LocalControl,
}

/// A Born-rule outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub qubit: usize,
    pub value: u8,
}

/// Measurement record of one step. At most two qubits are measured per step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub kind: StepKind,
    outcomes: [Option<Outcome>; 2],
}

impl StepRecord {
    fn new(kind: StepKind) -> Self {
        Self { kind, outcomes: [None; 2] }
    }

    fn push(&mut self, qubit: usize, value: u8) {
        let slot = self.outcomes.iter_mut().find(|o| o.is_none()).expect("at most two outcomes per step");
        *slot = Some(Outcome { qubit, value });
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.outcomes.iter().flatten().copied()
    }

    pub fn outcome_of(&self, qubit: usize) -> Option<u8> {
        self.outcomes().find(|o| o.qubit == qubit).map(|o| o.value)
    }
}

/// Samples an outcome from unnormalized branch weights `[w0, w1]`.
fn sample_outcome<R: Rng + ?Sized>(w: [f64; 2], what: &str, rng: &mut R) -> Result<(u8, f64)> {
    let total = w[0] + w[1];
    if w[0] < CORRUPTION_THRESHOLD && w[1] < CORRUPTION_THRESHOLD {
        return Err(Error::NumericalCorruption(format!("measurement of {what} on a state with weight {total:e}")));
    }
    let r: f64 = rng.random();
    let m = if r * total < w[0] { 0 } else { 1 };
    if w[m as usize] < CORRUPTION_THRESHOLD {
        return Err(Error::NumericalCorruption(format!(
            "projection of {what} onto {m} has weight {:e}",
            w[m as usize]
        )));
    }
    Ok((m, w[m as usize]))
}

/// Measures qubit `L`, resets it, shifts right and sends `y` to `y + offset(y)`,
/// as one scatter over the surviving branch.
fn reset_shift_add<R: Rng + ?Sized>(
    state: &mut StateVector,
    rng: &mut R,
    record: &mut StepRecord,
    offset: impl Fn(usize) -> usize,
) -> Result<()> {
    let l = state.num_qubits();
    let (m, weight) = sample_outcome(state.outcome_weights(l)?, "the last qubit", rng)?;
    record.push(l, m);
    let dim = state.dim();
    state.project_and_permute(m as usize, dim, 1.0 / weight.sqrt(), |x| {
        let y = x >> 1;
        y + offset(y)
    });
    Ok(())
}

/// `A T^{-1} (X_L)^m P_L^m`.
pub fn control_global_afm<R: Rng + ?Sized>(
    state: &mut StateVector,
    adder: &AdderSpec,
    rng: &mut R,
) -> Result<StepRecord> {
    if state.num_qubits() != adder.num_qubits {
        return Err(Error::InvalidArgument("adder built for a different register".into()));
    }
    let mut record = StepRecord::new(StepKind::GlobalControl);
    let cond = 1usize << (adder.num_qubits - adder.condition_qubit);
    let (small, large) = (adder.a_small as usize, adder.a_large as usize);
    reset_shift_add(state, rng, &mut record, |y| if y & cond == 0 { small } else { large })?;
    Ok(record)
}

/// `T^{-1} (X_L)^m P_L^m`.
pub fn control_local_fm<R: Rng + ?Sized>(state: &mut StateVector, rng: &mut R) -> Result<StepRecord> {
    let mut record = StepRecord::new(StepKind::LocalControl);
    reset_shift_add(state, rng, &mut record, |_| 0)?;
    Ok(record)
}

/// `T^{-1} (X_L)^{m1 + mL + 1} P_1^{m1} P_L^{mL}`: flip the last qubit when both outcomes agree.
pub fn control_local_afm<R: Rng + ?Sized>(state: &mut StateVector, rng: &mut R) -> Result<StepRecord> {
    let l = state.num_qubits();
    if l % 2 != 0 {
        return Err(Error::InvalidArgument(format!("local AFM control needs even L, got {l}")));
    }
    let mut record = StepRecord::new(StepKind::LocalControl);
    let w = state.first_last_weights();
    // Qubit 1 first, then qubit L conditioned on it.
    let (m1, _) = sample_outcome([w[0][0] + w[0][1], w[1][0] + w[1][1]], "qubit 1", rng)?;
    record.push(1, m1);
    let (ml, weight) = sample_outcome(w[m1 as usize], "the last qubit", rng)?;
    record.push(l, ml);
    let flip = (m1 == ml) as usize;
    let half = state.dim() / 2;
    let start = m1 as usize * half + ml as usize;
    state.project_and_permute(start, start - ml as usize + half, 1.0 / weight.sqrt(), |x| {
        let x = x ^ flip;
        (x >> 1) | ((x & 1) << (l - 1))
    });
    Ok(record)
}

/// Bernoulli map `U T` with a fresh Haar unitary on `(L-1, L)`, followed by
/// independent feedback-free measurements of `L-1` then `L`, each with
/// probability `p_proj`.
pub fn chaotic_step<R: Rng + ?Sized>(state: &mut StateVector, p_proj: f64, rng: &mut R) -> Result<StepRecord> {
    let l = state.num_qubits();
    let mut record = StepRecord::new(StepKind::Chaotic);
    let u = TwoQubitUnitary::haar_random(rng);
    state.shift_left_and_gate_last_pair(&u);
    if p_proj > 0.0 {
        for q in [l - 1, l] {
            if rng.random::<f64>() < p_proj {
                let m = state.measure(q, rng)?;
                record.push(q, m);
            }
        }
    }
    Ok(record)
}

/// Evolves one trajectory of a [`ModelConfig`] step by step.
#[derive(Clone, Debug)]
pub struct Circuit {
    config: ModelConfig,
    adder: Option<AdderSpec>,
}

impl Circuit {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let adder = match config.variant {
            ModelVariant::GlobalAfm | ModelVariant::GlobalAfmProj | ModelVariant::InterpolatedAfm => {
                Some(make_adder_afm(config.num_qubits)?)
            }
            _ => None,
        };
        Ok(Self { config: config.clone(), adder })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Applies the control map with probability `p_ctrl`, otherwise the chaotic map.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut StateVector, rng: &mut R) -> Result<StepRecord> {
        let c = &self.config;
        if rng.random::<f64>() < c.p_ctrl {
            match c.variant {
                ModelVariant::GlobalAfm | ModelVariant::GlobalAfmProj => {
                    control_global_afm(state, self.adder.as_ref().expect("global variants carry an adder"), rng)
                }
                ModelVariant::LocalFm | ModelVariant::LocalFmProj => control_local_fm(state, rng),
                ModelVariant::LocalAfm => control_local_afm(state, rng),
                ModelVariant::InterpolatedAfm => {
                    // The global/local coin is drawn at every control step.
                    if rng.random::<f64>() < c.p_global {
                        control_global_afm(state, self.adder.as_ref().expect("interpolated variant carries an adder"), rng)
                    } else {
                        control_local_afm(state, rng)
                    }
                }
            }
        } else {
            chaotic_step(state, c.p_proj, rng)
        }
    }
}

/// Single step of `config`'s circuit.
pub fn circuit_step<R: Rng + ?Sized>(
    state: &mut StateVector,
    config: &ModelConfig,
    rng: &mut R,
) -> Result<StepRecord> {
    Circuit::new(config)?.step(state, rng)
}

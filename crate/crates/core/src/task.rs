//! Task-dependent two-layer protocol on separable states.
//!
//! Alice sends one subsystem to each of four Bobs (dimensions 4, 4, 2, 2).
//! Bob₁ and Bob₂ form layer 1: together they hold a key bit
//! `k = b₁⁽⁰⁾ ⊕ b₂⁽⁰⁾` and a secret bit `s₁ = b₁⁽¹⁾ ⊕ b₂⁽¹⁾` that neither can
//! recover alone. Bob₃ and Bob₄ form layer 2 and read `k` directly as
//! `b₃ = b₄`.
//!
//! Each round Alice picks one of two codebooks:
//!
//! * key class: a computational-basis product `|b₁>|b₂>|b₃>|b₄>` carrying the
//!   correlated symbols;
//! * check class: a Fourier product `F₄(j₁)F₄(j₂)F₂(j₃)F₂(j₄)`, unbiased with
//!   respect to the computational basis.
//!
//! Each Bob either measures in the computational basis and resends (CTRL) or
//! returns the subsystem untouched (Reflect). Alice then either measures
//! every subsystem in the computational basis or tests the returned state
//! with `{Π_χ, I - Π_χ}` where `Π_χ` projects onto what she prepared.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{self, AdversaryError, AttackEvent, AttackSpec, Location};
use crate::analysis;
use crate::bits::BitString;
use crate::config::{self, ConfigError};
use crate::qudit::{self, Projector, QuditError, StateVector, ALGEBRA_TOL};
use crate::rng::{self, ExecutionMode, RoundStreams};

/// Subsystem dimensions, Bob₁ through Bob₄.
pub const SUBSYSTEM_DIMS: [usize; 4] = [4, 4, 2, 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("no security sample: zero check rounds")]
    NoSecuritySample,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid attack: {0}")]
    Attack(#[from] AdversaryError),
    #[error(transparent)]
    Qudit(#[from] QuditError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub rounds: usize,
    #[serde(default = "config::half")]
    pub check_state_prob: f64,
    #[serde(default = "config::half")]
    pub bob_ctrl_prob: f64,
    #[serde(default = "config::half")]
    pub alice_computational_prob: f64,
    /// Tolerated Π_χ failure rate; anything above raises the alarm.
    #[serde(default)]
    pub pi_chi_alarm_threshold: f64,
    pub rng_seed: u64,
}

impl TaskConfig {
    pub fn new(rounds: usize, rng_seed: u64) -> Self {
        Self {
            rounds,
            check_state_prob: 0.5,
            bob_ctrl_prob: 0.5,
            alice_computational_prob: 0.5,
            pi_chi_alarm_threshold: 0.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        config::positive("rounds", self.rounds)?;
        config::probability("check_state_prob", self.check_state_prob)?;
        config::probability("bob_ctrl_prob", self.bob_ctrl_prob)?;
        config::probability("alice_computational_prob", self.alice_computational_prob)?;
        config::probability("pi_chi_alarm_threshold", self.pi_chi_alarm_threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RoundClass {
    KeyClass,
    CheckClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BobOp {
    Ctrl,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AliceMeasurement {
    Computational,
    PiChi,
}

/// Low binary digit `b⁽⁰⁾`.
pub fn low_bit(b: u8) -> u8 {
    b & 1
}

/// High binary digit `b⁽¹⁾` of a ququart symbol.
pub fn high_bit(b: u8) -> u8 {
    (b >> 1) & 1
}

/// Key-class symbols `[b₁, b₂, b₃, b₄]` for key bit `k`, secret bit `s₁` and Bob₁'s symbol `b₁`.
pub fn encode_key_symbols(k: u8, s1: u8, b1: u8) -> [u8; 4] {
    let b2 = ((high_bit(b1) ^ s1) << 1) | (low_bit(b1) ^ k);
    [b1, b2, k, k]
}

/// Separable state, one factor per Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    factors: Vec<StateVector>,
}

impl ProductState {
    pub fn new(factors: Vec<StateVector>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[StateVector] {
        &self.factors
    }

    pub fn factor_mut(&mut self, i: usize) -> &mut StateVector {
        &mut self.factors[i]
    }

    /// Global state vector (64-dimensional for the protocol's subsystems).
    pub fn joint(&self) -> Result<StateVector, QuditError> {
        qudit::tensor_product(&self.factors)
    }
}

/// What Alice prepared for a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    pub round_class: RoundClass,
    pub encoded: Option<[u8; 4]>,
    pub check_indices: Option<[u8; 4]>,
    pub state: ProductState,
}

fn basis_product(symbols: [u8; 4]) -> Result<ProductState, QuditError> {
    let factors = symbols
        .iter()
        .zip(SUBSYSTEM_DIMS)
        .map(|(&b, d)| StateVector::basis(d, b as usize))
        .collect::<Result<_, _>>()?;
    Ok(ProductState::new(factors))
}

/// Key-class preparation with explicit symbols.
pub fn prepare_key_class(k: u8, s1: u8, b1: u8) -> Result<Preparation, QuditError> {
    let encoded = encode_key_symbols(k, s1, b1);
    Ok(Preparation {
        round_class: RoundClass::KeyClass,
        encoded: Some(encoded),
        check_indices: None,
        state: basis_product(encoded)?,
    })
}

/// Check-class preparation with explicit Fourier indices.
pub fn prepare_check_class(indices: [u8; 4]) -> Result<Preparation, QuditError> {
    let factors = indices
        .iter()
        .zip(SUBSYSTEM_DIMS)
        .map(|(&j, d)| qudit::fourier_state(d, j as usize))
        .collect::<Result<_, _>>()?;
    Ok(Preparation {
        round_class: RoundClass::CheckClass,
        encoded: None,
        check_indices: Some(indices),
        state: ProductState::new(factors),
    })
}

pub fn prepare_chi<R: Rng + ?Sized>(cfg: &TaskConfig, rng: &mut R) -> Result<Preparation, QuditError> {
    if rng.random_bool(cfg.check_state_prob) {
        let mut j = [0u8; 4];
        for (slot, d) in j.iter_mut().zip(SUBSYSTEM_DIMS) {
            *slot = rng.random_range(0..d as u8);
        }
        prepare_check_class(j)
    } else {
        let k = rng.random_range(0..2u8);
        let s1 = rng.random_range(0..2u8);
        let b1 = rng.random_range(0..4u8);
        prepare_key_class(k, s1, b1)
    }
}

/// One Bob's action on his subsystem.
pub fn bob_step<R: Rng + ?Sized>(
    state: &StateVector,
    op: BobOp,
    rng: &mut R,
) -> Result<(StateVector, Option<u8>), QuditError> {
    match op {
        BobOp::Reflect => Ok((state.clone(), None)),
        BobOp::Ctrl => {
            let s = qudit::measure_luders(state, qudit::computational(state.dim())?, rng)?;
            Ok((s.post_state, Some(s.eigenvalue as u8)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliceResult {
    pub measurement: AliceMeasurement,
    pub outcomes: Option<[u8; 4]>,
    pub pi_chi_pass: Option<bool>,
}

/// Probability that `returned` passes the `Π_χ` test for `prepared`.
pub fn pi_chi_pass_probability(
    prepared: &ProductState,
    returned: &ProductState,
) -> Result<f64, QuditError> {
    let chi = prepared.joint()?;
    Projector::rank_one(&chi).expectation(&returned.joint()?)
}

pub fn alice_final<R: Rng + ?Sized>(
    cfg: &TaskConfig,
    prepared: &ProductState,
    returned: &ProductState,
    rng: &mut R,
) -> Result<AliceResult, QuditError> {
    if rng.random_bool(cfg.alice_computational_prob) {
        let mut outcomes = [0u8; 4];
        for (slot, factor) in outcomes.iter_mut().zip(returned.factors()) {
            let obs = qudit::computational(factor.dim())?;
            *slot = qudit::measure_luders(factor, obs, rng)?.eigenvalue as u8;
        }
        Ok(AliceResult {
            measurement: AliceMeasurement::Computational,
            outcomes: Some(outcomes),
            pi_chi_pass: None,
        })
    } else {
        let p = pi_chi_pass_probability(prepared, returned)?;
        let u: f64 = rng.random();
        // Snap rounding residue so an untouched state passes with certainty.
        let pass = p >= 1.0 - ALGEBRA_TOL || u < p;
        Ok(AliceResult {
            measurement: AliceMeasurement::PiChi,
            outcomes: None,
            pi_chi_pass: Some(pass),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiRound {
    pub round_id: u64,
    pub round_class: RoundClass,
    pub encoded: Option<[u8; 4]>,
    pub check_indices: Option<[u8; 4]>,
    pub bob_actions: [BobOp; 4],
    /// `Some` exactly where the matching action is `Ctrl`.
    pub bob_outcomes: [Option<u8>; 4],
    pub alice_measurement: AliceMeasurement,
    pub alice_outcomes: Option<[u8; 4]>,
    pub pi_chi_pass: Option<bool>,
    /// One entry per attacked subsystem; empty when the round was not attacked.
    pub attack_applied: Vec<AttackEvent>,
}

fn intercept(
    state: &mut ProductState,
    attack: Option<&AttackSpec>,
    path: Location,
    eve: &mut impl Rng,
    events: &mut Vec<AttackEvent>,
) -> Result<(), QuditError> {
    let Some(spec) = attack.filter(|a| a.location == path) else {
        return Ok(());
    };
    for &t in &spec.targets {
        let out = adversary::apply_attack(&state.factors()[t], spec, eve)?;
        *state.factor_mut(t) = out.state;
        events.push(AttackEvent {
            site: t,
            eve_outcome: out.eve_outcome,
        });
    }
    Ok(())
}

/// Plays one round. `attack` must already be validated against [`SUBSYSTEM_DIMS`].
pub fn run_round(
    cfg: &TaskConfig,
    attack: Option<&AttackSpec>,
    round_id: u64,
    streams: &mut RoundStreams,
) -> Result<ChiRound, QuditError> {
    let RoundStreams { honest, eve } = streams;
    let attack = attack.filter(|a| a.engages(eve));
    let mut events = Vec::new();

    let prep = prepare_chi(cfg, honest)?;
    let mut state = prep.state.clone();
    intercept(&mut state, attack, Location::Outbound, eve, &mut events)?;

    let mut bob_actions = [BobOp::Reflect; 4];
    let mut bob_outcomes = [None; 4];
    for i in 0..4 {
        let op = if honest.random_bool(cfg.bob_ctrl_prob) {
            BobOp::Ctrl
        } else {
            BobOp::Reflect
        };
        let (next, outcome) = bob_step(&state.factors()[i], op, honest)?;
        *state.factor_mut(i) = next;
        bob_actions[i] = op;
        bob_outcomes[i] = outcome;
    }

    intercept(&mut state, attack, Location::Return, eve, &mut events)?;
    let alice = alice_final(cfg, &prep.state, &state, honest)?;

    Ok(ChiRound {
        round_id,
        round_class: prep.round_class,
        encoded: prep.encoded,
        check_indices: prep.check_indices,
        bob_actions,
        bob_outcomes,
        alice_measurement: alice.measurement,
        alice_outcomes: alice.outcomes,
        pi_chi_pass: alice.pi_chi_pass,
        attack_applied: events,
    })
}

fn layer_ctrl(r: &ChiRound, layer: [usize; 2]) -> bool {
    layer.iter().all(|&i| r.bob_actions[i] == BobOp::Ctrl)
}

pub const LAYER1: [usize; 2] = [0, 1];
pub const LAYER2: [usize; 2] = [2, 3];

pub fn is_layer_key_round(r: &ChiRound, layer: [usize; 2]) -> bool {
    r.round_class == RoundClass::KeyClass
        && r.alice_measurement == AliceMeasurement::Computational
        && layer_ctrl(r, layer)
}

pub fn is_check_round(r: &ChiRound) -> bool {
    r.round_class == RoundClass::CheckClass
        && r.alice_measurement == AliceMeasurement::PiChi
        && r.bob_actions.iter().all(|&a| a == BobOp::Reflect)
}

/// Rounds partitioned by public disclosure. A round may serve both layers.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSift<'a> {
    pub layer1: Vec<&'a ChiRound>,
    pub layer2: Vec<&'a ChiRound>,
    pub check: Vec<&'a ChiRound>,
    pub discards: Vec<&'a ChiRound>,
}

pub fn sift_task(records: &[ChiRound]) -> TaskSift<'_> {
    let mut sift = TaskSift {
        layer1: Vec::new(),
        layer2: Vec::new(),
        check: Vec::new(),
        discards: Vec::new(),
    };
    for r in records {
        let l1 = is_layer_key_round(r, LAYER1);
        let l2 = is_layer_key_round(r, LAYER2);
        if l1 {
            sift.layer1.push(r);
        }
        if l2 {
            sift.layer2.push(r);
        }
        if is_check_round(r) {
            sift.check.push(r);
        } else if !l1 && !l2 {
            sift.discards.push(r);
        }
    }
    sift
}

/// Layer-1 `(k, s₁)` from Bob₁ and Bob₂'s symbols.
pub fn layer1_bits(b1: u8, b2: u8) -> (u8, u8) {
    (low_bit(b1) ^ low_bit(b2), high_bit(b1) ^ high_bit(b2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedKeys {
    pub layer1_key: BitString,
    pub layer1_secret: BitString,
    pub layer2_key: BitString,
    /// Layer-2 rounds where `b₃ != b₄`; excluded from the key.
    pub layer2_error_rounds: Vec<u64>,
}

pub fn derive_keys(layer1: &[&ChiRound], layer2: &[&ChiRound]) -> DerivedKeys {
    let mut keys = DerivedKeys {
        layer1_key: BitString::new(),
        layer1_secret: BitString::new(),
        layer2_key: BitString::new(),
        layer2_error_rounds: Vec::new(),
    };
    for r in layer1 {
        let (Some(b1), Some(b2)) = (r.bob_outcomes[0], r.bob_outcomes[1]) else {
            continue;
        };
        let (k, s1) = layer1_bits(b1, b2);
        keys.layer1_key.push(k == 1);
        keys.layer1_secret.push(s1 == 1);
    }
    for r in layer2 {
        match (r.bob_outcomes[2], r.bob_outcomes[3]) {
            (Some(b3), Some(b4)) if b3 == b4 => keys.layer2_key.push(b3 == 1),
            _ => keys.layer2_error_rounds.push(r.round_id),
        }
    }
    keys
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiChiStats {
    pub fail_rate: f64,
    pub stderr: f64,
    pub check_rounds: usize,
    pub eve_detected: bool,
}

pub fn pi_chi_statistics(check: &[&ChiRound], alarm_threshold: f64) -> Result<PiChiStats, TaskError> {
    if check.is_empty() {
        return Err(TaskError::NoSecuritySample);
    }
    let n = check.len();
    let fails = check.iter().filter(|r| r.pi_chi_pass == Some(false)).count();
    let fail_rate = fails as f64 / n as f64;
    Ok(PiChiStats {
        fail_rate,
        stderr: (fail_rate * (1.0 - fail_rate) / n as f64).sqrt(),
        check_rounds: n,
        eve_detected: fail_rate > alarm_threshold,
    })
}

/// Plug-in mutual information over key-class preparations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confidentiality {
    /// What layer 2 learns about the layer-1 secret.
    pub mi_b3_vs_s1: f64,
    /// What Bob₁ alone learns about the layer-1 key.
    pub mi_b1_vs_k: f64,
    pub samples: usize,
}

/// `None` when the run produced no key-class rounds.
pub fn confidentiality_audit(records: &[ChiRound]) -> Option<Confidentiality> {
    let encoded: Vec<[u8; 4]> = records.iter().filter_map(|r| r.encoded).collect();
    let b3: Vec<u8> = encoded.iter().map(|e| e[2]).collect();
    let b1: Vec<u8> = encoded.iter().map(|e| e[0]).collect();
    let (k, s1): (Vec<u8>, Vec<u8>) = encoded.iter().map(|e| layer1_bits(e[0], e[1])).unzip();
    Some(Confidentiality {
        mi_b3_vs_s1: analysis::mutual_information(&b3, &s1).ok()?,
        mi_b1_vs_k: analysis::mutual_information(&b1, &k).ok()?,
        samples: encoded.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerReport {
    pub total_rounds: usize,
    pub layer1_round_count: usize,
    pub layer2_round_count: usize,
    pub check_round_count: usize,
    pub discard_count: usize,
    pub layer1_round_fraction: f64,
    pub expected_layer1_round_fraction: f64,
    pub layer1_key_bits: BitString,
    pub layer1_secret_bits: BitString,
    pub layer2_key_bits: BitString,
    pub layer2_error_events: usize,
    /// Layer-1 rounds whose derived `k` or `s₁` differs from what Alice encoded.
    pub layer1_key_violations: usize,
    pub layer1_secret_violations: usize,
    /// Rounds sifted into both layers, and those where `k = b₃ = b₄` fails.
    pub cosifted_round_count: usize,
    pub cosifted_violations: usize,
    /// Key rounds where Alice's computational result differs from a CTRL Bob's outcome.
    pub alice_bob_mismatches: usize,
    pub pi_chi_fail_rate: f64,
    pub pi_chi_stderr: f64,
    pub pi_chi_alarm_threshold: f64,
    pub eve_detected: bool,
    pub confidentiality: Option<Confidentiality>,
}

pub fn summarize(cfg: &TaskConfig, records: &[ChiRound]) -> Result<LayerReport, TaskError> {
    let sift = sift_task(records);
    let stats = pi_chi_statistics(&sift.check, cfg.pi_chi_alarm_threshold)?;
    let keys = derive_keys(&sift.layer1, &sift.layer2);

    let mut layer1_key_violations = 0;
    let mut layer1_secret_violations = 0;
    for r in &sift.layer1 {
        let (Some(enc), Some(b1), Some(b2)) = (r.encoded, r.bob_outcomes[0], r.bob_outcomes[1]) else {
            continue;
        };
        let (k, s1) = layer1_bits(b1, b2);
        let (ek, es1) = layer1_bits(enc[0], enc[1]);
        layer1_key_violations += usize::from(k != ek || k != enc[2]);
        layer1_secret_violations += usize::from(s1 != es1);
    }

    let cosifted: Vec<&ChiRound> = sift
        .layer1
        .iter()
        .copied()
        .filter(|r| is_layer_key_round(r, LAYER2))
        .collect();
    let cosifted_violations = cosifted
        .iter()
        .filter(|r| {
            let o = r.bob_outcomes.map(|b| b.unwrap_or(u8::MAX));
            let (k, _) = layer1_bits(o[0], o[1]);
            !(k == o[2] && o[2] == o[3])
        })
        .count();

    let alice_bob_mismatches = records
        .iter()
        .filter(|r| r.round_class == RoundClass::KeyClass)
        .filter(|r| match r.alice_outcomes {
            Some(a) => r
                .bob_outcomes
                .iter()
                .zip(a)
                .any(|(b, a)| b.is_some_and(|b| b != a)),
            None => false,
        })
        .count();

    let n = records.len();
    Ok(LayerReport {
        total_rounds: n,
        layer1_round_count: sift.layer1.len(),
        layer2_round_count: sift.layer2.len(),
        check_round_count: sift.check.len(),
        discard_count: sift.discards.len(),
        layer1_round_fraction: sift.layer1.len() as f64 / n as f64,
        expected_layer1_round_fraction: (1.0 - cfg.check_state_prob)
            * cfg.bob_ctrl_prob.powi(2)
            * cfg.alice_computational_prob,
        layer2_error_events: keys.layer2_error_rounds.len(),
        layer1_key_bits: keys.layer1_key,
        layer1_secret_bits: keys.layer1_secret,
        layer2_key_bits: keys.layer2_key,
        layer1_key_violations,
        layer1_secret_violations,
        cosifted_round_count: cosifted.len(),
        cosifted_violations,
        alice_bob_mismatches,
        pi_chi_fail_rate: stats.fail_rate,
        pi_chi_stderr: stats.stderr,
        pi_chi_alarm_threshold: cfg.pi_chi_alarm_threshold,
        eve_detected: stats.eve_detected,
        confidentiality: confidentiality_audit(records),
    })
}

pub fn simulate(
    cfg: &TaskConfig,
    attack: Option<&AttackSpec>,
    mode: ExecutionMode,
) -> Result<Vec<ChiRound>, TaskError> {
    cfg.validate()?;
    if let Some(a) = attack {
        a.validate_task(&SUBSYSTEM_DIMS)?;
    }
    rng::run_rounds(cfg.rounds, mode, |id| {
        run_round(cfg, attack, id, &mut RoundStreams::new(cfg.rng_seed, id))
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(Into::into)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRun {
    pub records: Vec<ChiRound>,
    pub report: LayerReport,
}

pub fn run_task(
    cfg: &TaskConfig,
    attack: Option<&AttackSpec>,
    mode: ExecutionMode,
) -> Result<TaskRun, TaskError> {
    let records = simulate(cfg, attack, mode)?;
    let report = summarize(cfg, &records)?;
    Ok(TaskRun { records, report })
}

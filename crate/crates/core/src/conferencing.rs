//! Semi-quantum conferencing over one ququart.
//!
//! Alice prepares `(|0> + |3>)/sqrt(2)` and measures either X₁ or Z₁. The
//! post-measurement state travels through Bob₁..Bob_N, each of whom either
//! measures Z₂ and resends the collapsed state or forwards it untouched.
//! Alice closes the round by measuring the partner observable: X₂ after X₁,
//! Z₂ after Z₁.
//!
//! Rounds where no Bob measured estimate
//! `S = <X₁X₂> + <Z₁Z₂>`; the run is accepted only when `S` exceeds the
//! noncontextual bound (default `sqrt(2)`). Rounds where every Bob measured
//! and Alice used the Z pair give one shared key bit per party.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{self, AdversaryError, AttackEvent, AttackSpec, EveBasis, Location, Strategy};
use crate::analysis::{self, Estimate};
use crate::bits::{outcome_to_bit, BitString};
use crate::config::{self, ConfigError};
use crate::qudit::{self, HermitianObservable, QuditError, StateVector};
use crate::rng::{self, ExecutionMode, RoundStreams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConferenceError {
    #[error("no test rounds with Alice's {0:?} choice; cannot estimate its correlator")]
    InsufficientTestRounds(PairChoice),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid attack: {0}")]
    Attack(#[from] AdversaryError),
    #[error(transparent)]
    Qudit(#[from] QuditError),
}

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConferenceConfig {
    pub n_bobs: usize,
    pub rounds: usize,
    #[serde(default = "config::half")]
    pub alice_z_prob: f64,
    #[serde(default = "config::half")]
    pub bob_measure_prob: f64,
    #[serde(default = "sqrt2")]
    pub chsh_threshold: f64,
    pub rng_seed: u64,
}

impl ConferenceConfig {
    /// Default probabilities (1/2) and threshold (`sqrt(2)`).
    pub fn new(n_bobs: usize, rounds: usize, rng_seed: u64) -> Self {
        Self {
            n_bobs,
            rounds,
            alice_z_prob: 0.5,
            bob_measure_prob: 0.5,
            chsh_threshold: sqrt2(),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        config::positive("n_bobs", self.n_bobs)?;
        config::positive("rounds", self.rounds)?;
        config::probability("alice_z_prob", self.alice_z_prob)?;
        config::probability("bob_measure_prob", self.bob_measure_prob)?;
        if !self.chsh_threshold.is_finite() {
            return Err(ConfigError::new("chsh_threshold", "must be finite"));
        }
        Ok(())
    }
}

/// Alice's observable pair for the round: (X₁, X₂) or (Z₁, Z₂).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairChoice {
    XPair,
    ZPair,
}

impl PairChoice {
    fn observables(self) -> (&'static HermitianObservable, &'static HermitianObservable) {
        let o = qudit::standard();
        match self {
            PairChoice::XPair => (&o.x1, &o.x2),
            PairChoice::ZPair => (&o.z1, &o.z2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BobAction {
    Measure,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round_id: u64,
    pub alice_pair: PairChoice,
    pub alice_first_outcome: i8,
    pub bob_actions: Vec<BobAction>,
    /// `Some` exactly where the matching action is `Measure`.
    pub bob_outcomes: Vec<Option<i8>>,
    pub alice_final_outcome: i8,
    pub attack_applied: Option<AttackEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SiftClass {
    TestRound,
    KeyRound,
    Discard,
}

fn sign(eigenvalue: f64) -> i8 {
    if eigenvalue < 0.0 {
        -1
    } else {
        1
    }
}

/// `(|0> + |3>) / sqrt(2)`.
pub fn initial_state() -> &'static StateVector {
    static PSI: OnceLock<StateVector> = OnceLock::new();
    PSI.get_or_init(|| StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).expect("nonzero"))
}

fn pass_link(
    state: StateVector,
    link: usize,
    attack: Option<&AttackSpec>,
    eve: &mut impl Rng,
    event: &mut Option<AttackEvent>,
) -> Result<StateVector, QuditError> {
    match attack {
        Some(spec) if spec.location == Location::Link(link) => {
            let out = adversary::apply_attack(&state, spec, eve)?;
            *event = Some(AttackEvent {
                site: link,
                eve_outcome: out.eve_outcome,
            });
            Ok(out.state)
        }
        _ => Ok(state),
    }
}

/// Plays one round. `attack` must already be validated for `cfg.n_bobs`.
pub fn run_round(
    cfg: &ConferenceConfig,
    attack: Option<&AttackSpec>,
    round_id: u64,
    streams: &mut RoundStreams,
) -> Result<RoundRecord, QuditError> {
    let RoundStreams { honest, eve } = streams;
    let attack = attack.filter(|a| a.engages(eve));
    let mut event = None;

    let alice_pair = if honest.random_bool(cfg.alice_z_prob) {
        PairChoice::ZPair
    } else {
        PairChoice::XPair
    };
    let (first_obs, final_obs) = alice_pair.observables();
    let first = qudit::measure_luders(initial_state(), first_obs, honest)?;
    let mut state = pass_link(first.post_state, 0, attack, eve, &mut event)?;

    let z2 = &qudit::standard().z2;
    let mut bob_actions = Vec::with_capacity(cfg.n_bobs);
    let mut bob_outcomes = Vec::with_capacity(cfg.n_bobs);
    for bob in 0..cfg.n_bobs {
        if honest.random_bool(cfg.bob_measure_prob) {
            let s = qudit::measure_luders(&state, z2, honest)?;
            bob_actions.push(BobAction::Measure);
            bob_outcomes.push(Some(sign(s.eigenvalue)));
            state = s.post_state;
        } else {
            bob_actions.push(BobAction::Forward);
            bob_outcomes.push(None);
        }
        state = pass_link(state, bob + 1, attack, eve, &mut event)?;
    }

    let last = qudit::measure_luders(&state, final_obs, honest)?;
    Ok(RoundRecord {
        round_id,
        alice_pair,
        alice_first_outcome: sign(first.eigenvalue),
        bob_actions,
        bob_outcomes,
        alice_final_outcome: sign(last.eigenvalue),
        attack_applied: event,
    })
}

pub fn classify_round(r: &RoundRecord) -> SiftClass {
    if r.bob_actions.iter().all(|&a| a == BobAction::Forward) {
        SiftClass::TestRound
    } else if r.alice_pair == PairChoice::ZPair
        && r.bob_actions.iter().all(|&a| a == BobAction::Measure)
    {
        SiftClass::KeyRound
    } else {
        SiftClass::Discard
    }
}

/// Test-round estimate of `<X₁X₂> + <Z₁Z₂>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshEstimate {
    pub s_estimate: f64,
    pub s_stderr: f64,
    pub x_correlator: Estimate,
    pub z_correlator: Estimate,
}

pub fn estimate_chsh(records: &[RoundRecord]) -> Result<ChshEstimate, ConferenceError> {
    let products = |pair: PairChoice| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.alice_pair == pair && classify_round(r) == SiftClass::TestRound)
            .map(|r| f64::from(r.alice_first_outcome * r.alice_final_outcome))
            .collect()
    };
    let corr = |pair| {
        analysis::mean_with_stderr(&products(pair))
            .map_err(|_| ConferenceError::InsufficientTestRounds(pair))
    };
    let x = corr(PairChoice::XPair)?;
    let z = corr(PairChoice::ZPair)?;
    Ok(ChshEstimate {
        s_estimate: x.mean + z.mean,
        s_stderr: x.stderr.hypot(z.stderr),
        x_correlator: x,
        z_correlator: z,
    })
}

/// Sifted conference key, one bit per key round per party.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyMaterial {
    pub alice_key: BitString,
    pub bob_keys: Vec<BitString>,
    pub key_round_ids: Vec<u64>,
}

impl KeyMaterial {
    /// Fraction of key positions where all parties hold the same bit (0 for an empty key).
    pub fn agreement_fraction(&self) -> f64 {
        if self.alice_key.is_empty() {
            return 0.0;
        }
        let agree = (0..self.alice_key.len())
            .filter(|&i| {
                let a = self.alice_key.as_slice()[i];
                self.bob_keys.iter().all(|k| k.as_slice()[i] == a)
            })
            .count();
        agree as f64 / self.alice_key.len() as f64
    }
}

pub fn extract_key(records: &[RoundRecord]) -> KeyMaterial {
    let n_bobs = records.first().map_or(0, |r| r.bob_actions.len());
    let mut keys = KeyMaterial {
        alice_key: BitString::new(),
        bob_keys: vec![BitString::new(); n_bobs],
        key_round_ids: Vec::new(),
    };
    for r in records.iter().filter(|r| classify_round(r) == SiftClass::KeyRound) {
        keys.alice_key.push(outcome_to_bit(r.alice_final_outcome));
        for (key, outcome) in keys.bob_keys.iter_mut().zip(&r.bob_outcomes) {
            key.push(outcome_to_bit(outcome.expect("key rounds have every Bob measuring")));
        }
        keys.key_round_ids.push(r.round_id);
    }
    keys
}

/// Eve's key-bit guesses for each key round, read off her logged outcomes.
pub fn eve_guesses(records: &[RoundRecord], basis: EveBasis) -> Vec<Option<bool>> {
    records
        .iter()
        .filter(|r| classify_round(r) == SiftClass::KeyRound)
        .map(|r| {
            let outcome = r.attack_applied.and_then(|e| e.eve_outcome)?;
            Some(match basis {
                // Odd computational indices are the Z₂ = -1 eigenstates.
                EveBasis::Computational => (outcome as usize) % 2 == 1,
                _ => outcome_to_bit(sign(outcome)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConferenceReport {
    pub s_estimate: f64,
    pub s_stderr: f64,
    pub x_correlator: Estimate,
    pub z_correlator: Estimate,
    pub chsh_threshold: f64,
    /// `s_estimate - chsh_threshold`.
    pub margin: f64,
    pub violated: bool,
    pub total_rounds: usize,
    pub test_round_count: usize,
    pub key_round_count: usize,
    pub discard_count: usize,
    pub key_round_fraction: f64,
    pub expected_key_round_fraction: f64,
    /// Key bits per key round per party.
    pub sifted_key_rate: f64,
    pub alice_key: BitString,
    pub bob_keys: Vec<BitString>,
    pub key_agreement_fraction: f64,
    /// QBER of each Bob's key against Alice's; empty when no key rounds occurred.
    pub qber_vs_alice: Vec<f64>,
    /// Eve's key-bit guessing accuracy, present when an intercept-resend attack was configured.
    pub eve_information: Option<f64>,
}

/// Secure iff the estimate strictly exceeds the configured threshold.
pub fn detect(report: &ConferenceReport, cfg: &ConferenceConfig) -> bool {
    report.s_estimate > cfg.chsh_threshold
}

pub fn summarize(
    cfg: &ConferenceConfig,
    attack: Option<&AttackSpec>,
    records: &[RoundRecord],
) -> Result<ConferenceReport, ConferenceError> {
    let chsh = estimate_chsh(records)?;
    let mut counts = [0usize; 3];
    for r in records {
        counts[classify_round(r) as usize] += 1;
    }
    let [test_round_count, key_round_count, discard_count] = counts;
    let keys = extract_key(records);
    let qber_vs_alice = keys
        .bob_keys
        .iter()
        .filter_map(|k| analysis::qber(keys.alice_key.as_slice(), k.as_slice()).ok())
        .collect();
    let eve_information = match attack.map(|a| a.strategy) {
        Some(Strategy::InterceptResend { basis }) => Some(adversary::eve_information(
            &eve_guesses(records, basis),
            keys.alice_key.as_slice(),
        )),
        _ => None,
    };
    let sifted_key_rate = if key_round_count == 0 {
        0.0
    } else {
        keys.alice_key.len() as f64 / key_round_count as f64
    };
    let mut report = ConferenceReport {
        s_estimate: chsh.s_estimate,
        s_stderr: chsh.s_stderr,
        x_correlator: chsh.x_correlator,
        z_correlator: chsh.z_correlator,
        chsh_threshold: cfg.chsh_threshold,
        margin: chsh.s_estimate - cfg.chsh_threshold,
        violated: false,
        total_rounds: records.len(),
        test_round_count,
        key_round_count,
        discard_count,
        key_round_fraction: key_round_count as f64 / records.len() as f64,
        expected_key_round_fraction: cfg.alice_z_prob * cfg.bob_measure_prob.powi(cfg.n_bobs as i32),
        sifted_key_rate,
        key_agreement_fraction: keys.agreement_fraction(),
        alice_key: keys.alice_key,
        bob_keys: keys.bob_keys,
        qber_vs_alice,
        eve_information,
    };
    report.violated = detect(&report, cfg);
    Ok(report)
}

/// All round records of a run, ordered by round id.
pub fn simulate(
    cfg: &ConferenceConfig,
    attack: Option<&AttackSpec>,
    mode: ExecutionMode,
) -> Result<Vec<RoundRecord>, ConferenceError> {
    cfg.validate()?;
    if let Some(a) = attack {
        a.validate_conference(cfg.n_bobs)?;
    }
    rng::run_rounds(cfg.rounds, mode, |id| {
        run_round(cfg, attack, id, &mut RoundStreams::new(cfg.rng_seed, id))
    })
    .into_iter()
    .collect::<Result<_, _>>()
    .map_err(Into::into)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConferenceRun {
    pub records: Vec<RoundRecord>,
    pub report: ConferenceReport,
}

pub fn run_conference(
    cfg: &ConferenceConfig,
    attack: Option<&AttackSpec>,
    mode: ExecutionMode,
) -> Result<ConferenceRun, ConferenceError> {
    let records = simulate(cfg, attack, mode)?;
    let report = summarize(cfg, attack, &records)?;
    Ok(ConferenceRun { records, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forced(n_bobs: usize, z: f64, measure: f64) -> ConferenceConfig {
        ConferenceConfig {
            alice_z_prob: z,
            bob_measure_prob: measure,
            ..ConferenceConfig::new(n_bobs, 1, 0)
        }
    }

    fn rounds(cfg: &ConferenceConfig, n: u64) -> impl Iterator<Item = RoundRecord> + '_ {
        (0..n).map(move |id| run_round(cfg, None, id, &mut RoundStreams::new(99, id)).unwrap())
    }

    #[test]
    fn z_pair_forward_outcomes_agree() {
        for r in rounds(&forced(1, 1.0, 0.0), 500) {
            assert_eq!(r.alice_pair, PairChoice::ZPair);
            assert_eq!(r.alice_first_outcome, r.alice_final_outcome);
        }
    }

    #[test]
    fn x_pair_forward_product_is_plus_one() {
        let mut seen = [false; 2];
        for r in rounds(&forced(1, 0.0, 0.0), 500) {
            assert_eq!(r.alice_pair, PairChoice::XPair);
            assert_eq!(r.alice_first_outcome * r.alice_final_outcome, 1);
            seen[(r.alice_first_outcome > 0) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn measuring_bobs_share_alices_outcome() {
        for r in rounds(&forced(2, 1.0, 1.0), 500) {
            let a = r.alice_first_outcome;
            assert_eq!(r.bob_outcomes, vec![Some(a), Some(a)]);
            assert_eq!(r.alice_final_outcome, a);
        }
    }

    fn record(pair: PairChoice, actions: &[BobAction]) -> RoundRecord {
        RoundRecord {
            round_id: 0,
            alice_pair: pair,
            alice_first_outcome: 1,
            bob_actions: actions.to_vec(),
            bob_outcomes: actions
                .iter()
                .map(|&a| (a == BobAction::Measure).then_some(1))
                .collect(),
            alice_final_outcome: 1,
            attack_applied: None,
        }
    }

    #[test]
    fn classification() {
        use BobAction::*;
        use PairChoice::*;
        assert_eq!(classify_round(&record(XPair, &[Forward, Forward])), SiftClass::TestRound);
        assert_eq!(classify_round(&record(ZPair, &[Forward, Forward])), SiftClass::TestRound);
        assert_eq!(classify_round(&record(ZPair, &[Measure, Measure])), SiftClass::KeyRound);
        assert_eq!(classify_round(&record(XPair, &[Measure, Measure])), SiftClass::Discard);
        assert_eq!(classify_round(&record(ZPair, &[Measure, Forward])), SiftClass::Discard);
    }

    #[test]
    fn chsh_needs_both_pairs() {
        let only_z = vec![record(PairChoice::ZPair, &[BobAction::Forward])];
        assert_eq!(
            estimate_chsh(&only_z),
            Err(ConferenceError::InsufficientTestRounds(PairChoice::XPair))
        );
        let only_x = vec![record(PairChoice::XPair, &[BobAction::Forward])];
        assert_eq!(
            estimate_chsh(&only_x),
            Err(ConferenceError::InsufficientTestRounds(PairChoice::ZPair))
        );
    }

    #[test]
    fn key_round_with_plus_outcomes_gives_zero_bits() {
        let keys = extract_key(&[record(PairChoice::ZPair, &[BobAction::Measure; 3])]);
        assert_eq!(keys.alice_key.to_string(), "0");
        assert!(keys.bob_keys.iter().all(|k| k.to_string() == "0"));
        assert_eq!(keys.agreement_fraction(), 1.0);
    }

    fn report_with(s: f64) -> ConferenceReport {
        let mut recs = vec![record(PairChoice::XPair, &[BobAction::Forward])];
        recs.push(record(PairChoice::ZPair, &[BobAction::Forward]));
        let mut r = summarize(&ConferenceConfig::new(1, 2, 0), None, &recs).unwrap();
        r.s_estimate = s;
        r
    }

    #[test]
    fn detection_is_strict() {
        let cfg = ConferenceConfig::new(1, 1, 0);
        assert!(detect(&report_with(2.0), &cfg));
        assert!(!detect(&report_with(1.0), &cfg));
        assert!(!detect(&report_with(std::f64::consts::SQRT_2), &cfg));
    }

    #[test]
    fn config_validation() {
        assert!(ConferenceConfig::new(3, 10, 0).validate().is_ok());
        let bad = ConferenceConfig {
            bob_measure_prob: 1.5,
            ..ConferenceConfig::new(3, 10, 0)
        };
        assert_eq!(bad.validate().unwrap_err().path, "bob_measure_prob");
        assert_eq!(ConferenceConfig::new(0, 10, 0).validate().unwrap_err().path, "n_bobs");
        assert_eq!(ConferenceConfig::new(1, 0, 0).validate().unwrap_err().path, "rounds");
    }
}

mod oracle;

use proptest::prelude::*;
use semiquantum::adversary::{AttackSpec, EveBasis};
use semiquantum::conferencing::{
    classify_round, extract_key, run_conference, simulate, ConferenceConfig, PairChoice, SiftClass,
};
use semiquantum::ExecutionMode;

#[test]
fn oracle_values_are_what_the_tests_assume() {
    let o = oracle::definitions();
    assert!((oracle::conference_s(None, 1.0) - 2.0).abs() < 1e-12);
    assert!((oracle::conference_s(Some(&o.z2), 1.0) - 1.0).abs() < 1e-12);
    assert!((oracle::conference_s(Some(&o.x2), 1.0) - 1.0).abs() < 1e-12);
    assert!((oracle::conference_s(Some(&o.z2), 0.5) - 1.5).abs() < 1e-12);
}

#[test]
fn honest_run_is_exactly_maximal() {
    let cfg = ConferenceConfig::new(3, 100_000, 7);
    let run = run_conference(&cfg, None, ExecutionMode::Parallel).unwrap();
    let r = &run.report;
    assert_eq!(r.s_estimate, 2.0);
    assert_eq!(r.s_stderr, 0.0);
    assert!(r.violated);
    assert_eq!(r.key_agreement_fraction, 1.0);
    assert!(r.qber_vs_alice.iter().all(|&q| q == 0.0));
    assert_eq!(r.test_round_count + r.key_round_count + r.discard_count, 100_000);
    let p = 0.0625;
    assert!((r.key_round_fraction - p).abs() <= oracle::five_sigma_binomial(p, 100_000));
    assert_eq!(r.sifted_key_rate, 1.0);
    assert_eq!(r.eve_information, None);
}

#[test]
fn intercept_on_any_link_kills_the_violation() {
    let o = oracle::definitions();
    for (basis, obs) in [(EveBasis::Z2, &o.z2), (EveBasis::X2, &o.x2)] {
        let expected = oracle::conference_s(Some(obs), 1.0);
        for link in 0..=3 {
            let cfg = ConferenceConfig::new(3, 40_000, 100 + link as u64);
            let attack = AttackSpec::intercept_link(basis, link);
            let r = run_conference(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap().report;
            assert!(
                (r.s_estimate - expected).abs() <= 5.0 * r.s_stderr,
                "{basis:?} link {link}: s = {} +/- {}",
                r.s_estimate,
                r.s_stderr
            );
            assert!(!r.violated);
        }
    }
}

#[test]
fn z2_intercept_leaks_the_key_without_errors() {
    let cfg = ConferenceConfig::new(3, 100_000, 5);
    let attack = AttackSpec::intercept_link(EveBasis::Z2, 0);
    let r = run_conference(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap().report;
    assert_eq!(r.key_agreement_fraction, 1.0);
    assert_eq!(r.eve_information, Some(1.0));
    assert!(!r.violated);
    assert!((r.s_estimate - 1.0).abs() <= 5.0 * r.s_stderr);
}

#[test]
fn half_rate_attack_interpolates() {
    let o = oracle::definitions();
    let expected = oracle::conference_s(Some(&o.z2), 0.5);
    let cfg = ConferenceConfig::new(3, 100_000, 6);
    let attack = AttackSpec::intercept_link(EveBasis::Z2, 0).with_rate(0.5);
    let r = run_conference(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap().report;
    assert!((r.s_estimate - expected).abs() <= 5.0 * r.s_stderr, "s = {}", r.s_estimate);
    let info = r.eve_information.unwrap();
    assert!(info > 0.6 && info < 0.9, "eve accuracy {info}");
}

#[test]
fn no_attack_gives_eve_coin_flip_accuracy() {
    let cfg = ConferenceConfig::new(2, 20_000, 1);
    let attack = AttackSpec::intercept_link(EveBasis::Z2, 0).with_rate(0.0);
    let r = run_conference(&cfg, Some(&attack), ExecutionMode::Sequential).unwrap().report;
    assert_eq!(r.eve_information, Some(0.5));
    assert_eq!(r.s_estimate, 2.0);
}

#[test]
fn none_strategy_is_bit_identical_to_no_attack() {
    let cfg = ConferenceConfig::new(3, 5_000, 21);
    let plain = simulate(&cfg, None, ExecutionMode::Sequential).unwrap();
    let none = simulate(&cfg, Some(&AttackSpec::none()), ExecutionMode::Parallel).unwrap();
    assert_eq!(plain, none);
}

#[test]
fn replay_is_deterministic_across_modes() {
    let cfg = ConferenceConfig::new(4, 10_000, 77);
    let attack = AttackSpec::intercept_link(EveBasis::X2, 2).with_rate(0.3);
    let a = simulate(&cfg, Some(&attack), ExecutionMode::Sequential).unwrap();
    let b = simulate(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].round_id + 1 == w[1].round_id));
}

#[test]
fn insufficient_test_rounds_is_an_error() {
    let cfg = ConferenceConfig {
        alice_z_prob: 1.0,
        ..ConferenceConfig::new(1, 100, 0)
    };
    assert!(run_conference(&cfg, None, ExecutionMode::Sequential).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn honest_invariants(seed in any::<u64>(), n_bobs in 1usize..6, z in 0.1f64..0.9, m in 0.1f64..0.9) {
        let cfg = ConferenceConfig { alice_z_prob: z, bob_measure_prob: m, ..ConferenceConfig::new(n_bobs, 400, seed) };
        let records = simulate(&cfg, None, ExecutionMode::Sequential).unwrap();
        let mut key_rounds = 0;
        for r in &records {
            prop_assert_eq!(r.bob_actions.len(), n_bobs);
            for (a, o) in r.bob_actions.iter().zip(&r.bob_outcomes) {
                prop_assert_eq!(*a == semiquantum::conferencing::BobAction::Measure, o.is_some());
            }
            match classify_round(r) {
                SiftClass::TestRound => prop_assert_eq!(r.alice_first_outcome * r.alice_final_outcome, 1),
                SiftClass::KeyRound => {
                    key_rounds += 1;
                    prop_assert_eq!(r.alice_pair, PairChoice::ZPair);
                    prop_assert!(r.bob_outcomes.iter().all(|&o| o == Some(r.alice_final_outcome)));
                }
                SiftClass::Discard => {}
            }
        }
        let keys = extract_key(&records);
        prop_assert_eq!(keys.alice_key.len(), key_rounds);
        prop_assert!(keys.bob_keys.iter().all(|k| k == &keys.alice_key));
    }
}

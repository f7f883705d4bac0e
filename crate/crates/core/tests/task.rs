mod oracle;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semiquantum::adversary::{self, AttackSpec, EveBasis, Location};
use semiquantum::qudit;
use semiquantum::task::{
    self, pi_chi_pass_probability, prepare_check_class, run_task, simulate, BobOp, ProductState, RoundClass,
    TaskConfig,
};
use semiquantum::ExecutionMode;

#[test]
fn oracle_pass_probabilities() {
    assert!((oracle::check_pass_probability(&[]) - 1.0).abs() < 1e-12);
    assert!((oracle::check_pass_probability(&[0, 1, 2, 3]) - 1.0 / 64.0).abs() < 1e-12);
    assert!((oracle::check_pass_probability(&[2]) - 0.5).abs() < 1e-12);
    assert!((oracle::check_pass_probability(&[0]) - 0.25).abs() < 1e-12);
}

/// Enumerates Eve's 64 computational collapse branches through the crate's
/// engine and compares the averaged pass probability with the density oracle.
#[test]
fn branch_enumeration_matches_oracle() {
    let prep = prepare_check_class([1, 2, 1, 0]).unwrap();
    let obs: Vec<_> = task::SUBSYSTEM_DIMS.iter().map(|&d| qudit::computational(d).unwrap()).collect();
    let mut total = 0.0;
    for m0 in 0..4 {
        for m1 in 0..4 {
            for m2 in 0..2 {
                for m3 in 0..2 {
                    let ms = [m0, m1, m2, m3];
                    let mut p = 1.0;
                    let mut factors = Vec::new();
                    for (i, &m) in ms.iter().enumerate() {
                        let s = qudit::collapse(&prep.state.factors()[i], obs[i], m).unwrap();
                        p *= s.probability;
                        factors.push(s.post_state);
                    }
                    total += p * pi_chi_pass_probability(&prep.state, &ProductState::new(factors)).unwrap();
                }
            }
        }
    }
    assert!((total - oracle::check_pass_probability(&[0, 1, 2, 3])).abs() < 1e-12);
}

#[test]
fn reflect_chain_returns_prepared_state_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prep = prepare_check_class([3, 1, 1, 1]).unwrap();
    let mut state = prep.state.clone();
    for i in 0..4 {
        let (s, o) = task::bob_step(&state.factors()[i], BobOp::Reflect, &mut rng).unwrap();
        assert_eq!(o, None);
        *state.factor_mut(i) = s;
    }
    assert_eq!(state.joint().unwrap(), prep.state.joint().unwrap());
    assert!((pi_chi_pass_probability(&prep.state, &state).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn honest_run_keys_are_consistent() {
    let cfg = TaskConfig::new(100_000, 7);
    let r = run_task(&cfg, None, ExecutionMode::Parallel).unwrap().report;
    assert_eq!(r.pi_chi_fail_rate, 0.0);
    assert!(!r.eve_detected);
    assert_eq!(r.layer1_key_violations, 0);
    assert_eq!(r.layer1_secret_violations, 0);
    assert_eq!(r.cosifted_violations, 0);
    assert!(r.cosifted_round_count > 0);
    assert_eq!(r.layer2_error_events, 0);
    assert_eq!(r.alice_bob_mismatches, 0);
    assert_eq!(r.layer1_key_bits.len(), r.layer1_round_count);
    assert_eq!(r.layer2_key_bits.len(), r.layer2_round_count);
    let p = 1.0 / 16.0;
    assert_eq!(r.expected_layer1_round_fraction, p);
    assert!((r.layer1_round_fraction - p).abs() <= oracle::five_sigma_binomial(p, 100_000));
    let c = r.confidentiality.unwrap();
    assert!(c.mi_b3_vs_s1 <= 0.01 && c.mi_b1_vs_k <= 0.01, "{c:?}");
}

#[test]
fn cosifted_layer_keys_match_roundwise() {
    let cfg = TaskConfig::new(20_000, 9);
    let records = simulate(&cfg, None, ExecutionMode::Sequential).unwrap();
    for r in records.iter().filter(|r| {
        task::is_layer_key_round(r, task::LAYER1) && task::is_layer_key_round(r, task::LAYER2)
    }) {
        let o = r.bob_outcomes.map(Option::unwrap);
        let (k, s1) = task::layer1_bits(o[0], o[1]);
        assert_eq!(k, o[2]);
        assert_eq!(o[2], o[3]);
        let e = r.encoded.unwrap();
        assert_eq!(task::layer1_bits(e[0], e[1]), (k, s1));
    }
}

#[test]
fn computational_intercept_on_all_subsystems() {
    let cfg = TaskConfig::new(100_000, 8);
    let attack = AttackSpec::intercept_subsystems(EveBasis::Computational, Location::Outbound, &[0, 1, 2, 3]);
    let r = run_task(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap().report;
    let p = 1.0 - oracle::check_pass_probability(&[0, 1, 2, 3]);
    assert!((r.pi_chi_fail_rate - p).abs() <= oracle::five_sigma_binomial(p, r.check_round_count));
    assert!(r.eve_detected);
    // Key-class states are computational kets, so the same attack is invisible there.
    assert_eq!(r.layer1_key_violations, 0);
}

#[test]
fn single_qubit_intercept_on_either_path() {
    for (seed, path) in [(10, Location::Outbound), (11, Location::Return)] {
        let cfg = TaskConfig::new(60_000, seed);
        let attack = AttackSpec::intercept_subsystems(EveBasis::Computational, path, &[2]);
        let r = run_task(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap().report;
        let p = 1.0 - oracle::check_pass_probability(&[2]);
        assert!(
            (r.pi_chi_fail_rate - p).abs() <= oracle::five_sigma_binomial(p, r.check_round_count),
            "{path:?}: {}",
            r.pi_chi_fail_rate
        );
    }
}

#[test]
fn depolarizing_noise_raises_the_fail_rate() {
    let cfg = TaskConfig::new(20_000, 12);
    let attack = AttackSpec {
        strategy: adversary::Strategy::Depolarize { p: 0.2 },
        location: Location::Return,
        targets: vec![0, 1, 2, 3],
        rate: 1.0,
    };
    let r = run_task(&cfg, Some(&attack), ExecutionMode::Parallel).unwrap().report;
    assert!(r.pi_chi_fail_rate > 0.3);
    // Noise after Bob's measurement shows up as disagreement with Alice, not in the key.
    assert!(r.alice_bob_mismatches > 0);
    assert_eq!(r.layer1_key_violations, 0);
}

#[test]
fn none_strategy_and_modes_are_bit_identical() {
    let cfg = TaskConfig::new(5_000, 13);
    let none = AttackSpec {
        targets: vec![],
        location: Location::Outbound,
        ..AttackSpec::none()
    };
    let a = simulate(&cfg, None, ExecutionMode::Sequential).unwrap();
    let b = simulate(&cfg, Some(&none), ExecutionMode::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn all_check_no_security_sample_when_alice_never_tests() {
    let cfg = TaskConfig {
        alice_computational_prob: 1.0,
        ..TaskConfig::new(100, 0)
    };
    assert!(matches!(
        run_task(&cfg, None, ExecutionMode::Sequential),
        Err(task::TaskError::NoSecuritySample)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn honest_round_invariants(seed in any::<u64>()) {
        let cfg = TaskConfig::new(200, seed);
        for r in simulate(&cfg, None, ExecutionMode::Sequential).unwrap() {
            for (a, o) in r.bob_actions.iter().zip(r.bob_outcomes) {
                prop_assert_eq!(*a == BobOp::Ctrl, o.is_some());
            }
            match r.round_class {
                RoundClass::KeyClass => {
                    let e = r.encoded.unwrap();
                    prop_assert_eq!(task::low_bit(e[0]) ^ task::low_bit(e[1]), e[2]);
                    prop_assert_eq!(e[2], e[3]);
                    for (o, e) in r.bob_outcomes.iter().zip(e) {
                        if let Some(o) = o { prop_assert_eq!(*o, e); }
                    }
                    if let Some(a) = r.alice_outcomes { prop_assert_eq!(a, e); }
                    prop_assert_ne!(r.pi_chi_pass, Some(false));
                }
                RoundClass::CheckClass => {
                    if r.bob_actions.iter().all(|&a| a == BobOp::Reflect) {
                        prop_assert_ne!(r.pi_chi_pass, Some(false));
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_product_preserves_norm(js in (0usize..4, 0usize..4, 0usize..2, 0usize..2)) {
        let f = [
            qudit::fourier_state(4, js.0).unwrap(),
            qudit::fourier_state(4, js.1).unwrap(),
            qudit::fourier_state(2, js.2).unwrap(),
            qudit::fourier_state(2, js.3).unwrap(),
        ];
        let joint = qudit::tensor_product(&f).unwrap();
        prop_assert_eq!(joint.dim(), 64);
        prop_assert!((joint.norm() - 1.0).abs() < 1e-12);
        // Associativity: (a b)(c d) == a b c d.
        let left = qudit::tensor_product(&f[..2]).unwrap();
        let right = qudit::tensor_product(&f[2..]).unwrap();
        let nested = qudit::tensor_product(&[left, right]).unwrap();
        prop_assert!(nested.approx_eq(&joint, 1e-15));
    }
}

//! Honest conferencing run with three Bobs: maximal violation and a shared key.

use semiquantum::conferencing::{run_conference, ConferenceConfig};
use semiquantum::ExecutionMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ConferenceConfig::new(3, 100_000, 7);
    let run = run_conference(&cfg, None, ExecutionMode::Parallel)?;
    let r = &run.report;

    println!("S = {} +/- {} (secure above {:.4})", r.s_estimate, r.s_stderr, r.chsh_threshold);
    println!("rounds: {} test, {} key, {} discarded", r.test_round_count, r.key_round_count, r.discard_count);
    println!(
        "key-round fraction {:.5} (expected {:.5})",
        r.key_round_fraction, r.expected_key_round_fraction
    );
    println!("key agreement across all parties: {}", r.key_agreement_fraction);
    let preview: String = r.alice_key.to_string().chars().take(48).collect();
    println!("first key bits: {preview}...");
    Ok(())
}

//! Two-layer task protocol: Bob1 and Bob2 jointly recover k and s1, Bob3 and Bob4 hold k.

use semiquantum::task::{self, run_task, TaskConfig};
use semiquantum::ExecutionMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One key-class preparation, spelled out.
    let (k, s1, b1) = (1, 0, 3);
    let prep = task::prepare_key_class(k, s1, b1)?;
    let e = prep.encoded.expect("key class");
    println!("k = {k}, s1 = {s1}, b1 = {b1} -> |{}>|{}>|{}>|{}>", e[0], e[1], e[2], e[3]);
    println!("layer-1 recovery from (b1, b2): (k, s1) = {:?}", task::layer1_bits(e[0], e[1]));

    let cfg = TaskConfig::new(100_000, 7);
    let r = run_task(&cfg, None, ExecutionMode::Parallel)?.report;
    println!("\n{} rounds:", r.total_rounds);
    println!(
        "  layer 1: {} rounds ({:.5}, expected {:.5}), {} key bits, {} violations",
        r.layer1_round_count,
        r.layer1_round_fraction,
        r.expected_layer1_round_fraction,
        r.layer1_key_bits.len(),
        r.layer1_key_violations
    );
    println!("  layer 2: {} rounds, {} error events", r.layer2_round_count, r.layer2_error_events);
    println!("  co-sifted: {} rounds, {} violations", r.cosifted_round_count, r.cosifted_violations);
    println!("  Pi_chi fail rate {} over {} check rounds", r.pi_chi_fail_rate, r.check_round_count);
    Ok(())
}

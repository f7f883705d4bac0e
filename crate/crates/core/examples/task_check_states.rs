//! Fourier check states and what a computational-basis eavesdropper does to them.

use semiquantum::adversary::{AttackSpec, EveBasis, Location};
use semiquantum::task::{self, run_task, TaskConfig};
use semiquantum::ExecutionMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prep = task::prepare_check_class([1, 2, 1, 0])?;
    for (i, f) in prep.state.factors().iter().enumerate() {
        let probs: Vec<_> = (0..f.dim()).map(|m| format!("{:.3}", f.probability(m))).collect();
        println!("subsystem {i}: computational-basis probabilities [{}]", probs.join(", "));
    }

    // Every computational outcome is equally likely, so a dephased factor of
    // dimension d passes the Pi_chi check with probability 1/d.
    let cases: [(&str, &[usize]); 4] = [
        ("all four subsystems", &[0, 1, 2, 3]),
        ("Bob1's ququart", &[0]),
        ("Bob3's qubit", &[2]),
        ("both qubits", &[2, 3]),
    ];
    println!();
    for (label, targets) in cases {
        let expected: f64 = targets.iter().map(|&t| 1.0 / task::SUBSYSTEM_DIMS[t] as f64).product();
        let attack = AttackSpec::intercept_subsystems(EveBasis::Computational, Location::Outbound, targets);
        let r = run_task(&TaskConfig::new(60_000, 3), Some(&attack), ExecutionMode::Parallel)?.report;
        println!(
            "Eve on {label:<20} fail rate {:.4} +/- {:.4} (expected {:.4}), detected: {}",
            r.pi_chi_fail_rate,
            r.pi_chi_stderr,
            1.0 - expected,
            r.eve_detected
        );
    }
    Ok(())
}

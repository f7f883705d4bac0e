//! Config-driven experiment: parse TOML, run, and write reports to a directory.
//!
//! `cargo run --example experiment_config -- [out-dir]`

use semiquantum::harness;
use semiquantum::ExecutionMode;

const CONFIG: &str = r#"
schema_version = 1

[conference]
n_bobs = 4
rounds = 20000
rng_seed = 2024
bob_measure_prob = 0.4

[attack]
strategy = "intercept-resend"
basis = "x2"
link = 4
rate = 0.25

[output]
per_round_log = true
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = harness::parse_config(CONFIG)?;
    let outcome = harness::run_experiment(&cfg, ExecutionMode::Parallel)?;
    print!("{}", outcome.report.summary_text());

    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("semiquantum-example"));
    harness::write_outputs(&outcome, &dir, cfg.output.per_round_log)?;
    println!("reports written to {}", dir.display());

    // Invalid documents name the offending key.
    let bad = CONFIG.replace("rate = 0.25", "rate = 2.5");
    if let Err(e) = harness::parse_config(&bad) {
        println!("rejected: {e}");
    }

    println!("\nbuilt-in presets:");
    for (name, _) in harness::PRESETS {
        println!("  {name}");
    }
    Ok(())
}

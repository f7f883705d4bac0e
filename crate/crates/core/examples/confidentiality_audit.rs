//! Neither layer learns the other's secret: plug-in mutual information on co-sifted rounds.

use semiquantum::analysis;
use semiquantum::task::{run_task, TaskConfig};
use semiquantum::ExecutionMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = run_task(&TaskConfig::new(100_000, 11), None, ExecutionMode::Parallel)?.report;
    let c = r.confidentiality.ok_or("no co-sifted rounds")?;
    println!("{} samples", c.samples);
    println!("MI(b3; s1) = {:.2e} bits  (what layer 2 learns about the layer-1 secret)", c.mi_b3_vs_s1);
    println!("MI(b1; k)  = {:.2e} bits  (what Bob1 alone learns about the key)", c.mi_b1_vs_k);

    // For contrast, a perfectly correlated pair carries a full bit.
    let xs: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
    println!("\nreference: MI(x; x) = {:.3} bits", analysis::mutual_information(&xs, &xs)?);
    Ok(())
}

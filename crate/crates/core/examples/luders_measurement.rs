//! Born probabilities and Lüders collapse on a degenerate observable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semiquantum::conferencing::initial_state;
use semiquantum::qudit::{self, StateVector};

fn show(s: &StateVector) -> String {
    let parts: Vec<_> = s.amplitudes().iter().map(|a| format!("{:+.3}{:+.3}i", a.re, a.im)).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> Result<(), qudit::QuditError> {
    let o = qudit::standard();
    let psi = initial_state();
    println!("psi = {}", show(psi));

    for (name, obs) in [("X1", &o.x1), ("Z1", &o.z1), ("Z2", &o.z2)] {
        println!("\n{name}: Born probabilities {:?}", qudit::born_probabilities(psi, obs)?);
        for branch in 0..obs.branches().len() {
            let s = qudit::collapse(psi, obs, branch)?;
            println!("  outcome {:+}: post-state {}", s.eigenvalue, show(&s.post_state));
        }
    }

    // Sampled frequencies converge on the Born values.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 50_000;
    let plus = (0..n)
        .filter(|_| qudit::measure_luders(psi, &o.x1, &mut rng).map(|s| s.eigenvalue > 0.0).unwrap_or(false))
        .count();
    println!("\nX1 = +1 in {plus}/{n} samples ({:.4})", plus as f64 / n as f64);

    // Measuring a commuting observable after a collapse leaves the first outcome intact.
    let after = qudit::collapse(psi, &o.z1, 0)?.post_state;
    println!("after Z1 = +1, <Z1> = {}, <Z2> = {}", qudit::expectation(&after, &o.z1)?, qudit::expectation(&after, &o.z2)?);
    Ok(())
}

//! The four ququart observables: spectra, commutation, and expectation values on ψ.

use semiquantum::conferencing::initial_state;
use semiquantum::qudit::{self, HermitianObservable};

fn main() -> Result<(), qudit::QuditError> {
    let o = qudit::standard();
    let named: [(&str, &HermitianObservable); 4] = [("X1", &o.x1), ("X2", &o.x2), ("Z1", &o.z1), ("Z2", &o.z2)];

    for (name, obs) in named {
        let ranks: Vec<_> = obs.branches().iter().map(|b| (b.eigenvalue, b.projector.rank())).collect();
        let check = qudit::check_spectral(obs.dim(), obs.branches());
        println!("{name}: (eigenvalue, rank) = {ranks:?}, spectral form valid: {}", check.all());
    }

    println!();
    for (i, (a, oa)) in named.iter().enumerate() {
        for (b, ob) in &named[i + 1..] {
            let rel = if qudit::commutes(oa, ob)? { "=" } else { "!=" };
            println!("[{a}, {b}] {rel} 0");
        }
    }

    let psi = initial_state();
    let x1x2 = o.x1.compose(&o.x2)?;
    let z1z2 = o.z1.compose(&o.z2)?;
    let s = qudit::expectation(psi, &x1x2)? + qudit::expectation(psi, &z1z2)?;
    println!("\n<X1X2> + <Z1Z2> on psi = {s}  (noncontextual bound {:.4})", 2f64.sqrt());
    Ok(())
}

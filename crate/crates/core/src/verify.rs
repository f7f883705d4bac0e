//! Embedded property suite run by `semiquantum verify`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conferencing::ConferenceConfig;
use crate::harness::{self, ExperimentConfig, Protocol};
use crate::qudit::{self, max_abs, Branch, StateVector, ALGEBRA_TOL, COLLAPSE_TOL};
use crate::rng::ExecutionMode;
use crate::task::{self, TaskConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyVerdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl PropertyVerdict {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for PropertyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}", self.name)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Dense matrix from `(row, col, value)` outer-product terms.
fn ketbras(terms: &[(usize, usize, f64)]) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
    for &(r, c, v) in terms {
        m[(r, c)] += Complex64::new(v, 0.0);
    }
    m
}

/// Reference matrices for X₁, X₂, Z₁, Z₂ written out term by term.
pub fn reference_matrices() -> [(&'static str, DMatrix<Complex64>); 4] {
    [
        ("X1", ketbras(&[(0, 2, 1.0), (2, 0, 1.0), (1, 3, 1.0), (3, 1, 1.0)])),
        ("X2", ketbras(&[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)])),
        ("Z1", ketbras(&[(0, 0, 1.0), (1, 1, 1.0), (2, 2, -1.0), (3, 3, -1.0)])),
        ("Z2", ketbras(&[(0, 0, 1.0), (1, 1, -1.0), (2, 2, 1.0), (3, 3, -1.0)])),
    ]
}

/// Spectral-form checks on a raw branch list, optionally against a reference matrix.
pub fn observable_properties(
    name: &str,
    dim: usize,
    branches: &[Branch],
    reference: Option<&DMatrix<Complex64>>,
) -> Vec<PropertyVerdict> {
    let check = qudit::check_spectral(dim, branches);
    let mut out = vec![
        PropertyVerdict::new(format!("{name}: projectors idempotent and hermitian"), check.idempotent_hermitian, ""),
        PropertyVerdict::new(format!("{name}: eigenvalues distinct"), check.distinct_eigenvalues, ""),
        PropertyVerdict::new(format!("{name}: projectors mutually orthogonal"), check.orthogonal, ""),
        PropertyVerdict::new(format!("{name}: completeness"), check.complete, ""),
    ];
    if let Some(reference) = reference {
        let dense = branches.iter().fold(
            DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0)),
            |acc, b| acc + b.projector.matrix() * Complex64::new(b.eigenvalue, 0.0),
        );
        let err = if dense.shape() == reference.shape() {
            max_abs(&(dense - reference))
        } else {
            f64::INFINITY
        };
        out.push(PropertyVerdict::new(
            format!("{name}: matrix matches definition"),
            err <= ALGEBRA_TOL,
            format!("max deviation {err:.1e}"),
        ));
    }
    out
}

fn commutation_table() -> Vec<PropertyVerdict> {
    let o = qudit::standard();
    let table = [
        ("X1", &o.x1, "X2", &o.x2, true),
        ("Z1", &o.z1, "Z2", &o.z2, true),
        ("X1", &o.x1, "Z2", &o.z2, true),
        ("X2", &o.x2, "Z1", &o.z1, true),
        ("X1", &o.x1, "Z1", &o.z1, false),
        ("X2", &o.x2, "Z2", &o.z2, false),
    ];
    table
        .iter()
        .map(|&(an, a, bn, b, expect)| {
            let got = qudit::commutes(a, b).unwrap_or(!expect);
            let rel = if expect { "=" } else { "!=" };
            PropertyVerdict::new(format!("[{an},{bn}] {rel} 0"), got == expect, "")
        })
        .collect()
}

fn psi() -> &'static StateVector {
    crate::conferencing::initial_state()
}

fn born_and_luders_oracles() -> Vec<PropertyVerdict> {
    let o = qudit::standard();
    let mut out = Vec::new();
    for (name, obs) in [("X1", &o.x1), ("Z1", &o.z1), ("Z2", &o.z2)] {
        let probs = qudit::born_probabilities(psi(), obs).unwrap_or_default();
        let ok = probs.len() == 2 && probs.iter().all(|&(_, p)| (p - 0.5).abs() <= ALGEBRA_TOL);
        out.push(PropertyVerdict::new(format!("Born: psi under {name} is 1/2, 1/2"), ok, ""));

        let consistent = qudit::expectation(psi(), obs)
            .map(|e| (e - probs.iter().map(|(v, p)| v * p).sum::<f64>()).abs() <= ALGEBRA_TOL)
            .unwrap_or(false);
        out.push(PropertyVerdict::new(format!("expectation = sum eig*prob for {name}"), consistent, ""));

        // Frequencies over 1e5 Lüders samples within 5 binomial standard errors.
        let n = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut plus = 0usize;
        let mut collapse_ok = true;
        for _ in 0..n {
            match qudit::measure_luders(psi(), obs, &mut rng) {
                Ok(s) => {
                    plus += usize::from(s.eigenvalue > 0.0);
                    let proj = &obs.branches()[s.branch_index].projector;
                    let back = proj.apply(s.post_state.amplitudes()).unwrap_or_default();
                    let inside = back
                        .iter()
                        .zip(s.post_state.amplitudes())
                        .all(|(a, b)| (a - b).norm() <= COLLAPSE_TOL);
                    collapse_ok &= inside && (s.post_state.norm() - 1.0).abs() <= ALGEBRA_TOL;
                }
                Err(_) => collapse_ok = false,
            }
        }
        let freq = plus as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        out.push(PropertyVerdict::new(
            format!("Lüders frequencies match Born for {name}"),
            (freq - 0.5).abs() <= 5.0 * se,
            format!("f(+1) = {freq:.4}, 5 se = {:.4}", 5.0 * se),
        ));
        out.push(PropertyVerdict::new(
            format!("Lüders post-states normalized and in range for {name}"),
            collapse_ok,
            "",
        ));
    }
    let uniform = StateVector::from_real(&[1.0; 4]).expect("nonzero");
    let ok = qudit::collapse(psi(), &o.x1, 0)
        .map(|s| s.post_state.approx_eq(&uniform, ALGEBRA_TOL))
        .unwrap_or(false);
    out.push(PropertyVerdict::new("Lüders: psi under X1 (+1) collapses to uniform", ok, ""));
    out
}

fn xor_rule_invariants() -> Vec<PropertyVerdict> {
    let cfg = TaskConfig {
        check_state_prob: 0.0,
        ..TaskConfig::new(1, 0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = true;
    for _ in 0..10_000 {
        match task::prepare_chi(&cfg, &mut rng) {
            Ok(p) => {
                let e = p.encoded.unwrap_or([0, 0, 1, 0]);
                ok &= task::low_bit(e[0]) ^ task::low_bit(e[1]) == e[2] && e[2] == e[3];
            }
            Err(_) => ok = false,
        }
    }
    let example = task::encode_key_symbols(1, 0, 3) == [3, 2, 1, 1] && task::layer1_bits(3, 2) == (1, 0);
    vec![
        PropertyVerdict::new("key-class preparations satisfy b1(0) xor b2(0) = b3 = b4", ok, "10000 samples"),
        PropertyVerdict::new("k = 1, s1 = 0, b1 = 3 encodes b2 = 2", example, ""),
    ]
}

fn reflect_identity() -> PropertyVerdict {
    let cfg = TaskConfig {
        check_state_prob: 1.0,
        bob_ctrl_prob: 0.0,
        alice_computational_prob: 0.0,
        ..TaskConfig::new(2_000, 3)
    };
    let ok = task::simulate(&cfg, None, ExecutionMode::Sequential)
        .map(|rs| rs.iter().all(|r| r.pi_chi_pass == Some(true)))
        .unwrap_or(false);
    PropertyVerdict::new("all-Reflect rounds pass Pi_chi", ok, "2000 rounds")
}

fn seed_replay() -> Vec<PropertyVerdict> {
    let configs = [
        ExperimentConfig {
            protocol: Protocol::Conference(ConferenceConfig::new(3, 5_000, 11)),
            attack: None,
            output: Default::default(),
        },
        ExperimentConfig {
            protocol: Protocol::Task(TaskConfig::new(5_000, 11)),
            attack: None,
            output: Default::default(),
        },
    ];
    configs
        .iter()
        .map(|cfg| {
            let render = |mode| {
                harness::run_experiment(cfg, mode)
                    .ok()
                    .and_then(|o| o.report.to_json().ok())
            };
            let a = render(ExecutionMode::Sequential);
            let b = render(ExecutionMode::Sequential);
            let c = render(ExecutionMode::Parallel);
            PropertyVerdict::new(
                format!("{} seed replay gives identical report bytes", cfg.protocol.name()),
                a.is_some() && a == b && b == c,
                "sequential x2, parallel x1",
            )
        })
        .collect()
}

/// Every embedded property, in a stable order.
pub fn run_self_test() -> Vec<PropertyVerdict> {
    let std = qudit::standard();
    let obs = [&std.x1, &std.x2, &std.z1, &std.z2];
    let mut out = Vec::new();
    for ((name, reference), o) in reference_matrices().iter().zip(obs) {
        out.extend(observable_properties(name, 4, o.branches(), Some(reference)));
    }
    out.extend(commutation_table());
    out.extend(born_and_luders_oracles());
    out.extend(xor_rule_invariants());
    out.push(reflect_identity());
    out.extend(seed_replay());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes_everything() {
        let verdicts = run_self_test();
        let failed: Vec<_> = verdicts.iter().filter(|v| !v.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(verdicts.len() > 20);
    }

    #[test]
    fn corrupted_observable_fails_completeness() {
        let o = qudit::standard();
        // X1 with its -1 branch dropped.
        let corrupted = vec![o.x1.branches()[0].clone()];
        let verdicts = observable_properties("X1-corrupt", 4, &corrupted, Some(&reference_matrices()[0].1));
        let completeness = verdicts.iter().find(|v| v.name.ends_with("completeness")).unwrap();
        assert!(!completeness.passed);
        assert!(verdicts.iter().any(|v| v.name.ends_with("matches definition") && !v.passed));
    }
}

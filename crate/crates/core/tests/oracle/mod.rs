//! Independent reference computations for the integration tests.
//!
//! Everything here works on dense density matrices built directly from the
//! ket-bra definitions with nalgebra; nothing calls into the crate's
//! spectral-form engine. Non-selective measurements are dephasing maps
//! `rho -> sum_k P_k rho P_k`, so expected correlators and pass
//! probabilities come out as exact traces instead of sampled frequencies.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type Mat = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn ketbras(dim: usize, terms: &[(usize, usize, f64)]) -> Mat {
    let mut m = Mat::from_element(dim, dim, c(0.0));
    for &(r, col, v) in terms {
        m[(r, col)] += c(v);
    }
    m
}

pub struct Definitions {
    pub x1: Mat,
    pub x2: Mat,
    pub z1: Mat,
    pub z2: Mat,
}

pub fn definitions() -> Definitions {
    Definitions {
        x1: ketbras(4, &[(0, 2, 1.0), (2, 0, 1.0), (1, 3, 1.0), (3, 1, 1.0)]),
        x2: ketbras(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]),
        z1: ketbras(4, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, -1.0), (3, 3, -1.0)]),
        z2: ketbras(4, &[(0, 0, 1.0), (1, 1, -1.0), (2, 2, 1.0), (3, 3, -1.0)]),
    }
}

/// `(eigenvalue, projector)` pairs of a dichotomic observable: `(I +/- A) / 2`.
pub fn dichotomic_projectors(a: &Mat) -> [(f64, Mat); 2] {
    let id = Mat::identity(a.nrows(), a.ncols());
    [(1.0, (&id + a) * c(0.5)), (-1.0, (&id - a) * c(0.5))]
}

pub fn computational_projectors(dim: usize) -> Vec<(f64, Mat)> {
    (0..dim)
        .map(|m| (m as f64, ketbras(dim, &[(m, m, 1.0)])))
        .collect()
}

pub fn density(v: &[Complex64]) -> Mat {
    let v = DVector::from_column_slice(v);
    &v * v.adjoint()
}

pub fn psi() -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    density(&[c(h), c(0.0), c(0.0), c(h)])
}

pub fn trace_re(m: &Mat) -> f64 {
    m.trace().re
}

pub fn dephase(rho: &Mat, projectors: &[(f64, Mat)]) -> Mat {
    projectors
        .iter()
        .fold(Mat::from_element(rho.nrows(), rho.ncols(), c(0.0)), |acc, (_, p)| {
            acc + p * rho * p
        })
}

/// `E[a * b]` where Alice measures `first` on `rho`, the post-state passes
/// through `channel`, then she measures `second`.
pub fn sequential_correlator(rho: &Mat, first: &Mat, second: &Mat, channel: impl Fn(&Mat) -> Mat) -> f64 {
    let mut total = 0.0;
    for (a, pa) in dichotomic_projectors(first) {
        let after = channel(&(&pa * rho * &pa));
        for (b, pb) in dichotomic_projectors(second) {
            total += a * b * trace_re(&(&pb * &after));
        }
    }
    total
}

/// Expected CHSH statistic on test rounds when a fraction `rate` of rounds
/// is intercepted in the dichotomic observable `eve` (None for no attack).
pub fn conference_s(eve: Option<&Mat>, rate: f64) -> f64 {
    let o = definitions();
    let channel = |rho: &Mat| match eve {
        Some(e) => dephase(rho, &dichotomic_projectors(e)) * c(rate) + rho * c(1.0 - rate),
        None => rho.clone(),
    };
    sequential_correlator(&psi(), &o.x1, &o.x2, channel) + sequential_correlator(&psi(), &o.z1, &o.z2, channel)
}

/// Born probabilities of the `+1` and `-1` outcomes.
pub fn born_pm(rho: &Mat, a: &Mat) -> (f64, f64) {
    let [(_, p), (_, m)] = dichotomic_projectors(a);
    (trace_re(&(&p * rho)), trace_re(&(&m * rho)))
}

pub fn fourier(dim: usize, j: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|m| Complex64::from_polar(1.0 / (dim as f64).sqrt(), 2.0 * std::f64::consts::PI * (j * m) as f64 / dim as f64))
        .collect()
}

/// Probability that a check-class round passes `Pi_chi` when the subsystems in
/// `targets` are dephased in the computational basis, averaged over uniformly
/// drawn Fourier indices.
pub fn check_pass_probability(targets: &[usize]) -> f64 {
    let dims = [4usize, 4, 2, 2];
    let mut total = 0.0;
    let mut count = 0.0;
    for j0 in 0..4 {
        for j1 in 0..4 {
            for j2 in 0..2 {
                for j3 in 0..2 {
                    let js = [j0, j1, j2, j3];
                    let mut pass = 1.0;
                    for (i, (&d, &j)) in dims.iter().zip(&js).enumerate() {
                        let f = fourier(d, j);
                        let rho = density(&f);
                        let sent = if targets.contains(&i) {
                            dephase(&rho, &computational_projectors(d))
                        } else {
                            rho.clone()
                        };
                        // <f| sent |f>
                        pass *= trace_re(&(&rho * &sent));
                    }
                    total += pass;
                    count += 1.0;
                }
            }
        }
    }
    total / count
}

/// Bound within which an empirical mean must sit: `5 * se` of a Bernoulli(p) over `n`.
pub fn five_sigma_binomial(p: f64, n: usize) -> f64 {
    5.0 * (p * (1.0 - p) / n as f64).sqrt()
}

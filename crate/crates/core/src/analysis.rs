//! Estimators shared by both protocols.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Mean and `s / sqrt(n)` with the unbiased sample deviation; stderr is 0 for `n = 1`.
pub fn mean_with_stderr(samples: &[f64]) -> Result<Estimate, AnalysisError> {
    let n = samples.len();
    if n == 0 {
        return Err(AnalysisError::Empty);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let stderr = if n == 1 {
        0.0
    } else {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Ok(Estimate { mean, stderr, n })
}

/// Fraction of positions where the two bit strings differ.
pub fn qber(a: &[bool], b: &[bool]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let errors = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(errors as f64 / a.len() as f64)
}

/// Plug-in Shannon entropy in bits.
pub fn entropy<T: Eq + Hash>(xs: &[T]) -> Result<f64, AnalysisError> {
    if xs.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for x in xs {
        *counts.entry(x).or_default() += 1;
    }
    let n = xs.len() as f64;
    let mut c: Vec<usize> = counts.into_values().collect();
    // Summation order fixed so results do not depend on hash iteration order.
    c.sort_unstable();
    Ok(c.iter()
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

/// Plug-in (maximum-likelihood) mutual information in bits.
///
/// Positively biased by roughly `(|X|-1)(|Y|-1) / (2 n ln 2)` for independent
/// inputs, which is negligible at the sample sizes used here.
pub fn mutual_information<X, Y>(xs: &[X], ys: &[Y]) -> Result<f64, AnalysisError>
where
    X: Eq + Hash,
    Y: Eq + Hash,
{
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let joint: Vec<(&X, &Y)> = xs.iter().zip(ys).collect();
    let hx = entropy(xs)?;
    let hy = entropy(ys)?;
    let hxy = entropy(&joint)?;
    let mi = (hx + hy - hxy).max(0.0);
    // Clamp the float residue so the estimate never exceeds min(H(X), H(Y)).
    Ok(mi.min(hx.min(hy)))
}

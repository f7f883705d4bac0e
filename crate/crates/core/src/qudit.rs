//! Exact finite-dimensional pure-state engine.
//!
//! States are dense complex amplitude vectors. Observables are kept in
//! spectral form: a list of distinct real eigenvalues, each paired with the
//! orthogonal projector onto its eigenspace. A projector stores an
//! orthonormal basis of its range, so applying it costs `rank * dim` and the
//! dense matrix is only materialized on request.
//!
//! Measurement follows the Lüders rule: the selected eigenprojector is
//! applied to the state and the result renormalized. For degenerate
//! observables this keeps the coherence inside the eigenspace, which is what
//! lets a chain of compatible measurements reproduce the same outcome.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Tolerance for algebraic identities (idempotence, completeness, commutators).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for membership of a collapsed state in its projector's range.
pub const COLLAPSE_TOL: f64 = 1e-10;

// Columns whose residual norm falls below this are treated as linearly
// dependent when extracting a range basis.
const RANK_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuditError {
    #[error("degenerate state: vector has zero norm")]
    DegenerateState,
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tensor product of an empty list")]
    EmptyProduct,
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid projector: {0}")]
    InvalidProjector(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("branch {0} has zero probability for this state")]
    ImpossibleBranch(usize),
}

pub type Result<T> = std::result::Result<T, QuditError>;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(QuditError::DimensionMismatch { expected, found })
    }
}

/// `<a|b>`, conjugate-linear in the first argument.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// A normalized pure state of a `dim`-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Normalizes `amplitudes` into a state. See [`normalize`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(QuditError::DimensionTooSmall(amplitudes.len()));
        }
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuditError::DegenerateState);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Convenience constructor from real amplitudes.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Computational basis ket `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim < 2 {
            return Err(QuditError::DimensionTooSmall(dim));
        }
        if index >= dim {
            return Err(QuditError::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amplitudes).sqrt()
    }

    /// Probability of finding computational basis state `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes.get(index).map_or(0.0, |a| a.norm_sqr())
    }

    /// Amplitude-wise comparison, no global phase freedom.
    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// Scales a nonzero vector to unit norm.
pub fn normalize(v: &[Complex64]) -> Result<StateVector> {
    StateVector::new(v.to_vec())
}

/// Kronecker product with the first factor as the most significant index.
pub fn tensor_product(states: &[StateVector]) -> Result<StateVector> {
    let (first, rest) = states.split_first().ok_or(QuditError::EmptyProduct)?;
    let mut amplitudes = first.amplitudes.clone();
    for factor in rest {
        amplitudes = amplitudes
            .iter()
            .flat_map(|a| factor.amplitudes.iter().map(move |b| a * b))
            .collect();
    }
    Ok(StateVector { amplitudes })
}

/// `amplitudes[m] = exp(2 pi i j m / d) / sqrt(d)`.
pub fn fourier_state(dim: usize, j: usize) -> Result<StateVector> {
    if dim < 2 {
        return Err(QuditError::DimensionTooSmall(dim));
    }
    if j >= dim {
        return Err(QuditError::IndexOutOfRange { index: j, dim });
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let amplitudes = (0..dim)
        .map(|m| {
            // Reduce the phase index first so the common cases land on exact values.
            let k = (j * m) % dim;
            Complex64::from_polar(scale, std::f64::consts::TAU * k as f64 / dim as f64)
        })
        .collect();
    Ok(StateVector { amplitudes })
}

/// Orthogonal projector, stored as an orthonormal basis of its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    dim: usize,
    range: Vec<Vec<Complex64>>,
}

impl Projector {
    /// Projector onto the span of `vectors` (Gram-Schmidt, dependent vectors dropped).
    pub fn onto_span(dim: usize, vectors: &[Vec<Complex64>]) -> Result<Self> {
        let mut range: Vec<Vec<Complex64>> = Vec::new();
        for v in vectors {
            check_dim(dim, v.len())?;
            let mut w = v.clone();
            for u in &range {
                let c = inner(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
            let n = norm_sqr(&w).sqrt();
            if n > RANK_TOL {
                range.push(w.into_iter().map(|x| x / n).collect());
            }
        }
        if range.is_empty() {
            return Err(QuditError::InvalidProjector("empty range".into()));
        }
        Ok(Self { dim, range })
    }

    /// `|s><s|`.
    pub fn rank_one(state: &StateVector) -> Self {
        Self {
            dim: state.dim(),
            range: vec![state.amplitudes.clone()],
        }
    }

    /// Recovers a projector from its dense matrix after checking `P = P†` and `P² = P`.
    pub fn from_matrix(matrix: &DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QuditError::InvalidProjector("matrix is not square".into()));
        }
        let dim = matrix.nrows();
        if max_abs(&(matrix - matrix.adjoint())) > ALGEBRA_TOL {
            return Err(QuditError::InvalidProjector("not hermitian".into()));
        }
        if max_abs(&(matrix * matrix - matrix)) > ALGEBRA_TOL {
            return Err(QuditError::InvalidProjector("not idempotent".into()));
        }
        let columns: Vec<Vec<Complex64>> = matrix
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        Self::onto_span(dim, &columns)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.range.len()
    }

    /// Orthonormal basis of the range.
    pub fn range_basis(&self) -> &[Vec<Complex64>] {
        &self.range
    }

    /// Dense `dim x dim` view.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for u in &self.range {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    m[(r, c)] += u[r] * u[c].conj();
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim, v.len())?;
        let mut out = vec![ZERO; self.dim];
        for u in &self.range {
            let c = inner(u, v);
            for (o, ui) in out.iter_mut().zip(u) {
                *o += c * ui;
            }
        }
        Ok(out)
    }

    /// `<s|P|s>`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        check_dim(self.dim, state.dim())?;
        Ok(self
            .range
            .iter()
            .map(|u| inner(u, &state.amplitudes).norm_sqr())
            .sum())
    }
}

/// `|s><s|` for a normalized state.
pub fn projector_from_state(state: &StateVector) -> Projector {
    Projector::rank_one(state)
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// One eigenvalue together with its eigenprojector.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub eigenvalue: f64,
    pub projector: Projector,
}

impl Branch {
    pub fn new(eigenvalue: f64, projector: Projector) -> Self {
        Self {
            eigenvalue,
            projector,
        }
    }
}

/// Which of the spectral-form invariants a branch list satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralCheck {
    pub dimensions_agree: bool,
    pub distinct_eigenvalues: bool,
    pub orthogonal: bool,
    pub complete: bool,
    pub idempotent_hermitian: bool,
}

impl SpectralCheck {
    pub fn all(&self) -> bool {
        self.dimensions_agree
            && self.distinct_eigenvalues
            && self.orthogonal
            && self.complete
            && self.idempotent_hermitian
    }
}

/// Checks a raw branch list against the spectral-form invariants using dense
/// matrices, so it also catches hand-built (possibly corrupted) lists.
pub fn check_spectral(dim: usize, branches: &[Branch]) -> SpectralCheck {
    let dimensions_agree = branches.iter().all(|b| b.projector.dim() == dim);
    if !dimensions_agree {
        return SpectralCheck {
            dimensions_agree,
            distinct_eigenvalues: false,
            orthogonal: false,
            complete: false,
            idempotent_hermitian: false,
        };
    }
    let distinct_eigenvalues = branches.iter().enumerate().all(|(i, a)| {
        branches[i + 1..]
            .iter()
            .all(|b| (a.eigenvalue - b.eigenvalue).abs() > ALGEBRA_TOL)
    });
    let mats: Vec<DMatrix<Complex64>> = branches.iter().map(|b| b.projector.matrix()).collect();
    let idempotent_hermitian = mats
        .iter()
        .all(|p| max_abs(&(p * p - p)) <= ALGEBRA_TOL && max_abs(&(p - p.adjoint())) <= ALGEBRA_TOL);
    let mut orthogonal = true;
    for i in 0..mats.len() {
        for j in 0..mats.len() {
            if i != j && max_abs(&(&mats[i] * &mats[j])) > ALGEBRA_TOL {
                orthogonal = false;
            }
        }
    }
    let sum = mats
        .iter()
        .fold(DMatrix::from_element(dim, dim, ZERO), |acc, p| acc + p);
    let complete = max_abs(&(sum - DMatrix::identity(dim, dim))) <= ALGEBRA_TOL;
    SpectralCheck {
        dimensions_agree,
        distinct_eigenvalues,
        orthogonal,
        complete,
        idempotent_hermitian,
    }
}

/// Hermitian observable in spectral form.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    dim: usize,
    branches: Vec<Branch>,
}

impl HermitianObservable {
    /// Validates the branch list: distinct eigenvalues, mutually orthogonal
    /// projectors, and completeness.
    pub fn new(dim: usize, branches: Vec<Branch>) -> Result<Self> {
        if dim < 2 {
            return Err(QuditError::DimensionTooSmall(dim));
        }
        let check = check_spectral(dim, &branches);
        if !check.all() {
            return Err(QuditError::InvalidObservable(format!("{check:?}")));
        }
        Ok(Self { dim, branches })
    }

    /// Measurement in the computational basis; eigenvalue of `|m>` is `m`.
    pub fn computational(dim: usize) -> Result<Self> {
        let branches = (0..dim)
            .map(|m| {
                let ket = StateVector::basis(dim, m)?;
                Ok(Branch::new(m as f64, Projector::rank_one(&ket)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, branches)
    }

    /// Builds an observable from a Hermitian matrix whose eigenvalues are
    /// known, by projecting onto each eigenspace with `prod_{mu != lambda} (A - mu)/(lambda - mu)`.
    pub fn from_matrix(matrix: &DMatrix<Complex64>, eigenvalues: &[f64]) -> Result<Self> {
        let dim = matrix.nrows();
        let id = DMatrix::<Complex64>::identity(dim, dim);
        let mut branches = Vec::with_capacity(eigenvalues.len());
        for (i, &lambda) in eigenvalues.iter().enumerate() {
            let mut p = id.clone();
            for (j, &mu) in eigenvalues.iter().enumerate() {
                if i != j {
                    p = p * (matrix - &id * Complex64::new(mu, 0.0)) / Complex64::new(lambda - mu, 0.0);
                }
            }
            branches.push(Branch::new(lambda, Projector::from_matrix(&p)?));
        }
        Self::new(dim, branches)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.branches.iter().map(|b| b.eigenvalue)
    }

    /// Dense `sum_i lambda_i P_i`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.branches.iter().fold(
            DMatrix::from_element(self.dim, self.dim, ZERO),
            |acc, b| acc + b.projector.matrix() * Complex64::new(b.eigenvalue, 0.0),
        )
    }

    /// `A|v>` without forming the matrix.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim, v.len())?;
        let mut out = vec![ZERO; self.dim];
        for b in &self.branches {
            for (o, p) in out.iter_mut().zip(b.projector.apply(v)?) {
                *o += p * b.eigenvalue;
            }
        }
        Ok(out)
    }

    /// Product of two commuting observables, in spectral form. Eigenspaces of
    /// the product are sums of the pairwise intersections `P_i Q_j`.
    pub fn compose(&self, other: &HermitianObservable) -> Result<Self> {
        if !commutes(self, other)? {
            return Err(QuditError::InvalidObservable(
                "product of non-commuting observables is not Hermitian".into(),
            ));
        }
        let mut merged: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
        for a in &self.branches {
            let pa = a.projector.matrix();
            for b in &other.branches {
                let joint = &pa * b.projector.matrix();
                if max_abs(&joint) <= ALGEBRA_TOL {
                    continue;
                }
                let value = a.eigenvalue * b.eigenvalue;
                match merged
                    .iter_mut()
                    .find(|(v, _)| (v - value).abs() <= ALGEBRA_TOL)
                {
                    Some((_, m)) => *m += joint,
                    None => merged.push((value, joint)),
                }
            }
        }
        let branches = merged
            .into_iter()
            .map(|(v, m)| Ok(Branch::new(v, Projector::from_matrix(&m)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, branches)
    }
}

/// Result of one projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSample {
    pub eigenvalue: f64,
    pub post_state: StateVector,
    pub branch_index: usize,
    pub probability: f64,
}

/// `(eigenvalue, <s|P_i|s>)` for each branch, in branch order.
pub fn born_probabilities(
    state: &StateVector,
    obs: &HermitianObservable,
) -> Result<Vec<(f64, f64)>> {
    check_dim(obs.dim, state.dim())?;
    obs.branches
        .iter()
        .map(|b| Ok((b.eigenvalue, b.projector.expectation(state)?)))
        .collect()
}

/// `sum_i lambda_i <s|P_i|s>`.
pub fn expectation(state: &StateVector, obs: &HermitianObservable) -> Result<f64> {
    Ok(born_probabilities(state, obs)?
        .into_iter()
        .map(|(e, p)| e * p)
        .sum())
}

/// Deterministic Lüders collapse onto `branch_index`.
pub fn collapse(
    state: &StateVector,
    obs: &HermitianObservable,
    branch_index: usize,
) -> Result<OutcomeSample> {
    check_dim(obs.dim, state.dim())?;
    let branch = obs.branches.get(branch_index).ok_or(QuditError::IndexOutOfRange {
        index: branch_index,
        dim: obs.branches.len(),
    })?;
    let projected = branch.projector.apply(&state.amplitudes)?;
    let weight = norm_sqr(&projected);
    if weight <= f64::EPSILON * f64::EPSILON {
        return Err(QuditError::ImpossibleBranch(branch_index));
    }
    let norm = weight.sqrt();
    Ok(OutcomeSample {
        eigenvalue: branch.eigenvalue,
        post_state: StateVector {
            amplitudes: projected.into_iter().map(|a| a / norm).collect(),
        },
        branch_index,
        probability: weight,
    })
}

/// Samples a branch with Born probabilities and collapses by the Lüders rule.
pub fn measure_luders<R: Rng + ?Sized>(
    state: &StateVector,
    obs: &HermitianObservable,
    rng: &mut R,
) -> Result<OutcomeSample> {
    let probs = born_probabilities(state, obs)?;
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (i, &(_, p)) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        chosen = Some(i);
        if u < cumulative {
            break;
        }
    }
    // Falls through to the last populated branch when rounding leaves the sum just under u.
    let index = chosen.ok_or(QuditError::DegenerateState)?;
    collapse(state, obs, index)
}

/// `[A, B] = 0` within [`ALGEBRA_TOL`], using the dense reconstructions.
pub fn commutes(a: &HermitianObservable, b: &HermitianObservable) -> Result<bool> {
    check_dim(a.dim, b.dim)?;
    let (ma, mb) = (a.matrix(), b.matrix());
    Ok(max_abs(&(&ma * &mb - &mb * &ma)) <= ALGEBRA_TOL)
}

/// The four dichotomic ququart observables used by the conferencing protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardObservables {
    /// `|0><2| + |2><0| + |1><3| + |3><1|`
    pub x1: HermitianObservable,
    /// `|0><1| + |1><0| + |2><3| + |3><2|`
    pub x2: HermitianObservable,
    /// `diag(1, 1, -1, -1)`
    pub z1: HermitianObservable,
    /// `diag(1, -1, 1, -1)`
    pub z2: HermitianObservable,
}

fn dichotomic(plus: [[f64; 4]; 2], minus: [[f64; 4]; 2]) -> HermitianObservable {
    let span = |vs: [[f64; 4]; 2]| {
        let vectors: Vec<Vec<Complex64>> = vs
            .iter()
            .map(|v| v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Projector::onto_span(4, &vectors).expect("eigenvectors are independent")
    };
    HermitianObservable::new(
        4,
        vec![Branch::new(1.0, span(plus)), Branch::new(-1.0, span(minus))],
    )
    .expect("standard observable is well formed")
}

/// Builds X₁, X₂, Z₁, Z₂ from their eigenspaces.
pub fn standard_observables() -> StandardObservables {
    StandardObservables {
        x1: dichotomic(
            [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]],
            [[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]],
        ),
        x2: dichotomic(
            [[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]],
            [[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]],
        ),
        z1: dichotomic(
            [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]],
            [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        ),
        z2: dichotomic(
            [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
            [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        ),
    }
}

/// Process-wide cached copy of [`standard_observables`].
pub fn standard() -> &'static StandardObservables {
    static CACHE: OnceLock<StandardObservables> = OnceLock::new();
    CACHE.get_or_init(standard_observables)
}

/// Cached computational-basis observable for the dimensions the protocols use.
pub fn computational(dim: usize) -> Result<&'static HermitianObservable> {
    static QUBIT: OnceLock<HermitianObservable> = OnceLock::new();
    static QUQUART: OnceLock<HermitianObservable> = OnceLock::new();
    match dim {
        2 => Ok(QUBIT.get_or_init(|| HermitianObservable::computational(2).unwrap())),
        4 => Ok(QUQUART.get_or_init(|| HermitianObservable::computational(4).unwrap())),
        _ => Err(QuditError::DimensionMismatch {
            expected: 4,
            found: dim,
        }),
    }
}

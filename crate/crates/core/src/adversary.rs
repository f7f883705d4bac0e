//! Channel transformations: intercept-resend eavesdropping and depolarizing noise.
//!
//! An [`AttackSpec`] names a strategy and where it acts. In the conferencing
//! protocol the location is a link index `0..=N` (link 0 is Alice to Bob₁,
//! link `i` is Bob_i to Bob_{i+1}, link N is Bob_N back to Alice). In the
//! task protocol the attack acts on a subset of subsystems on either the
//! outbound or the return path.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qudit::{self, HermitianObservable, QuditError, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("link {link} does not exist (valid: 0..={max})")]
    InvalidLink { link: usize, max: usize },
    #[error("subsystem {target} does not exist (valid: 0..{count})")]
    InvalidTarget { target: usize, count: usize },
    #[error("attack location {0:?} does not apply to this protocol")]
    WrongLocation(Location),
    #[error("no target subsystems given")]
    NoTargets,
    #[error(transparent)]
    Qudit(#[from] QuditError),
}

/// Observable Eve measures during intercept-resend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveBasis {
    X1,
    X2,
    Z1,
    Z2,
    Computational,
}

impl EveBasis {
    pub fn observable(self, dim: usize) -> Result<&'static HermitianObservable, QuditError> {
        let std = qudit::standard();
        let obs = match self {
            EveBasis::X1 => &std.x1,
            EveBasis::X2 => &std.x2,
            EveBasis::Z1 => &std.z1,
            EveBasis::Z2 => &std.z2,
            EveBasis::Computational => return qudit::computational(dim),
        };
        if obs.dim() != dim {
            return Err(QuditError::DimensionMismatch {
                expected: obs.dim(),
                found: dim,
            });
        }
        Ok(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    None,
    InterceptResend { basis: EveBasis },
    Depolarize { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Location {
    /// Conferencing link index.
    Link(usize),
    /// Task protocol, Alice to the Bobs.
    Outbound,
    /// Task protocol, the Bobs back to Alice.
    Return,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackSpec {
    pub strategy: Strategy,
    pub location: Location,
    /// Subsystem indices (task protocol only).
    pub targets: Vec<usize>,
    /// Probability that a given round is attacked.
    pub rate: f64,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self {
            strategy: Strategy::None,
            location: Location::Link(0),
            targets: Vec::new(),
            rate: 1.0,
        }
    }

    /// Intercept-resend on one conferencing link, every round.
    pub fn intercept_link(basis: EveBasis, link: usize) -> Self {
        Self {
            strategy: Strategy::InterceptResend { basis },
            location: Location::Link(link),
            targets: Vec::new(),
            rate: 1.0,
        }
    }

    /// Intercept-resend on task-protocol subsystems, every round.
    pub fn intercept_subsystems(basis: EveBasis, location: Location, targets: &[usize]) -> Self {
        Self {
            strategy: Strategy::InterceptResend { basis },
            location,
            targets: targets.to_vec(),
            rate: 1.0,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    fn validate_common(&self) -> Result<(), AdversaryError> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(AdversaryError::InvalidProbability(self.rate));
        }
        if let Strategy::Depolarize { p } = self.strategy {
            if !(0.0..=1.0).contains(&p) {
                return Err(AdversaryError::InvalidProbability(p));
            }
        }
        Ok(())
    }

    /// Checks the attack against an `n_bobs` conferencing ring (links `0..=n_bobs`).
    pub fn validate_conference(&self, n_bobs: usize) -> Result<(), AdversaryError> {
        self.validate_common()?;
        match self.location {
            Location::Link(link) if link <= n_bobs => {}
            Location::Link(link) => return Err(AdversaryError::InvalidLink { link, max: n_bobs }),
            other => return Err(AdversaryError::WrongLocation(other)),
        }
        if let Strategy::InterceptResend { basis } = self.strategy {
            basis.observable(4)?;
        }
        Ok(())
    }

    /// Checks the attack against task-protocol subsystems of the given dimensions.
    pub fn validate_task(&self, dims: &[usize]) -> Result<(), AdversaryError> {
        self.validate_common()?;
        if let Location::Link(_) = self.location {
            return Err(AdversaryError::WrongLocation(self.location));
        }
        if self.strategy != Strategy::None && self.targets.is_empty() {
            return Err(AdversaryError::NoTargets);
        }
        for &t in &self.targets {
            let dim = *dims.get(t).ok_or(AdversaryError::InvalidTarget {
                target: t,
                count: dims.len(),
            })?;
            if let Strategy::InterceptResend { basis } = self.strategy {
                basis.observable(dim)?;
            }
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.strategy != Strategy::None
    }

    /// Decides whether this round is attacked. Draws nothing for inactive attacks.
    pub fn engages<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.is_active() && rng.random_bool(self.rate)
    }
}

/// State forwarded by Eve plus what she learned.
#[derive(Debug, Clone, PartialEq)]
pub struct Interception {
    pub state: StateVector,
    pub eve_outcome: Option<f64>,
}

/// Logged adversary action: where it happened and Eve's measured eigenvalue, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackEvent {
    /// Link index (conferencing) or subsystem index (task protocol).
    pub site: usize,
    pub eve_outcome: Option<f64>,
}

/// Applies the strategy to one transiting system.
pub fn apply_attack<R: Rng + ?Sized>(
    state: &StateVector,
    spec: &AttackSpec,
    rng: &mut R,
) -> Result<Interception, QuditError> {
    match spec.strategy {
        Strategy::None => Ok(Interception {
            state: state.clone(),
            eve_outcome: None,
        }),
        Strategy::InterceptResend { basis } => {
            let obs = basis.observable(state.dim())?;
            let sample = qudit::measure_luders(state, obs, rng)?;
            Ok(Interception {
                state: sample.post_state,
                eve_outcome: Some(sample.eigenvalue),
            })
        }
        Strategy::Depolarize { p } => {
            let state = if rng.random_bool(p) {
                StateVector::basis(state.dim(), rng.random_range(0..state.dim()))?
            } else {
                state.clone()
            };
            Ok(Interception {
                state,
                eve_outcome: None,
            })
        }
    }
}

/// Fraction of key bits Eve guesses correctly. Positions without a guess
/// count as a coin flip (0.5); an empty key also scores 0.5.
pub fn eve_information(guesses: &[Option<bool>], key: &[bool]) -> f64 {
    debug_assert_eq!(guesses.len(), key.len());
    if key.is_empty() {
        return 0.5;
    }
    let score: f64 = guesses
        .iter()
        .zip(key)
        .map(|(g, k)| match g {
            Some(g) if g == k => 1.0,
            Some(_) => 0.0,
            None => 0.5,
        })
        .sum();
    score / key.len() as f64
}

//! Per-round random substreams.
//!
//! Every round draws from its own ChaCha stream keyed by `(seed, round_id)`,
//! so rounds can run in any order or on any thread and still reproduce the
//! same records. The eavesdropper gets a separate keyed stream; enabling or
//! disabling an attack never shifts the honest parties' draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Salt for the adversary's key; any fixed constant distinct from zero works.
const EVE_SALT: u64 = 0x45_56_45_5f_53_41_4c_54;

#[derive(Debug, Clone)]
pub struct RoundStreams {
    pub honest: ChaCha8Rng,
    pub eve: ChaCha8Rng,
}

impl RoundStreams {
    pub fn new(seed: u64, round_id: u64) -> Self {
        let mut honest = ChaCha8Rng::seed_from_u64(seed);
        honest.set_stream(round_id);
        let mut eve = ChaCha8Rng::seed_from_u64(seed ^ EVE_SALT);
        eve.set_stream(round_id);
        Self { honest, eve }
    }
}

/// Whether the round loop runs on the current thread or on the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    Sequential,
    #[default]
    Parallel,
}

/// Maps `f` over `0..rounds`, returning results ordered by round id.
pub(crate) fn run_rounds<T, F>(rounds: usize, mode: ExecutionMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecutionMode::Sequential => (0..rounds as u64).map(f).collect(),
        ExecutionMode::Parallel => (0..rounds as u64).into_par_iter().map(f).collect(),
    }
}

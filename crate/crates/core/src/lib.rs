//! Seeded Monte-Carlo simulation of two semi-quantum communication protocols.
//!
//! * [`conferencing`]: one quantum Alice and N classical Bobs share a key
//!   through a single ququart; security rests on a CHSH-type contextuality
//!   inequality `|<X₁X₂ + Z₁Z₂>| <= sqrt(2)` evaluated on rounds no Bob touched.
//! * [`task`]: a four-Bob, two-layer network over separable states; layer 1
//!   shares a key and a collaborative secret, layer 2 shares the key directly,
//!   and non-orthogonal check states expose eavesdroppers.
//!
//! [`qudit`] is the exact pure-state engine both protocols run on,
//! [`adversary`] injects intercept-resend and noise, [`analysis`] holds the
//! estimators, and [`harness`] turns a TOML configuration into reports.
//! Every round draws from its own keyed random stream, so results are
//! reproducible bit for bit and independent of thread count.

pub mod adversary;
pub mod analysis;
pub mod bits;
pub mod conferencing;
pub mod config;
pub mod harness;
pub mod qudit;
pub mod rng;
pub mod task;
pub mod verify;

pub use rng::ExecutionMode;

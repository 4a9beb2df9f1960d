//! Numerics for a discrete-time two-queue parallel network with common batch
//! arrivals.
//!
//! Each time slot, a common batch of `A` customers joins both queues and
//! server `i` removes up to `S^i` customers, so queue lengths follow the
//! coupled Lindley recursion `Q' = (Q + A - S)_+`. The quantity of interest
//! is the joint stationary tail
//!
//! `H(x, y) = P(Q^1 > x, Q^2 > y)`,
//!
//! equivalently the probability that the two-dimensional random walk with
//! steps `(A - S^1, A - S^2)` ever enters the quadrant beyond `(x, y)`.
//!
//! The crate provides:
//!
//! * [`dist`] — discrete laws on the nonnegative integers with exact moments,
//!   MGFs, tails, seeded sampling, and a heavy-tail diagnostic;
//! * [`model`] — the queue/walk dynamics and the bivariate increment MGF;
//! * [`exact`] — a truncated power-iteration solver for the stationary
//!   distribution `p(m, n)`, balance residuals, and `H` read off the grid;
//! * [`mc`] — seeded Monte Carlo estimators of `H` (long-run simulation,
//!   first passage with certified stopping, exponential tilting, and a
//!   bounded-horizon heavy-tail estimator);
//! * [`asympt`] — Lundberg exponents, the two-dimensional Cramér root,
//!   exponential rate fitting, and the heavy-tail first-passage series;
//! * [`config`] / [`runner`] — a config-driven experiment harness producing
//!   machine-readable CSV/JSON reports.

pub mod asympt;
pub mod config;
pub mod dist;
pub mod exact;
pub(crate) mod math;
pub mod mc;
pub mod model;
pub mod rng;
pub mod runner;

pub use dist::Pmf;
pub use mc::Estimate;
pub use exact::TruncatedGrid;
pub use model::{ParallelQueueModel, QueueState, WalkState};
pub use rng::Rng;

use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the CLI exit codes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation was handed an invalid parameter.
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An MGF was evaluated outside its convergence domain. Root solvers
    /// treat this as a signal to backtrack rather than iterate on garbage.
    #[error("mgf evaluated outside its convergence domain at theta = {theta}")]
    MgfDomain { theta: f64 },

    /// The arrival mean does not sit strictly below both service means.
    #[error("unstable model: E[A] = {ea} must be < min(E[S1] = {es1}, E[S2] = {es2})")]
    Unstable { ea: f64, es1: f64, es2: f64 },

    /// Power iteration hit its sweep cap before the L1 change fell under
    /// tolerance; the grid is too small or the tolerance too tight.
    #[error("no convergence after {iterations} sweeps (last L1 change {residual:.3e})")]
    NoConvergence { iterations: u64, residual: f64 },

    /// No positive Lundberg exponent exists for the 1-D projection: either
    /// the arrival MGF domain was exhausted before a sign change (heavy
    /// tails) or the increment cannot reach positive values.
    #[error("no Lundberg root: {reason}")]
    NoLundbergRoot { reason: &'static str },

    /// The Cramér system has no usable nontrivial root along this direction.
    #[error("no Cramér root: {reason:?}")]
    NoCramerRoot { reason: CramerFailure },

    /// A regime precondition failed (e.g. services can be zero, or the
    /// arrival law is light-tailed where a heavy-tail method was requested).
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    /// The rate-fit design matrix is rank deficient.
    #[error("degenerate fit: design matrix is rank deficient")]
    DegenerateFit,

    /// Configuration parse/validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure while writing or reading report files.
    #[error("io error: {0}")]
    Io(String),
}

/// Why the Cramér solver gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CramerFailure {
    /// The MGF domain was exhausted while searching (heavy-tailed arrivals
    /// or a root pushed against the domain boundary).
    DomainExhausted,
    /// Newton iteration did not converge within its iteration budget.
    NoConvergence,
    /// Only the trivial root gamma = 0 was found along the search path.
    TrivialRootOnly,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Information-leakage toolkit for finite alphabets.
//!
//! The crate computes maximal leakage and its relatives (realizable,
//! conditional, cost, variance, local-DP, capacity) in closed form,
//! verifies the closed forms operationally with brute-force guessing
//! adversaries, estimates leakage from samples, designs leakage-minimizing
//! channels under distortion constraints, and evaluates quantization-based
//! cipher schemes and packet-timing mitigations at desk scale.
//!
//! All internal computation is in nats; [`LeakageValue`] carries the unit
//! and converts at presentation time. Distributions are immutable after
//! construction, so everything here is safe to evaluate concurrently.
//! The `parallel` feature (on by default) runs the embarrassingly parallel
//! sweeps (Monte Carlo trials, random-instance property sweeps, codebook
//! construction) on a rayon pool; without it the same code runs
//! sequentially.

pub mod cipher;
pub mod dist;
pub mod estimate;
pub mod exec;
pub mod io;
pub mod mechanism;
pub mod metrics;
pub mod oracle;
pub mod simplex;
pub mod solvers;
pub mod timing;

pub use dist::{Channel, CondJointPmf, DistError, JointPmf, Pmf, SupportMask};
pub use metrics::{LeakageValue, Unit};

/// Tolerance for accepting total probability mass as 1 before renormalizing.
pub const MASS_TOL: f64 = 1e-9;

/// Default cutoff below which a probability is treated as structurally zero.
pub const SUPPORT_TOL: f64 = 1e-12;

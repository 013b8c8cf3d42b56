//! Capacity of random discrete memoryless channels.
//!
//! A channel is built from a gain matrix `V` whose entries are drawn i.i.d.
//! from a nonnegative distribution and whose rows are normalized into
//! transition probabilities. As the input alphabet grows the capacity
//! concentrates around `μ₂/μ₁ − log₂ μ₁`, where `μ₁ = E[V]` and
//! `μ₂ = E[V log₂ V]`. This crate provides the pieces needed to check that
//! claim numerically and to use it:
//!
//! - [`channel`]: probability vectors, channel and gain matrices, entropy and
//!   mutual information in bits.
//! - [`capacity`]: a Blahut–Arimoto solver that returns a certified
//!   `[lower, upper]` bracket.
//! - [`distributions`]: gain families, reproducible sampling and the moments
//!   that determine the limit.
//! - [`rate_bounds`]: finite-size deviation bounds.
//! - [`design`]: choosing a lognormal gain family under moment constraints.
//! - [`sim`]: configuration-driven sweeps with deterministic output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod design;
pub mod distributions;
pub mod error;
pub mod io;
pub mod rate_bounds;
pub mod rng;
pub mod sim;
pub mod special;

pub use capacity::{solve_capacity, CapacityBracket, DualCertificate, SolverOptions};
pub use channel::{ChannelMatrix, GainMatrix, ProbabilityVector};
pub use distributions::{asymptotic_capacity, sample_gain_matrix, DistributionSpec, MomentPair};
pub use error::{Error, Result};

//! A desk-scale laboratory for the statistical efficiency of interleaved
//! comparisons versus A/B testing.
//!
//! The crate has three layers:
//!
//! - **Comparison** ([`comparison`], [`ranking`], [`clickmodel`]): a
//!   per-position coin-flip interleaving method, its A/B-testing
//!   counterpart with identical click scoring, and cascade click-model
//!   user simulation.
//! - **Closed forms** ([`analytic`]): expected click scores and sample-mean
//!   variances of both methods under a relevance-dependent examination
//!   model, normal-approximation error probabilities, grid sweeps, and
//!   executable checks of the constant-examination and relevance-aware
//!   efficiency results.
//! - **Experiments** ([`harness`], [`dataset`]): learning-to-rank dataset
//!   ingestion, feature-sorted ranker pairs with nDCG ground truth, the
//!   seeded simulation protocols over impression budgets and relevance
//!   gaps, and a Monte Carlo oracle for the closed forms.
//!
//! Everything is deterministic given a seed: random streams are derived
//! per work unit with [`streams::derive_rng`], so runs reproduce exactly
//! and units can execute in parallel.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analytic;
pub mod clickmodel;
pub mod comparison;
pub mod dataset;
pub mod harness;
pub mod ranking;
pub mod streams;

pub use analytic::{AnalyticScenario, ErrorPoint, EvaluationMethod, MethodStats};
pub use clickmodel::ClickModelSpec;
pub use comparison::{EvaluationAccumulator, ImpressionScore, InterleavedRanking, Team};
pub use ranking::{ClickVector, Preference, Ranking, RelevanceGrade, DEFAULT_MAX_GRADE};

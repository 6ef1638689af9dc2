// trait resolution recurses through the boxed self-referential event type
#![recursion_limit = "256"]

//! Worst-case laws of large numbers over finitely generated ambiguity sets.
//!
//! An ambiguity set is a finite, ordered family of marginal distributions.
//! An adversary picks which member generates each step of a sequence, possibly
//! after looking at the realized history. Upper and lower expectations are the
//! max / min over members, and upper probabilities of path events are taken
//! over all adaptive selection strategies.
//!
//! The crate provides:
//!
//! * marginal distributions (finite discrete, symmetric Pareto, affine
//!   transforms) with exact tails and counter-based sampling ([`distributions`]),
//! * upper/lower expectations, capacities and Choquet integrals ([`ambiguity`]),
//! * adaptive adversary strategies and path simulation ([`sequences`]),
//! * the truncation bookkeeping behind Marcinkiewicz-style laws of large
//!   numbers ([`truncation`]),
//! * exact and Monte Carlo estimation of upper probabilities of path events
//!   ([`capacity`]),
//! * experiment drivers and reporting used by the `sublln` CLI ([`harness`]).
//!
//! Sampling is keyed by `(seed, replication, step)`, so every scalar draw is
//! reproducible independently of evaluation order and thread count.

pub mod ambiguity;
pub mod capacity;
pub mod config;
pub mod distributions;
pub mod harness;
pub mod numeric;
pub mod report;
pub mod rng;
pub mod sequences;
pub mod truncation;

pub use ambiguity::{AmbiguitySet, CapacityPair, DominationCondition};
pub use capacity::{CapacityEstimate, EstimateMethod, PathEvent};
pub use distributions::{Distribution, TestFunction};
pub use sequences::{PathModel, SamplePath, Strategy};
pub use truncation::TruncationScheme;

//! Exact p-adic and ultrametric Egorov algebras of generalized functions.
//!
//! Elements are sequences of locally constant, compactly supported functions
//! modulo sequences that eventually vanish on every compact set. All
//! quotient-level questions are answered by [`Verdict`]s that carry either an
//! index with a certificate or an explicit witness schedule.

pub mod cli;
pub mod constructions;
pub mod egorov;
pub mod error;
pub mod eventual;
pub mod generalized;
pub mod numbers;
pub mod sequences;
pub mod spaces;
pub mod step;

pub use error::{Error, Result};
pub use generalized::{PointFamily, ScalarFamily, Schedule, Verdict};
pub use numbers::{Prime, Rational, Ring, RingElem, ValuationExp};
pub use sequences::{IntegerMap, SequenceFamily};
pub use spaces::{Ball, BallRelation, Point, Space};
pub use step::StepFunction;

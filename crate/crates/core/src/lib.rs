//! Two-time conditional probability calculus for POVM measurements.
//!
//! The library validates quantum states and POVM sets, assigns conditional
//! probabilities across two measurement times with free evolution in
//! between, measures how far the law of total probability is violated, and
//! mechanically checks the sufficient conditions under which it holds. The
//! named extended Wigner's friend scenarios are built in, together with an
//! independent brute-force oracle for differential testing.

pub mod composite;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod oracle;
pub mod random;
pub mod scenarios;
pub mod twotime;

pub use error::{Error, Result};

//! Exact-arithmetic construction and certification of Liouville-type numbers.
//!
//! The crate builds numbers from ternary digit data on fast-growing exponent
//! schedules, produces rational-approximation certificates for the numbers
//! themselves, their self-powers `x^x`, integer-polynomial images, and
//! pairwise powers `x^y`, and re-verifies every certificate from raw fields
//! using only exact rational and certified interval arithmetic.

pub mod certify;
pub mod diophantine;
pub mod error;
pub mod interval;
pub mod magnitude;
pub mod poly;
pub mod rational;
pub mod schedule;
pub mod selfpower;

pub use error::{Error, Result};
pub use interval::{IntervalReal, DEFAULT_BUDGET};
pub use magnitude::Magnitude;
pub use rational::{BigInt, BigRational};

//! Pilot-study sample size planning.
//!
//! Given prior guesses for the outcome standard deviation or the study effect,
//! the planners here pick a pilot size so that a main study sized from the
//! pilot's estimate has a bounded chance of ending up under- (or over-) powered.
//! [`simulation`] checks those guarantees by Monte Carlo.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod effect;
mod error;
pub mod power;
pub(crate) mod roots;
pub mod simulation;
pub mod variance;

pub use error::{Error, Result};

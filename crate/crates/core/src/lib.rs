//! Differentially private feasibility solving for linear programs.
//!
//! The homogeneous solver runs a noisy rescaling perceptron on `Ax >= 0`
//! with positive margin. The general solver handles `Ax <= b, x >= 0` by
//! repeatedly solving a slacked, homogenised version and pinning down
//! near-tight constraints as equalities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elimination;
pub mod error;
pub mod gen;
pub mod general;
pub mod lp;
pub mod mechanisms;
pub mod oracle;
pub mod perceptron;
pub mod rational;
pub mod sanitizer;

pub use error::{Error, Result};
pub use lp::{HomogeneousLp, LpInstance, Margin, RescalingState};
pub use mechanisms::{CompositionLedger, PrivacyBudget, SeededRng};

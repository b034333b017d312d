//! Resource-theory monotones, distillation bounds and conversion protocols for quantum
//! states, computed with a built-in conic solver.

#![no_std]
// negated comparisons are how NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod conic;
pub mod discrimination;
pub mod distillation;
pub mod error;
pub mod free_sets;
pub mod monotones;
pub mod protocols;
mod float;
pub mod operator;
pub mod random;
pub mod states;

pub use error::{Error, Result};
pub use operator::{HermitianOperator, QuantumState};

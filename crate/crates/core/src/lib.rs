//! Weak reflection for spectrally negative Levy processes.

// `!(a > b)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod joint;
pub mod levy;
pub mod mc;
pub mod payoff;
pub mod quad;
pub mod symmetry;
pub mod verify;

//! Deterministic fast-time simulation of an urban air mobility system.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod demand;
pub mod econ;
pub mod energy;
pub mod fleet;
pub mod network;
pub mod optim;
pub mod report;
pub mod sim;

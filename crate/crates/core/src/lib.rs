//! Local solution of two colliding shocks in one-dimensional barotropic flow.

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod ahead;
pub mod eos;
pub mod error;
pub mod grid;
pub mod jump;
pub mod origin;
pub mod scheme;
pub mod spline;
pub mod verify;

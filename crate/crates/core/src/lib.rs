// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fmt;
pub mod gapcalc;
pub mod harness;
pub mod hypergraph;
pub mod instances;
pub mod kcspip;
pub mod knapsack;
mod lp;
pub mod randkit;
pub mod selftest;

pub use error::{Error, Result};

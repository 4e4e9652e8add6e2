//! Graph trend filtering.
//!
//! `β̂ = argmin_β ½‖y − β‖² + λ‖Δ^(k+1) β‖₁` where `Δ^(k+1)` is the order-`k`
//! graph difference operator: the oriented incidence matrix `D` for `k = 0`,
//! then alternately left-multiplied by `Dᵀ` and `D`, so that it equals
//! `L^((k+1)/2)` for odd `k` and `D L^(k/2)` for even `k`.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod difference;
pub mod error;
pub mod flow;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod model_eval;
pub mod solvers;
pub mod sparse;
pub mod synthesis;
pub mod theory;
pub mod transduction;

pub use error::{GtfError, Result};

//! Max-flow and the exact graph total-variation proximal operator.

pub mod maxflow;
pub mod tv;

pub use maxflow::{max_flow, FlowNetwork, MaxFlowResult};
pub use tv::{kkt_violation, tv_denoise, tv_denoise_certified, tv_denoise_first_order, tv_objective, TvSolution};

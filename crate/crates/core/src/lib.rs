//! Admission control for double-ended matching queues.
//!
//! Two classes of customers (buyers and sellers) arrive to be matched
//! first-come-first-match; unmatched customers wait in their class queue and
//! abandon when their patience runs out. The operator controls the system by
//! blocking arrivals once a queue reaches its buffer length, trading blocking
//! penalties against holding and abandonment costs. In heavy traffic the
//! scaled imbalance process converges to a controlled diffusion whose optimal
//! policy is a pair of reflecting barriers determined by a free-boundary ODE
//! problem.
//!
//! This crate carries the whole computational stack:
//!
//! * [`params`] — the diffusion-level parameter tuple, cost thresholds and
//!   regime classification,
//! * [`skorokhod`] — exact reflection maps on discretized paths (one-sided,
//!   two-sided, time-varying barriers) with oscillation utilities,
//! * [`hjb`] — the free-boundary solver: separatrix location, barrier
//!   bisection, smooth-fit zero-control solution, value-function assembly,
//! * [`diffusion`] — projected Euler simulation of the reflected diffusion
//!   and Monte Carlo estimation of the discounted cost,
//! * [`queuesim`] — an event-driven simulator of the pre-limit queueing
//!   system with diffusion scaling, cost estimation, and convergence
//!   diagnostics.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all file formats,
//! configuration and CLI plumbing live in the companion `matchq-cli` crate.
//! Scalar math is routed through `libm` so results are bit-identical with and
//! without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
// Guards written as `!(x > 0.0)` are deliberate: they reject NaN along with
// the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diffusion;
pub mod hjb;
mod math;
pub mod ode;
pub mod params;
pub mod queuesim;
pub mod rng;
pub mod skorokhod;

pub use diffusion::{
    estimate_dcp_cost, simulate_reflected, Barriers, CostEstimate, McConfig, SdePath,
};
pub use hjb::{solve, Curve, PolicySolution, SolverConfig};
pub use params::{ModelParams, Regime};
pub use skorokhod::{Decomposition, Path};

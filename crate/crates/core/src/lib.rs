//! Discrete-time Markov chain model of a cache-aware test-and-test-and-set
//! spinlock, together with everything needed to analyse it at scale:
//!
//! * [`model`]: the full synchronous product of `n` processes and the lock.
//! * [`symmetry`]: the generic-representatives quotient, with process `P1`
//!   explicit and the other `n - 1` processes counted per local state.
//! * [`explore`]: deterministic breadth-first materialisation of either model
//!   as a labelled sparse DTMC.
//! * [`solve`]: BSCC decomposition, stationary distributions and
//!   phase-type waiting-time laws.
//! * [`analyze`]: the long-run spinlock properties.
//! * [`montecarlo`]: an independent simulator used as a statistical oracle.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature enables
//! `std::error::Error` impls and `parallel` enables multi-threaded frontier
//! expansion during exploration.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analyze;
pub mod dist;
pub mod error;
pub mod explore;
pub mod model;
pub mod montecarlo;
pub mod prob;
pub mod solve;
pub mod symmetry;

pub use dist::DiscreteDistribution;
pub use error::{Error, Result};
pub use explore::{explore, ExploreOptions, SparseDtmc};
pub use model::{FullModel, FullState, Location, LockState, ModelParams, ProcState};
pub use num_rational::BigRational;
pub use prob::Probability;
pub use symmetry::{InitialMode, ReducedModel, ReducedState};

//! Specification testing for incomplete structural models.
//!
//! An incomplete model links observable outcomes `y` to latent variables `u`
//! through a correspondence `Γ` rather than a function. The model `(Γ, ν)` is
//! compatible with the law `P` of the observables when some joint law supported
//! on the graph of `Γ` has marginals `P` and `ν`; equivalently when
//! `P(A) ≤ ν(Γ(A))` for every observable event `A`.
//!
//! The crate is layered bottom-up:
//!
//! * [`correspondence`]: finite and interval-valued correspondences, sets and
//!   their images / inverse images.
//! * [`measure`]: discrete measures, atomless latent laws and samples.
//! * [`capacity`]: belief / plausibility functions, alternation checks,
//!   Choquet integrals and core membership.
//! * [`transport`]: zero-one cost optimal transport, solved as a max-flow
//!   primal and checked against a subset-search dual.
//! * [`model`]: the `ν(Γ(A))` oracle consumed by the statistic.
//! * [`setclass`]: candidate set families, binding classes, bandwidths and
//!   the core-determining checker.
//! * [`statistic`]: the supremum statistic and its quantile approximations.
//! * [`inference`]: specification tests, confidence regions by grid
//!   inversion, the entry game and interval-censored mean bounds.

pub mod capacity;
pub mod correspondence;
mod error;
pub mod inference;
pub mod measure;
pub mod model;
pub mod rng;
pub mod setclass;
pub mod statistic;
pub mod transport;

pub use error::{Error, Result};

/// Absolute tolerance used for capacity and feasibility comparisons.
pub const TOLERANCE: f64 = 1e-9;

//! Correspondences `Γ` between observables and latent variables, and the
//! sets they act on.

mod finite;
mod interval;
mod sets;

pub use finite::{CorrespondenceJson, FiniteCorrespondence};
pub use interval::{IntervalCorrespondence, IntervalValuedCorrespondence, LatentGrid};
pub use sets::{BitSet, Carrier, Interval, IntervalUnion, LatentSet, ObsSet};

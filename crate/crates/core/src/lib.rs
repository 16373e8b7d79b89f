//! Bootstrap percolation on grids `[n]^d` and on the modified structures
//! `C*(n, d, ell, r)` over `[n]^d x [2]^ell`.
//!
//! - [`lattice`]: regions, site indexing, thresholds, bit-packed configurations.
//! - [`dynamics`]: the closure `[A]`, semi-percolation, internal spanning.
//! - [`analytic`]: `beta_k`, `g_k`, `lambda(d, r)`, iterated logarithms, the
//!   upper-bound formulas and the droplet-scale root.
//! - [`lgaps`]: probability that a sequence of independent events has no L-gap.
//! - [`events`]: detectors for diagonal growth, deviation and growth events.
//! - [`montecarlo`]: reproducible sampling, estimators, threshold search.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod events;
pub mod lattice;
pub mod lgaps;
pub mod montecarlo;

pub use dynamics::{
    closure, internally_semi_spanned, semi_percolates, ClosureEngine, ClosureResult, SiteBox,
};
pub use error::{Error, Result};
pub use events::{GapVector, GrowthSpec};
pub use lattice::{build_structure, BootstrapStructure, Configuration, GridShape, ThresholdRule};
pub use lgaps::EventSeqSpec;
pub use montecarlo::{EstimateRecord, EventPredicate, EventSpec, RunOptions, SampleMode};

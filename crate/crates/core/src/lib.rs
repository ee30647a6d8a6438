//! Time series aggregation for linear programs based on active constraint sets.
//!
//! A parametric family of LPs `min c'x  s.t. Ax <= b_t, x >= 0` (one right-hand
//! side per time step, shared `A` and `c`) can be aggregated without error by
//! grouping time steps that share the same set of binding constraints and
//! replacing each group by its weighted centroid. This crate implements that
//! aggregation, extends it with *bases merging* (collapsing several groups into
//! one cluster), and computes the exact objective-value error of any merger
//! analytically from centroids and dual solutions alone, so candidate mergers
//! can be ranked without re-solving anything.
//!
//! The pieces, bottom to top:
//!
//! * [`lp`] — a small dense simplex solver that reports primal and dual
//!   solutions and the set of active constraints.
//! * [`transport`] — builds the per-time-step optimal electricity transport LP
//!   (generators, lines, nodal balances) used as the worked example.
//! * [`aggregation`] — groups solved time steps into bases, builds the
//!   weighted aggregated LP, and verifies exactness against the full model.
//! * [`merging`] — merged centroids, host-basis selection, and the analytical
//!   misclassification cost of a partition of the bases.
//! * [`strategies`] — exhaustive, greedy, and greedy-adjacent searches over
//!   partitions of the bases, plus Bell/Stirling counting.
//! * [`metrics`] — output-error metrics and table rendering.
//! * [`io`] — file formats, synthetic case-study generation, and the CLI
//!   pipeline.

pub mod aggregation;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod merging;
pub mod metrics;
pub mod strategies;
pub mod transport;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

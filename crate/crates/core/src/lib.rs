//! Power-efficient constellations for intensity-modulated direct-detection
//! links with a single electrical subcarrier.
//!
//! The crate places `M` points in the three-dimensional cone of nonnegative
//! signals so that they keep unit minimum distance while minimizing one of
//! the power measures in [`Measure`]. Designs are then scored by their error
//! rates and by the mutual information they support.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod metrics;
pub mod mutual_info;
pub mod optimizer;
pub mod parallel;

pub use error::{Error, Result};
pub use geometry::{AdmissibleCone, BandwidthFactor, Constellation, Point3};
pub use metrics::{Measure, PowerSummary};
pub use parallel::Execution;

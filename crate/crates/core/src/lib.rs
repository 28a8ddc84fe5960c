//! Exact analysis of functions on finite product probability spaces.
//!
//! The crate computes variance/variation, per-coordinate influences under
//! arbitrary (semi)metrics on the output set, and decision-tree cost
//! measures (per-coordinate query probabilities, expected cost, optimal
//! expected cost and depth), and machine-checks the family of inequalities
//! tying them together, including the equality cases for separated trees.
//!
//! Everything works in one of two arithmetic modes: exact rationals when
//! all inputs are fractions, IEEE doubles with explicit tolerances
//! otherwise. See [`value::Value`].

pub mod error;
pub mod families;
pub mod measures;
pub mod model;
pub mod optimal;
pub mod thresholds;
pub mod tree;
pub mod value;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    CoordDomain, MetricKind, OutputSpace, PointIndex, ProductSpace, TabulatedFunction,
};
pub use value::Value;

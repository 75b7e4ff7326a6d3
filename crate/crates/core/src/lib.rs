//! Variable selection for sparse linear regression.
//!
//! The crate centers on two selectors and the quantities that predict when
//! they work: exhaustive best-subset search (`bss`), iterative hard
//! thresholding with least-squares refits (`iht`), marginal screening and
//! folded-penalty comparators (`comparators`), and design diagnostics
//! (`diagnostics`) built on conditional covariance blocks. A simulation
//! generator (`simgen`) and seeded random streams (`rng`) make replicated
//! experiments byte-for-byte reproducible.
//!
//! Conventions: column indices are 0-based, supports are strictly
//! increasing index lists, magnitude ties break toward the smaller index,
//! and sample covariances use the 1/n scaling.

mod combin;
pub mod bss;
pub mod comparators;
pub mod core;
pub mod diagnostics;
pub mod error;
pub mod iht;
pub mod linalg;
pub mod rng;
pub mod simgen;

pub use crate::core::{Dataset, FitResult, SelectionMetrics, SparseVector, Standardize, SupportSet};
pub use error::{Error, Result};

//! Bounds and heuristics for maximum-entropy remote sampling:
//! maximize `ldet C1[S,S] − ldet C2[S,S]` over subsets of fixed size.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagscale;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod nlp;
pub mod simplex;
pub mod search;
pub mod spectral;

pub use error::{MerspError, Result};
pub use instance::{CovarianceInstance, MerspInstance};
pub use linalg::SymMatrix;

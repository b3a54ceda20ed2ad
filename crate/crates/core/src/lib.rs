//! Inhomogeneous dual Diophantine approximation on nondegenerate manifolds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod error;
pub mod groshev;
pub mod lattice;
pub mod measure;
pub mod model;
pub mod report;
pub mod transference;
pub mod ubiquity;

pub use error::{Error, Result};

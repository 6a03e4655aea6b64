#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod catalog;
pub mod chart;
pub mod error;
pub mod parallelism;
pub mod report;
pub mod riemannian;
pub mod transport;

pub use error::{GeometryError, Result};

//! Variable-length universal compression of quantum sources.

// `!(x >= 0.0)` rejects NaN along with negatives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod codec;
pub mod error;
pub mod info;
pub mod linalg;
pub mod schur_weyl;
pub mod young;

pub use error::{Error, Result};

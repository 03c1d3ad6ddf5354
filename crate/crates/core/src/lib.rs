#![forbid(unsafe_code)]
//! Hadamard matrices of order `4d` from base sequences: sequence algebra,
//! codecs, the Goethals–Seidel array, Yang's multiplication theorems and
//! equivalence classification.

pub mod codec;
pub mod designs;
pub mod equiv;
pub mod error;
pub mod gs;
pub mod pipeline;
pub mod seq;
pub mod store;
pub mod yang;

pub use error::{Error, Result};

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fft;
pub mod ifl;
pub mod krylov;
pub mod linalg;
pub mod problems;
pub mod quadrature;
pub mod scheme;
pub mod soe;
pub mod special;
pub mod study;
pub mod time_mesh;
pub mod toeplitz_algebra;

pub use error::{Error, Result};

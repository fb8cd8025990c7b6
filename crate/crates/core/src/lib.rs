//! Discrete-time quantum walks on `k` quarter planes joined at the origin.
//!
//! The crate provides a direct simulator for the plane, quarter-plane,
//! joined and Own/Other walks ([`walk`]), the walk on a product of
//! homogeneous trees ([`tree`]), the Own/Other reduction ([`reduction`]),
//! truncated power series and generating functions ([`genfunc`]) and the
//! asymptotic formulas for localization and weak limits ([`limit`]).

pub mod coin;
pub mod error;
pub mod genfunc;
pub mod limit;
pub mod reduction;
pub mod tree;
pub mod walk;

pub use coin::{CMatrix, C64};
pub use error::{Error, Result};

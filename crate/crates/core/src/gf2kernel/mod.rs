//! Exact linear algebra over the two-element field and the degreewise
//! instantiation of triple complexes.

mod linalg;
mod slice;

pub use linalg::*;
pub use slice::*;

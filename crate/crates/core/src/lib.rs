//! Z₂ HOMFLYPT homology, the Rasmussen spectral sequence and Khovanov
//! homology of closed braids.

pub mod analysis;
pub mod braid;
pub mod gf2kernel;
pub mod mfbuild;
pub mod oracle;
pub mod pipeline;
pub mod polyring;

pub use braid::{BraidWord, ClosureStats, MarkedDiagram, Marking, Piece, Sign};
pub use gf2kernel::{BitVec, F2Matrix, Subquotient};
pub use mfbuild::{KoszulFactor, TripleComplexSpec};
pub use polyring::{Monomial, Poly};
pub use pipeline::{Computation, Config, DimTable, TableKind};
pub use analysis::{DetectionReport, HilbertFit, LaurentSeries, Verdict};

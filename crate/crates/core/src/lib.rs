//! Determinant functors on bounded complexes of free modules over small
//! exact rings, relative K0 classes, and the relation harvesting that
//! separates the exact-category and triangulated-category K1.

pub mod complexes;
pub mod detfunctor;
pub mod error;
pub mod io;
pub mod ktheory;
pub mod linalg;
pub mod picardfiber;
pub mod rings;
pub mod sample;
pub mod system;

pub use error::{Error, Result};
pub use linalg::{Matrix, PivotOrder};
pub use rings::{Elem, RingId};

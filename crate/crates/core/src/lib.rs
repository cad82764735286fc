//! Numerics for closed 3-forms in dimensions six and seven: SL(3,C)-structures,
//! G2-structures, hypersurface invariants, torus reductions, maximal submanifolds
//! of pseudo-Euclidean space and explicit constructions of closed G2-structures.

pub mod cli;
pub mod constructions;
pub mod error;
pub mod exterior;
pub mod g2;
pub mod hypersurface;
pub mod maximal;
pub mod reductions;
pub mod sl3c;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

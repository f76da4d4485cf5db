//! Polarity-based semantics of normal lattice-expansion logics on finite
//! structures.

pub mod algebra;
pub mod bitset;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod fol;
pub mod frame;
pub mod morphism;
pub mod polarity;
pub mod random;
pub mod semantics;
pub mod syntax;

pub use error::{Error, Result};

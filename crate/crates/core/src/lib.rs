//! Finite universal algebra workbench.
//!
//! Algebras are dense operation tables over `{0, .., n-1}`. On top of that
//! representation the crate provides closure engines (subuniverses,
//! congruences, clones), congruence lattices, strong-abelianness decisions,
//! homomorphism enumerators, free and matrix-power constructions, tame
//! congruence theory helpers, piece-based enumeration and a 1-in-3-SAT
//! reduction.

pub mod abelian;
pub mod algebra;
pub mod closure;
pub mod csp;
pub mod error;
pub mod examples;
pub mod format;
pub mod free;
pub mod homenum;
pub mod lattice;
pub mod partition;
pub mod pieces;
pub mod tct;
pub mod term;

pub use algebra::{FiniteAlgebra, FiniteMap, Limits, RelationalStructure, Signature, Symbol};
pub use closure::MapSet;
pub use error::{Error, Result};
pub use partition::Partition;
pub use term::{Identity, IdentitySet, Term};

/// An element of a finite universe.
pub type Elem = usize;

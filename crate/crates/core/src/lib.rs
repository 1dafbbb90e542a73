//! Dependency analysis for a small JavaScript-like core language.
//!
//! The crate provides a concrete interpreter that propagates dependency
//! marks, a sound abstract interpreter over a base-type value lattice, and
//! executable checks relating the two.

pub mod analysis;
pub mod concrete;
pub mod consistency;
pub mod domain;
pub mod gen;
pub mod marks;
pub mod oracle;
pub mod syntax;

pub use marks::{DepSet, Mark, MarkSet, Marks};

//! The abstract domain: a base-type value lattice, abstract values,
//! objects, storables, scopes and states, and the abstract operators.

mod base;
mod op;
mod value;

pub use base::{BaseLattice, Flat, Num};
pub use op::abstract_op;
pub use value::{
    alpha, AbstractClosure, AbstractObject, AbstractStorable, AbstractValue, Config, FunctionStore,
    Scope, State, StrKey, Summary,
};

/// A join-semilattice with a least element.
pub trait Lattice: Clone + PartialEq {
    fn bottom() -> Self;

    fn join(&self, other: &Self) -> Self;

    fn leq(&self, other: &Self) -> bool;

    fn join_with(&mut self, other: &Self) {
        *self = self.join(other);
    }
}

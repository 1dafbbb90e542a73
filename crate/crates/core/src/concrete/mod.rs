//! Concrete big-step semantics with mark propagation.
//!
//! Marks are bookkeeping for the oracles; nothing here enforces a policy.

mod eval;
mod noninterference;
mod ops;
mod value;

pub use eval::{eval, run, EvalError, EvalObserver, Evaluator, Limits, NoObserver};
pub use noninterference::{check_noninterference, Verdict, Witness};
pub use ops::{op_apply, strict_equals};
pub use value::{proto_lookup, Closure, Env, Heap, Location, Storable, TaintedValue, Value};

use std::collections::BTreeSet;

use crate::syntax::{BinOp, Label};

use super::base::{BaseLattice, Flat, Num};
use super::value::AbstractValue;
use super::Lattice;

/// One runtime kind a value may have; flat components keep their constant
/// or `None` for `⊤`.
#[derive(Clone, Debug)]
enum Atom {
    Undef,
    Null,
    Bool(bool),
    Num(Option<f64>),
    Str(Option<String>),
    Obj,
}

fn atoms(v: &AbstractValue) -> Vec<Atom> {
    let l = &v.lattice;
    let mut out = Vec::new();
    if l.undef {
        out.push(Atom::Undef);
    }
    if l.null {
        out.push(Atom::Null);
    }
    if l.tt {
        out.push(Atom::Bool(true));
    }
    if l.ff {
        out.push(Atom::Bool(false));
    }
    match &l.num {
        Flat::Bot => {}
        Flat::Const(n) => out.push(Atom::Num(Some(n.0))),
        Flat::Top => out.push(Atom::Num(None)),
    }
    match &l.str {
        Flat::Bot => {}
        Flat::Const(s) => out.push(Atom::Str(Some(s.clone()))),
        Flat::Top => out.push(Atom::Str(None)),
    }
    if !v.objs.is_empty() {
        out.push(Atom::Obj);
    }
    out
}

fn num(n: Option<f64>) -> BaseLattice {
    BaseLattice::numbers(n.map_or(Flat::Top, |n| Flat::Const(Num(n))))
}

fn string(s: Option<String>) -> BaseLattice {
    BaseLattice::strings(s.map_or(Flat::Top, Flat::Const))
}

fn boolean(b: Option<bool>) -> BaseLattice {
    match b {
        Some(b) => BaseLattice::bools(b, !b),
        None => BaseLattice::bools(true, true),
    }
}

fn both<T>(a: Option<T>, b: Option<T>) -> Option<(T, T)> {
    a.zip(b)
}

/// The operator on one pair of kinds. Mirrors the concrete table, with
/// `⊤` operands giving the top of the result type.
fn pair(op: BinOp, a: &Atom, b: &Atom, may_alias: bool) -> BaseLattice {
    use Atom::*;
    match (op, a, b) {
        (BinOp::Add, Num(x), Num(y)) => num(both(*x, *y).map(|(x, y)| x + y)),
        (BinOp::Add, Str(x), Str(y)) => string(both(x.clone(), y.clone()).map(|(x, y)| x + &y)),
        (BinOp::Sub, Num(x), Num(y)) => num(both(*x, *y).map(|(x, y)| x - y)),
        (BinOp::Mul, Num(x), Num(y)) => num(both(*x, *y).map(|(x, y)| x * y)),
        (BinOp::Lt, Num(x), Num(y)) => boolean(both(*x, *y).map(|(x, y)| x < y)),
        (BinOp::Lt, Str(x), Str(y)) => boolean(both(x.as_ref(), y.as_ref()).map(|(x, y)| x < y)),
        (BinOp::Eq, Undef, Undef) | (BinOp::Eq, Null, Null) => boolean(Some(true)),
        (BinOp::Eq, Bool(x), Bool(y)) => boolean(Some(x == y)),
        (BinOp::Eq, Num(x), Num(y)) => boolean(both(*x, *y).map(|(x, y)| x == y)),
        (BinOp::Eq, Str(x), Str(y)) => boolean(both(x.as_ref(), y.as_ref()).map(|(x, y)| x == y)),
        // Two locations can only be identical when their sites overlap.
        (BinOp::Eq, Obj, Obj) => boolean(if may_alias { None } else { Some(false) }),
        (BinOp::Eq, _, _) => boolean(Some(false)),
        _ => BaseLattice::undefined(),
    }
}

/// `⇓op^ϑ`: the join of the operator over every pair of represented
/// values. Results are always base constants, so the object part is empty;
/// the caller attaches dependencies.
pub fn abstract_op(
    op: BinOp,
    v0: &AbstractValue,
    v1: &AbstractValue,
) -> (BaseLattice, BTreeSet<Label>) {
    let may_alias = !v0.objs.is_disjoint(&v1.objs);
    let right = atoms(v1);
    let mut out = BaseLattice::bottom();
    for a in atoms(v0) {
        for b in &right {
            out = out.join(&pair(op, &a, b, may_alias));
        }
    }
    (out, BTreeSet::new())
}

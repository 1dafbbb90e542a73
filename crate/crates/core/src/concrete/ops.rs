use crate::syntax::{BinOp, Const};

use super::value::Value;

/// Concrete primitive operations. Total: ill-typed combinations yield
/// `undefined`.
pub fn op_apply(op: BinOp, v0: &Value, v1: &Value) -> Value {
    use Const::*;
    let c = |c: Const| Value::Const(c);
    match (op, v0, v1) {
        (BinOp::Add, Value::Const(Num(a)), Value::Const(Num(b))) => c(Num(a + b)),
        (BinOp::Add, Value::Const(Str(a)), Value::Const(Str(b))) => c(Str(format!("{a}{b}"))),
        (BinOp::Sub, Value::Const(Num(a)), Value::Const(Num(b))) => c(Num(a - b)),
        (BinOp::Mul, Value::Const(Num(a)), Value::Const(Num(b))) => c(Num(a * b)),
        (BinOp::Lt, Value::Const(Num(a)), Value::Const(Num(b))) => c(Bool(a < b)),
        (BinOp::Lt, Value::Const(Str(a)), Value::Const(Str(b))) => c(Bool(a < b)),
        (BinOp::Eq, a, b) => c(Bool(strict_equals(a, b))),
        _ => Value::UNDEFINED,
    }
}

/// `==`: structural on base constants (IEEE comparison for numbers),
/// identity on locations, `false` across kinds.
pub fn strict_equals(a: &Value, b: &Value) -> bool {
    use Const::*;
    match (a, b) {
        (Value::Loc(x), Value::Loc(y)) => x == y,
        (Value::Const(Num(x)), Value::Const(Num(y))) => x == y,
        (Value::Const(Bool(x)), Value::Const(Bool(y))) => x == y,
        (Value::Const(Str(x)), Value::Const(Str(y))) => x == y,
        (Value::Const(Undefined), Value::Const(Undefined))
        | (Value::Const(Null), Value::Const(Null)) => true,
        _ => false,
    }
}

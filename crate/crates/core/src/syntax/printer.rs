use std::fmt::{self, Write};

use super::{BinOp, ClassId, Expr, Mode};

/// Renders `e` in surface syntax that parses back to the same tree.
pub fn pretty_print(e: &Expr) -> String {
    pretty_print_with(e, &Mode::default())
}

/// As [`pretty_print`], printing `trace(e)` for traces in `default_mode`
/// with an auto class.
pub fn pretty_print_with(e: &Expr, default_mode: &Mode) -> String {
    let mut out = String::new();
    Printer { default_mode }.expr(&mut out, e, 0);
    out
}

pub(crate) fn write_string_literal(out: &mut impl Write, s: &str) -> fmt::Result {
    out.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => out.write_str("\\\"")?,
            '\\' => out.write_str("\\\\")?,
            '\n' => out.write_str("\\n")?,
            '\t' => out.write_str("\\t")?,
            '\r' => out.write_str("\\r")?,
            '\0' => out.write_str("\\0")?,
            c => out.write_char(c)?,
        }
    }
    out.write_char('"')
}

fn op_level(op: BinOp) -> u8 {
    match op {
        BinOp::Eq | BinOp::Lt => 1,
        BinOp::Add | BinOp::Sub => 2,
        BinOp::Mul => 3,
    }
}

fn level(e: &Expr) -> u8 {
    match e {
        Expr::If(..) | Expr::Put(..) => 0,
        Expr::Op(op, ..) => op_level(*op),
        Expr::App(..) | Expr::Get(..) => 4,
        _ => 5,
    }
}

struct Printer<'m> {
    default_mode: &'m Mode,
}

impl Printer<'_> {
    fn expr(&self, out: &mut String, e: &Expr, min: u8) {
        if level(e) < min {
            out.push('(');
            self.expr(out, e, 0);
            out.push(')');
            return;
        }
        match e {
            Expr::Const(c) => {
                // Writing into a String cannot fail.
                let _ = write!(out, "{c}");
            }
            Expr::Var(x) => out.push_str(x),
            Expr::Lam(l) => {
                let _ = write!(out, "fun({}){{ ", l.param);
                self.expr(out, &l.body, 0);
                out.push_str(" }");
            }
            Expr::App(f, a) => {
                self.expr(out, f, 4);
                out.push('(');
                self.expr(out, a, 0);
                out.push(')');
            }
            Expr::Op(op, a, b) => {
                let lvl = op_level(*op);
                self.expr(out, a, lvl);
                let _ = write!(out, " {op} ");
                self.expr(out, b, lvl + 1);
            }
            Expr::If(c, t, f) => {
                out.push_str("if (");
                self.expr(out, c, 0);
                out.push_str(") { ");
                self.expr(out, t, 0);
                out.push_str(" } else { ");
                self.expr(out, f, 0);
                out.push_str(" }");
            }
            Expr::New(_, p) => {
                out.push_str("new(");
                self.expr(out, p, 0);
                out.push(')');
            }
            Expr::Get(o, k) => {
                self.expr(out, o, 4);
                out.push('[');
                self.expr(out, k, 0);
                out.push(']');
            }
            Expr::Put(o, k, v) => {
                self.expr(out, o, 4);
                out.push('[');
                self.expr(out, k, 0);
                out.push_str("] = ");
                self.expr(out, v, 0);
            }
            Expr::Trace {
                label,
                mode,
                class,
                body,
            } => {
                out.push_str("trace(");
                self.expr(out, body, 0);
                if !(mode == self.default_mode && *class == ClassId::auto(*label)) {
                    out.push_str(", ");
                    let _ = write_string_literal(out, mode.as_str());
                    out.push_str(", ");
                    let _ = write_string_literal(out, class.as_str());
                }
                out.push(')');
            }
            Expr::Untrace {
                from,
                to,
                class,
                body,
            } => {
                out.push_str("untrace(");
                self.expr(out, body, 0);
                out.push_str(", ");
                let _ = write_string_literal(out, from.as_str());
                out.push_str("->");
                let _ = write_string_literal(out, to.as_str());
                out.push_str(", ");
                let _ = write_string_literal(out, class.as_str());
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Const, Label, Span};
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(pretty_print(&Expr::Const(Const::Bool(true))), "true");
        assert_eq!(pretty_print(&Expr::str("a\"b")), "\"a\\\"b\"");
    }

    #[test]
    fn immediate_application() {
        let e = Expr::app(
            Expr::lam(Label::new(1, Span::default()), "x", Expr::var("x")),
            Expr::num(5.0),
        );
        assert_eq!(pretty_print(&e), "fun(x){ x }(5)");
    }

    #[test]
    fn parenthesizes_low_precedence_operands() {
        for src in [
            "(1 + 2) * 3",
            "1 - (2 - 3)",
            "(if (true) { 1 } else { 2 }) + 1",
            "(let x = 1; x)(2)",
            "new(null)[\"f\"] = (1 == 2) < true",
            "trace(1, \"S\", \"c\")",
            "untrace(trace(-1), \"T\"->\"S\", \"ℓ1\")",
        ] {
            let e = parse(src).unwrap();
            let printed = pretty_print(&e);
            assert_eq!(parse(&printed).unwrap(), e, "{src} printed as {printed}");
        }
    }
}

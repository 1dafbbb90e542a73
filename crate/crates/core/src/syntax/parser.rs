use thiserror::Error;

use super::lexer::{lex, Tok};
use super::{BinOp, ClassId, Const, Expr, Label, Mode, Span};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: unbound variable `{name}`")]
    Unbound { name: String, span: Span },
    #[error("{span}: mode `{mode}` is not among the configured modes")]
    UnknownMode { mode: String, span: Span },
}

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    /// Mode attached to one-argument `trace(e)`.
    pub default_mode: Mode,
    /// When set, every mode named in the program must be listed here.
    pub modes: Option<Vec<Mode>>,
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &ParseOptions::default())
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<Expr, ParseError> {
    let toks = lex(text).map_err(|e| ParseError::Syntax {
        span: e.span,
        message: e.message,
    })?;
    let mut p = Parser {
        toks,
        pos: 0,
        scope: Vec::new(),
        next_label: 1,
        opts,
    };
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    // Provisional labels follow source order; renumber in pre-order of the
    // desugared tree.
    Ok(e.relabeled(1))
}

struct Parser<'o> {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    scope: Vec<String>,
    next_label: u32,
    opts: &'o ParseOptions,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<Span, ParseError> {
        if self.peek() == t {
            Ok(self.advance().1)
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::Syntax {
            span: self.span(),
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.advance();
                Ok(x)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn string(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => Ok((s, self.advance().1)),
            _ => Err(self.unexpected("string literal")),
        }
    }

    fn mode(&mut self) -> Result<Mode, ParseError> {
        let (name, span) = self.string()?;
        let mode = Mode::new(&name);
        if let Some(modes) = &self.opts.modes {
            if !modes.contains(&mode) {
                return Err(ParseError::UnknownMode { mode: name, span });
            }
        }
        Ok(mode)
    }

    fn class(&mut self) -> Result<ClassId, ParseError> {
        let (name, span) = self.string()?;
        ClassId::new(&name).ok_or(ParseError::Syntax {
            span,
            message: "class identifier must not be empty".into(),
        })
    }

    fn fresh_label(&mut self, span: Span) -> Label {
        let l = Label::new(self.next_label, span);
        self.next_label += 1;
        l
    }

    fn with_binding<T>(&mut self, x: String, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scope.push(x);
        let r = f(self);
        self.scope.pop();
        r
    }

    /// Lowest precedence: `let`, `if`, and property assignment.
    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Let => {
                let span = self.advance().1;
                let label = self.fresh_label(span);
                let x = self.ident()?;
                self.expect(&Tok::Assign)?;
                let bound = self.expr()?;
                self.expect(&Tok::Semi)?;
                let body = self.with_binding(x.clone(), |p| p.expr())?;
                Ok(Expr::let_in(label, &x, bound, body))
            }
            Tok::If => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let c = self.expr()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::LBrace)?;
                let t = self.expr()?;
                self.expect(&Tok::RBrace)?;
                self.expect(&Tok::Else)?;
                self.expect(&Tok::LBrace)?;
                let f = self.expr()?;
                self.expect(&Tok::RBrace)?;
                Ok(Expr::If(Box::new(c), Box::new(t), Box::new(f)))
            }
            _ => {
                let lhs = self.binary(0)?;
                if self.peek() == &Tok::Assign {
                    let span = self.span();
                    let Expr::Get(obj, key) = lhs else {
                        return Err(ParseError::Syntax {
                            span,
                            message: "left side of `=` must be a property reference".into(),
                        });
                    };
                    self.advance();
                    let val = self.expr()?;
                    return Ok(Expr::Put(obj, key, Box::new(val)));
                }
                Ok(lhs)
            }
        }
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.postfix()?;
        loop {
            let (op, prec) = match self.peek() {
                Tok::EqEq => (BinOp::Eq, 0),
                Tok::Less => (BinOp::Lt, 0),
                Tok::Plus => (BinOp::Add, 1),
                Tok::Minus => (BinOp::Sub, 1),
                Tok::Star => (BinOp::Mul, 2),
                _ => return Ok(lhs),
            };
            if prec < min_prec {
                return Ok(lhs);
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::op(op, lhs, rhs);
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.eat(&Tok::LParen) {
                let arg = self.expr()?;
                self.expect(&Tok::RParen)?;
                e = Expr::app(e, arg);
            } else if self.eat(&Tok::LBracket) {
                let key = self.expr()?;
                self.expect(&Tok::RBracket)?;
                e = Expr::Get(Box::new(e), Box::new(key));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.advance();
                Ok(Expr::Const(Const::Num(n)))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Const(Const::Str(s)))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::Const(Const::Bool(true)))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::Const(Const::Bool(false)))
            }
            Tok::Undefined => {
                self.advance();
                Ok(Expr::Const(Const::Undefined))
            }
            Tok::Null => {
                self.advance();
                Ok(Expr::Const(Const::Null))
            }
            Tok::Ident(x) => {
                self.advance();
                if !self.scope.contains(&x) {
                    return Err(ParseError::Unbound { name: x, span });
                }
                Ok(Expr::Var(x))
            }
            Tok::Fun => {
                self.advance();
                let label = self.fresh_label(span);
                self.expect(&Tok::LParen)?;
                let x = self.ident()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::LBrace)?;
                let body = self.with_binding(x.clone(), |p| p.expr())?;
                self.expect(&Tok::RBrace)?;
                Ok(Expr::lam(label, &x, body))
            }
            Tok::New => {
                self.advance();
                let label = self.fresh_label(span);
                self.expect(&Tok::LParen)?;
                let proto = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(Expr::New(label, Box::new(proto)))
            }
            Tok::Trace => {
                self.advance();
                let label = self.fresh_label(span);
                self.expect(&Tok::LParen)?;
                let body = self.expr()?;
                let (mode, class) = if self.eat(&Tok::Comma) {
                    let mode = self.mode()?;
                    self.expect(&Tok::Comma)?;
                    (mode, self.class()?)
                } else {
                    (self.opts.default_mode.clone(), ClassId::auto(label))
                };
                self.expect(&Tok::RParen)?;
                Ok(Expr::Trace {
                    label,
                    mode,
                    class,
                    body: Box::new(body),
                })
            }
            Tok::Untrace => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let body = self.expr()?;
                self.expect(&Tok::Comma)?;
                let from = self.mode()?;
                self.expect(&Tok::Arrow)?;
                let to = self.mode()?;
                self.expect(&Tok::Comma)?;
                let class = self.class()?;
                self.expect(&Tok::RParen)?;
                Ok(Expr::Untrace {
                    from,
                    to,
                    class,
                    body: Box::new(body),
                })
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(id: u32) -> Label {
        Label::new(id, Span::default())
    }

    #[test]
    fn single_argument_trace_gets_default_mode_and_auto_class() {
        let e = parse("trace(4711)").unwrap();
        assert_eq!(
            e,
            Expr::Trace {
                label: l(1),
                mode: Mode::new("T"),
                class: ClassId::auto(l(1)),
                body: Box::new(Expr::num(4711.0)),
            }
        );
    }

    #[test]
    fn immediate_application() {
        let e = parse("fun(x){ x }(5)").unwrap();
        assert_eq!(
            e,
            Expr::app(Expr::lam(l(1), "x", Expr::var("x")), Expr::num(5.0))
        );
    }

    #[test]
    fn let_expands_to_application() {
        let e = parse("let y = 1; y + 2").unwrap();
        let expected = Expr::app(
            Expr::lam(
                l(1),
                "y",
                Expr::op(BinOp::Add, Expr::var("y"), Expr::num(2.0)),
            ),
            Expr::num(1.0),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn let_and_explicit_application_get_identical_labels() {
        let a = parse("let x = new(null); fun(y){ new(y) }(x)").unwrap();
        let b = parse("fun(x){ fun(y){ new(y) }(x) }(new(null))").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classified_trace_and_untrace() {
        let e = parse("untrace(trace(1, \"T\", \"#DOM\"), \"T\"->\"S\", \"#DOM\")").unwrap();
        let Expr::Untrace {
            from,
            to,
            class,
            body,
        } = e
        else {
            panic!()
        };
        assert_eq!(
            (from.as_str(), to.as_str(), class.as_str()),
            ("T", "S", "#DOM")
        );
        assert!(matches!(*body, Expr::Trace { ref class, .. } if class.as_str() == "#DOM"));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("1 - 2 - 3 * 4 < 5").unwrap();
        let lhs = Expr::op(
            BinOp::Sub,
            Expr::op(BinOp::Sub, Expr::num(1.0), Expr::num(2.0)),
            Expr::op(BinOp::Mul, Expr::num(3.0), Expr::num(4.0)),
        );
        assert_eq!(e, Expr::op(BinOp::Lt, lhs, Expr::num(5.0)));
    }

    #[test]
    fn property_assignment_takes_the_rest() {
        let e = parse("let o = new(null); o[\"f\"] = 1 + 2").unwrap();
        let Expr::App(f, _) = e else { panic!() };
        let Expr::Lam(lam) = *f else { panic!() };
        assert!(
            matches!(lam.body, Expr::Put(_, _, ref v) if matches!(**v, Expr::Op(BinOp::Add, _, _)))
        );
    }

    #[test]
    fn unbound_variable_reports_name_and_position() {
        let err = parse("fun(x){ y }").unwrap_err();
        assert_eq!(
            err,
            ParseError::Unbound {
                name: "y".into(),
                span: Span { line: 1, col: 9 }
            }
        );
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse("1 +\n  )").unwrap_err();
        assert!(
            matches!(
                err,
                ParseError::Syntax {
                    span: Span { line: 2, col: 3 },
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn assignment_requires_property_reference() {
        assert!(parse("let x = 1; x = 2").is_err());
    }

    #[test]
    fn unknown_mode_rejected_when_modes_configured() {
        let opts = ParseOptions {
            default_mode: Mode::new("T"),
            modes: Some(vec![Mode::new("T"), Mode::new("S")]),
        };
        assert!(matches!(
            parse_with("trace(1, \"X\", \"c\")", &opts),
            Err(ParseError::UnknownMode { .. })
        ));
    }

    #[test]
    fn labels_are_distinct_and_stable() {
        let src = "let f = fun(x){ new(trace(x)) }; f(fun(y){ y })";
        let a = parse(src).unwrap();
        let b = parse(src).unwrap();
        let ids: Vec<u32> = a.labels().iter().map(|l| l.id()).collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 5]);
        assert_eq!(a, b);
    }
}

//! Abstract syntax of the core language.
//!
//! Every `fun`, `new` and `trace` node carries a [`Label`] naming its
//! site. Labels are numbered in pre-order of the final (desugared) tree so
//! that re-parsing identical text, or the output of [`pretty_print`],
//! yields identical labels.

mod lexer;
mod parser;
mod printer;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use parser::{parse, parse_with, ParseError, ParseOptions};
pub use printer::{pretty_print, pretty_print_with};

/// Source position of a labeled site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Unique site identifier.
///
/// Equality, ordering and hashing look at the id only; the span is carried
/// for reporting.
#[derive(Clone, Copy, Debug)]
pub struct Label {
    id: u32,
    span: Span,
}

impl Label {
    pub fn new(id: u32, span: Span) -> Self {
        Label { id, span }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn span(&self) -> Span {
        self.span
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Label {}

impl Hash for Label {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ℓ{}", self.id)
    }
}

/// Classification mode of a mark, e.g. `T` (tainted) or `S` (sanitized).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode(Arc<str>);

impl Mode {
    pub fn new(name: &str) -> Self {
        Mode(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for Mode {
    fn default() -> Self {
        Mode::new(DEFAULT_MODE)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Mode given to one-argument `trace(e)` unless configured otherwise.
pub const DEFAULT_MODE: &str = "T";

/// Identifier grouping marks for `untrace`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(Arc<str>);

impl ClassId {
    /// Returns `None` for the empty string.
    pub fn new(name: &str) -> Option<Self> {
        if name.is_empty() {
            None
        } else {
            Some(ClassId(Arc::from(name)))
        }
    }

    /// The class implicitly attached to a one-argument `trace` at `label`.
    pub fn auto(label: Label) -> Self {
        ClassId(Arc::from(label.to_string().as_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Literal constants. Numbers compare by bit pattern so that constants
/// (and the trees holding them) have a lawful `Eq`.
#[derive(Clone, Debug)]
pub enum Const {
    Bool(bool),
    Num(f64),
    Str(String),
    Undefined,
    Null,
}

/// Identity of a number constant: its bit pattern, except that every NaN
/// is the same constant. NaN payloads vary between constant folding and
/// runtime arithmetic.
pub fn num_identity(n: f64) -> u64 {
    if n.is_nan() {
        f64::NAN.to_bits()
    } else {
        n.to_bits()
    }
}

impl PartialEq for Const {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Const::Bool(a), Const::Bool(b)) => a == b,
            (Const::Num(a), Const::Num(b)) => num_identity(*a) == num_identity(*b),
            (Const::Str(a), Const::Str(b)) => a == b,
            (Const::Undefined, Const::Undefined) | (Const::Null, Const::Null) => true,
            _ => false,
        }
    }
}

impl Eq for Const {}

impl Hash for Const {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Const::Bool(b) => b.hash(state),
            Const::Num(n) => num_identity(*n).hash(state),
            Const::Str(s) => s.hash(state),
            Const::Undefined | Const::Null => {}
        }
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Bool(b) => write!(f, "{b}"),
            Const::Num(n) => write!(f, "{n}"),
            Const::Str(s) => printer::write_string_literal(f, s),
            Const::Undefined => f.write_str("undefined"),
            Const::Null => f.write_str("null"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
}

impl BinOp {
    pub const ALL: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Eq, BinOp::Lt];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Lt => "<",
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A lambda node. Shared by reference from closures in both interpreters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lambda {
    pub label: Label,
    pub param: String,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Const),
    Var(String),
    Lam(Arc<Lambda>),
    App(Box<Expr>, Box<Expr>),
    Op(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    New(Label, Box<Expr>),
    Get(Box<Expr>, Box<Expr>),
    Put(Box<Expr>, Box<Expr>, Box<Expr>),
    Trace {
        label: Label,
        mode: Mode,
        class: ClassId,
        body: Box<Expr>,
    },
    Untrace {
        from: Mode,
        to: Mode,
        class: ClassId,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn num(n: f64) -> Expr {
        Expr::Const(Const::Num(n))
    }

    pub fn str(s: &str) -> Expr {
        Expr::Const(Const::Str(s.to_string()))
    }

    pub fn var(x: &str) -> Expr {
        Expr::Var(x.to_string())
    }

    pub fn lam(label: Label, param: &str, body: Expr) -> Expr {
        Expr::Lam(Arc::new(Lambda {
            label,
            param: param.to_string(),
            body,
        }))
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    pub fn op(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Op(op, Box::new(l), Box::new(r))
    }

    /// `let x = bound; body`, i.e. `(fun(x){ body })(bound)`.
    pub fn let_in(label: Label, x: &str, bound: Expr, body: Expr) -> Expr {
        Expr::app(Expr::lam(label, x, body), bound)
    }

    /// Immediate children, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => vec![],
            Expr::Lam(l) => vec![&l.body],
            Expr::App(a, b) | Expr::Op(_, a, b) | Expr::Get(a, b) => vec![a, b],
            Expr::If(a, b, c) | Expr::Put(a, b, c) => vec![a, b, c],
            Expr::New(_, e) => vec![e],
            Expr::Trace { body, .. } | Expr::Untrace { body, .. } => vec![body],
        }
    }

    /// The site label of this node, if it has one.
    pub fn label(&self) -> Option<Label> {
        match self {
            Expr::Lam(l) => Some(l.label),
            Expr::New(l, _) => Some(*l),
            Expr::Trace { label, .. } => Some(*label),
            _ => None,
        }
    }

    /// All site labels in pre-order.
    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.walk(&mut |e| out.extend(e.label()));
        out
    }

    /// Labels of `trace` sites in pre-order.
    pub fn trace_labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Trace { label, .. } = e {
                out.push(*label);
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Names of variables occurring free in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match e {
                Expr::Var(x) => {
                    if !bound.iter().any(|b| b == x) {
                        out.insert(x.clone());
                    }
                }
                Expr::Lam(l) => {
                    bound.push(l.param.clone());
                    go(&l.body, bound, out);
                    bound.pop();
                }
                _ => {
                    for c in e.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Renumbers every site label in pre-order starting at `first`, keeping
    /// spans. A trace whose class is its own auto class keeps that property.
    pub fn relabeled(&self, first: u32) -> Expr {
        let mut next = first;
        relabel(self, &mut next)
    }

    /// Rebuilds the tree with `f` applied bottom-up to every node.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let rebuilt = match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Lam(l) => Expr::Lam(Arc::new(Lambda {
                label: l.label,
                param: l.param.clone(),
                body: l.body.map_bottom_up(f),
            })),
            Expr::App(a, b) => Expr::app(a.map_bottom_up(f), b.map_bottom_up(f)),
            Expr::Op(op, a, b) => Expr::op(*op, a.map_bottom_up(f), b.map_bottom_up(f)),
            Expr::If(a, b, c) => Expr::If(
                Box::new(a.map_bottom_up(f)),
                Box::new(b.map_bottom_up(f)),
                Box::new(c.map_bottom_up(f)),
            ),
            Expr::New(l, e) => Expr::New(*l, Box::new(e.map_bottom_up(f))),
            Expr::Get(a, b) => {
                Expr::Get(Box::new(a.map_bottom_up(f)), Box::new(b.map_bottom_up(f)))
            }
            Expr::Put(a, b, c) => Expr::Put(
                Box::new(a.map_bottom_up(f)),
                Box::new(b.map_bottom_up(f)),
                Box::new(c.map_bottom_up(f)),
            ),
            Expr::Trace {
                label,
                mode,
                class,
                body,
            } => Expr::Trace {
                label: *label,
                mode: mode.clone(),
                class: class.clone(),
                body: Box::new(body.map_bottom_up(f)),
            },
            Expr::Untrace {
                from,
                to,
                class,
                body,
            } => Expr::Untrace {
                from: from.clone(),
                to: to.clone(),
                class: class.clone(),
                body: Box::new(body.map_bottom_up(f)),
            },
        };
        f(rebuilt)
    }
}

fn relabel(e: &Expr, next: &mut u32) -> Expr {
    let mut fresh = |old: Label| {
        let l = Label::new(*next, old.span);
        *next += 1;
        l
    };
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Lam(l) => {
            let label = fresh(l.label);
            Expr::Lam(Arc::new(Lambda {
                label,
                param: l.param.clone(),
                body: relabel(&l.body, next),
            }))
        }
        Expr::App(a, b) => {
            let a = relabel(a, next);
            Expr::app(a, relabel(b, next))
        }
        Expr::Op(op, a, b) => {
            let a = relabel(a, next);
            Expr::op(*op, a, relabel(b, next))
        }
        Expr::If(a, b, c) => {
            let a = relabel(a, next);
            let b = relabel(b, next);
            Expr::If(Box::new(a), Box::new(b), Box::new(relabel(c, next)))
        }
        Expr::New(l, p) => {
            let label = fresh(*l);
            Expr::New(label, Box::new(relabel(p, next)))
        }
        Expr::Get(a, b) => {
            let a = relabel(a, next);
            Expr::Get(Box::new(a), Box::new(relabel(b, next)))
        }
        Expr::Put(a, b, c) => {
            let a = relabel(a, next);
            let b = relabel(b, next);
            Expr::Put(Box::new(a), Box::new(b), Box::new(relabel(c, next)))
        }
        Expr::Trace {
            label,
            mode,
            class,
            body,
        } => {
            let new_label = fresh(*label);
            let class = if *class == ClassId::auto(*label) {
                ClassId::auto(new_label)
            } else {
                class.clone()
            };
            Expr::Trace {
                label: new_label,
                mode: mode.clone(),
                class,
                body: Box::new(relabel(body, next)),
            }
        }
        Expr::Untrace {
            from,
            to,
            class,
            body,
        } => Expr::Untrace {
            from: from.clone(),
            to: to.clone(),
            class: class.clone(),
            body: Box::new(relabel(body, next)),
        },
    }
}

/// Replaces the body of every `trace` at `label` with `replacement`,
/// rebuilding all other nodes unchanged. Identity when the label is absent.
pub fn substitute_trace(e: &Expr, label: Label, replacement: &Expr) -> Expr {
    match e {
        Expr::Trace {
            label: l,
            mode,
            class,
            body,
        } => {
            let body = if *l == label {
                replacement.clone()
            } else {
                substitute_trace(body, label, replacement)
            };
            Expr::Trace {
                label: *l,
                mode: mode.clone(),
                class: class.clone(),
                body: Box::new(body),
            }
        }
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Lam(l) => Expr::Lam(Arc::new(Lambda {
            label: l.label,
            param: l.param.clone(),
            body: substitute_trace(&l.body, label, replacement),
        })),
        Expr::App(a, b) => Expr::app(
            substitute_trace(a, label, replacement),
            substitute_trace(b, label, replacement),
        ),
        Expr::Op(op, a, b) => Expr::op(
            *op,
            substitute_trace(a, label, replacement),
            substitute_trace(b, label, replacement),
        ),
        Expr::If(a, b, c) => Expr::If(
            Box::new(substitute_trace(a, label, replacement)),
            Box::new(substitute_trace(b, label, replacement)),
            Box::new(substitute_trace(c, label, replacement)),
        ),
        Expr::New(l, p) => Expr::New(*l, Box::new(substitute_trace(p, label, replacement))),
        Expr::Get(a, b) => Expr::Get(
            Box::new(substitute_trace(a, label, replacement)),
            Box::new(substitute_trace(b, label, replacement)),
        ),
        Expr::Put(a, b, c) => Expr::Put(
            Box::new(substitute_trace(a, label, replacement)),
            Box::new(substitute_trace(b, label, replacement)),
            Box::new(substitute_trace(c, label, replacement)),
        ),
        Expr::Untrace {
            from,
            to,
            class,
            body,
        } => Expr::Untrace {
            from: from.clone(),
            to: to.clone(),
            class: class.clone(),
            body: Box::new(substitute_trace(body, label, replacement)),
        },
    }
}

use std::fmt;

use crate::marks::Marks;
use crate::syntax::{num_identity, Const};

use super::Lattice;

/// A number compared like constants in the syntax tree: by bit pattern, so
/// `0.0` differs from `-0.0`, with all NaNs equal.
#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        num_identity(self.0) == num_identity(other.0)
    }
}

impl Eq for Num {}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `⊥ | c | ⊤` over an arbitrary set of constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Flat<T> {
    #[default]
    Bot,
    Const(T),
    Top,
}

impl<T: Clone + PartialEq> Flat<T> {
    pub fn is_bot(&self) -> bool {
        matches!(self, Flat::Bot)
    }

    pub fn contains(&self, c: &T) -> bool {
        match self {
            Flat::Bot => false,
            Flat::Const(x) => x == c,
            Flat::Top => true,
        }
    }

    pub fn meet(&self, other: &Self) -> Self {
        match (self, other) {
            (Flat::Top, x) | (x, Flat::Top) => x.clone(),
            (Flat::Const(a), Flat::Const(b)) if a == b => Flat::Const(a.clone()),
            _ => Flat::Bot,
        }
    }
}

impl<T: Clone + PartialEq> Lattice for Flat<T> {
    fn bottom() -> Self {
        Flat::Bot
    }

    fn join(&self, other: &Self) -> Self {
        match (self, other) {
            (Flat::Bot, x) | (x, Flat::Bot) => x.clone(),
            (Flat::Const(a), Flat::Const(b)) if a == b => Flat::Const(a.clone()),
            _ => Flat::Top,
        }
    }

    fn leq(&self, other: &Self) -> bool {
        match (self, other) {
            (Flat::Bot, _) | (_, Flat::Top) => true,
            (Flat::Const(a), Flat::Const(b)) => a == b,
            _ => false,
        }
    }
}

/// The base-type value lattice: `undefined`, `null` and booleans as
/// powersets, numbers and strings as flat lattices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BaseLattice {
    pub undef: bool,
    pub null: bool,
    pub tt: bool,
    pub ff: bool,
    pub num: Flat<Num>,
    pub str: Flat<String>,
}

impl BaseLattice {
    /// The singleton embedding of a constant.
    pub fn from_const(c: &Const) -> Self {
        let mut l = BaseLattice::default();
        match c {
            Const::Undefined => l.undef = true,
            Const::Null => l.null = true,
            Const::Bool(true) => l.tt = true,
            Const::Bool(false) => l.ff = true,
            Const::Num(n) => l.num = Flat::Const(Num(*n)),
            Const::Str(s) => l.str = Flat::Const(s.clone()),
        }
        l
    }

    pub fn undefined() -> Self {
        BaseLattice::from_const(&Const::Undefined)
    }

    pub fn bools(tt: bool, ff: bool) -> Self {
        BaseLattice {
            tt,
            ff,
            ..Default::default()
        }
    }

    pub fn strings(s: Flat<String>) -> Self {
        BaseLattice {
            str: s,
            ..Default::default()
        }
    }

    pub fn numbers(n: Flat<Num>) -> Self {
        BaseLattice {
            num: n,
            ..Default::default()
        }
    }

    pub fn is_bot(&self) -> bool {
        *self == BaseLattice::default()
    }

    /// `c ∈ L`
    pub fn contains(&self, c: &Const) -> bool {
        match c {
            Const::Undefined => self.undef,
            Const::Null => self.null,
            Const::Bool(true) => self.tt,
            Const::Bool(false) => self.ff,
            Const::Num(n) => self.num.contains(&Num(*n)),
            Const::Str(s) => self.str.contains(s),
        }
    }

    /// Exactly the boolean `b` and nothing else.
    pub fn is_exactly_bool(&self, b: bool) -> bool {
        *self == BaseLattice::bools(b, !b)
    }

    pub fn meet(&self, other: &Self) -> Self {
        BaseLattice {
            undef: self.undef && other.undef,
            null: self.null && other.null,
            tt: self.tt && other.tt,
            ff: self.ff && other.ff,
            num: self.num.meet(&other.num),
            str: self.str.meet(&other.str),
        }
    }
}

impl Lattice for BaseLattice {
    fn bottom() -> Self {
        BaseLattice::default()
    }

    fn join(&self, other: &Self) -> Self {
        BaseLattice {
            undef: self.undef || other.undef,
            null: self.null || other.null,
            tt: self.tt || other.tt,
            ff: self.ff || other.ff,
            num: self.num.join(&other.num),
            str: self.str.join(&other.str),
        }
    }

    fn leq(&self, other: &Self) -> bool {
        (!self.undef || other.undef)
            && (!self.null || other.null)
            && (!self.tt || other.tt)
            && (!self.ff || other.ff)
            && self.num.leq(&other.num)
            && self.str.leq(&other.str)
    }
}

impl fmt::Display for BaseLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.undef {
            parts.push("undefined".into());
        }
        if self.null {
            parts.push("null".into());
        }
        if self.tt {
            parts.push("true".into());
        }
        if self.ff {
            parts.push("false".into());
        }
        match &self.num {
            Flat::Bot => {}
            Flat::Const(n) => parts.push(n.to_string()),
            Flat::Top => parts.push("num⊤".into()),
        }
        match &self.str {
            Flat::Bot => {}
            Flat::Const(s) => parts.push(Const::Str(s.clone()).to_string()),
            Flat::Top => parts.push("str⊤".into()),
        }
        if parts.is_empty() {
            f.write_str("⊥")
        } else {
            write!(f, "{{{}}}", parts.join(", "))
        }
    }
}

impl Lattice for Marks {
    fn bottom() -> Self {
        Marks::new()
    }

    fn join(&self, other: &Self) -> Self {
        Marks::join(self, other)
    }

    fn leq(&self, other: &Self) -> bool {
        self.is_subset(other)
    }
}

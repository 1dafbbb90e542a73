use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::marks::MarkSet;
use crate::syntax::{Const, Label, Lambda};

/// A heap address together with the site that allocated it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub id: u32,
    pub site: Label,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ξ{}^{}", self.id, self.site)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Const(Const),
    Loc(Location),
}

impl Value {
    pub const UNDEFINED: Value = Value::Const(Const::Undefined);
    pub const NULL: Value = Value::Const(Const::Null);

    pub fn as_loc(&self) -> Option<Location> {
        match self {
            Value::Loc(l) => Some(*l),
            Value::Const(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(c) => write!(f, "{c}"),
            Value::Loc(l) => write!(f, "{l}"),
        }
    }
}

/// A value paired with the marks it depends on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaintedValue {
    pub value: Value,
    pub deps: MarkSet,
}

impl TaintedValue {
    pub fn new(value: Value, deps: MarkSet) -> Self {
        TaintedValue { value, deps }
    }

    pub fn untainted(value: Value) -> Self {
        TaintedValue::new(value, MarkSet::new())
    }

    /// `ω • κ`
    pub fn with(mut self, deps: &MarkSet) -> Self {
        self.deps.join_with(deps);
        self
    }
}

impl fmt::Display for TaintedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.value, self.deps)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env(BTreeMap<String, TaintedValue>);

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn get(&self, x: &str) -> Option<&TaintedValue> {
        self.0.get(x)
    }

    pub fn bind(&self, x: &str, v: TaintedValue) -> Env {
        let mut next = self.0.clone();
        next.insert(x.to_string(), v);
        Env(next)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &TaintedValue)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub env: Env,
    pub lambda: Arc<Lambda>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Storable {
    pub object: BTreeMap<String, TaintedValue>,
    pub closure: Option<Closure>,
    pub proto: Value,
}

impl Storable {
    pub fn object(proto: Value) -> Self {
        Storable {
            object: BTreeMap::new(),
            closure: None,
            proto,
        }
    }

    pub fn function(closure: Closure) -> Self {
        Storable {
            object: BTreeMap::new(),
            closure: Some(closure),
            proto: Value::NULL,
        }
    }
}

/// Allocation-ordered heap; location ids are indexes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Heap {
    cells: Vec<(Location, Storable)>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn alloc(&mut self, site: Label, s: Storable) -> Location {
        let loc = Location {
            id: self.cells.len() as u32,
            site,
        };
        self.cells.push((loc, s));
        loc
    }

    pub fn get(&self, loc: Location) -> Option<&Storable> {
        self.cells
            .get(loc.id as usize)
            .filter(|(l, _)| *l == loc)
            .map(|(_, s)| s)
    }

    pub fn get_mut(&mut self, loc: Location) -> Option<&mut Storable> {
        self.cells
            .get_mut(loc.id as usize)
            .filter(|(l, _)| *l == loc)
            .map(|(_, s)| s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Location, &Storable)> {
        self.cells.iter().map(|(l, s)| (*l, s))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Every location held in a storable (property, closure environment or
    /// prototype) is allocated in this heap.
    pub fn is_closed(&self) -> bool {
        let ok = |v: &Value| v.as_loc().is_none_or(|l| self.get(l).is_some());
        self.cells.iter().all(|(_, s)| {
            s.object.values().all(|tv| ok(&tv.value))
                && ok(&s.proto)
                && s.closure
                    .as_ref()
                    .is_none_or(|c| c.env.iter().all(|(_, tv)| ok(&tv.value)))
        })
    }
}

/// Property lookup along the prototype chain. Returns `undefined:∅` when
/// the chain ends at a base constant or loops back on itself.
pub fn proto_lookup(heap: &Heap, s: &Storable, key: &str) -> TaintedValue {
    let mut visited = BTreeSet::new();
    let mut current = s;
    loop {
        if let Some(v) = current.object.get(key) {
            return v.clone();
        }
        match current.proto {
            Value::Loc(l) if visited.insert(l) => match heap.get(l) {
                Some(next) => current = next,
                None => break,
            },
            _ => break,
        }
    }
    TaintedValue::untainted(Value::UNDEFINED)
}

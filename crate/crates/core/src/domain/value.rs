use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::concrete::{TaintedValue, Value};
use crate::marks::DepSet;
use crate::syntax::{Label, Lambda};

use super::base::{BaseLattice, Flat};
use super::Lattice;

/// `⟨L, Ξ, D⟩`
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractValue {
    pub lattice: BaseLattice,
    pub objs: BTreeSet<Label>,
    pub deps: DepSet,
}

impl AbstractValue {
    pub fn new(lattice: BaseLattice, objs: BTreeSet<Label>, deps: DepSet) -> Self {
        AbstractValue {
            lattice,
            objs,
            deps,
        }
    }

    pub fn base(lattice: BaseLattice) -> Self {
        AbstractValue {
            lattice,
            ..Default::default()
        }
    }

    pub fn object(label: Label, deps: DepSet) -> Self {
        AbstractValue {
            lattice: BaseLattice::default(),
            objs: BTreeSet::from([label]),
            deps,
        }
    }

    /// `ϑ ⊔ D`: joins extra dependencies into the value.
    pub fn with_deps(mut self, deps: &DepSet) -> Self {
        self.deps.join_with(deps);
        self
    }

    pub fn is_bot(&self) -> bool {
        self.lattice.is_bot() && self.objs.is_empty() && self.deps.is_empty()
    }
}

impl Lattice for AbstractValue {
    fn bottom() -> Self {
        AbstractValue::default()
    }

    fn join(&self, other: &Self) -> Self {
        AbstractValue {
            lattice: self.lattice.join(&other.lattice),
            objs: self.objs.union(&other.objs).copied().collect(),
            deps: self.deps.join(&other.deps),
        }
    }

    fn join_with(&mut self, other: &Self) {
        self.lattice = self.lattice.join(&other.lattice);
        self.objs.extend(other.objs.iter().copied());
        self.deps.join_with(&other.deps);
    }

    fn leq(&self, other: &Self) -> bool {
        self.lattice.leq(&other.lattice)
            && self.objs.is_subset(&other.objs)
            && self.deps.is_subset(&other.deps)
    }
}

impl fmt::Display for AbstractValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {{", self.lattice)?;
        for (i, l) in self.objs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}, {}⟩", self.deps)
    }
}

/// The abstraction of a single tainted value.
pub fn alpha(w: &TaintedValue) -> AbstractValue {
    match &w.value {
        Value::Loc(l) => AbstractValue::object(l.site, w.deps.clone()),
        Value::Const(c) => {
            AbstractValue::new(BaseLattice::from_const(c), BTreeSet::new(), w.deps.clone())
        }
    }
}

/// Canonical property key: a single string or any string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrKey {
    Const(String),
    Top,
}

impl StrKey {
    /// `None` when the lattice holds no string at all.
    pub fn canonical(s: &Flat<String>) -> Option<StrKey> {
        match s {
            Flat::Bot => None,
            Flat::Const(s) => Some(StrKey::Const(s.clone())),
            Flat::Top => Some(StrKey::Top),
        }
    }

    pub fn as_flat(&self) -> Flat<String> {
        match self {
            StrKey::Const(s) => Flat::Const(s.clone()),
            StrKey::Top => Flat::Top,
        }
    }

    pub fn contains(&self, s: &str) -> bool {
        match self {
            StrKey::Const(k) => k == s,
            StrKey::Top => true,
        }
    }

    /// Whether the key may denote a string outside `keys`.
    pub fn escapes(&self, keys: &BTreeSet<&str>) -> bool {
        match self {
            StrKey::Const(k) => !keys.contains(k.as_str()),
            StrKey::Top => true,
        }
    }
}

impl fmt::Display for StrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrKey::Const(s) => write!(f, "{s:?}"),
            StrKey::Top => f.write_str("⊤"),
        }
    }
}

/// `Δ`: property keys to values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractObject {
    pub entries: BTreeMap<StrKey, AbstractValue>,
}

impl AbstractObject {
    pub fn get(&self, k: &StrKey) -> Option<&AbstractValue> {
        self.entries.get(k)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Lattice for AbstractObject {
    fn bottom() -> Self {
        AbstractObject::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_with(other);
        out
    }

    fn join_with(&mut self, other: &Self) {
        for (k, v) in &other.entries {
            match self.entries.get_mut(k) {
                Some(mine) => mine.join_with(v),
                None => {
                    self.entries.insert(k.clone(), v.clone());
                }
            }
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.entries
            .iter()
            .all(|(k, v)| other.entries.get(k).is_some_and(|w| v.leq(w)))
    }
}

/// `σ`: variable bindings.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scope {
    /// Shared between the closures created in the same scope.
    pub bindings: Arc<BTreeMap<String, AbstractValue>>,
}

impl Scope {
    pub fn get(&self, x: &str) -> Option<&AbstractValue> {
        self.bindings.get(x)
    }

    pub fn bind(&self, x: &str, v: AbstractValue) -> Scope {
        let mut next = self.clone();
        Arc::make_mut(&mut next.bindings).insert(x.to_string(), v);
        next
    }
}

impl Lattice for Scope {
    fn bottom() -> Self {
        Scope::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_with(other);
        out
    }

    fn join_with(&mut self, other: &Self) {
        if Arc::ptr_eq(&self.bindings, &other.bindings) || other.leq(self) {
            return;
        }
        let bindings = Arc::make_mut(&mut self.bindings);
        for (x, v) in other.bindings.iter() {
            match bindings.get_mut(x) {
                Some(mine) => mine.join_with(v),
                None => {
                    bindings.insert(x.clone(), v.clone());
                }
            }
        }
    }

    fn leq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.bindings, &other.bindings)
            || self
                .bindings
                .iter()
                .all(|(x, v)| other.bindings.get(x).is_some_and(|w| v.leq(w)))
    }
}

/// `Λ^ℓ`: the scopes a lambda was created in, and the lambda itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractClosure {
    pub scope: Scope,
    pub lambda: Arc<Lambda>,
}

/// `θ = ⟨Δ, Λ^ℓ, Ξ⟩`
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractStorable {
    pub object: AbstractObject,
    pub closure: Option<AbstractClosure>,
    pub proto: BTreeSet<Label>,
}

impl AbstractStorable {
    pub fn object(proto: BTreeSet<Label>) -> Self {
        AbstractStorable {
            proto,
            ..Default::default()
        }
    }

    pub fn function(scope: Scope, lambda: Arc<Lambda>) -> Self {
        AbstractStorable {
            closure: Some(AbstractClosure { scope, lambda }),
            ..Default::default()
        }
    }
}

impl Lattice for AbstractStorable {
    fn bottom() -> Self {
        AbstractStorable::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_with(other);
        out
    }

    fn join_with(&mut self, other: &Self) {
        self.object.join_with(&other.object);
        match (&mut self.closure, &other.closure) {
            (Some(mine), Some(theirs)) => mine.scope.join_with(&theirs.scope),
            (None, Some(theirs)) => self.closure = Some(theirs.clone()),
            _ => {}
        }
        self.proto.extend(other.proto.iter().copied());
    }

    fn leq(&self, other: &Self) -> bool {
        let closure = match (&self.closure, &other.closure) {
            (None, _) => true,
            (Some(a), Some(b)) => a.lambda == b.lambda && a.scope.leq(&b.scope),
            (Some(_), None) => false,
        };
        closure && self.object.leq(&other.object) && self.proto.is_subset(&other.proto)
    }
}

/// `Γ = ⟨Σ, D⟩`
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct State {
    /// Storables are shared between states until one of them is updated.
    pub store: BTreeMap<Label, Arc<AbstractStorable>>,
    pub deps: DepSet,
}

impl State {
    pub fn get(&self, l: Label) -> Option<&AbstractStorable> {
        self.store.get(&l).map(|s| &**s)
    }

    /// Mutable access to `Σ(ℓ)`, unsharing it first.
    pub fn get_mut(&mut self, l: Label) -> Option<&mut AbstractStorable> {
        self.store.get_mut(&l).map(Arc::make_mut)
    }

    pub fn insert(&mut self, l: Label, s: AbstractStorable) {
        self.store.insert(l, Arc::new(s));
    }

    /// `Γ(Ξ)`: the storables for the labels in `Ξ ∩ dom(Σ)`.
    pub fn storables<'a>(
        &'a self,
        objs: &'a BTreeSet<Label>,
    ) -> impl Iterator<Item = (Label, &'a AbstractStorable)> + 'a {
        objs.iter()
            .filter_map(|l| self.store.get(l).map(|s| (*l, &**s)))
    }

    /// `Γ[D ↦ D']`
    pub fn with_deps(mut self, deps: DepSet) -> Self {
        self.deps = deps;
        self
    }

    /// Joins `θ` into `Σ(ℓ)`, binding it when absent.
    pub fn join_at(&mut self, l: Label, s: &AbstractStorable) {
        match self.store.get_mut(&l) {
            Some(mine) if s.leq(mine) => {}
            Some(mine) => Arc::make_mut(mine).join_with(s),
            None => {
                self.store.insert(l, Arc::new(s.clone()));
            }
        }
    }

    fn join_shared(&mut self, l: Label, s: &Arc<AbstractStorable>) {
        match self.store.get_mut(&l) {
            Some(mine) if Arc::ptr_eq(mine, s) || s.leq(mine) => {}
            Some(mine) => Arc::make_mut(mine).join_with(s),
            None => {
                self.store.insert(l, s.clone());
            }
        }
    }
}

impl Lattice for State {
    fn bottom() -> Self {
        State::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_with(other);
        out
    }

    fn join_with(&mut self, other: &Self) {
        for (l, s) in &other.store {
            self.join_shared(*l, s);
        }
        self.deps.join_with(&other.deps);
    }

    fn leq(&self, other: &Self) -> bool {
        self.deps.is_subset(&other.deps)
            && self.store.iter().all(|(l, s)| {
                other
                    .store
                    .get(l)
                    .is_some_and(|t| Arc::ptr_eq(s, t) || s.leq(t))
            })
    }
}

/// A state paired with a value; the shape of function inputs and outputs.
pub type Config = (State, AbstractValue);

impl Lattice for Config {
    fn bottom() -> Self {
        (State::bottom(), AbstractValue::bottom())
    }

    fn join(&self, other: &Self) -> Self {
        (self.0.join(&other.0), self.1.join(&other.1))
    }

    fn join_with(&mut self, other: &Self) {
        self.0.join_with(&other.0);
        self.1.join_with(&other.1);
    }

    fn leq(&self, other: &Self) -> bool {
        self.1.leq(&other.1) && self.0.leq(&other.0)
    }
}

/// The joined input and output of every analysis of one function.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub input: Config,
    pub output: Config,
}

/// `F`: function label to summary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FunctionStore {
    pub summaries: BTreeMap<Label, Summary>,
}

impl FunctionStore {
    pub fn get(&self, l: Label) -> Option<&Summary> {
        self.summaries.get(&l)
    }
}

impl Lattice for FunctionStore {
    fn bottom() -> Self {
        FunctionStore::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.join_with(other);
        out
    }

    fn join_with(&mut self, other: &Self) {
        for (l, s) in &other.summaries {
            let mine = self.summaries.entry(*l).or_default();
            mine.input.join_with(&s.input);
            mine.output.join_with(&s.output);
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.summaries.iter().all(|(l, s)| {
            other
                .summaries
                .get(l)
                .is_some_and(|t| s.input.leq(&t.input) && s.output.leq(&t.output))
        })
    }
}

//! Strategies shared by the property tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;

use depcore::concrete::{Closure, Env, Heap, Location, Storable, TaintedValue, Value};
use depcore::domain::{
    alpha, AbstractClosure, AbstractObject, AbstractStorable, AbstractValue, BaseLattice, Flat,
    Lattice, Num, Scope, State, StrKey,
};
use depcore::syntax::{ClassId, Const, Expr, Label, Lambda, Mode, Span};
use depcore::{Mark, Marks};

pub const SITES: u32 = 5;
const KEYS: [&str; 3] = ["a", "b", "k"];
const VARS: [&str; 3] = ["x", "y", "z"];

pub fn label(id: u32) -> Label {
    Label::new(id, Span::default())
}

/// The lambda allocated at `site`; one per site, as in a parsed program.
pub fn lambda_at(site: Label) -> Arc<Lambda> {
    Arc::new(Lambda {
        label: site,
        param: "x".into(),
        body: Expr::var("x"),
    })
}

pub fn mark() -> impl Strategy<Value = Mark> {
    (0..6u32, prop::bool::ANY, 0..3u8).prop_map(|(id, sanitized, class)| {
        let l = label(id);
        let mode = Mode::new(if sanitized { "S" } else { "T" });
        let class = match class {
            0 => ClassId::auto(l),
            1 => ClassId::new("#DOM").unwrap(),
            _ => ClassId::new("c").unwrap(),
        };
        Mark::new(l, mode, class)
    })
}

pub fn marks() -> impl Strategy<Value = Marks> {
    prop::collection::vec(mark(), 0..4).prop_map(|v| v.into_iter().collect())
}

pub fn flat_num() -> impl Strategy<Value = Flat<Num>> {
    prop_oneof![
        Just(Flat::Bot),
        (-2..3i32).prop_map(|n| Flat::Const(Num(n as f64))),
        Just(Flat::Top),
    ]
}

pub fn flat_str() -> impl Strategy<Value = Flat<String>> {
    prop_oneof![
        Just(Flat::Bot),
        prop::sample::select(KEYS.to_vec()).prop_map(|s| Flat::Const(s.to_string())),
        Just(Flat::Top),
    ]
}

pub fn base_lattice() -> impl Strategy<Value = BaseLattice> {
    (any::<[bool; 4]>(), flat_num(), flat_str()).prop_map(|([undef, null, tt, ff], num, str)| {
        BaseLattice {
            undef,
            null,
            tt,
            ff,
            num,
            str,
        }
    })
}

pub fn sites() -> impl Strategy<Value = BTreeSet<Label>> {
    prop::collection::btree_set((0..SITES).prop_map(label), 0..3)
}

pub fn abstract_value() -> impl Strategy<Value = AbstractValue> {
    (base_lattice(), sites(), marks()).prop_map(|(l, objs, deps)| AbstractValue::new(l, objs, deps))
}

pub fn str_key() -> impl Strategy<Value = StrKey> {
    prop_oneof![
        3 => prop::sample::select(KEYS.to_vec()).prop_map(|s| StrKey::Const(s.to_string())),
        1 => Just(StrKey::Top),
    ]
}

pub fn abstract_object() -> impl Strategy<Value = AbstractObject> {
    prop::collection::btree_map(str_key(), abstract_value(), 0..3)
        .prop_map(|entries| AbstractObject { entries })
}

/// Objects of the shape the analysis produces: every entry admits
/// `undefined`.
pub fn analysis_object() -> impl Strategy<Value = AbstractObject> {
    abstract_object().prop_map(|mut o| {
        for v in o.entries.values_mut() {
            v.lattice.undef = true;
        }
        o
    })
}

pub fn scope() -> impl Strategy<Value = Scope> {
    prop::collection::btree_map(
        prop::sample::select(VARS.to_vec()).prop_map(String::from),
        abstract_value(),
        0..3,
    )
    .prop_map(|b| Scope {
        bindings: Arc::new(b),
    })
}

fn storable_at(
    site: Label,
    object: impl Strategy<Value = AbstractObject>,
) -> impl Strategy<Value = AbstractStorable> {
    (object, prop::option::of(scope()), sites()).prop_map(move |(object, scope, proto)| {
        AbstractStorable {
            object,
            closure: scope.map(|scope| AbstractClosure {
                scope,
                lambda: lambda_at(site),
            }),
            proto,
        }
    })
}

pub fn abstract_storable() -> impl Strategy<Value = AbstractStorable> {
    storable_at(label(0), abstract_object())
}

pub fn analysis_storable() -> impl Strategy<Value = AbstractStorable> {
    storable_at(label(0), analysis_object())
}

fn state_with(object: fn() -> BoxedStrategy<AbstractObject>) -> impl Strategy<Value = State> {
    (
        prop::collection::btree_set(0..SITES, 0..4).prop_flat_map(move |ids| {
            ids.into_iter()
                .map(|id| storable_at(label(id), object()).prop_map(move |s| (id, s)))
                .collect::<Vec<_>>()
        }),
        marks(),
    )
        .prop_map(|(entries, deps)| {
            let mut g = State::bottom();
            for (id, s) in entries {
                g.insert(label(id), s);
            }
            g.deps = deps;
            g
        })
}

pub fn state() -> impl Strategy<Value = State> {
    state_with(|| abstract_object().boxed())
}

pub fn analysis_state() -> impl Strategy<Value = State> {
    state_with(|| analysis_object().boxed())
}

pub fn constant() -> impl Strategy<Value = Const> {
    prop_oneof![
        any::<bool>().prop_map(Const::Bool),
        (-3..4i32).prop_map(|n| Const::Num(n as f64)),
        prop::sample::select(vec![
            0.5,
            -0.0,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NAN,
            1e300
        ])
        .prop_map(Const::Num),
        any::<f64>().prop_map(Const::Num),
        prop::sample::select(vec!["", "a", "b", "ab", "1", "k"])
            .prop_map(|s| Const::Str(s.to_string())),
        Just(Const::Undefined),
        Just(Const::Null),
    ]
}

pub fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        3 => constant().prop_map(Value::Const),
        1 => (0..4u32, 0..SITES).prop_map(|(id, site)| Value::Loc(Location { id, site: label(site) })),
    ]
}

pub fn tainted_value() -> impl Strategy<Value = TaintedValue> {
    (value(), marks()).prop_map(|(v, m)| TaintedValue::new(v, m))
}

pub fn env() -> impl Strategy<Value = Env> {
    prop::collection::btree_map(prop::sample::select(VARS.to_vec()), tainted_value(), 0..3)
        .prop_map(|m| m.into_iter().fold(Env::new(), |env, (x, v)| env.bind(x, v)))
}

/// A concrete storable allocated at `site`.
pub fn storable(site: Label) -> impl Strategy<Value = Storable> {
    (
        prop::collection::btree_map(
            prop::sample::select(KEYS.to_vec()).prop_map(String::from),
            tainted_value(),
            0..3,
        ),
        prop::option::of(env()),
        prop_oneof![
            Just(Value::NULL),
            (0..SITES).prop_map(|s| Value::Loc(Location {
                id: 0,
                site: label(s)
            }))
        ],
    )
        .prop_map(move |(object, env, proto)| Storable {
            object,
            closure: env.map(|env| Closure {
                env,
                lambda: lambda_at(site),
            }),
            proto,
        })
}

/// Prototype links point at earlier locations of the heap, as allocation
/// guarantees.
pub fn heap() -> impl Strategy<Value = Heap> {
    prop::collection::vec(
        (0..SITES).prop_flat_map(|s| storable(label(s)).prop_map(move |st| (s, st))),
        0..4,
    )
    .prop_map(|cells| {
        let mut h = Heap::new();
        let mut locs: Vec<Location> = Vec::new();
        for (i, (s, mut st)) in cells.into_iter().enumerate() {
            st.proto = match st.proto {
                Value::Loc(l) if i > 0 => Value::Loc(locs[l.site.id() as usize % i]),
                _ => Value::NULL,
            };
            locs.push(h.alloc(label(s), st));
        }
        h
    })
}

pub fn abstract_scope(env: &Env) -> Scope {
    Scope {
        bindings: Arc::new(env.iter().map(|(x, w)| (x.clone(), alpha(w))).collect()),
    }
}

/// The least analysis-shaped storable consistent with `s`.
pub fn abstract_storable_of(s: &Storable) -> AbstractStorable {
    let mut entries: BTreeMap<StrKey, AbstractValue> = s
        .object
        .iter()
        .map(|(k, w)| (StrKey::Const(k.clone()), alpha(w)))
        .collect();
    for v in entries.values_mut() {
        v.lattice.undef = true;
    }
    AbstractStorable {
        object: AbstractObject { entries },
        closure: s.closure.as_ref().map(|c| AbstractClosure {
            scope: abstract_scope(&c.env),
            lambda: c.lambda.clone(),
        }),
        proto: s.proto.as_loc().map(|l| l.site).into_iter().collect(),
    }
}

pub fn abstract_heap(h: &Heap) -> State {
    let mut g = State::bottom();
    for (loc, s) in h.iter() {
        g.join_at(loc.site, &abstract_storable_of(s));
    }
    g
}

pub fn config() -> impl Strategy<Value = depcore::domain::Config> {
    (state(), abstract_value())
}

pub fn function_store() -> impl Strategy<Value = depcore::domain::FunctionStore> {
    prop::collection::btree_map((0..SITES).prop_map(label), (config(), config()), 0..3).prop_map(
        |m| depcore::domain::FunctionStore {
            summaries: m
                .into_iter()
                .map(|(l, (input, output))| (l, depcore::domain::Summary { input, output }))
                .collect(),
        },
    )
}

/// The join-semilattice laws, each checked on one random triple.
pub mod laws {
    use std::fmt::Debug;

    use depcore::domain::Lattice;
    use proptest::test_runner::TestCaseError;
    use proptest::{prop_assert, prop_assert_eq};

    pub type Law<T> = fn(&T, &T, &T) -> Result<(), TestCaseError>;

    pub fn all<T: Lattice + Debug>() -> [(&'static str, Law<T>); 8] {
        [
            ("idempotence", idempotent::<T>),
            ("commutativity", commutative::<T>),
            ("associativity", associative::<T>),
            ("absorption", absorption::<T>),
            ("upper bound", upper_bound::<T>),
            ("order agrees with join", order_agrees_with_join::<T>),
            ("bottom is the unit", bottom_unit::<T>),
            ("antisymmetry", antisymmetric::<T>),
        ]
    }

    pub fn idempotent<T: Lattice + Debug>(a: &T, _: &T, _: &T) -> Result<(), TestCaseError> {
        prop_assert_eq!(&a.join(a), a);
        Ok(())
    }

    pub fn commutative<T: Lattice + Debug>(a: &T, b: &T, _: &T) -> Result<(), TestCaseError> {
        prop_assert_eq!(a.join(b), b.join(a));
        Ok(())
    }

    pub fn associative<T: Lattice + Debug>(a: &T, b: &T, c: &T) -> Result<(), TestCaseError> {
        prop_assert_eq!(a.join(&b.join(c)), a.join(b).join(c));
        Ok(())
    }

    pub fn absorption<T: Lattice + Debug>(a: &T, b: &T, _: &T) -> Result<(), TestCaseError> {
        let ab = a.join(b);
        prop_assert_eq!(&a.join(&ab), &ab);
        prop_assert_eq!(&ab.join(b), &ab);
        Ok(())
    }

    pub fn upper_bound<T: Lattice + Debug>(a: &T, b: &T, _: &T) -> Result<(), TestCaseError> {
        let ab = a.join(b);
        prop_assert!(a.leq(&ab) && b.leq(&ab));
        Ok(())
    }

    pub fn order_agrees_with_join<T: Lattice + Debug>(
        a: &T,
        b: &T,
        _: &T,
    ) -> Result<(), TestCaseError> {
        prop_assert_eq!(a.leq(b), &a.join(b) == b);
        let ab = a.join(b);
        prop_assert!(a.leq(&ab));
        Ok(())
    }

    pub fn bottom_unit<T: Lattice + Debug>(a: &T, _: &T, _: &T) -> Result<(), TestCaseError> {
        prop_assert_eq!(&T::bottom().join(a), a);
        prop_assert!(T::bottom().leq(a));
        Ok(())
    }

    pub fn antisymmetric<T: Lattice + Debug>(a: &T, b: &T, _: &T) -> Result<(), TestCaseError> {
        prop_assert!(a.leq(a));
        if a.leq(b) && b.leq(a) {
            prop_assert_eq!(a, b);
        }
        Ok(())
    }
}

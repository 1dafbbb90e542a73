mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use depcore::analysis::{get_iterate, put_iterate};
use depcore::concrete::{proto_lookup, Heap, Storable, TaintedValue, Value};
use depcore::consistency::{
    consistent_env, consistent_heap, consistent_storable, consistent_value,
};
use depcore::domain::{
    alpha, AbstractObject, AbstractStorable, AbstractValue, Flat, Lattice, State, StrKey,
};

use common::{abstract_heap, abstract_scope, abstract_storable_of, label};

fn key() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "k", "zz"]).prop_map(String::from)
}

/// A key lattice containing `k`.
fn key_lattice(k: &str, top: bool) -> Flat<String> {
    if top {
        Flat::Top
    } else {
        Flat::Const(k.to_string())
    }
}

proptest! {
    #[test]
    fn alpha_is_consistent(w in common::tainted_value()) {
        prop_assert!(consistent_value(&w, &alpha(&w)).ok);
    }

    #[test]
    fn values_upward_closed(w in common::tainted_value(), x in common::abstract_value(), y in common::abstract_value()) {
        let a = alpha(&w).join(&x);
        prop_assert!(consistent_value(&w, &a).ok);
        prop_assert!(consistent_value(&w, &a.join(&y)).ok);
    }

    #[test]
    fn envs_upward_closed(env in common::env(), x in common::scope(), y in common::scope()) {
        let s = abstract_scope(&env).join(&x);
        prop_assert!(consistent_env(&env, &s).ok);
        prop_assert!(consistent_env(&env, &s.join(&y)).ok);
    }

    // Abstract objects built by the analysis admit `undefined` in every
    // entry (see `analysis_props`); upward closure is claimed for those.
    #[test]
    fn storables_upward_closed(s in common::storable(label(0)), x in common::analysis_storable(), y in common::analysis_storable()) {
        let t = abstract_storable_of(&s).join(&x);
        prop_assert!(consistent_storable(&s, &t).ok, "{}", consistent_storable(&s, &t));
        let v = consistent_storable(&s, &t.join(&y));
        prop_assert!(v.ok, "{v}");
    }

    #[test]
    fn heaps_upward_closed(h in common::heap(), x in common::analysis_state(), y in common::analysis_state()) {
        let g = abstract_heap(&h).join(&x);
        prop_assert!(consistent_heap(&h, &g).ok);
        let v = consistent_heap(&h, &g.join(&y));
        prop_assert!(v.ok, "{v}");
    }

    #[test]
    fn dependency_join(
        w in common::tainted_value(),
        x in common::abstract_value(),
        k in common::marks(),
        extra in common::marks(),
    ) {
        let a = alpha(&w).join(&x);
        let d = k.join(&extra);
        prop_assert!(consistent_value(&w.clone().with(&k), &a.with_deps(&d)).ok);
    }

    #[test]
    fn property_update_keeps_storables_consistent(
        s in common::storable(label(0)),
        k in common::str_key(),
        v in common::abstract_value(),
    ) {
        let mut t = abstract_storable_of(&s);
        let entry = t.object.entries.entry(k).or_insert_with(|| AbstractValue::base(depcore::domain::BaseLattice::undefined()));
        entry.join_with(&v);
        prop_assert!(consistent_storable(&s, &t).ok);
    }

    #[test]
    fn property_assignment(
        h in common::heap(),
        pick in any::<prop::sample::Index>(),
        k in key(),
        top in any::<bool>(),
        w in common::tainted_value(),
        x in common::abstract_value(),
    ) {
        prop_assume!(!h.is_empty());
        let loc = h.iter().nth(pick.index(h.len())).unwrap().0;
        let g = abstract_heap(&h);
        let mut h2 = h.clone();
        h2.get_mut(loc).unwrap().object.insert(k.clone(), w.clone());
        let g2 = put_iterate(g, &BTreeSet::from([loc.site]), &key_lattice(&k, top), &alpha(&w).join(&x));
        let v = consistent_heap(&h2, &g2);
        prop_assert!(v.ok, "{v}");
    }

    #[test]
    fn property_reference(
        h in common::heap(),
        pick in any::<prop::sample::Index>(),
        k in key(),
        top in any::<bool>(),
        x in common::analysis_state(),
    ) {
        prop_assume!(!h.is_empty());
        let loc = h.iter().nth(pick.index(h.len())).unwrap().0;
        let g = abstract_heap(&h).join(&x);
        let found = proto_lookup(&h, h.get(loc).unwrap(), &k);
        let a = get_iterate(&g, &BTreeSet::from([loc.site]), &key_lattice(&k, top));
        let v = consistent_value(&found, &a);
        prop_assert!(v.ok, "{v}");
    }
}

#[test]
fn missing_escaping_entry_without_undefined_is_inconsistent() {
    // An entry for a key the object lacks must admit `undefined`.
    let s = Storable::object(Value::NULL);
    let mut t = AbstractStorable {
        object: AbstractObject {
            entries: [(
                StrKey::Const("a".into()),
                AbstractValue::base(depcore::domain::BaseLattice::strings(Flat::Top)),
            )]
            .into_iter()
            .collect(),
        },
        ..AbstractStorable::default()
    };
    assert!(!consistent_storable(&s, &t).ok);
    t.object
        .entries
        .values_mut()
        .for_each(|v| v.lattice.undef = true);
    assert!(consistent_storable(&s, &t).ok);
}

#[test]
fn abstract_heap_of_empty_heap_is_bottom() {
    assert_eq!(abstract_heap(&Heap::new()), State::bottom());
    assert!(consistent_heap(&Heap::new(), &State::bottom()).ok);
}

#[test]
fn alpha_keeps_marks() {
    let w = TaintedValue::untainted(Value::NULL);
    assert_eq!(alpha(&w).deps, Default::default());
}

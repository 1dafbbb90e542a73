use std::collections::BTreeSet;

use crate::domain::{
    abstract_op, AbstractStorable, AbstractValue, BaseLattice, Flat, FunctionStore, Lattice, Scope,
    State, StrKey,
};
use crate::marks::{DepSet, Mark};
use crate::syntax::{Expr, Label};

use super::{AnalysisError, AnalysisObserver, Rule};

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_SEGMENT: usize = 4 * 1024 * 1024;

/// The abstract evaluator `Γ, σ ⊢ e ⇓ Γ' | ϑ` together with the function
/// store it memoizes applications in.
pub struct Analyzer<'o> {
    pub(super) fstore: FunctionStore,
    /// Functions whose body has been analyzed in the current round. A
    /// memoized summary is only reused after the body ran at least once
    /// in the round, so every round refreshes the summaries it depends on.
    visited: BTreeSet<Label>,
    evals: u64,
    body_evals: u64,
    budget: u64,
    observer: Option<&'o mut dyn AnalysisObserver>,
}

type Out = Result<(State, AbstractValue), AnalysisError>;

impl<'o> Analyzer<'o> {
    pub fn new(fstore: FunctionStore, budget: u64) -> Self {
        Analyzer {
            fstore,
            visited: BTreeSet::new(),
            evals: 0,
            body_evals: 0,
            budget,
            observer: None,
        }
    }

    pub fn with_observer(mut self, observer: &'o mut dyn AnalysisObserver) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn fstore(&self) -> &FunctionStore {
        &self.fstore
    }

    pub fn into_fstore(self) -> FunctionStore {
        self.fstore
    }

    /// Number of function bodies analyzed so far.
    pub fn body_evaluations(&self) -> u64 {
        self.body_evals
    }

    pub fn evaluations(&self) -> u64 {
        self.evals
    }

    /// Starts a new program iteration.
    pub fn begin_round(&mut self) {
        self.visited.clear();
    }

    pub fn aeval(&mut self, g: State, s: &Scope, e: &Expr) -> Out {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(AnalysisError::Budget {
                budget: self.budget,
            });
        }
        stacker::maybe_grow(STACK_RED_ZONE, STACK_SEGMENT, || self.step(g, s, e))
    }

    fn restored(&mut self, rule: Rule, entry: &DepSet, mut g: State) -> State {
        if let Some(o) = self.observer.as_deref_mut() {
            o.on_restore(rule, entry, &g.deps);
        }
        g.deps = entry.clone();
        g
    }

    fn step(&mut self, g: State, s: &Scope, e: &Expr) -> Out {
        let d_entry = g.deps.clone();
        match e {
            Expr::Const(c) => {
                let v = AbstractValue::new(BaseLattice::from_const(c), BTreeSet::new(), d_entry);
                Ok((g, v))
            }
            Expr::Var(x) => {
                let v = s.get(x).cloned().unwrap_or_default().with_deps(&d_entry);
                Ok((g, v))
            }
            Expr::Op(op, e0, e1) => {
                let (g, v0) = self.aeval(g, s, e0)?;
                let (g, v1) = self.aeval(g, s, e1)?;
                let (l, objs) = abstract_op(*op, &v0, &v1);
                Ok((g, AbstractValue::new(l, objs, v0.deps.join(&v1.deps))))
            }
            Expr::New(label, proto) => {
                let (mut g, v) = self.aeval(g, s, proto)?;
                // Checked after the prototype so a recursive allocation made
                // while evaluating it is joined rather than overwritten.
                g.join_at(*label, &AbstractStorable::object(v.objs));
                Ok((g, AbstractValue::object(*label, d_entry.join(&v.deps))))
            }
            Expr::Lam(lam) => {
                let mut g = g;
                g.join_at(
                    lam.label,
                    &AbstractStorable::function(s.clone(), lam.clone()),
                );
                self.fstore.summaries.entry(lam.label).or_default();
                Ok((g, AbstractValue::object(lam.label, d_entry)))
            }
            Expr::App(e0, e1) => {
                let (g, v0) = self.aeval(g, s, e0)?;
                let (g, v1) = self.aeval(g, s, e1)?;
                let callee_deps = g.deps.join(&v0.deps);
                let g = g.with_deps(callee_deps);
                let (g, v) = self.app_iterate(g, &v0.objs, &v1)?;
                Ok((self.restored(Rule::App, &d_entry, g), v))
            }
            Expr::Get(e0, e1) => {
                let (g, v0) = self.aeval(g, s, e0)?;
                let (g, v1) = self.aeval(g, s, e1)?;
                let found = if v1.lattice.str.is_bot() {
                    AbstractValue::bottom()
                } else {
                    get_iterate(&g, &v0.objs, &v1.lattice.str)
                };
                let deps = v0.deps.join(&v1.deps).join(&found.deps);
                Ok((g, AbstractValue::new(found.lattice, found.objs, deps)))
            }
            Expr::Put(e0, e1, e2) => {
                let (g, v0) = self.aeval(g, s, e0)?;
                let (g, v1) = self.aeval(g, s, e1)?;
                let (g, v) = self.aeval(g, s, e2)?;
                let stored = v.clone().with_deps(&v0.deps.join(&v1.deps));
                let g = put_iterate(g, &v0.objs, &v1.lattice.str, &stored);
                Ok((g, v))
            }
            Expr::If(e0, e1, e2) => {
                let (g, v0) = self.aeval(g, s, e0)?;
                let branch_deps = g.deps.join(&v0.deps);
                let g = g.with_deps(branch_deps);
                let exact = v0.objs.is_empty();
                let (g, v) = if exact && v0.lattice.is_exactly_bool(true) {
                    self.aeval(g, s, e1)?
                } else if exact && v0.lattice.is_exactly_bool(false) {
                    self.aeval(g, s, e2)?
                } else {
                    let (mut g1, v1) = self.aeval(g.clone(), s, e1)?;
                    let (g2, v2) = self.aeval(g, s, e2)?;
                    g1.join_with(&g2);
                    (g1, v1.join(&v2))
                };
                Ok((self.restored(Rule::If, &d_entry, g), v))
            }
            Expr::Trace {
                label,
                mode,
                class,
                body,
            } => {
                let mut inner = d_entry.clone();
                inner.insert(Mark::new(*label, mode.clone(), class.clone()));
                let (g, v) = self.aeval(g.with_deps(inner), s, body)?;
                Ok((self.restored(Rule::Trace, &d_entry, g), v))
            }
            Expr::Untrace {
                from,
                to,
                class,
                body,
            } => {
                let (g, mut v) = self.aeval(g, s, body)?;
                v.deps = v.deps.reclassify(from, to, class);
                Ok((self.restored(Rule::Untrace, &d_entry, g), v))
            }
        }
    }

    /// Applies every closure among `callees`, threading the state and
    /// joining the results. Non-function storables contribute nothing.
    pub fn app_iterate(&mut self, g: State, callees: &BTreeSet<Label>, arg: &AbstractValue) -> Out {
        let closures: Vec<_> = g
            .storables(callees)
            .filter_map(|(l, st)| st.closure.clone().map(|c| (l, c)))
            .collect();
        let mut g = g;
        let mut result = AbstractValue::bottom();
        for (label, closure) in closures {
            let (next, v) = self.apply(g, label, &closure.scope, &closure.lambda, arg)?;
            g = next;
            result.join_with(&v);
        }
        Ok((g, result))
    }

    fn apply(
        &mut self,
        g: State,
        label: Label,
        scope: &Scope,
        lam: &crate::syntax::Lambda,
        arg: &AbstractValue,
    ) -> Out {
        let input = (g, arg.clone());
        let summary = self.fstore.summaries.entry(label).or_default();
        let memoized = self.visited.contains(&label) && input.leq(&summary.input);
        if let Some(o) = self.observer.as_deref_mut() {
            o.on_call(label, arg, memoized);
        }
        if memoized {
            // The caller's store is kept: the summary may predate
            // allocations made since it was computed.
            let (mut g, _) = input;
            let (out_state, out_value) = &self.fstore.summaries[&label].output;
            let deps = g.deps.clone();
            g.join_with(out_state);
            g.deps = deps;
            return Ok((g, out_value.clone()));
        }
        self.visited.insert(label);
        let entry = self.fstore.summaries.get_mut(&label).unwrap();
        entry.input.join_with(&input);
        let joined_in = entry.input.clone();
        self.body_evals += 1;
        let (in_state, in_value) = joined_in;
        let (g_out, v_out) = self.aeval(in_state, &scope.bind(&lam.param, in_value), &lam.body)?;
        let entry = self.fstore.summaries.get_mut(&label).unwrap();
        let before = entry.clone();
        entry.output.join_with(&(g_out.clone(), v_out.clone()));
        if let Some(o) = self.observer.as_deref_mut() {
            let after = self.fstore.summaries[&label].clone();
            o.on_summary(label, &before, &after);
        }
        Ok((g_out, v_out))
    }
}

/// `Γ ⊢Get Θ, L ⇓ ϑ`: joins every entry whose key meets `key` over the
/// receivers and, transitively, their prototypes. Each visited storable
/// also contributes the `undefined` of a missing property.
pub fn get_iterate(g: &State, receivers: &BTreeSet<Label>, key: &Flat<String>) -> AbstractValue {
    let mut out = AbstractValue::bottom();
    let mut seen = BTreeSet::new();
    let mut work: Vec<Label> = receivers.iter().copied().collect();
    while let Some(l) = work.pop() {
        if !seen.insert(l) {
            continue;
        }
        let Some(st) = g.get(l) else { continue };
        for (k, v) in &st.object.entries {
            if !k.as_flat().meet(key).is_bot() {
                out.join_with(v);
            }
        }
        out.lattice.undef = true;
        work.extend(st.proto.iter().copied());
    }
    out
}

/// `Γ ⊢Put Ξ, L, ϑ ⇓ Γ'`: weak update of the canonical key on every
/// target present in the store.
pub fn put_iterate(
    mut g: State,
    targets: &BTreeSet<Label>,
    key: &Flat<String>,
    v: &AbstractValue,
) -> State {
    let Some(k) = StrKey::canonical(key) else {
        return g;
    };
    for l in targets {
        let Some(st) = g.get_mut(*l) else { continue };
        match st.object.entries.get_mut(&k) {
            Some(existing) => existing.join_with(v),
            None => {
                // A fresh entry also describes objects of this site that
                // never received the property.
                let mut fresh = v.clone();
                fresh.lattice.undef = true;
                st.object.entries.insert(k.clone(), fresh);
            }
        }
    }
    g
}

//! The consistency relation between concrete and abstract results, and a
//! differential check running both interpreters on one program.

use std::collections::BTreeSet;
use std::fmt;

use crate::analysis::{analyze_with, AnalysisOptions};
use crate::concrete::{run, Closure, Env, Heap, Limits, Storable, TaintedValue, Value};
use crate::domain::{
    AbstractClosure, AbstractObject, AbstractStorable, AbstractValue, Scope, State,
};
use crate::syntax::Expr;

/// Outcome of a consistency check; on failure, the access path to the
/// first violated clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyVerdict {
    pub ok: bool,
    pub failure_path: String,
}

impl ConsistencyVerdict {
    fn from(r: Result<(), String>) -> Self {
        match r {
            Ok(()) => ConsistencyVerdict {
                ok: true,
                failure_path: String::new(),
            },
            Err(path) => ConsistencyVerdict {
                ok: false,
                failure_path: path,
            },
        }
    }
}

impl fmt::Display for ConsistencyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            f.write_str("consistent")
        } else {
            write!(f, "inconsistent at {}", self.failure_path)
        }
    }
}

pub fn consistent_value(w: &TaintedValue, a: &AbstractValue) -> ConsistencyVerdict {
    ConsistencyVerdict::from(value(w, a, "value"))
}

pub fn consistent_env(env: &Env, s: &Scope) -> ConsistencyVerdict {
    ConsistencyVerdict::from(scope(env, s, "env"))
}

pub fn consistent_storable(s: &Storable, t: &AbstractStorable) -> ConsistencyVerdict {
    ConsistencyVerdict::from(storable(s, t, "storable"))
}

pub fn consistent_heap(h: &Heap, g: &State) -> ConsistencyVerdict {
    ConsistencyVerdict::from(heap(h, g))
}

fn value(w: &TaintedValue, a: &AbstractValue, path: &str) -> Result<(), String> {
    if !w.deps.is_subset(&a.deps) {
        return Err(format!("{path}: marks {} not within {}", w.deps, a.deps));
    }
    match &w.value {
        Value::Loc(l) if !a.objs.contains(&l.site) => {
            Err(format!("{path}: site {} not among objects", l.site))
        }
        Value::Const(c) if !a.lattice.contains(c) => {
            Err(format!("{path}: {c} not in {}", a.lattice))
        }
        _ => Ok(()),
    }
}

fn object(
    o: &std::collections::BTreeMap<String, TaintedValue>,
    d: &AbstractObject,
    path: &str,
) -> Result<(), String> {
    for (k, v) in o {
        let hit = d
            .entries
            .iter()
            .any(|(key, av)| key.contains(k) && value(v, av, "").is_ok());
        if !hit {
            return Err(format!("{path}[{k:?}]: no consistent entry"));
        }
    }
    // Every entry that may describe a property this object lacks must
    // admit `undefined`.
    let dom: BTreeSet<&str> = o.keys().map(String::as_str).collect();
    for (key, av) in &d.entries {
        if key.escapes(&dom) && !av.lattice.undef {
            return Err(format!(
                "{path}[{key}]: missing property but entry excludes undefined"
            ));
        }
    }
    Ok(())
}

fn scope(env: &Env, s: &Scope, path: &str) -> Result<(), String> {
    for (x, w) in env.iter() {
        match s.get(x) {
            Some(a) => value(w, a, &format!("{path}.{x}"))?,
            None => return Err(format!("{path}.{x}: unbound in scope")),
        }
    }
    Ok(())
}

fn closure(c: &Closure, a: &AbstractClosure, path: &str) -> Result<(), String> {
    if c.lambda != a.lambda {
        return Err(format!("{path}: lambdas differ"));
    }
    scope(&c.env, &a.scope, &format!("{path}.env"))
}

fn storable(s: &Storable, t: &AbstractStorable, path: &str) -> Result<(), String> {
    object(&s.object, &t.object, path)?;
    match (&s.closure, &t.closure) {
        (Some(c), Some(a)) => closure(c, a, &format!("{path}.closure"))?,
        (Some(_), None) => return Err(format!("{path}.closure: no abstract closure")),
        (None, _) => {}
    }
    match s.proto {
        Value::Loc(l) if !t.proto.contains(&l.site) => Err(format!(
            "{path}.proto: site {} not among prototypes",
            l.site
        )),
        _ => Ok(()),
    }
}

fn heap(h: &Heap, g: &State) -> Result<(), String> {
    for (loc, s) in h.iter() {
        let path = format!("heap[{loc}]");
        match g.get(loc.site) {
            Some(t) => storable(s, t, &path)?,
            None => return Err(format!("{path}: site {} not in store", loc.site)),
        }
    }
    Ok(())
}

/// Result of running both interpreters on one program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffVerdict {
    Pass,
    Fail(String),
    /// The concrete run did not produce a value.
    Inconclusive(String),
}

impl DiffVerdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, DiffVerdict::Fail(_))
    }
}

/// Evaluates `e` concretely and abstractly and checks that the final heap
/// and value are consistent with the abstract state and value.
pub fn differential_check(e: &Expr, limits: Limits) -> DiffVerdict {
    differential_check_with(e, limits, AnalysisOptions::default())
}

pub fn differential_check_with(e: &Expr, limits: Limits, opts: AnalysisOptions) -> DiffVerdict {
    let (h, w) = match run(e, limits) {
        Ok(r) => r,
        Err(err) => return DiffVerdict::Inconclusive(err.to_string()),
    };
    let report = match analyze_with(e, opts, None) {
        Ok(r) => r,
        Err(err) => return DiffVerdict::Fail(format!("analysis: {err}")),
    };
    if let Err(p) = heap(&h, &report.state) {
        return DiffVerdict::Fail(p);
    }
    match value(&w, &report.value, "result") {
        Ok(()) => DiffVerdict::Pass,
        Err(p) => DiffVerdict::Fail(p),
    }
}

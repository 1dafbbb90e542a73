//! Sampling check for noninterference: substituting different bodies into
//! one trace site must not change any result whose marks avoid that site.

use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{substitute_trace, Expr, Label};

use super::eval::{Evaluator, Limits};
use super::value::{Heap, Location, TaintedValue, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(Box<Witness>),
    /// Fewer than two substitutions produced a result.
    Inconclusive(String),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

/// Two substitution instances whose unmarked results differ.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub programs: [Expr; 2],
    pub results: [TaintedValue; 2],
    pub path: String,
}

/// Evaluates `e[label ↦ b]` for every body `b` and compares each pair of
/// terminating runs modulo a location renaming.
///
/// Bodies are relabeled above the program's highest label so their sites
/// never collide with the program's own.
pub fn check_noninterference(e: &Expr, label: Label, bodies: &[Expr], limits: Limits) -> Verdict {
    let first_free = e.labels().iter().map(|l| l.id()).max().unwrap_or(0) + 1;
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for body in bodies {
        let program = substitute_trace(e, label, &body.relabeled(first_free));
        let mut heap = Heap::new();
        match Evaluator::new(limits).eval(
            &mut heap,
            &Default::default(),
            &Default::default(),
            &program,
        ) {
            Ok(v) => runs.push((program, heap, v)),
            Err(err) => failures.push(err.to_string()),
        }
    }
    if runs.len() < 2 {
        return Verdict::Inconclusive(failures.join("; "));
    }
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let (p0, h0, v0) = &runs[i];
            let (p1, h1, v1) = &runs[j];
            let mut cmp = Renaming::new(h0, h1, label);
            if let Err(path) = cmp.values(v0, v1, "result".to_string()) {
                return Verdict::Fail(Box::new(Witness {
                    programs: [p0.clone(), p1.clone()],
                    results: [v0.clone(), v1.clone()],
                    path,
                }));
            }
        }
    }
    Verdict::Pass
}

/// Builds the renaming `♭` by walking both results in lockstep.
struct Renaming<'h> {
    heaps: [&'h Heap; 2],
    label: Label,
    forward: BTreeMap<Location, Location>,
    backward: BTreeMap<Location, Location>,
    visited: BTreeSet<(Location, Location)>,
}

impl<'h> Renaming<'h> {
    fn new(h0: &'h Heap, h1: &'h Heap, label: Label) -> Self {
        Renaming {
            heaps: [h0, h1],
            label,
            forward: BTreeMap::new(),
            backward: BTreeMap::new(),
            visited: BTreeSet::new(),
        }
    }

    /// Values whose marks mention the substituted site are unconstrained.
    fn values(&mut self, a: &TaintedValue, b: &TaintedValue, path: String) -> Result<(), String> {
        if a.deps.mentions(self.label) || b.deps.mentions(self.label) {
            return Ok(());
        }
        match (&a.value, &b.value) {
            (Value::Const(x), Value::Const(y)) if x == y => Ok(()),
            (Value::Loc(x), Value::Loc(y)) if x.site == y.site => self.locations(*x, *y, path),
            _ => Err(format!("{path}: {} vs {}", a, b)),
        }
    }

    fn locations(&mut self, x: Location, y: Location, path: String) -> Result<(), String> {
        match (self.forward.get(&x), self.backward.get(&y)) {
            (None, None) => {
                self.forward.insert(x, y);
                self.backward.insert(y, x);
            }
            (Some(fx), Some(by)) if *fx == y && *by == x => {}
            _ => return Err(format!("{path}: {x} and {y} cannot be identified")),
        }
        if !self.visited.insert((x, y)) {
            return Ok(());
        }
        let (Some(s0), Some(s1)) = (self.heaps[0].get(x), self.heaps[1].get(y)) else {
            return Ok(());
        };
        // Properties written on one side only stem from marked writes.
        for (key, v0) in &s0.object {
            if let Some(v1) = s1.object.get(key) {
                self.values(v0, v1, format!("{path}[{key:?}]"))?;
            }
        }
        Ok(())
    }
}

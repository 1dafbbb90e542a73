//! Abstract interpretation of the core language.
//!
//! [`analyze_program`] reruns the abstract evaluator from the bottom state
//! until the triple of function store, state and value stops changing.

mod rules;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{AbstractValue, FunctionStore, Lattice, Scope, State, Summary};
use crate::marks::DepSet;
use crate::syntax::{Expr, Label};

pub use rules::{get_iterate, put_iterate, Analyzer};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no fixpoint after {cap} program iterations")]
    IterationCap { cap: usize },
    #[error("abstract evaluation budget of {budget} rule applications exceeded")]
    Budget { budget: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub iteration_cap: usize,
    /// Rule applications across all iterations.
    pub eval_budget: u64,
    /// Keep every iterate in the report.
    pub record_history: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            iteration_cap: 1000,
            eval_budget: 20_000_000,
            record_history: false,
        }
    }
}

/// Rules that restore the caller's context dependencies on exit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    App,
    If,
    Trace,
    Untrace,
}

/// Instrumentation hooks for tests and oracles.
pub trait AnalysisObserver {
    /// `inner` is the context the rule's last premise ended in; the rule
    /// result carries `entry` instead.
    fn on_restore(&mut self, _rule: Rule, _entry: &DepSet, _inner: &DepSet) {}

    fn on_call(&mut self, _callee: Label, _arg: &AbstractValue, _memoized: bool) {}

    fn on_summary(&mut self, _callee: Label, _before: &Summary, _after: &Summary) {}
}

/// `R = ⟨F, Γ, ϑ⟩`
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnalysisState {
    pub fstore: FunctionStore,
    pub state: State,
    pub value: AbstractValue,
}

impl Lattice for AnalysisState {
    fn bottom() -> Self {
        AnalysisState::default()
    }

    fn join(&self, other: &Self) -> Self {
        AnalysisState {
            fstore: self.fstore.join(&other.fstore),
            state: self.state.join(&other.state),
            value: self.value.join(&other.value),
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.value.leq(&other.value)
            && self.state.leq(&other.state)
            && self.fstore.leq(&other.fstore)
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub value: AbstractValue,
    pub state: State,
    pub fstore: FunctionStore,
    /// Number of evaluator runs, including the one confirming stability.
    pub iterations: usize,
    /// For every trace site of the program, the marks of that site in the
    /// final value (empty when the site does not reach it).
    pub reachability: BTreeMap<Label, DepSet>,
    pub body_evaluations: u64,
    /// Every iterate, oldest first; only filled on request.
    pub history: Vec<AnalysisState>,
}

/// `Γ, σ ⊢ e ⇓ Γ' | ϑ` against an explicit function store.
pub fn aeval(
    g: State,
    s: &Scope,
    e: &Expr,
    fstore: &mut FunctionStore,
) -> Result<(State, AbstractValue), AnalysisError> {
    let mut a = Analyzer::new(
        std::mem::take(fstore),
        AnalysisOptions::default().eval_budget,
    );
    let r = a.aeval(g, s, e);
    *fstore = a.into_fstore();
    r
}

pub fn analyze_program(e: &Expr) -> Result<AnalysisReport, AnalysisError> {
    analyze_with(e, AnalysisOptions::default(), None)
}

pub fn analyze_with(
    e: &Expr,
    opts: AnalysisOptions,
    observer: Option<&mut dyn AnalysisObserver>,
) -> Result<AnalysisReport, AnalysisError> {
    let mut a = Analyzer::new(FunctionStore::default(), opts.eval_budget);
    if let Some(o) = observer {
        a = a.with_observer(o);
    }
    let mut history = Vec::new();
    let mut previous: Option<AnalysisState> = None;
    let mut iterations = 0;
    loop {
        if iterations >= opts.iteration_cap {
            return Err(AnalysisError::IterationCap {
                cap: opts.iteration_cap,
            });
        }
        a.begin_round();
        let (state, value) = a.aeval(State::bottom(), &Scope::default(), e)?;
        iterations += 1;
        let current = AnalysisState {
            fstore: a.fstore().clone(),
            state,
            value,
        };
        if opts.record_history {
            history.push(current.clone());
        }
        if previous.as_ref() == Some(&current) {
            break;
        }
        previous = Some(current);
    }
    let body_evaluations = a.body_evaluations();
    let AnalysisState {
        fstore,
        state,
        value,
    } = previous.expect("at least one iteration");
    let reachability = e
        .trace_labels()
        .into_iter()
        .map(|l| {
            (
                l,
                value
                    .deps
                    .iter()
                    .filter(|m| m.label == l)
                    .cloned()
                    .collect(),
            )
        })
        .collect();
    Ok(AnalysisReport {
        value,
        state,
        fstore,
        iterations,
        reachability,
        body_evaluations,
        history,
    })
}

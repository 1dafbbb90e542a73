//! Sampling oracles for the soundness properties, run over generated
//! programs.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::analysis::{analyze_with, AnalysisOptions};
use crate::concrete::{
    check_noninterference, Env, EvalObserver, Evaluator, Heap, Limits, TaintedValue, Verdict,
};
use crate::consistency::{differential_check_with, DiffVerdict};
use crate::domain::Lattice;
use crate::gen::{generate, GenConfig, TraceSites, SUBSTITUTION_BODIES};
use crate::marks::MarkSet;
use crate::syntax::{parse, pretty_print, Expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    ContextLemma,
    Noninterference,
    Consistency,
    Termination,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::ContextLemma,
        Suite::Noninterference,
        Suite::Consistency,
        Suite::Termination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ContextLemma => "context-lemma",
            Suite::Noninterference => "noninterference",
            Suite::Consistency => "consistency",
            Suite::Termination => "termination",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub program: String,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub passed: usize,
    pub inconclusive: usize,
    pub failures: Vec<Counterexample>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} cases, {} passed, {} failed, {} inconclusive ({:.2?})",
            self.suite,
            self.cases,
            self.passed,
            self.failures.len(),
            self.inconclusive,
            self.elapsed
        )
    }
}

enum Outcome {
    Pass,
    Fail(String),
    Inconclusive,
}

/// Limits for concrete runs of generated programs.
pub const ORACLE_LIMITS: Limits = Limits {
    step_budget: 200_000,
    max_depth: 2_000,
};

pub fn run_suite(suite: Suite, cases: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut report = SuiteReport {
        suite,
        cases,
        passed: 0,
        inconclusive: 0,
        failures: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for i in 0..cases {
        let mut rng = StdRng::seed_from_u64(
            seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64),
        );
        let (program, outcome) = match suite {
            Suite::ContextLemma => {
                let e = generate(&mut rng, &lemma_config());
                let o = context_lemma_case(&e);
                (e, o)
            }
            Suite::Noninterference => {
                let e = generate(&mut rng, &noninterference_config());
                let bodies: Vec<Expr> = SUBSTITUTION_BODIES
                    .choose_multiple(&mut rng, 2)
                    .map(|b| parse(b).expect("substitution body parses"))
                    .collect();
                let o = noninterference_case(&e, &bodies);
                (e, o)
            }
            Suite::Consistency => {
                let e = generate(&mut rng, &corpus_config());
                let o = consistency_case(&e);
                (e, o)
            }
            Suite::Termination => {
                let e = generate(&mut rng, &corpus_config());
                let o = termination_case(&e);
                (e, o)
            }
        };
        match outcome {
            Outcome::Pass => report.passed += 1,
            Outcome::Inconclusive => report.inconclusive += 1,
            Outcome::Fail(detail) => report.failures.push(Counterexample {
                program: pretty_print(&program),
                detail,
            }),
        }
    }
    report.elapsed = start.elapsed();
    report
}

/// Untrace rewrites marks of the context in its result, so the context
/// lemma is only claimed for untrace-free programs.
pub fn lemma_config() -> GenConfig {
    GenConfig {
        recursion: true,
        untrace: false,
        ..Default::default()
    }
}

pub fn noninterference_config() -> GenConfig {
    GenConfig {
        recursion: true,
        traces: TraceSites::Single,
        ..Default::default()
    }
}

pub fn corpus_config() -> GenConfig {
    GenConfig {
        recursion: true,
        ..Default::default()
    }
}

#[derive(Default)]
struct ContextWatch {
    checked: usize,
    violation: Option<String>,
}

impl EvalObserver for ContextWatch {
    fn on_return(&mut self, e: &Expr, ctx: &MarkSet, result: &TaintedValue) {
        self.checked += 1;
        if self.violation.is_none() && !ctx.is_subset(&result.deps) {
            self.violation = Some(format!(
                "context {ctx} not within result {result} of `{}`",
                pretty_print(e)
            ));
        }
    }
}

fn context_lemma_case(e: &Expr) -> Outcome {
    let mut watch = ContextWatch::default();
    let r = Evaluator::with_observer(ORACLE_LIMITS, &mut watch).eval(
        &mut Heap::new(),
        &Env::new(),
        &MarkSet::new(),
        e,
    );
    match (watch.violation, r) {
        (Some(v), _) => Outcome::Fail(v),
        (None, Ok(_)) => Outcome::Pass,
        // Returns observed before the error were still checked.
        (None, Err(_)) if watch.checked > 0 => Outcome::Pass,
        (None, Err(_)) => Outcome::Inconclusive,
    }
}

fn noninterference_case(e: &Expr, bodies: &[Expr]) -> Outcome {
    let Some(&label) = e.trace_labels().first() else {
        return Outcome::Inconclusive;
    };
    match check_noninterference(e, label, bodies, ORACLE_LIMITS) {
        Verdict::Pass => Outcome::Pass,
        Verdict::Inconclusive(_) => Outcome::Inconclusive,
        Verdict::Fail(w) => Outcome::Fail(format!(
            "{} differ at {}: {} vs {}",
            w.programs
                .iter()
                .map(pretty_print)
                .collect::<Vec<_>>()
                .join(" / "),
            w.path,
            w.results[0],
            w.results[1]
        )),
    }
}

fn consistency_case(e: &Expr) -> Outcome {
    match differential_check_with(e, ORACLE_LIMITS, AnalysisOptions::default()) {
        DiffVerdict::Pass => Outcome::Pass,
        DiffVerdict::Inconclusive(_) => Outcome::Inconclusive,
        DiffVerdict::Fail(p) => Outcome::Fail(p),
    }
}

/// The fixpoint is reached within the cap and the iterates ascend.
pub fn check_termination(e: &Expr, opts: AnalysisOptions) -> Result<usize, String> {
    let opts = AnalysisOptions {
        record_history: true,
        ..opts
    };
    let r = analyze_with(e, opts, None).map_err(|err| err.to_string())?;
    for (i, w) in r.history.windows(2).enumerate() {
        if !w[0].leq(&w[1]) {
            return Err(format!("iterate {} is not below iterate {}", i + 1, i + 2));
        }
    }
    Ok(r.iterations)
}

fn termination_case(e: &Expr) -> Outcome {
    match check_termination(e, AnalysisOptions::default()) {
        Ok(_) => Outcome::Pass,
        Err(detail) => Outcome::Fail(detail),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_runs_pass() {
        for s in Suite::ALL {
            let r = run_suite(s, 25, 11);
            assert!(r.ok(), "{r}: {:?}", r.failures.first());
        }
    }
}

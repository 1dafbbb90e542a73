use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use depcore::concrete::{run, Env, EvalObserver, Evaluator, Heap, Limits, TaintedValue};
use depcore::gen::{generate, GenConfig};
use depcore::oracle::{run_suite, Suite, ORACLE_LIMITS};
use depcore::syntax::{ClassId, Expr, Mode};
use depcore::MarkSet;

fn program(seed: u64, untrace: bool) -> Expr {
    let cfg = GenConfig {
        recursion: true,
        untrace,
        ..GenConfig::default()
    };
    generate(&mut StdRng::seed_from_u64(seed), &cfg)
}

#[derive(Default)]
struct Stores {
    violations: Vec<String>,
}

impl EvalObserver for Stores {
    fn on_store(&mut self, required: &MarkSet, stored: &TaintedValue) {
        if !required.is_subset(&stored.deps) {
            self.violations
                .push(format!("stored {stored} lacks {required}"));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn heap_writes_carry_receiver_key_and_context(seed in any::<u64>()) {
        let e = program(seed, true);
        let mut stores = Stores::default();
        let _ = Evaluator::with_observer(ORACLE_LIMITS, &mut stores).eval(&mut Heap::new(), &Env::new(), &MarkSet::new(), &e);
        prop_assert!(stores.violations.is_empty(), "{:?}", stores.violations);
    }

    #[test]
    fn evaluation_is_deterministic(seed in any::<u64>()) {
        let e = program(seed, true);
        prop_assert_eq!(run(&e, ORACLE_LIMITS), run(&e, ORACLE_LIMITS));
    }

    #[test]
    fn untrace_only_reclassifies(seed in any::<u64>(), from_t in any::<bool>(), class_dom in any::<bool>()) {
        let e = program(seed, true);
        let (from, to) = if from_t { (Mode::new("T"), Mode::new("S")) } else { (Mode::new("S"), Mode::new("T")) };
        let class = ClassId::new(if class_dom { "#DOM" } else { "c" }).unwrap();
        let wrapped = Expr::Untrace { from: from.clone(), to: to.clone(), class: class.clone(), body: Box::new(e.clone()) };
        match (run(&e, ORACLE_LIMITS), run(&wrapped, ORACLE_LIMITS)) {
            (Ok((h, w)), Ok((h2, w2))) => {
                prop_assert_eq!(h, h2);
                prop_assert_eq!(&w2.value, &w.value);
                prop_assert_eq!(w2.deps, w.deps.reclassify(&from, &to, &class));
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "outcomes differ: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

#[test]
fn context_lemma_sample() {
    let r = run_suite(Suite::ContextLemma, 200, 5);
    assert!(r.ok(), "{r}: {:?}", r.failures.first());
    assert!(r.passed > r.inconclusive);
}

#[test]
fn noninterference_sample() {
    let r = run_suite(Suite::Noninterference, 100, 5);
    assert!(r.ok(), "{r}: {:?}", r.failures.first());
}

#[test]
fn untrace_free_lemma_holds_under_a_traced_context() {
    let e =
        depcore::syntax::parse("let o = new(null); let _ = o[\"f\"] = 1; o[\"f\"] + 2").unwrap();
    let ctx: MarkSet = depcore::syntax::parse("trace(0)")
        .map(|t| match t {
            Expr::Trace {
                label, mode, class, ..
            } => MarkSet::singleton(depcore::Mark::new(label, mode, class)),
            _ => unreachable!(),
        })
        .unwrap();
    let w = Evaluator::new(Limits::default())
        .eval(&mut Heap::new(), &Env::new(), &ctx, &e)
        .unwrap();
    assert!(ctx.is_subset(&w.deps));
}

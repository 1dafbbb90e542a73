use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use depcore::gen::{generate, GenConfig, TraceSites};
use depcore::syntax::{parse, pretty_print, substitute_trace, Expr};

fn program(seed: u64) -> Expr {
    let cfg = GenConfig {
        recursion: seed.is_multiple_of(2),
        ..GenConfig::default()
    };
    generate(&mut StdRng::seed_from_u64(seed), &cfg)
}

fn trace_body_sizes(e: &Expr, label: depcore::syntax::Label) -> usize {
    let mut n = 0;
    e.walk(&mut |x| {
        if let Expr::Trace { label: l, body, .. } = x {
            if *l == label {
                n += body.node_count();
            }
        }
    });
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let e = program(seed);
        let printed = pretty_print(&e);
        let back = parse(&printed).map_err(|err| TestCaseError::fail(format!("{err} in {printed}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn labels_are_pairwise_distinct(seed in any::<u64>()) {
        let e = program(seed);
        let labels = e.labels();
        let distinct: BTreeSet<_> = labels.iter().map(|l| l.id()).collect();
        prop_assert_eq!(distinct.len(), labels.len());
    }

    #[test]
    fn generated_programs_are_closed(seed in any::<u64>()) {
        prop_assert!(program(seed).is_closed());
    }

    #[test]
    fn substitution_only_changes_trace_bodies(seed in any::<u64>(), body in prop::sample::select(vec!["0", "\"a\"", "new(null)", "1 + 2"])) {
        let cfg = GenConfig { traces: TraceSites::Single, ..GenConfig::default() };
        let e = generate(&mut StdRng::seed_from_u64(seed), &cfg);
        let label = e.trace_labels()[0];
        let replacement = parse(body).unwrap();
        let s = substitute_trace(&e, label, &replacement);
        let sites = e.trace_labels().iter().filter(|l| **l == label).count();
        prop_assert_eq!(
            s.node_count() - sites * replacement.node_count(),
            e.node_count() - trace_body_sizes(&e, label)
        );
        prop_assert_eq!(s.trace_labels(), e.trace_labels());
    }

    #[test]
    fn substituting_an_absent_label_is_identity(seed in any::<u64>()) {
        let e = program(seed);
        let absent = depcore::syntax::Label::new(u32::MAX, Default::default());
        prop_assert_eq!(substitute_trace(&e, absent, &parse("0").unwrap()), e);
    }
}

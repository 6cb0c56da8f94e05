//! Interpreter coverage against the reference evaluator.

mod support;

use std::path::Path;

use leader::experiment::load_corpus;
use leader::minic::lower;
use leader::runtime::{execute_traced, Termination, TrapKind, DEFAULT_STEP_BUDGET};
use leader::runtime::coverage::covered_statements;
use proptest::prelude::*;
use support::gen::random_unit;
use support::refeval::{ref_execute, RefStop};

fn stop_of(t: Termination) -> RefStop {
    match t {
        Termination::Normal => RefStop::Normal,
        Termination::Trap(TrapKind::UninitRead) => RefStop::Uninit,
        Termination::Trap(TrapKind::NullDeref) => RefStop::Null,
        Termination::Trap(TrapKind::OutOfBounds) => RefStop::Bounds,
        Termination::Trap(TrapKind::DivByZero) => RefStop::DivZero,
        Termination::StepLimit => RefStop::OutOfFuel,
    }
}

#[test]
fn corpus_coverage_matches_reference() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut checked = 0;
    for prog in load_corpus(&root).unwrap() {
        let ir = lower(&prog.unit).unwrap();
        for t in &prog.suite {
            let (r, trace) = execute_traced(&ir, &t.argv, &t.stdin, DEFAULT_STEP_BUDGET);
            let want = ref_execute(&prog.unit, &t.argv, &t.stdin, DEFAULT_STEP_BUDGET);
            assert_eq!(covered_statements(&ir, &trace), want.visited, "{} {}", prog.name, t.id);
            assert_eq!(r.stdout, want.stdout, "{} {}", prog.name, t.id);
            assert_eq!(r.exit_code, want.exit, "{} {}", prog.name, t.id);
            checked += 1;
        }
    }
    assert!(checked > 200);
}

fn inputs() -> impl Strategy<Value = (Vec<String>, Vec<u8>)> {
    (
        prop::collection::vec("[a-z0-9-]{0,4}", 0..3),
        prop::collection::vec(any::<u8>(), 0..6),
    )
        .prop_map(|(mut args, stdin)| {
            args.insert(0, "rand".into());
            (args, stdin)
        })
}

proptest! {
    #![proptest_config(support::pinned(300))]

    #[test]
    fn random_programs_agree_with_reference(seed in any::<u64>(), (argv, stdin) in inputs()) {
        let unit = random_unit(seed, 24);
        let Ok(ir) = lower(&unit) else { return Ok(()) };
        let (r, trace) = execute_traced(&ir, &argv, &stdin, 20_000);
        let want = ref_execute(&unit, &argv, &stdin, 20_000);
        prop_assert_eq!(stop_of(r.termination), want.stop);
        if want.stop != RefStop::OutOfFuel {
            prop_assert_eq!(&r.stdout, &want.stdout);
            prop_assert_eq!(r.exit_code, want.exit);
            prop_assert_eq!(covered_statements(&ir, &trace), want.visited);
        }
    }
}

//! Invariant checks shared by the integration tests and the acceptance
//! report. Each returns a description of the first violation.

use leader::advisor::{analyze, suggest};
use leader::decision::{render_annotations, strip_annotations};
use leader::minic::{delete_stmts, parse, print_function, print_unit, shape_eq, SourceUnit};
use leader::runtime::mutate::mutants;
use leader::runtime::{fuzz_robustness, run_tests, TestCase, DEFAULT_STEP_BUDGET};

/// Printing then parsing gives the same tree, and printing is a fixpoint.
pub fn round_trip(unit: &SourceUnit) -> Result<(), String> {
    let once = print_unit(unit);
    let back = parse(&once, &unit.source_name).map_err(|e| format!("{}: reparse failed: {e:?}", unit.source_name))?;
    if !shape_eq(unit, &back) {
        return Err(format!("{}: reparsed tree differs", unit.source_name));
    }
    let twice = print_unit(&back);
    if once != twice {
        return Err(format!("{}: printing is not a fixpoint", unit.source_name));
    }
    Ok(())
}

/// Annotating any function with its suggestions and with the findings of
/// the fully reduced program, then stripping, gives the plain print.
pub fn strip_equals_print(unit: &SourceUnit, tests: &[TestCase]) -> Result<(), String> {
    let (_, cov) = run_tests(unit, tests, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
    let sug = suggest(unit, &cov);
    let reduced = delete_stmts(unit, &sug.ids());
    let mut findings = analyze(&reduced);
    findings.extend(analyze(unit));
    for f in &unit.functions {
        let fs = match sug.for_function(&f.name) {
            Some(s) => s.clone(),
            None => continue,
        };
        let mine: Vec<_> = findings
            .iter()
            .filter(|x| x.function == f.name && f.find(x.anchor).is_some())
            .cloned()
            .collect();
        let ann = render_annotations(unit, &f.name, &fs, &mine).map_err(|e| e.to_string())?;
        if strip_annotations(&ann.text) != print_function(f) {
            return Err(format!("{}::{}: stripped text differs from print", unit.source_name, f.name));
        }
    }
    Ok(())
}

/// The same seed yields the same mutants and the same robustness score.
pub fn fuzz_reproducible(unit: &SourceUnit, tests: &[TestCase], seed: u64) -> Result<(), String> {
    let n = 100;
    if mutants(tests, n, seed) != mutants(tests, n, seed) {
        return Err(format!("{}: mutants differ for seed {seed}", unit.source_name));
    }
    let a = fuzz_robustness(unit, tests, n, DEFAULT_STEP_BUDGET, seed).map_err(|e| e.to_string())?;
    let b = fuzz_robustness(unit, tests, n, DEFAULT_STEP_BUDGET, seed).map_err(|e| e.to_string())?;
    if a.to_bits() != b.to_bits() {
        return Err(format!("{}: robustness {a} then {b} for seed {seed}", unit.source_name));
    }
    Ok(())
}

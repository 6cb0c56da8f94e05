//! Statement coverage over a test suite.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interp::{execute, execute_traced, ExecResult};
use super::test_case::TestCase;
use crate::minic::{lower, IrModule, LowerError, SourceUnit, StmtId};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub per_test: Vec<BTreeSet<StmtId>>,
    pub union: BTreeSet<StmtId>,
}

impl CoverageReport {
    pub fn covers(&self, id: StmtId) -> bool {
        self.union.contains(&id)
    }
}

/// Statements owning at least one executed instruction.
pub fn covered_statements(ir: &IrModule, trace: &super::interp::Trace) -> BTreeSet<StmtId> {
    let mut set = BTreeSet::new();
    for (f, ran) in ir.functions.iter().zip(&trace.executed) {
        for (owner, hit) in f.owners.iter().zip(ran) {
            if let (Some(id), true) = (owner, hit) {
                set.insert(*id);
            }
        }
    }
    set
}

/// Run every test against `unit`, recording per-test coverage.
pub fn run_tests(
    unit: &SourceUnit,
    tests: &[TestCase],
    step_budget: u64,
) -> Result<(Vec<ExecResult>, CoverageReport), LowerError> {
    let ir = lower(unit)?;
    Ok(run_tests_ir(&ir, tests, step_budget))
}

pub fn run_tests_ir(
    ir: &IrModule,
    tests: &[TestCase],
    step_budget: u64,
) -> (Vec<ExecResult>, CoverageReport) {
    let runs: Vec<(ExecResult, BTreeSet<StmtId>)> = tests
        .par_iter()
        .map(|t| {
            let (r, trace) = execute_traced(ir, &t.argv, &t.stdin, step_budget);
            (r, covered_statements(ir, &trace))
        })
        .collect();
    let mut results = Vec::with_capacity(runs.len());
    let mut report = CoverageReport::default();
    for (r, cov) in runs {
        report.union.extend(cov.iter().copied());
        report.per_test.push(cov);
        results.push(r);
    }
    (results, report)
}

/// Run every test without tracing.
pub fn run_all(ir: &IrModule, tests: &[TestCase], step_budget: u64) -> Vec<ExecResult> {
    tests
        .par_iter()
        .map(|t| execute(ir, &t.argv, &t.stdin, step_budget))
        .collect()
}

/// Record `ir`'s behaviour as each test's expectation. Returns, per test,
/// whether the run terminated normally.
pub fn stamp(ir: &IrModule, tests: &mut [TestCase], step_budget: u64) -> Vec<bool> {
    let runs = run_all(ir, tests, step_budget);
    tests
        .iter_mut()
        .zip(runs)
        .map(|(t, r)| {
            t.expected_stdout = Some(r.stdout.clone());
            t.expected_exit = Some(r.exit_code);
            r.is_normal()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::{parse, StmtKind};

    const SRC: &str = "int main() {
        if (argc() > 1) {
            prints(\"many\");
        } else {
            prints(\"one\");
        }
        return 0;
    }";

    fn arms(u: &SourceUnit) -> (StmtId, StmtId) {
        let StmtKind::If {
            then_block,
            else_block,
            ..
        } = &u.functions[0].body.stmts[0].kind
        else {
            panic!()
        };
        (then_block.stmts[0].id, else_block.as_ref().unwrap().stmts[0].id)
    }

    #[test]
    fn then_branch_only_leaves_else_uncovered() {
        let u = parse(SRC, "t").unwrap();
        let (then_id, else_id) = arms(&u);
        let (_, cov) = run_tests(&u, &[TestCase::new("a", &["p", "x"], b"")], 1000).unwrap();
        assert!(cov.covers(then_id));
        assert!(!cov.covers(else_id));
    }

    #[test]
    fn complementary_tests_cover_everything() {
        let u = parse(SRC, "t").unwrap();
        let tests = [
            TestCase::new("a", &["p", "x"], b""),
            TestCase::new("b", &["p"], b""),
        ];
        let (_, cov) = run_tests(&u, &tests, 1000).unwrap();
        let all: BTreeSet<_> = u.counted_stmt_ids().into_iter().collect();
        assert_eq!(cov.union, all);
    }

    #[test]
    fn empty_suite_has_empty_union() {
        let u = parse(SRC, "t").unwrap();
        let (r, cov) = run_tests(&u, &[], 1000).unwrap();
        assert!(r.is_empty());
        assert!(cov.union.is_empty());
    }
}

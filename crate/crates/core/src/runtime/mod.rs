//! Execution of lowered programs, coverage, and test-suite utilities.

pub mod coverage;
pub mod interp;
pub mod mutate;
pub mod split;
pub mod test_case;

pub use coverage::{run_all, run_tests, run_tests_ir, stamp, CoverageReport};
pub use interp::{execute, execute_traced, ExecResult, Termination, TrapKind, DEFAULT_STEP_BUDGET};
pub use mutate::{fuzz_robustness, mutate_test, mutate_test_with_kind, MutationKind};
pub use split::{split_suite, SplitError};
pub use test_case::{parse_suite, read_suite, suite_to_jsonl, write_suite, SuiteError, TestCase};

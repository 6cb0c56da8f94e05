//! Per-function debloating loop and the coverage-only baselines.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advisor::security::{diff_with, Finding, Severity, SeverityMap};
use crate::advisor::{debloat::uncovered_candidates, suggest, FunctionSuggestions, Reason};
use crate::augment::{augment_suite, augment_suite_llm, AugmentError, DEFAULT_K};
use crate::decision::{decide_llm, decide_rule_based, Attempt, DecisionOutcome, LlmPolicy};
use crate::minic::{delete_stmts, lower, typecheck, Function, LowerError, SourceUnit, StmtId};
use crate::runtime::{run_all, run_tests, ExecResult, TestCase, DEFAULT_STEP_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    RuleBased,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebloatConfig {
    pub max_iterations: usize,
    pub step_budget: u64,
    pub policy: Policy,
    pub augment: bool,
    pub k_per_feature: usize,
    pub seed: u64,
    /// Decide functions independently against the original, then merge.
    pub parallel: bool,
    pub severities: SeverityMap,
}

impl Default for DebloatConfig {
    fn default() -> Self {
        DebloatConfig {
            max_iterations: 3,
            step_budget: DEFAULT_STEP_BUDGET,
            policy: Policy::RuleBased,
            augment: true,
            k_per_feature: DEFAULT_K,
            seed: 0,
            parallel: false,
            severities: SeverityMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum FunctionStatus {
    Debloated { iterations: usize },
    FellBackToOriginal { iterations: usize },
}

impl FunctionStatus {
    pub fn iterations(&self) -> usize {
        match self {
            FunctionStatus::Debloated { iterations } | FunctionStatus::FellBackToOriginal { iterations } => {
                *iterations
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub iteration: usize,
    pub suggested: usize,
    pub predicted_high: usize,
    pub deleted: Vec<StmtId>,
    /// "accepted", or why the candidate was rejected.
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionLog {
    pub function: String,
    pub status: FunctionStatus,
    pub attempts: Vec<AttemptLog>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub program: String,
    pub policy: Policy,
    pub seed: u64,
    pub provided_tests: usize,
    pub validation_tests: usize,
    pub original_size: usize,
    pub debloated_size: usize,
    pub passes_validation_suite: bool,
    pub functions: Vec<FunctionLog>,
}

#[derive(Debug, Clone)]
pub struct DebloatRun {
    pub original: SourceUnit,
    pub debloated: SourceUnit,
    /// The suite candidates were validated against (T_d plus any
    /// generated tests).
    pub suite: Vec<TestCase>,
    pub log: RunLog,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("the suite is empty")]
    EmptySuite,
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("the llm policy needs a model backend")]
    NoBackend,
    #[error("the original program fails its own tests: {0:?}")]
    OriginalFails(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailingTest {
    pub id: String,
    pub expected_stdout: Vec<u8>,
    pub expected_exit: i32,
    pub actual_stdout: Vec<u8>,
    pub actual_exit: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validation {
    Pass,
    TypeError(String),
    Failing(Vec<FailingTest>),
}

impl Validation {
    pub fn passed(&self) -> bool {
        *self == Validation::Pass
    }

    /// Text fed back to the decision-maker.
    pub fn feedback(&self) -> String {
        match self {
            Validation::Pass => "accepted".into(),
            Validation::TypeError(e) => format!("compile error: {e}"),
            Validation::Failing(v) => {
                let mut s = format!("{} test(s) failed:", v.len());
                for f in v.iter().take(5) {
                    s.push_str(&format!(
                        "\n- {}: expected output {:?} (exit {}), got {:?} (exit {})",
                        f.id,
                        String::from_utf8_lossy(&f.expected_stdout),
                        f.expected_exit,
                        String::from_utf8_lossy(&f.actual_stdout),
                        f.actual_exit
                    ));
                }
                s
            }
        }
    }
}

fn install(unit: &SourceUnit, idx: usize, outcome_fn: &Function, next_id: u32) -> SourceUnit {
    let mut u = unit.clone();
    u.functions[idx] = outcome_fn.clone();
    u.next_id = u.next_id.max(next_id);
    u
}

/// Check a whole candidate program against `expected` behaviour.
pub fn validate_program(
    candidate: &SourceUnit,
    tests: &[TestCase],
    expected: &[ExecResult],
    step_budget: u64,
) -> Validation {
    if let Err(d) = typecheck(candidate) {
        return Validation::TypeError(d.first().to_string());
    }
    let ir = match lower(candidate) {
        Ok(ir) => ir,
        Err(e) => return Validation::TypeError(e.to_string()),
    };
    let got = run_all(&ir, tests, step_budget);
    let failing: Vec<FailingTest> = tests
        .iter()
        .zip(expected)
        .zip(&got)
        .filter(|((_, e), g)| !e.same_behavior(g))
        .map(|((t, e), g)| FailingTest {
            id: t.id.clone(),
            expected_stdout: e.stdout.clone(),
            expected_exit: e.exit_code,
            actual_stdout: g.stdout.clone(),
            actual_exit: g.exit_code,
        })
        .collect();
    if failing.is_empty() {
        Validation::Pass
    } else {
        Validation::Failing(failing)
    }
}

/// Install `candidate` as function `name` and check it against the
/// behaviour of the original program on `tests`.
pub fn validate_candidate(
    unit: &SourceUnit,
    name: &str,
    candidate: &Function,
    tests: &[TestCase],
    expected: &[ExecResult],
    step_budget: u64,
) -> Validation {
    let Some(idx) = unit.function_index(name) else {
        return Validation::TypeError(format!("no function named '{name}'"));
    };
    validate_program(&install(unit, idx, candidate, unit.next_id), tests, expected, step_budget)
}

/// Delete every statement no test executes.
pub fn baseline_cov(unit: &SourceUnit, tests: &[TestCase], step_budget: u64) -> Result<SourceUnit, LowerError> {
    let (_, cov) = run_tests(unit, tests, step_budget)?;
    let ids: BTreeSet<StmtId> = uncovered_candidates(unit, &cov).into_iter().map(|c| c.stmt_id).collect();
    Ok(delete_stmts(unit, &ids))
}

/// Predicted new High-or-lower findings of deleting every suggestion.
fn predicted(unit: &SourceUnit, name: &str, sugg: &FunctionSuggestions, sev: &SeverityMap) -> Vec<Finding> {
    let deb = delete_stmts(unit, &sugg.ids());
    match diff_with(unit, &deb, sev) {
        Ok(d) => d.v_new.into_iter().filter(|f| f.function == name).collect(),
        Err(_) => Vec::new(),
    }
}

struct Ctx<'a> {
    tests: &'a [TestCase],
    expected: &'a [ExecResult],
    config: &'a DebloatConfig,
    llm: Option<LlmPolicy<'a>>,
}

impl Ctx<'_> {
    /// Run the decide/validate loop for one function of `unit`.
    fn function(&self, unit: &SourceUnit, name: &str, all: &FunctionSuggestions) -> (Option<DecisionOutcome>, FunctionLog) {
        let mut attempts = Vec::new();
        let mut history: Vec<Attempt> = Vec::new();
        let max = self.config.max_iterations.max(1);
        for iteration in 1..=max {
            let sugg = match (self.config.policy, iteration) {
                // The deterministic policy narrows its input on retries.
                (Policy::RuleBased, 2) => all.retain_reasons(&[Reason::Uncovered]),
                (Policy::RuleBased, i) if i >= 3 => FunctionSuggestions {
                    function: name.to_string(),
                    candidates: Vec::new(),
                },
                _ => all.clone(),
            };
            let findings = predicted(unit, name, &sugg, &self.config.severities);
            let predicted_high = findings.iter().filter(|f| f.severity == Severity::High).count();
            let mut log = AttemptLog {
                iteration,
                suggested: sugg.candidates.len(),
                predicted_high,
                deleted: Vec::new(),
                result: String::new(),
            };
            let outcome = match (self.config.policy, self.llm) {
                (Policy::RuleBased, _) => {
                    decide_rule_based(unit, name, &sugg, &findings, &self.config.severities).ok_or_else(|| "unknown function".to_string())
                }
                (Policy::Llm, Some(policy)) => {
                    let (r, reply) = decide_llm(policy, unit, name, &sugg, &findings, &history);
                    r.map_err(|e| {
                        let msg = e.to_string();
                        if let Some(reply) = reply {
                            history.push(Attempt {
                                reply,
                                feedback: msg.clone(),
                            });
                        }
                        msg
                    })
                }
                (Policy::Llm, None) => Err("no model backend".to_string()),
            };
            let outcome = match outcome {
                Ok(o) => o,
                Err(msg) => {
                    log.result = msg;
                    attempts.push(log);
                    continue;
                }
            };
            log.deleted = outcome.deleted();
            let v = validate_candidate(unit, name, &outcome.candidate, self.tests, self.expected, self.config.step_budget);
            if v.passed() {
                log.result = "accepted".into();
                attempts.push(log);
                return (
                    Some(outcome),
                    FunctionLog {
                        function: name.to_string(),
                        status: FunctionStatus::Debloated { iterations: iteration },
                        attempts,
                    },
                );
            }
            log.result = v.feedback();
            if self.config.policy == Policy::Llm {
                history.push(Attempt {
                    reply: format!("```c\n{}```", crate::minic::print_function(&outcome.candidate)),
                    feedback: v.feedback(),
                });
            }
            attempts.push(log);
        }
        (
            None,
            FunctionLog {
                function: name.to_string(),
                status: FunctionStatus::FellBackToOriginal { iterations: max },
                attempts,
            },
        )
    }
}

/// Debloat `unit` against `t_d`.
///
/// Functions are visited in source order and accepted candidates are
/// applied cumulatively, so later functions are validated against the
/// partially debloated program. With `config.parallel`, functions are
/// decided independently against the original and the merge is
/// re-validated.
pub fn debloat_program(
    unit: &SourceUnit,
    t_d: &[TestCase],
    doc: Option<&str>,
    config: &DebloatConfig,
    llm: Option<LlmPolicy<'_>>,
) -> Result<DebloatRun, PipelineError> {
    if t_d.is_empty() {
        return Err(PipelineError::EmptySuite);
    }
    if config.policy == Policy::Llm && llm.is_none() {
        return Err(PipelineError::NoBackend);
    }
    let ir = lower(unit)?;
    // The original must reproduce any expectations recorded in the suite.
    let own = run_all(&ir, t_d, config.step_budget);
    let broken: Vec<String> = t_d
        .iter()
        .zip(&own)
        .filter(|(t, r)| {
            t.expected_stdout.as_ref().is_some_and(|s| *s != r.stdout)
                || t.expected_exit.is_some_and(|e| e != r.exit_code)
        })
        .map(|(t, _)| t.id.clone())
        .collect();
    if !broken.is_empty() {
        return Err(PipelineError::OriginalFails(broken));
    }
    let suite = if config.augment {
        let (k, budget, seed) = (config.k_per_feature, config.step_budget, config.seed);
        match llm.filter(|_| config.policy == Policy::Llm) {
            Some(p) => augment_suite_llm(p, doc, t_d, unit, k, budget, seed)?.suite,
            None => augment_suite(doc, t_d, unit, k, budget, seed)?.suite,
        }
    } else {
        t_d.to_vec()
    };
    let (expected, cov) = run_tests(unit, &suite, config.step_budget)?;
    let suggestions = suggest(unit, &cov);
    let empty = |name: &str| FunctionSuggestions {
        function: name.to_string(),
        candidates: Vec::new(),
    };
    let ctx = Ctx {
        tests: &suite,
        expected: &expected,
        config,
        llm,
    };
    let names: Vec<String> = unit.functions.iter().map(|f| f.name.clone()).collect();
    let mut current = unit.clone();
    let mut logs = Vec::new();
    if config.parallel {
        let results: Vec<(Option<DecisionOutcome>, FunctionLog)> = names
            .par_iter()
            .map(|n| {
                let s = suggestions.for_function(n).cloned().unwrap_or_else(|| empty(n));
                ctx.function(unit, n, &s)
            })
            .collect();
        let accepted: Vec<(usize, &DecisionOutcome)> = results
            .iter()
            .enumerate()
            .filter_map(|(i, (o, _))| o.as_ref().map(|o| (i, o)))
            .collect();
        let mut merged = unit.clone();
        for (i, o) in &accepted {
            merged = install(&merged, *i, &o.candidate, o.next_id);
        }
        if validate_program(&merged, &suite, &expected, config.step_budget).passed() {
            current = merged;
            logs = results.into_iter().map(|(_, l)| l).collect();
        } else {
            // Keep the candidates that still pass when applied in order.
            let mut keep = vec![false; names.len()];
            for (i, o) in &accepted {
                let trial = install(&current, *i, &o.candidate, o.next_id);
                if validate_program(&trial, &suite, &expected, config.step_budget).passed() {
                    current = trial;
                    keep[*i] = true;
                }
            }
            for (i, (_, mut l)) in results.into_iter().enumerate() {
                if !keep[i] {
                    if let FunctionStatus::Debloated { iterations } = l.status {
                        l.status = FunctionStatus::FellBackToOriginal { iterations };
                    }
                }
                logs.push(l);
            }
        }
    } else {
        for (i, n) in names.iter().enumerate() {
            let s = suggestions.for_function(n).cloned().unwrap_or_else(|| empty(n));
            let (outcome, log) = ctx.function(&current, n, &s);
            if let Some(o) = outcome {
                current = install(&current, i, &o.candidate, o.next_id);
            }
            logs.push(log);
        }
    }
    let passes = validate_program(&current, &suite, &expected, config.step_budget).passed();
    let log = RunLog {
        program: unit.source_name.clone(),
        policy: config.policy,
        seed: config.seed,
        provided_tests: t_d.len(),
        validation_tests: suite.len(),
        original_size: unit.size(),
        debloated_size: current.size(),
        passes_validation_suite: passes,
        functions: logs,
    };
    Ok(DebloatRun {
        original: unit.clone(),
        debloated: current,
        suite,
        log,
    })
}

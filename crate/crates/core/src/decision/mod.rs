//! The decision-maker: turns advisor output into a candidate function.

pub mod annotate;
pub mod reply;
pub mod rule;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::minic::{print_function, Function, StmtId};

pub use annotate::{build_prompt, render_annotations, strip_annotations, AnnotateError, AnnotatedFunction};
pub use reply::{decide_llm, parse_reply, Attempt, LlmDecisionError, LlmPolicy, ReplyError};
pub use rule::decide_rule_based;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Delete,
    Retain,
    Rewrite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub function: String,
    pub candidate: Function,
    /// Per statement of the original function: what happened to it.
    /// Suggested statements are always listed.
    pub actions: BTreeMap<StmtId, Action>,
    pub notes: Vec<String>,
    /// Lower bound for the unit's next fresh id once the candidate is
    /// installed.
    pub next_id: u32,
}

impl PartialEq for DecisionOutcome {
    fn eq(&self, other: &Self) -> bool {
        self.function == other.function
            && self.actions == other.actions
            && self.notes == other.notes
            && self.next_id == other.next_id
            && self.candidate.stmt_ids() == other.candidate.stmt_ids()
            && print_function(&self.candidate) == print_function(&other.candidate)
    }
}

impl DecisionOutcome {
    pub fn deleted(&self) -> Vec<StmtId> {
        self.actions
            .iter()
            .filter(|(_, a)| **a == Action::Delete)
            .map(|(id, _)| *id)
            .collect()
    }
}

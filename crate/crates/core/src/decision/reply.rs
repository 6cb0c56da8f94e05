//! LLM-backed decisions: prompt, reply extraction, and id re-anchoring.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use super::annotate::{build_prompt, render_annotations, AnnotateError};
use super::{Action, DecisionOutcome};
use crate::advisor::security::Finding;
use crate::advisor::FunctionSuggestions;
use crate::llm::{ChatBackend, ChatMessage, ChatRequest, LlmError};
use crate::minic::{parse_function, replace_function, Function, SourceUnit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyError {
    #[error("the reply contains no fenced code block")]
    NoCodeBlock,
    #[error("the code block does not parse: {0}")]
    Parse(String),
    #[error("expected function '{expected}', got '{found}'")]
    NameMismatch { expected: String, found: String },
}

static FENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[^\n]*\n(.*?)```").expect("regex"));

/// The last fenced code block of `text`, parsed as one function named
/// `expected`.
pub fn parse_reply(text: &str, expected: &str) -> Result<Function, ReplyError> {
    let code = FENCE
        .captures_iter(text)
        .last()
        .map(|c| c[1].to_string())
        .ok_or(ReplyError::NoCodeBlock)?;
    let (f, _) = parse_function(&code, 0).map_err(|d| ReplyError::Parse(d.first().to_string()))?;
    if f.name != expected {
        return Err(ReplyError::NameMismatch {
            expected: expected.to_string(),
            found: f.name,
        });
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmDecisionError {
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Reply(#[from] ReplyError),
}

/// One earlier exchange for the same function: the model's reply and why
/// it was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub reply: String,
    pub feedback: String,
}

/// The conversation sent for one decision. Earlier rejected attempts are
/// replayed as assistant/user turns after the prompt.
pub fn decision_request(
    model: &str,
    temperature: f64,
    prompt: String,
    history: &[Attempt],
) -> ChatRequest {
    let mut messages = vec![ChatMessage::user(prompt)];
    for a in history {
        messages.push(ChatMessage::assistant(a.reply.clone()));
        messages.push(ChatMessage::user(format!(
            "The function you produced was rejected.\n{}\nPlease fix it and reply with the complete function in one fenced code block.",
            a.feedback
        )));
    }
    let mut r = ChatRequest::new(model, messages);
    r.temperature = temperature;
    r
}

/// Which model to ask, and how.
#[derive(Clone, Copy)]
pub struct LlmPolicy<'a> {
    pub backend: &'a dyn ChatBackend,
    pub model: &'a str,
    pub temperature: f64,
}

/// Ask the model for a debloated version of `function`. On success the
/// candidate's statement ids are aligned with the original function's. The
/// raw reply is returned alongside so callers can report it back.
pub fn decide_llm(
    policy: LlmPolicy<'_>,
    unit: &SourceUnit,
    function: &str,
    suggestions: &FunctionSuggestions,
    findings: &[Finding],
    history: &[Attempt],
) -> (Result<DecisionOutcome, LlmDecisionError>, Option<String>) {
    let annotated = match render_annotations(unit, function, suggestions, findings) {
        Ok(a) => a,
        Err(e) => return (Err(e.into()), None),
    };
    let req = decision_request(policy.model, policy.temperature, build_prompt(&annotated), history);
    let reply = match policy.backend.complete(&req) {
        Ok(r) => r,
        Err(e) => return (Err(e.into()), None),
    };
    let parsed = match parse_reply(&reply, function) {
        Ok(f) => f,
        Err(e) => return (Err(e.into()), Some(reply)),
    };
    let aligned = replace_function(unit, function, &parsed).expect("function exists");
    let cand = aligned.function(function).expect("function exists").clone();
    let kept: std::collections::HashSet<_> = cand.stmt_ids().into_iter().collect();
    let original = unit.function(function).expect("function exists");
    let suggested = suggestions.ids();
    let mut actions = BTreeMap::new();
    for id in original.stmt_ids() {
        let a = match (suggested.contains(&id), kept.contains(&id)) {
            (true, true) => Action::Retain,
            (true, false) => Action::Delete,
            (false, false) => Action::Rewrite,
            (false, true) => continue,
        };
        actions.insert(id, a);
    }
    let outcome = DecisionOutcome {
        function: function.to_string(),
        candidate: cand,
        actions,
        notes: vec![format!("model reply of {} bytes", reply.len())],
        next_id: aligned.next_id,
    };
    (Ok(outcome), Some(reply))
}

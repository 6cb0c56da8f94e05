//! Inline annotations that carry advisor output into the prompt, and the
//! prompt itself.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advisor::security::{rewrite_messages, Finding};
use crate::advisor::FunctionSuggestions;
use crate::minic::printer::print_function_mapped;
use crate::minic::{SourceUnit, StmtId};

pub const DEBLOAT_TAG: &str = "DEBLOAT";
pub const SECURITY_TAG: &str = "SECURITY";

const DECIDE_TEMPLATE: &str = include_str!("../../assets/prompts/decide.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedFunction {
    pub function: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error("no function named '{0}'")]
    UnknownFunction(String),
    #[error("statement {0} is not part of function '{1}'")]
    AnchorOutside(StmtId, String),
}

/// Print `function` with a `// [DEBLOAT: ...]` marker on the header line of
/// every deletion candidate and a `// [SECURITY: ...]` note on the header
/// line of every flagged statement.
pub fn render_annotations(
    unit: &SourceUnit,
    function: &str,
    suggestions: &FunctionSuggestions,
    findings: &[Finding],
) -> Result<AnnotatedFunction, AnnotateError> {
    let f = unit
        .function(function)
        .ok_or_else(|| AnnotateError::UnknownFunction(function.to_string()))?;
    let printed = print_function_mapped(f);
    let line_of = |id: StmtId| {
        printed
            .lines
            .get(&id)
            .copied()
            .ok_or_else(|| AnnotateError::AnchorOutside(id, function.to_string()))
    };
    let mut reasons: BTreeMap<u32, BTreeSet<(crate::advisor::Reason, &'static str)>> = BTreeMap::new();
    for c in &suggestions.candidates {
        reasons
            .entry(line_of(c.stmt_id)?)
            .or_default()
            .insert((c.reason, c.reason.label()));
    }
    let mut notes: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for m in rewrite_messages(findings, unit) {
        let line = line_of(m.anchor)?;
        let v = notes.entry(line).or_default();
        if !v.contains(&m.message) {
            v.push(m.message);
        }
    }
    let mut text = String::with_capacity(printed.text.len() * 2);
    for (i, line) in printed.text.lines().enumerate() {
        let n = i as u32 + 1;
        text.push_str(line);
        let mut parts = Vec::new();
        if let Some(r) = reasons.get(&n) {
            let labels: Vec<&str> = r.iter().map(|(_, l)| *l).collect();
            parts.push(format!("[{DEBLOAT_TAG}: {}]", labels.join(", ")));
        }
        for msg in notes.get(&n).into_iter().flatten() {
            parts.push(format!("[{SECURITY_TAG}: {msg}]"));
        }
        if !parts.is_empty() {
            text.push_str(" // ");
            text.push_str(&parts.join(" "));
        }
        text.push('\n');
    }
    Ok(AnnotatedFunction {
        function: function.to_string(),
        text,
    })
}

static SUFFIX: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^ // \[(?:DEBLOAT|SECURITY): [^\]\n]*\](?: \[(?:DEBLOAT|SECURITY): [^\]\n]*\])*$")
        .expect("regex")
});

/// Remove every annotation added by [`render_annotations`].
pub fn strip_annotations(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        let (body, nl) = match line.strip_suffix('\n') {
            Some(b) => (b, "\n"),
            None => (line, ""),
        };
        let cut = body
            .match_indices(" // [")
            .map(|(i, _)| i)
            .find(|&i| SUFFIX.is_match(&body[i..]))
            .unwrap_or(body.len());
        out.push_str(&body[..cut]);
        out.push_str(nl);
    }
    out
}

/// The decision prompt for one annotated function.
pub fn build_prompt(annotated: &AnnotatedFunction) -> String {
    DECIDE_TEMPLATE
        .replace("{function}", &annotated.function)
        .replace("{code}", annotated.text.trim_end_matches('\n'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::{DeletionCandidate, Reason};
    use crate::minic::{parse, print_function, StmtKind};

    const SRC: &str = "int f(int c) {\n\
        int tmp;\n\
        if (c == 9) { tmp = 1; } else { tmp = 0; }\n\
        prints(\"a // [DEBLOAT: x]\");\n\
        return tmp;\n\
        }\n\
        int main() { return f(getc()); }";

    fn first(u: &SourceUnit, pred: impl Fn(&StmtKind) -> bool) -> StmtId {
        let mut hit = None;
        u.functions[0].walk(&mut |s| {
            if hit.is_none() && pred(&s.kind) {
                hit = Some(s.id)
            }
        });
        hit.unwrap()
    }

    #[test]
    fn no_annotations_is_plain_print() {
        let u = parse(SRC, "t").unwrap();
        let empty = FunctionSuggestions {
            function: "f".into(),
            candidates: vec![],
        };
        let a = render_annotations(&u, "f", &empty, &[]).unwrap();
        assert_eq!(a.text, print_function(&u.functions[0]));
    }

    #[test]
    fn markers_and_notes_strip_back() {
        let u = parse(SRC, "t").unwrap();
        let iff = first(&u, |k| matches!(k, StmtKind::If { .. }));
        let ret = first(&u, |k| matches!(k, StmtKind::Return(_)));
        let pr = first(&u, |k| matches!(k, StmtKind::Expr(_)));
        let sugg = FunctionSuggestions {
            function: "f".into(),
            candidates: vec![
                DeletionCandidate {
                    stmt_id: iff,
                    reason: Reason::Uncovered,
                },
                DeletionCandidate {
                    stmt_id: pr,
                    reason: Reason::Uncovered,
                },
            ],
        };
        let finding = Finding {
            checker: crate::advisor::Checker::UninitRead,
            severity: crate::advisor::Severity::High,
            function: "f".into(),
            anchor: ret,
            message: "variable 'tmp' may be used uninitialized at line 12".into(),
            subject: Some("tmp".into()),
        };
        let a = render_annotations(&u, "f", &sugg, &[finding]).unwrap();
        assert!(a.text.contains("if (c == 9) { // [DEBLOAT: uncovered]\n"));
        assert!(a
            .text
            .contains("return tmp; // [SECURITY: variable 'tmp' may be used uninitialized at this line]\n"));
        assert!(!a.text.contains("line 12"));
        assert_eq!(strip_annotations(&a.text), print_function(&u.functions[0]));
        // The string literal that looks like a marker survives stripping.
        assert!(strip_annotations(&a.text).contains("\"a // [DEBLOAT: x]\""));
    }

    #[test]
    fn anchors_must_be_inside() {
        let u = parse(SRC, "t").unwrap();
        let main_stmt = u.functions[1].body.stmts[0].id;
        let sugg = FunctionSuggestions {
            function: "f".into(),
            candidates: vec![DeletionCandidate {
                stmt_id: main_stmt,
                reason: Reason::Uncovered,
            }],
        };
        assert_eq!(
            render_annotations(&u, "f", &sugg, &[]),
            Err(AnnotateError::AnchorOutside(main_stmt, "f".into()))
        );
    }

    #[test]
    fn prompt_sections() {
        let u = parse(SRC, "t").unwrap();
        let empty = FunctionSuggestions {
            function: "f".into(),
            candidates: vec![],
        };
        let a = render_annotations(&u, "f", &empty, &[]).unwrap();
        let p = build_prompt(&a);
        let pos: Vec<usize> = ["#Goal", "#Input", "#Output"]
            .iter()
            .map(|h| {
                assert_eq!(p.matches(h).count(), 1, "{h}");
                p.find(h).unwrap()
            })
            .collect();
        assert!(pos[0] < pos[1] && pos[1] < pos[2]);
        assert!(p.contains("int f(int c) {"));
        assert!(!p.contains("{code}") && !p.contains("{function}"));
        assert_eq!(build_prompt(&a), p);
    }
}

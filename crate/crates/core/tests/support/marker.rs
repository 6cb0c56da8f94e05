//! A scripted stand-in for a chat model. It answers the four prompt kinds
//! by reading the prompt text only, so its transcripts can be recorded as
//! replay fixtures.
//!
//! Decisions: drop every marked statement unless it, or a statement
//! enclosing it, mentions a name quoted in a security warning. After a
//! rejection it keeps everything.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use leader::augment::extract_features;
use leader::decision::strip_annotations;
use leader::llm::{ChatBackend, ChatRequest, LlmError};
use serde_json::{json, Value};

#[derive(Default)]
pub struct MarkerBackend {
    pub calls: AtomicUsize,
}

impl MarkerBackend {
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn fenced_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    let from = text.find(marker)?;
    let rest = &text[from..];
    let open = rest.find("```")?;
    let body = &rest[open + 3..];
    let body = &body[body.find('\n')? + 1..];
    Some(&body[..body.find("```")?])
}

fn section<'a>(text: &'a str, header: &str) -> Vec<&'a str> {
    let Some(i) = text.find(header) else { return Vec::new() };
    text[i + header.len()..]
        .lines()
        .skip(1)
        .take_while(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .collect()
}

fn flag_of(option: &str) -> Option<&str> {
    option.split_whitespace().next().filter(|f| f.starts_with('-'))
}

fn uses(arg: &str, flag: &str) -> bool {
    arg == flag || arg.strip_prefix(flag).is_some_and(|r| r.starts_with('='))
}

fn features_reply(prompt: &str) -> Value {
    let doc = fenced_after(prompt, "#Input").unwrap_or("");
    let feats = extract_features(doc).unwrap_or_default();
    Value::Array(
        feats
            .iter()
            .map(|f| json!({"name": f.name, "description": f.description, "option": f.option, "example": f.example}))
            .collect(),
    )
}

fn desired_reply(prompt: &str) -> Value {
    let feats: Vec<(String, Option<String>)> = section(prompt, "Features:")
        .iter()
        .filter_map(|l| {
            let l = l.trim().strip_prefix("- ")?;
            let (name, rest) = l.split_once(": ")?;
            let opt = rest.rsplit_once("(option: ")?.1.trim_end_matches(')');
            Some((name.to_string(), flag_of(opt).map(str::to_string)))
        })
        .collect();
    let mut map: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for l in section(prompt, "Tests (") {
        let Some((idx, argv)) = l.split_once(": ") else { continue };
        let (Ok(idx), Ok(argv)) = (idx.trim().parse::<usize>(), serde_json::from_str::<Vec<String>>(argv)) else {
            continue;
        };
        let mut hit = false;
        for (name, flag) in &feats {
            if let Some(f) = flag {
                if argv.iter().skip(1).any(|a| uses(a, f)) {
                    map.entry(name.clone()).or_default().push(idx);
                    hit = true;
                }
            }
        }
        if !hit {
            if let Some((name, _)) = feats.iter().find(|(_, f)| f.is_none()) {
                map.entry(name.clone()).or_default().push(idx);
            }
        }
    }
    json!(map)
}

fn vary(s: &str) -> Vec<String> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let neg = if let Some(d) = s.strip_prefix('-') { d.to_string() } else { format!("-{s}") };
        return vec!["0".into(), neg, format!("{s}9")];
    }
    if s.contains('/') {
        return vec![format!("{}/z", s.trim_end_matches('/'))];
    }
    vec![format!("{s}{s}")]
}

fn generate_reply(prompt: &str) -> Value {
    let k: usize = prompt
        .split("up to ")
        .nth(1)
        .and_then(|r| r.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .unwrap_or(3);
    let examples: Vec<Vec<String>> = section(prompt, "Existing examples")
        .iter()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect();
    let mut out: Vec<Vec<String>> = Vec::new();
    for ex in &examples {
        for i in 1..ex.len() {
            if ex[i].starts_with('-') && !ex[i][1..].bytes().all(|b| b.is_ascii_digit()) {
                continue;
            }
            for v in vary(&ex[i]) {
                let mut a = ex.clone();
                a[i] = v;
                if !examples.contains(&a) && !out.contains(&a) && out.len() < k {
                    out.push(a);
                }
            }
        }
    }
    json!(out)
}

fn braces(line: &str) -> i32 {
    let mut depth = 0;
    let mut quote: Option<char> = None;
    let mut esc = false;
    for c in line.chars() {
        match quote {
            Some(q) => {
                if esc {
                    esc = false;
                } else if c == '\\' {
                    esc = true;
                } else if c == q {
                    quote = None;
                }
            }
            None => match c {
                '"' | '\'' => quote = Some(c),
                '{' => depth += 1,
                '}' => depth -= 1,
                '/' if line.contains("// [") => {}
                _ => {}
            },
        }
    }
    depth
}

fn quoted_names(text: &str) -> Vec<String> {
    let mut names = Vec::new();
    for line in text.lines() {
        let Some(i) = line.find("[SECURITY:") else { continue };
        let msg = &line[i..];
        let parts: Vec<&str> = msg.split('\'').collect();
        for w in parts.iter().skip(1).step_by(2) {
            names.push(w.to_string());
        }
    }
    names
}

fn mentions(code: &str, name: &str) -> bool {
    code.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).any(|w| w == name)
}

/// The function with acceptable deletions applied.
pub fn decide_text(annotated: &str) -> String {
    let names = quoted_names(annotated);
    let lines: Vec<&str> = annotated.lines().collect();
    let mut keep = Vec::new();
    let mut headers: Vec<String> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        let code = strip_annotations(raw);
        let marked = raw.contains("[DEBLOAT:");
        let trimmed = code.trim();
        let guarded = names.iter().any(|n| mentions(trimmed, n) || headers.iter().any(|h| mentions(h, n)));
        let label = trimmed.starts_with("case ") || trimmed.starts_with("default:");
        if marked && !guarded && !label && i > 0 {
            // Skip the statement, and its body if it opens one.
            let mut depth = braces(&code);
            i += 1;
            while depth > 0 && i < lines.len() {
                depth += braces(&strip_annotations(lines[i]));
                i += 1;
            }
            continue;
        }
        let d = braces(&code);
        if d > 0 {
            headers.push(trimmed.to_string());
        } else if d < 0 {
            headers.pop();
        } else if trimmed.starts_with('}') && trimmed.ends_with('{') {
            // `} else {` keeps the enclosing header.
        }
        keep.push(code);
        i += 1;
    }
    keep.join("\n") + "\n"
}

impl ChatBackend for MarkerBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = &request.messages.first().map(|m| m.content.clone()).unwrap_or_default();
        if prompt.contains("list every feature") {
            return Ok(features_reply(prompt).to_string());
        }
        if prompt.contains("Identify which of the listed features") {
            return Ok(desired_reply(prompt).to_string());
        }
        if prompt.contains("Write additional test inputs") {
            return Ok(generate_reply(prompt).to_string());
        }
        let code = fenced_after(prompt, "#Input").unwrap_or("");
        let text = if request.messages.len() > 1 {
            strip_annotations(code)
        } else {
            decide_text(code)
        };
        Ok(format!("Removed the marked statements that are safe to drop.\n```c\n{text}```\n"))
    }
}

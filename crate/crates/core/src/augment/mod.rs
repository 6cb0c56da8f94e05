//! Documentation-guided test augmentation.
//!
//! Features come from the OPTIONS section of a man-style doc file. A
//! feature is desired when one of the user's tests passes its option. New
//! tests vary the operands of those tests and combine desired options, and
//! are stamped with the original program's behaviour.

pub mod llm;
pub use llm::{augment_suite_llm, extract_features_llm, generate_tests_llm, identify_desired_llm};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minic::{lower, LowerError, SourceUnit};
use crate::runtime::{mutate_test, stamp, TestCase};

/// Name of the feature covering invocations without options.
pub const DEFAULT_FEATURE: &str = "default";
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DocFeature {
    pub name: String,
    pub description: String,
    /// Flag spelling, possibly followed by an operand placeholder. Empty
    /// for the default behaviour.
    pub option: String,
    /// An invocation using the feature, if the doc shows one.
    pub example: String,
}

impl DocFeature {
    pub fn flag(&self) -> Option<&str> {
        self.option.split_whitespace().next()
    }

    pub fn takes_operand(&self) -> bool {
        self.option.split_whitespace().nth(1).is_some()
    }

    pub fn is_default(&self) -> bool {
        self.option.is_empty()
    }

    /// Whether `arg` passes this feature's option.
    pub fn matches_arg(&self, arg: &str) -> bool {
        match self.flag() {
            Some(f) => arg == f || (f.starts_with("--") && arg.starts_with(&format!("{f}="))),
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("the documentation has no OPTIONS section")]
    MissingOptions,
    #[error("malformed model reply: {0}")]
    MalformedReply(String),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

fn sections(doc: &str) -> BTreeMap<String, Vec<&str>> {
    let mut out: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in doc.lines() {
        let is_header = !line.is_empty()
            && !line.starts_with(char::is_whitespace)
            && line.chars().all(|c| c.is_ascii_uppercase() || c == ' ');
        if is_header {
            current = Some(line.trim().to_string());
            out.entry(line.trim().to_string()).or_default();
        } else if let Some(c) = &current {
            out.get_mut(c).expect("section").push(line);
        }
    }
    out
}

static OPTION_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s+(-{1,2}[A-Za-z0-9][A-Za-z0-9-]*)(?:[ =]([A-Z][A-Z0-9_]*))?(?:\s{2,}(.*))?$")
        .expect("regex")
});

/// Program name from the NAME section ("prog - summary").
pub fn program_name(doc: &str) -> Option<String> {
    let s = sections(doc);
    let line = s.get("NAME")?.iter().find(|l| !l.trim().is_empty())?;
    line.split_whitespace().next().map(str::to_string)
}

/// Parse the OPTIONS section. The result always ends with the
/// default-behaviour feature.
pub fn extract_features(doc: &str) -> Result<Vec<DocFeature>, AugmentError> {
    let s = sections(doc);
    let options = s.get("OPTIONS").ok_or(AugmentError::MissingOptions)?;
    let examples: Vec<String> = s
        .get("EXAMPLES")
        .map(|v| v.iter().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect())
        .unwrap_or_default();
    let mut feats: Vec<DocFeature> = Vec::new();
    for line in options {
        if let Some(c) = OPTION_LINE.captures(line) {
            let flag = c[1].to_string();
            let option = match c.get(2) {
                Some(op) => format!("{flag} {}", op.as_str()),
                None => flag.clone(),
            };
            feats.push(DocFeature {
                name: flag.trim_start_matches('-').to_string(),
                description: c.get(3).map(|d| d.as_str().trim().to_string()).unwrap_or_default(),
                option,
                example: String::new(),
            });
        } else if let Some(last) = feats.last_mut() {
            let more = line.trim();
            if !more.is_empty() {
                if !last.description.is_empty() {
                    last.description.push(' ');
                }
                last.description.push_str(more);
            }
        }
    }
    let summary = s
        .get("DESCRIPTION")
        .and_then(|v| v.iter().find(|l| !l.trim().is_empty()))
        .map(|l| l.trim().to_string())
        .unwrap_or_else(|| "behaviour without options".into());
    let mut default = DocFeature {
        name: DEFAULT_FEATURE.into(),
        description: summary,
        option: String::new(),
        example: String::new(),
    };
    for ex in &examples {
        let words = shlex::split(ex).unwrap_or_default();
        let users: Vec<usize> = (0..feats.len())
            .filter(|i| words.iter().any(|w| feats[*i].matches_arg(w)))
            .collect();
        if users.is_empty() && default.example.is_empty() {
            default.example = ex.clone();
        }
        for i in users {
            if feats[i].example.is_empty() {
                feats[i].example = ex.clone();
            }
        }
    }
    feats.push(default);
    Ok(feats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub supported: Vec<DocFeature>,
    /// Names of desired features, in documentation order.
    pub desired: Vec<String>,
    /// The user's tests that exercise each desired feature.
    pub exemplars: BTreeMap<String, Vec<TestCase>>,
}

impl FeatureSet {
    pub fn feature(&self, name: &str) -> Option<&DocFeature> {
        self.supported.iter().find(|f| f.name == name)
    }
}

/// Names of the documented features a test uses; the default feature when
/// it passes no documented option.
pub fn features_of(features: &[DocFeature], test: &TestCase) -> Vec<String> {
    let used: Vec<String> = features
        .iter()
        .filter(|f| !f.is_default() && test.args().iter().any(|a| f.matches_arg(a)))
        .map(|f| f.name.clone())
        .collect();
    if used.is_empty() {
        vec![DEFAULT_FEATURE.to_string()]
    } else {
        used
    }
}

pub fn identify_desired(features: &[DocFeature], t_d: &[TestCase]) -> FeatureSet {
    let mut exemplars: BTreeMap<String, Vec<TestCase>> = BTreeMap::new();
    for t in t_d {
        for name in features_of(features, t) {
            exemplars.entry(name).or_default().push(t.clone());
        }
    }
    let desired = features
        .iter()
        .filter(|f| exemplars.contains_key(&f.name))
        .map(|f| f.name.clone())
        .collect();
    FeatureSet {
        supported: features.to_vec(),
        desired,
        exemplars,
    }
}

fn is_number(s: &str) -> bool {
    let d = s.strip_prefix('-').unwrap_or(s);
    !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())
}

fn deeper(s: &str) -> Option<String> {
    if !s.contains('/') {
        return None;
    }
    let base = s.trim_end_matches('/');
    let last = base.rsplit('/').next().unwrap_or("");
    let next = match last.bytes().last() {
        Some(c @ b'a'..=b'y') => ((c + 1) as char).to_string(),
        _ => "x".to_string(),
    };
    Some(format!("{base}/{next}"))
}

fn longer(s: &str) -> Option<String> {
    if s.is_empty() {
        return None;
    }
    Some(if is_number(s) { format!("{s}0") } else { format!("{s}{s}") })
}

fn boundary(s: &str) -> Vec<String> {
    if is_number(s) {
        let mut v = vec!["0".to_string(), "-1".to_string()];
        if let Some(neg) = s.strip_prefix('-') {
            v.push(neg.to_string());
        }
        v.retain(|x| x != s);
        v
    } else {
        let mut v = Vec::new();
        if let Some(c) = s.chars().next() {
            if s.chars().count() > 1 {
                v.push(c.to_string());
            }
        }
        v
    }
}

fn whitespace(s: &str) -> Option<String> {
    if s.contains(' ') {
        Some(s.replacen(' ', "\t", 1))
    } else {
        None
    }
}

fn stdin_variants(input: &[u8]) -> [Vec<Vec<u8>>; 4] {
    let text = input.to_vec();
    let mut ws = Vec::new();
    if let Some(p) = text.iter().position(|b| *b == b' ') {
        let mut t = text.clone();
        t[p] = b'\t';
        ws.push(t);
    }
    if !text.is_empty() {
        let mut t = text.clone();
        t.insert(t.len() / 2, b'\t');
        ws.push(t);
        let mut t = text.clone();
        t.extend_from_slice(b"\n");
        ws.push(t);
    }
    let deep = Vec::new();
    let long = if text.is_empty() {
        Vec::new()
    } else {
        vec![[text.clone(), text.clone()].concat()]
    };
    let edge = if text.is_empty() { Vec::new() } else { vec![Vec::new()] };
    [deep, ws, edge, long]
}

/// Argument positions that hold operands rather than documented flags.
fn operand_positions(features: &[DocFeature], argv: &[String]) -> Vec<usize> {
    (1..argv.len())
        .filter(|&i| !features.iter().any(|f| f.matches_arg(&argv[i])))
        .collect()
}

/// Tokens passing the option of `f`, taken from an exemplar.
fn option_tokens(f: &DocFeature, exemplar: &TestCase) -> Vec<String> {
    let args = &exemplar.argv;
    for i in 1..args.len() {
        if f.matches_arg(&args[i]) {
            let mut v = vec![args[i].clone()];
            if f.takes_operand() && !args[i].contains('=') {
                if let Some(op) = args.get(i + 1) {
                    v.push(op.clone());
                }
            }
            return v;
        }
    }
    Vec::new()
}

/// Candidate inputs for one feature, round-robin over variation kinds so a
/// small budget still sees every kind.
fn candidates(fs: &FeatureSet, name: &str) -> Vec<(Vec<String>, Vec<u8>)> {
    let Some(feat) = fs.feature(name) else {
        return Vec::new();
    };
    let exemplars = fs.exemplars.get(name).cloned().unwrap_or_default();
    let Some(first) = exemplars.first() else {
        return Vec::new();
    };
    let prog = first.argv.first().cloned().unwrap_or_default();
    // kinds: example, deeper, whitespace, boundary, longer, pairwise
    let mut kinds: [Vec<(Vec<String>, Vec<u8>)>; 6] = Default::default();
    if !feat.example.is_empty() {
        if let Some(mut argv) = shlex::split(&feat.example) {
            if !argv.is_empty() {
                argv[0] = prog.clone();
                kinds[0].push((argv, first.stdin.clone()));
            }
        }
    }
    for e in &exemplars {
        let ops = operand_positions(&fs.supported, &e.argv);
        for &i in &ops {
            let s = &e.argv[i];
            let mut with = |k: usize, v: String| {
                let mut argv = e.argv.clone();
                argv[i] = v;
                kinds[k].push((argv, e.stdin.clone()));
            };
            if let Some(v) = deeper(s) {
                with(1, v);
            }
            if let Some(v) = whitespace(s) {
                with(2, v);
            }
            for v in boundary(s) {
                with(3, v);
            }
            if let Some(v) = longer(s) {
                with(4, v);
            }
        }
        for (k, inputs) in stdin_variants(&e.stdin).into_iter().enumerate() {
            for input in inputs {
                kinds[[1, 2, 3, 4][k]].push((e.argv.clone(), input));
            }
        }
    }
    for other in &fs.desired {
        if other == name {
            continue;
        }
        let Some(g) = fs.feature(other) else { continue };
        let Some(gx) = fs.exemplars.get(other).and_then(|v| v.first()) else {
            continue;
        };
        let toks = option_tokens(g, gx);
        if toks.is_empty() || first.args().iter().any(|a| g.matches_arg(a)) {
            continue;
        }
        let mut argv = vec![prog.clone()];
        argv.extend(toks);
        argv.extend(first.args().iter().cloned());
        kinds[5].push((argv, first.stdin.clone()));
    }
    let mut out = Vec::new();
    let longest = kinds.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..longest {
        for k in &kinds {
            if let Some(c) = k.get(i) {
                out.push(c.clone());
            }
        }
    }
    out
}

/// New tests for the desired features: at most `k_per_feature` per feature,
/// each stamped with the original program's behaviour. Candidates on which
/// the original does not terminate normally are discarded.
pub fn generate_tests(
    fs: &FeatureSet,
    k_per_feature: usize,
    unit: &SourceUnit,
    step_budget: u64,
) -> Result<Vec<TestCase>, LowerError> {
    let ir = lower(unit)?;
    let mut seen: HashSet<(Vec<String>, Vec<u8>)> = fs
        .exemplars
        .values()
        .flatten()
        .map(|t| (t.argv.clone(), t.stdin.clone()))
        .collect();
    let mut ids: BTreeSet<String> = fs.exemplars.values().flatten().map(|t| t.id.clone()).collect();
    let mut out = Vec::new();
    let mut discarded = 0usize;
    for name in &fs.desired {
        let mut kept = 0;
        let mut n = 0;
        for (argv, stdin) in candidates(fs, name) {
            if kept >= k_per_feature {
                break;
            }
            if !seen.insert((argv.clone(), stdin.clone())) {
                continue;
            }
            let id = loop {
                n += 1;
                let id = format!("{name}-aug{n:02}");
                if ids.insert(id.clone()) {
                    break id;
                }
            };
            let argv_ref: Vec<&str> = argv.iter().map(String::as_str).collect();
            let mut t = TestCase::new(id, &argv_ref, &stdin);
            t.features = features_of(&fs.supported, &t);
            if !t.features.contains(name) {
                t.features.insert(0, name.clone());
            }
            let mut one = [t];
            if stamp(&ir, &mut one, step_budget)[0] {
                let [t] = one;
                out.push(t);
                kept += 1;
            } else {
                discarded += 1;
            }
        }
    }
    if discarded > 0 {
        log::info!("augmentation discarded {discarded} candidate(s) the original does not run normally");
    }
    Ok(out)
}

/// Without documentation: stamped mutants of the user's tests.
pub fn mutation_fallback(
    t_d: &[TestCase],
    k_per_test: usize,
    unit: &SourceUnit,
    step_budget: u64,
    seed: u64,
) -> Result<Vec<TestCase>, LowerError> {
    let ir = lower(unit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<(Vec<String>, Vec<u8>)> =
        t_d.iter().map(|t| (t.argv.clone(), t.stdin.clone())).collect();
    let mut out = Vec::new();
    for t in t_d {
        let mut kept = 0;
        for attempt in 0..k_per_test * 4 {
            if kept >= k_per_test {
                break;
            }
            let mut m = mutate_test(t, rng.gen());
            if !seen.insert((m.argv.clone(), m.stdin.clone())) {
                continue;
            }
            m.id = format!("{}-mut{attempt:02}", t.id);
            m.features = t.features.clone();
            let mut one = [m];
            if stamp(&ir, &mut one, step_budget)[0] {
                let [m] = one;
                out.push(m);
                kept += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Augmented {
    /// The user's tests followed by the generated ones.
    pub suite: Vec<TestCase>,
    pub generated: usize,
    pub features: Option<FeatureSet>,
}

/// `t_d` plus generated tests. With no documentation, or documentation
/// lacking an OPTIONS section, falls back to stamped mutants.
pub fn augment_suite(
    doc: Option<&str>,
    t_d: &[TestCase],
    unit: &SourceUnit,
    k_per_feature: usize,
    step_budget: u64,
    seed: u64,
) -> Result<Augmented, AugmentError> {
    let feats = doc.map(extract_features).transpose().or_else(|e| match e {
        AugmentError::MissingOptions => Ok(None),
        e => Err(e),
    })?;
    let (generated, features) = match feats {
        Some(feats) => {
            let fs = identify_desired(&feats, t_d);
            (generate_tests(&fs, k_per_feature, unit, step_budget)?, Some(fs))
        }
        None => (mutation_fallback(t_d, k_per_feature, unit, step_budget, seed)?, None),
    };
    let mut suite = t_d.to_vec();
    let n = generated.len();
    suite.extend(generated);
    Ok(Augmented {
        suite,
        generated: n,
        features,
    })
}

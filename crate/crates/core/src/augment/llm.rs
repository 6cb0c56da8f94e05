//! Model-driven variants of feature extraction, feature identification and
//! test generation. Replies are JSON; a fenced block is accepted too.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::{augment_suite, features_of, program_name, AugmentError, Augmented, DocFeature, FeatureSet, DEFAULT_FEATURE};
use crate::decision::LlmPolicy;
use crate::llm::{ChatMessage, ChatRequest};
use crate::minic::{lower, SourceUnit};
use crate::runtime::{stamp, TestCase};

const FEATURES_TEMPLATE: &str = include_str!("../../assets/prompts/features.txt");
const DESIRED_TEMPLATE: &str = include_str!("../../assets/prompts/desired.txt");
const GENERATE_TEMPLATE: &str = include_str!("../../assets/prompts/generate.txt");

fn ask(policy: LlmPolicy<'_>, prompt: String) -> Result<String, AugmentError> {
    let mut req = ChatRequest::new(policy.model, vec![ChatMessage::user(prompt)]);
    req.temperature = policy.temperature;
    Ok(policy.backend.complete(&req)?)
}

/// The JSON payload of a reply: the last fenced block if any, else the
/// whole text.
fn json_payload(reply: &str) -> &str {
    let mut rest = reply;
    let mut last = None;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        match body.find("```") {
            Some(end) => {
                last = Some(&body[..end]);
                rest = &body[end + 3..];
            }
            None => break,
        }
    }
    last.unwrap_or(reply).trim()
}

fn parse_json<T: for<'de> Deserialize<'de>>(reply: &str) -> Result<T, AugmentError> {
    serde_json::from_str(json_payload(reply)).map_err(|e| AugmentError::MalformedReply(e.to_string()))
}

#[derive(Deserialize)]
struct WireFeature {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    option: String,
    #[serde(default)]
    example: String,
}

pub fn extract_features_llm(
    policy: LlmPolicy<'_>,
    program: &str,
    doc: &str,
) -> Result<Vec<DocFeature>, AugmentError> {
    let prompt = FEATURES_TEMPLATE
        .replace("{program}", program)
        .replace("{doc}", doc.trim_end());
    let wire: Vec<WireFeature> = parse_json(&ask(policy, prompt)?)?;
    let mut feats: Vec<DocFeature> = wire
        .into_iter()
        .map(|w| DocFeature {
            name: if w.option.trim().is_empty() {
                DEFAULT_FEATURE.to_string()
            } else {
                w.name
            },
            description: w.description,
            option: w.option.trim().to_string(),
            example: w.example,
        })
        .collect();
    // The documented options bound what the model may report.
    let documented: Option<BTreeSet<String>> = super::extract_features(doc)
        .ok()
        .map(|v| v.iter().filter_map(|f| f.flag().map(str::to_string)).collect());
    if let Some(doc_flags) = documented {
        feats.retain(|f| f.flag().is_none_or(|fl| doc_flags.contains(fl)));
    }
    if !feats.iter().any(DocFeature::is_default) {
        feats.push(DocFeature {
            name: DEFAULT_FEATURE.into(),
            description: "behaviour without options".into(),
            option: String::new(),
            example: String::new(),
        });
    }
    Ok(feats)
}

pub fn identify_desired_llm(
    policy: LlmPolicy<'_>,
    program: &str,
    features: &[DocFeature],
    t_d: &[TestCase],
) -> Result<FeatureSet, AugmentError> {
    let listing: String = features
        .iter()
        .map(|f| format!("- {}: {} (option: {})\n", f.name, f.description, if f.option.is_empty() { "none" } else { &f.option }))
        .collect();
    let tests: String = t_d
        .iter()
        .enumerate()
        .map(|(i, t)| format!("{i}: {}\n", serde_json::to_string(&t.argv).expect("argv serializes")))
        .collect();
    let prompt = DESIRED_TEMPLATE
        .replace("{program}", program)
        .replace("{features}", listing.trim_end())
        .replace("{tests}", tests.trim_end());
    let map: BTreeMap<String, Vec<usize>> = parse_json(&ask(policy, prompt)?)?;
    let mut exemplars: BTreeMap<String, Vec<TestCase>> = BTreeMap::new();
    for (name, idx) in map {
        if !features.iter().any(|f| f.name == name) {
            continue;
        }
        let tests: Vec<TestCase> = idx.into_iter().filter_map(|i| t_d.get(i).cloned()).collect();
        if !tests.is_empty() {
            exemplars.insert(name, tests);
        }
    }
    // Every provided test stays attached to some feature.
    for t in t_d {
        if !exemplars.values().flatten().any(|x| x.id == t.id) {
            for name in features_of(features, t) {
                exemplars.entry(name).or_default().push(t.clone());
            }
        }
    }
    let desired = features
        .iter()
        .filter(|f| exemplars.contains_key(&f.name))
        .map(|f| f.name.clone())
        .collect();
    Ok(FeatureSet {
        supported: features.to_vec(),
        desired,
        exemplars,
    })
}

pub fn generate_tests_llm(
    policy: LlmPolicy<'_>,
    program: &str,
    fs: &FeatureSet,
    k_per_feature: usize,
    unit: &SourceUnit,
    step_budget: u64,
) -> Result<Vec<TestCase>, AugmentError> {
    let ir = lower(unit)?;
    let mut ids: BTreeSet<String> = fs.exemplars.values().flatten().map(|t| t.id.clone()).collect();
    let mut out = Vec::new();
    for name in &fs.desired {
        let Some(feat) = fs.feature(name) else { continue };
        let ex = fs.exemplars.get(name).cloned().unwrap_or_default();
        let examples: String = ex
            .iter()
            .map(|t| serde_json::to_string(&t.argv).expect("argv serializes") + "\n")
            .collect();
        let others: Vec<String> = fs
            .desired
            .iter()
            .filter(|o| *o != name)
            .filter_map(|o| fs.feature(o))
            .filter(|f| !f.is_default())
            .map(|f| format!("`{}`", f.option))
            .collect();
        let prompt = GENERATE_TEMPLATE
            .replace("{program}", program)
            .replace("{k}", &k_per_feature.to_string())
            .replace("{feature}", name)
            .replace("{description}", &feat.description)
            .replace("{option}", if feat.option.is_empty() { "no option" } else { &feat.option })
            .replace("{others}", &if others.is_empty() { "(none)".to_string() } else { others.join(", ") })
            .replace("{examples}", examples.trim_end());
        let argvs: Vec<Vec<String>> = parse_json(&ask(policy, prompt)?)?;
        let stdin = ex.first().map(|t| t.stdin.clone()).unwrap_or_default();
        let mut kept = 0;
        for (n, argv) in argvs.into_iter().enumerate() {
            if kept >= k_per_feature || argv.is_empty() {
                continue;
            }
            let mut id = format!("{name}-llm{n:02}");
            while !ids.insert(id.clone()) {
                id.push('x');
            }
            let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
            let mut t = TestCase::new(id, &refs, &stdin);
            t.features = vec![name.clone()];
            let mut one = [t];
            if stamp(&ir, &mut one, step_budget)[0] {
                let [t] = one;
                out.push(t);
                kept += 1;
            }
        }
    }
    Ok(out)
}

/// Model-driven counterpart of [`augment_suite`]. Without documentation
/// this defers to the deterministic path.
pub fn augment_suite_llm(
    policy: LlmPolicy<'_>,
    doc: Option<&str>,
    t_d: &[TestCase],
    unit: &SourceUnit,
    k_per_feature: usize,
    step_budget: u64,
    seed: u64,
) -> Result<Augmented, AugmentError> {
    let Some(doc) = doc else {
        return augment_suite(None, t_d, unit, k_per_feature, step_budget, seed);
    };
    let program = program_name(doc).unwrap_or_else(|| unit.source_name.clone());
    let feats = extract_features_llm(policy, &program, doc)?;
    let fs = identify_desired_llm(policy, &program, &feats, t_d)?;
    let generated = generate_tests_llm(policy, &program, &fs, k_per_feature, unit, step_budget)?;
    let mut suite = t_d.to_vec();
    let n = generated.len();
    suite.extend(generated);
    Ok(Augmented {
        suite,
        generated: n,
        features: Some(fs),
    })
}

//! Test cases and JSON Lines suites.

use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    /// `argv[0]` is the program name.
    pub argv: Vec<String>,
    #[serde(with = "b64", default)]
    pub stdin: Vec<u8>,
    #[serde(
        with = "b64_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub expected_stdout: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_exit: Option<i32>,
    /// Feature tags, used to stratify splits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<String>,
}

impl TestCase {
    pub fn new(id: impl Into<String>, argv: &[&str], stdin: &[u8]) -> Self {
        TestCase {
            id: id.into(),
            argv: argv.iter().map(|s| s.to_string()).collect(),
            stdin: stdin.to_vec(),
            expected_stdout: None,
            expected_exit: None,
            features: Vec::new(),
        }
    }

    /// Arguments after the program name.
    pub fn args(&self) -> &[String] {
        self.argv.get(1..).unwrap_or(&[])
    }

    pub fn is_stamped(&self) -> bool {
        self.expected_stdout.is_some() && self.expected_exit.is_some()
    }
}

mod b64 {
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(text)
            .map_err(serde::de::Error::custom)
    }
}

mod b64_opt {
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        match Option::<String>::deserialize(d)? {
            Some(text) => base64::engine::general_purpose::STANDARD
                .decode(text)
                .map(Some)
                .map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read suite {0}: {1}")]
    Io(String, std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("duplicate test id '{0}'")]
    DuplicateId(String),
}

pub fn parse_suite(text: &str) -> Result<Vec<TestCase>, SuiteError> {
    let mut out = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: TestCase = serde_json::from_str(line).map_err(|source| SuiteError::Json {
            line: i + 1,
            source,
        })?;
        if !ids.insert(t.id.clone()) {
            return Err(SuiteError::DuplicateId(t.id));
        }
        out.push(t);
    }
    Ok(out)
}

pub fn suite_to_jsonl(tests: &[TestCase]) -> String {
    let mut s = String::new();
    for t in tests {
        s.push_str(&serde_json::to_string(t).expect("test cases serialize"));
        s.push('\n');
    }
    s
}

pub fn read_suite(path: &Path) -> Result<Vec<TestCase>, SuiteError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| SuiteError::Io(path.display().to_string(), e))?;
    parse_suite(&text)
}

pub fn write_suite(path: &Path, tests: &[TestCase]) -> std::io::Result<()> {
    std::fs::write(path, suite_to_jsonl(tests))
}

/// Encode bytes the way suites do.
pub fn encode_bytes(b: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let mut t = TestCase::new("t1", &["wc", "-l"], b"a b\n");
        t.expected_stdout = Some(b"1\n".to_vec());
        t.expected_exit = Some(0);
        t.features = vec!["lines".into()];
        let text = suite_to_jsonl(&[t.clone()]);
        assert!(text.contains("\"stdin\":\"YSBiCg==\""));
        assert_eq!(parse_suite(&text).unwrap(), vec![t]);
    }

    #[test]
    fn optional_fields_may_be_absent() {
        let t = parse_suite(r#"{"id":"a","argv":["p"],"stdin":""}"#).unwrap();
        assert_eq!(t[0].expected_stdout, None);
        assert_eq!(t[0].expected_exit, None);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let line = r#"{"id":"a","argv":["p"],"stdin":""}"#;
        let text = format!("{line}\n{line}\n");
        assert!(matches!(parse_suite(&text), Err(SuiteError::DuplicateId(_))));
    }
}

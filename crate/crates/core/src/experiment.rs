//! Batch runs over a corpus directory laid out as
//! `<root>/<program>/{program.mc, program.doc, suite.jsonl}`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::LlmPolicy;
use crate::metrics::{evaluate, EvalConfig, MetricsError, MetricsReport, TableRow};
use crate::minic::{parse_file, ParseFileError, SourceUnit};
use crate::pipeline::{baseline_cov, debloat_program, DebloatConfig, PipelineError, RunLog};
use crate::runtime::{read_suite, split_suite, SplitError, SuiteError, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Leader,
    Cov,
    CovPerf,
}

impl Approach {
    pub fn label(self) -> &'static str {
        match self {
            Approach::Leader => "leader",
            Approach::Cov => "cov",
            Approach::CovPerf => "cov_perf",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseFileError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no programs under {0}")]
    EmptyCorpus(PathBuf),
}

#[derive(Debug, Clone)]
pub struct CorpusProgram {
    pub name: String,
    pub unit: SourceUnit,
    pub doc: Option<String>,
    pub suite: Vec<TestCase>,
}

pub fn load_program(dir: &Path) -> Result<CorpusProgram, ExperimentError> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut unit = parse_file(&dir.join("program.mc"))?;
    unit.source_name = name.clone();
    let doc_path = dir.join("program.doc");
    let doc = if doc_path.exists() {
        Some(std::fs::read_to_string(&doc_path).map_err(|e| ExperimentError::Io(doc_path, e))?)
    } else {
        None
    };
    let suite = read_suite(&dir.join("suite.jsonl"))?;
    Ok(CorpusProgram { name, unit, doc, suite })
}

/// Every subdirectory holding a `program.mc`, sorted by name.
pub fn load_corpus(root: &Path) -> Result<Vec<CorpusProgram>, ExperimentError> {
    let rd = std::fs::read_dir(root).map_err(|e| ExperimentError::Io(root.to_path_buf(), e))?;
    let mut dirs: Vec<PathBuf> = rd
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.join("program.mc").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(ExperimentError::EmptyCorpus(root.to_path_buf()));
    }
    dirs.iter().map(|d| load_program(d)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub split_ratio: f64,
    pub debloat: DebloatConfig,
    pub eval: EvalConfig,
    /// Also run the pipeline with augmentation off.
    pub ablation: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            split_ratio: 0.1,
            debloat: DebloatConfig::default(),
            eval: EvalConfig::default(),
            ablation: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproachResult {
    pub debloated: SourceUnit,
    pub metrics: MetricsReport,
    pub log: Option<RunLog>,
}

#[derive(Debug, Clone)]
pub struct ProgramOutcome {
    pub name: String,
    pub t_d: Vec<TestCase>,
    pub t_e: Vec<TestCase>,
    /// Keyed by table label: `leader`, `leader_no_aug`, `cov`, `cov_perf`.
    pub results: BTreeMap<String, ApproachResult>,
}

pub const NO_AUG: &str = "leader_no_aug";

/// Run one approach on an already split suite.
pub fn run_approach(
    prog: &CorpusProgram,
    approach: Approach,
    t_d: &[TestCase],
    t_e: &[TestCase],
    debloat: &DebloatConfig,
    llm: Option<LlmPolicy<'_>>,
) -> Result<(SourceUnit, Option<RunLog>), ExperimentError> {
    Ok(match approach {
        Approach::Leader => {
            let run = debloat_program(&prog.unit, t_d, prog.doc.as_deref(), debloat, llm)?;
            (run.debloated, Some(run.log))
        }
        Approach::Cov => (baseline_cov(&prog.unit, t_d, debloat.step_budget).map_err(PipelineError::from)?, None),
        Approach::CovPerf => {
            let all: Vec<TestCase> = t_d.iter().chain(t_e).cloned().collect();
            (baseline_cov(&prog.unit, &all, debloat.step_budget).map_err(PipelineError::from)?, None)
        }
    })
}

pub fn run_program(
    prog: &CorpusProgram,
    config: &ExperimentConfig,
    llm: Option<LlmPolicy<'_>>,
) -> Result<ProgramOutcome, ExperimentError> {
    let (t_d, t_e) = split_suite(&prog.suite, config.split_ratio, config.debloat.seed)?;
    let mut plan: Vec<(String, Approach, DebloatConfig)> = vec![(
        Approach::Leader.label().into(),
        Approach::Leader,
        config.debloat.clone(),
    )];
    if config.ablation {
        plan.push((
            NO_AUG.into(),
            Approach::Leader,
            DebloatConfig {
                augment: false,
                ..config.debloat.clone()
            },
        ));
    }
    for a in [Approach::Cov, Approach::CovPerf] {
        plan.push((a.label().into(), a, config.debloat.clone()));
    }
    let mut results = BTreeMap::new();
    for (label, approach, dc) in plan {
        let (debloated, log) = run_approach(prog, approach, &t_d, &t_e, &dc, llm)?;
        let metrics = evaluate(&prog.unit, &debloated, &t_e, &config.eval, &dc.severities)?;
        results.insert(label, ApproachResult { debloated, metrics, log });
    }
    Ok(ProgramOutcome {
        name: prog.name.clone(),
        t_d,
        t_e,
        results,
    })
}

/// Per-program rows grouped by approach, each group followed by its mean.
pub fn table_rows(outcomes: &[ProgramOutcome]) -> Vec<TableRow> {
    let mut labels: Vec<&str> = vec![Approach::Leader.label(), NO_AUG, Approach::Cov.label(), Approach::CovPerf.label()];
    labels.retain(|l| outcomes.iter().any(|o| o.results.contains_key(*l)));
    let mut rows = Vec::new();
    for l in labels {
        let group: Vec<TableRow> = outcomes
            .iter()
            .filter_map(|o| o.results.get(l).map(|r| TableRow::from_report(format!("{l}:{}", o.name), &r.metrics)))
            .collect();
        let mean = TableRow::mean(format!("{l}:mean"), &group);
        rows.extend(group);
        rows.push(mean);
    }
    rows
}

//! Command-line front end. `main.rs` only forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment_suite, augment_suite_llm, DEFAULT_K};
use crate::decision::LlmPolicy;
use crate::experiment::{load_corpus, run_approach, run_program, table_rows, Approach, CorpusProgram, ExperimentConfig};
use crate::llm::{ChatBackend, HttpBackend, LlmConfig, RecordingBackend, ReplayBackend};
use crate::metrics::{evaluate, render_table, EvalConfig, MetricsReport, TableRow};
use crate::minic::{align_unit, lower, parse, parse_file, print_unit, SourceUnit};
use crate::pipeline::{DebloatConfig, Policy};
use crate::runtime::{fuzz_robustness, read_suite, split_suite, stamp, write_suite, TestCase, DEFAULT_STEP_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(_) => EXIT_FAILURE,
        }
    }
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct LlmSettings {
    #[serde(flatten)]
    pub http: LlmConfig,
    /// Answer from recorded fixtures instead of the network.
    pub replay: Option<PathBuf>,
    /// Write every exchange to this fixture file.
    pub record: Option<PathBuf>,
}


/// Settings shared by all commands. Loaded from `--config`, then
/// overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub program: Option<PathBuf>,
    pub doc: Option<PathBuf>,
    pub suite: Option<PathBuf>,
    pub eval_suite: Option<PathBuf>,
    pub split_ratio: f64,
    pub seed: u64,
    pub policy: Policy,
    pub augment: bool,
    pub approach: Approach,
    pub out: Option<PathBuf>,
    pub mutants: usize,
    pub step_budget: u64,
    pub max_iterations: usize,
    pub k_per_feature: usize,
    pub parallel: bool,
    pub llm: LlmSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            program: None,
            doc: None,
            suite: None,
            eval_suite: None,
            split_ratio: 0.1,
            seed: 0,
            policy: Policy::RuleBased,
            augment: true,
            approach: Approach::Leader,
            out: None,
            mutants: EvalConfig::default().n_mutants,
            step_budget: DEFAULT_STEP_BUDGET,
            max_iterations: 3,
            k_per_feature: DEFAULT_K,
            parallel: false,
            llm: LlmSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(CliError::Usage(format!("split ratio {} is outside (0, 1)", self.split_ratio)));
        }
        if self.max_iterations == 0 {
            return Err(CliError::Usage("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn debloat_config(&self) -> DebloatConfig {
        DebloatConfig {
            max_iterations: self.max_iterations,
            step_budget: self.step_budget,
            policy: self.policy,
            augment: self.augment,
            k_per_feature: self.k_per_feature,
            seed: self.seed,
            parallel: self.parallel,
            ..Default::default()
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            step_budget: self.step_budget,
            n_mutants: self.mutants,
            seed: self.seed,
        }
    }

    fn need<'a>(&self, p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        p.as_deref().ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    #[value(alias = "rule_based")]
    RuleBased,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproachArg {
    Leader,
    Cov,
    CovPerf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with a RunConfig; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// MiniC source file.
    #[arg(long, global = true)]
    pub program: Option<PathBuf>,
    /// Usage documentation of the program, used for augmentation.
    #[arg(long, global = true)]
    pub doc: Option<PathBuf>,
    /// Test suite in JSON Lines format.
    #[arg(long, global = true)]
    pub suite: Option<PathBuf>,
    /// Held-out tests; enables metrics for `debloat` and feeds cov_perf.
    #[arg(long, global = true)]
    pub eval_suite: Option<PathBuf>,
    /// Fraction of the suite given to debloating (default 0.1).
    #[arg(long, global = true)]
    pub split_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Who decides which suggested deletions to apply.
    #[arg(long, global = true, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long, global = true, value_enum)]
    pub augment: Option<OnOff>,
    #[arg(long, global = true, value_enum)]
    pub approach: Option<ApproachArg>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Mutated inputs per robustness measurement.
    #[arg(long, global = true)]
    pub mutants: Option<usize>,
    /// Interpreter steps allowed per test run.
    #[arg(long, global = true)]
    pub step_budget: Option<u64>,
    /// Decision attempts per function.
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
    /// Generated tests per desired feature.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Decide functions concurrently, then merge.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Chat completions URL.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Answer model requests from a fixture file or directory.
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,
    /// Save every model reply to this fixture file.
    #[arg(long, global = true)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "leader", version, about = "Debloat MiniC programs against a test suite")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a suite into t_d.jsonl and t_e.jsonl.
    Split,
    /// Debloat a program; writes debloated.mc, debloated.unit.json and run_log.json.
    Debloat,
    /// Score a debloated program against the original.
    Eval {
        #[arg(long)]
        debloated: PathBuf,
    },
    /// Write the suite extended with generated tests.
    Augment,
    /// Robustness of a program under seeded input mutation.
    Fuzz,
    /// Render a comparison table from metrics.json files or run directories.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Record the program's behaviour as each test's expectation.
    Stamp,
    /// Split, debloat with every approach and score each corpus program.
    Corpus {
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
    },
}

pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut c = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    macro_rules! over {
        ($field:ident) => {
            if let Some(v) = &common.$field {
                c.$field = Some(v.clone());
            }
        };
        ($field:ident, $dst:expr) => {
            if let Some(v) = common.$field.clone() {
                $dst = v.into();
            }
        };
    }
    over!(program);
    over!(doc);
    over!(suite);
    over!(eval_suite);
    over!(out);
    over!(split_ratio, c.split_ratio);
    over!(seed, c.seed);
    over!(mutants, c.mutants);
    over!(step_budget, c.step_budget);
    over!(max_iterations, c.max_iterations);
    over!(k, c.k_per_feature);
    over!(endpoint, c.llm.http.endpoint_url);
    over!(model, c.llm.http.model);
    if let Some(p) = &common.replay {
        c.llm.replay = Some(p.clone());
    }
    if let Some(p) = &common.record {
        c.llm.record = Some(p.clone());
    }
    if let Some(p) = common.policy {
        c.policy = match p {
            PolicyArg::RuleBased => Policy::RuleBased,
            PolicyArg::Llm => Policy::Llm,
        };
    }
    if let Some(a) = common.augment {
        c.augment = a == OnOff::On;
    }
    if let Some(a) = common.approach {
        c.approach = match a {
            ApproachArg::Leader => Approach::Leader,
            ApproachArg::Cov => Approach::Cov,
            ApproachArg::CovPerf => Approach::CovPerf,
        };
    }
    if common.parallel {
        c.parallel = true;
    }
    c.validate()?;
    Ok(c)
}

/// The configured model backend, wrapped for recording when asked.
pub struct Backend {
    inner: RecordingBackend<Box<dyn ChatBackend>>,
    record: Option<PathBuf>,
    model: String,
    temperature: f64,
}

impl Backend {
    pub fn from_settings(s: &LlmSettings) -> Result<Self, CliError> {
        let inner: Box<dyn ChatBackend> = match &s.replay {
            Some(p) => Box::new(ReplayBackend::load(p).map_err(|e| CliError::Usage(e.to_string()))?),
            None => Box::new(HttpBackend::from_env(s.http.clone()).map_err(|e| CliError::Usage(e.to_string()))?),
        };
        Ok(Backend {
            inner: RecordingBackend::new(inner),
            record: s.record.clone(),
            model: s.http.model.clone(),
            temperature: s.http.temperature,
        })
    }

    pub fn policy(&self) -> LlmPolicy<'_> {
        LlmPolicy {
            backend: &self.inner,
            model: &self.model,
            temperature: self.temperature,
        }
    }

    pub fn finish(&self) -> Result<(), CliError> {
        if let Some(p) = &self.record {
            write_text(p, &self.inner.recorded().to_json())?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| run_err(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| run_err(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn load_unit(path: &Path) -> Result<SourceUnit, CliError> {
    parse_file(path).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn load_suite(path: &Path) -> Result<Vec<TestCase>, CliError> {
    read_suite(path).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn load_doc(path: Option<&Path>) -> Result<Option<String>, CliError> {
    path.map(|p| fs::read_to_string(p).map_err(|e| CliError::Run(format!("{}: {e}", p.display()))))
        .transpose()
}

/// A debloated program, either the exact unit JSON or a `.mc` file that is
/// re-anchored on the original's statement ids.
pub fn load_debloated(original: &SourceUnit, path: &Path) -> Result<SourceUnit, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| run_err(format!("{}: {e}", path.display())))?;
        return serde_json::from_str(&text).map_err(|e| run_err(format!("{}: {e}", path.display())));
    }
    let text = fs::read_to_string(path).map_err(|e| run_err(format!("{}: {e}", path.display())))?;
    let parsed = parse(&text, &original.source_name).map_err(|e| run_err(format!("{}: {e}", path.display())))?;
    Ok(align_unit(original, &parsed))
}

fn out_dir(c: &RunConfig) -> Result<&Path, CliError> {
    c.need(&c.out, "out")
}

pub fn cmd_split(c: &RunConfig) -> Result<String, CliError> {
    let suite = load_suite(c.need(&c.suite, "suite")?)?;
    let (t_d, t_e) = split_suite(&suite, c.split_ratio, c.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let out = out_dir(c)?;
    let w = |name: &str, s: &[TestCase]| write_suite(&out.join(name), s).map_err(|e| run_err(format!("{name}: {e}")));
    fs::create_dir_all(out).map_err(run_err)?;
    w("t_d.jsonl", &t_d)?;
    w("t_e.jsonl", &t_e)?;
    Ok(to_json(&serde_json::json!({"t_d": t_d.len(), "t_e": t_e.len(), "seed": c.seed})))
}

pub fn cmd_debloat(c: &RunConfig) -> Result<String, CliError> {
    let program = c.need(&c.program, "program")?;
    let unit = load_unit(program)?;
    let name = unit.source_name.clone();
    let t_d = load_suite(c.need(&c.suite, "suite")?)?;
    let t_e = c.eval_suite.as_deref().map(load_suite).transpose()?;
    if c.approach == Approach::CovPerf && t_e.is_none() {
        return Err(CliError::Usage("cov_perf needs --eval-suite".into()));
    }
    let prog = CorpusProgram {
        name,
        unit,
        doc: load_doc(c.doc.as_deref())?,
        suite: Vec::new(),
    };
    let backend = match (c.approach, c.policy) {
        (Approach::Leader, Policy::Llm) => Some(Backend::from_settings(&c.llm)?),
        _ => None,
    };
    let empty = Vec::new();
    let (debloated, log) = run_approach(
        &prog,
        c.approach,
        &t_d,
        t_e.as_ref().unwrap_or(&empty),
        &c.debloat_config(),
        backend.as_ref().map(Backend::policy),
    )
    .map_err(run_err)?;
    if let Some(b) = &backend {
        b.finish()?;
    }
    let out = out_dir(c)?;
    write_text(&out.join("debloated.mc"), &print_unit(&debloated))?;
    write_text(&out.join("debloated.unit.json"), &to_json(&debloated))?;
    let log_json = match &log {
        Some(l) => to_json(l),
        None => to_json(&serde_json::json!({
            "program": prog.name,
            "approach": c.approach,
            "original_size": prog.unit.size(),
            "debloated_size": debloated.size(),
        })),
    };
    write_text(&out.join("run_log.json"), &log_json)?;
    if let Some(t_e) = &t_e {
        let m = evaluate(&prog.unit, &debloated, t_e, &c.eval_config(), &c.debloat_config().severities).map_err(run_err)?;
        write_text(&out.join("metrics.json"), &to_json(&m))?;
    }
    if log.as_ref().is_some_and(|l| !l.passes_validation_suite) {
        return Err(CliError::Run("the debloated program fails its validation suite".into()));
    }
    Ok(log_json)
}

pub fn cmd_eval(c: &RunConfig, debloated: &Path) -> Result<String, CliError> {
    let unit = load_unit(c.need(&c.program, "program")?)?;
    let deb = load_debloated(&unit, debloated)?;
    let t_e = load_suite(c.need(&c.suite, "suite")?)?;
    let m = evaluate(&unit, &deb, &t_e, &c.eval_config(), &c.debloat_config().severities).map_err(run_err)?;
    let json = to_json(&m);
    if let Some(out) = &c.out {
        write_text(&out.join("metrics.json"), &json)?;
    }
    Ok(json)
}

pub fn cmd_augment(c: &RunConfig) -> Result<String, CliError> {
    let unit = load_unit(c.need(&c.program, "program")?)?;
    let t_d = load_suite(c.need(&c.suite, "suite")?)?;
    let doc = load_doc(c.doc.as_deref())?;
    let aug = if c.policy == Policy::Llm {
        let b = Backend::from_settings(&c.llm)?;
        let r = augment_suite_llm(b.policy(), doc.as_deref(), &t_d, &unit, c.k_per_feature, c.step_budget, c.seed);
        b.finish()?;
        r
    } else {
        augment_suite(doc.as_deref(), &t_d, &unit, c.k_per_feature, c.step_budget, c.seed)
    }
    .map_err(run_err)?;
    let out = c.need(&c.out, "out")?;
    let path = if out.extension().is_some_and(|e| e == "jsonl") {
        out.to_path_buf()
    } else {
        out.join("augmented.jsonl")
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(run_err)?;
    }
    write_suite(&path, &aug.suite).map_err(run_err)?;
    let desired = aug.features.as_ref().map(|f| f.desired.clone());
    Ok(to_json(&serde_json::json!({
        "provided": t_d.len(),
        "generated": aug.generated,
        "desired_features": desired,
    })))
}

pub fn cmd_fuzz(c: &RunConfig) -> Result<String, CliError> {
    let unit = load_unit(c.need(&c.program, "program")?)?;
    let suite = load_suite(c.need(&c.suite, "suite")?)?;
    if suite.is_empty() {
        return Err(CliError::Usage("the seed suite is empty".into()));
    }
    let rob = fuzz_robustness(&unit, &suite, c.mutants, c.step_budget, c.seed).map_err(run_err)?;
    let json = to_json(&serde_json::json!({
        "program": unit.source_name,
        "mutants": c.mutants.max(1),
        "seed": c.seed,
        "robustness": rob,
    }));
    if let Some(out) = &c.out {
        write_text(&out.join("robustness.json"), &json)?;
    }
    Ok(json)
}

fn report_label(path: &Path) -> String {
    let dir = if path.is_dir() { path } else { path.parent().unwrap_or(path) };
    let parts: Vec<String> = dir
        .components()
        .rev()
        .take(2)
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    parts.into_iter().rev().collect::<Vec<_>>().join(":")
}

pub fn cmd_report(c: &RunConfig, runs: &[PathBuf]) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for r in runs {
        let file = if r.is_dir() { r.join("metrics.json") } else { r.clone() };
        let text = fs::read_to_string(&file).map_err(|e| run_err(format!("{}: {e}", file.display())))?;
        let m: MetricsReport = serde_json::from_str(&text).map_err(|e| run_err(format!("{}: {e}", file.display())))?;
        rows.push(TableRow::from_report(report_label(r), &m));
    }
    let table = render_table(&rows);
    if let Some(out) = &c.out {
        write_text(&out.join("report.txt"), &table)?;
        write_text(&out.join("report.json"), &to_json(&rows))?;
    }
    Ok(table)
}

pub fn cmd_stamp(c: &RunConfig) -> Result<String, CliError> {
    let unit = load_unit(c.need(&c.program, "program")?)?;
    let suite_path = c.need(&c.suite, "suite")?;
    let mut suite = load_suite(suite_path)?;
    let ir = lower(&unit).map_err(run_err)?;
    let normal = stamp(&ir, &mut suite, c.step_budget);
    let out = c.out.clone().unwrap_or_else(|| suite_path.to_path_buf());
    write_suite(&out, &suite).map_err(run_err)?;
    let abnormal: Vec<&str> = suite.iter().zip(&normal).filter(|(_, n)| !**n).map(|(t, _)| t.id.as_str()).collect();
    Ok(to_json(&serde_json::json!({"stamped": suite.len(), "abnormal": abnormal})))
}

pub fn cmd_corpus(c: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let programs = load_corpus(dir).map_err(run_err)?;
    let config = ExperimentConfig {
        split_ratio: c.split_ratio,
        debloat: c.debloat_config(),
        eval: c.eval_config(),
        ablation: true,
    };
    let backend = match c.policy {
        Policy::Llm => Some(Backend::from_settings(&c.llm)?),
        Policy::RuleBased => None,
    };
    let mut outcomes = Vec::new();
    for p in &programs {
        let o = run_program(p, &config, backend.as_ref().map(Backend::policy)).map_err(|e| run_err(format!("{}: {e}", p.name)))?;
        if let Some(out) = &c.out {
            for (label, r) in &o.results {
                let d = out.join(&o.name).join(label);
                write_text(&d.join("debloated.mc"), &print_unit(&r.debloated))?;
                write_text(&d.join("metrics.json"), &to_json(&r.metrics))?;
                if let Some(l) = &r.log {
                    write_text(&d.join("run_log.json"), &to_json(l))?;
                }
            }
        }
        outcomes.push(o);
    }
    if let Some(b) = &backend {
        b.finish()?;
    }
    let rows = table_rows(&outcomes);
    let table = render_table(&rows);
    if let Some(out) = &c.out {
        write_text(&out.join("report.txt"), &table)?;
        write_text(&out.join("report.json"), &to_json(&rows))?;
    }
    Ok(table)
}

pub fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let c = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Split => cmd_split(&c),
        Command::Debloat => cmd_debloat(&c),
        Command::Eval { debloated } => cmd_eval(&c, debloated),
        Command::Augment => cmd_augment(&c),
        Command::Fuzz => cmd_fuzz(&c),
        Command::Report { runs } => cmd_report(&c, runs),
        Command::Stamp => cmd_stamp(&c),
        Command::Corpus { dir } => cmd_corpus(&c, dir),
    }
}

/// Parse `args`, run the command, print its output and return the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(s) => {
            print!("{s}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("leader: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_args(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse_args(&["leader", "debloat", "--seed", "42", "--augment", "off", "--policy", "llm"]);
        let c = resolve_config(&cli.common).unwrap();
        assert_eq!(c.seed, 42);
        assert!(!c.augment);
        assert_eq!(c.policy, Policy::Llm);
        assert_eq!(c.split_ratio, 0.1);
    }

    #[test]
    fn config_file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"seed": 7, "split_ratio": 0.2, "mutants": 9}"#).unwrap();
        let cli = parse_args(&["leader", "split", "--config", p.to_str().unwrap(), "--seed", "8"]);
        let c = resolve_config(&cli.common).unwrap();
        assert_eq!((c.seed, c.split_ratio, c.mutants), (8, 0.2, 9));
    }

    #[test]
    fn bad_ratio_is_a_usage_error() {
        let cli = parse_args(&["leader", "split", "--split-ratio", "1.5"]);
        assert_eq!(resolve_config(&cli.common).unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn unknown_flag_exits_one() {
        assert_eq!(run(["leader", "split", "--nope"]), EXIT_USAGE);
        assert_eq!(run(["leader", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_program_file_is_a_run_failure() {
        let cli = parse_args(&["leader", "fuzz", "--program", "/nonexistent/p.mc", "--suite", "/nonexistent/s.jsonl"]);
        assert_eq!(dispatch(&cli).unwrap_err().exit_code(), EXIT_FAILURE);
    }

    #[test]
    fn labels_from_run_dirs() {
        assert_eq!(report_label(Path::new("out/wc/leader/metrics.json")), "wc:leader");
    }
}

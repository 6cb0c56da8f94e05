//! Reduction, correctness, robustness and hardening scores for one
//! original/debloated pair.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advisor::security::{diff_with, DiffError, DiffReport, Finding, Severity, SeverityMap};
use crate::minic::{lower, LowerError, SourceUnit};
use crate::runtime::{fuzz_robustness, run_all, TestCase, DEFAULT_STEP_BUDGET};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("the evaluation suite is empty")]
    EmptySuite,
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// `(x - x') / x`, or 0 when both are 0.
pub fn reduction(before: usize, after: usize) -> f64 {
    if before == 0 {
        return if after == 0 { 0.0 } else { -(after as f64) };
    }
    (before as f64 - after as f64) / before as f64
}

pub fn size_red(p: &SourceUnit, p2: &SourceUnit) -> f64 {
    reduction(p.size(), p2.size())
}

pub fn mem_red(p: &SourceUnit, p2: &SourceUnit) -> Result<f64, LowerError> {
    Ok(reduction(lower(p)?.mem_size(), lower(p2)?.mem_size()))
}

pub fn atk_red(p: &SourceUnit, p2: &SourceUnit) -> Result<f64, LowerError> {
    Ok(reduction(lower(p)?.gadget_count(), lower(p2)?.gadget_count()))
}

/// Fraction of `t_e` on which `p2` behaves exactly like `p`.
pub fn correctness(p: &SourceUnit, p2: &SourceUnit, t_e: &[TestCase], step_budget: u64) -> Result<f64, MetricsError> {
    if t_e.is_empty() {
        return Err(MetricsError::EmptySuite);
    }
    let a = run_all(&lower(p)?, t_e, step_budget);
    let b = run_all(&lower(p2)?, t_e, step_budget);
    let same = a.iter().zip(&b).filter(|(x, y)| x.same_behavior(y)).count();
    Ok(same as f64 / t_e.len() as f64)
}

pub fn harmonized(cor: f64, rob: f64) -> f64 {
    if cor + rob == 0.0 {
        0.0
    } else {
        2.0 * cor * rob / (cor + rob)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounts {
    pub low: usize,
    pub medium: usize,
    pub high: usize,
}

impl TierCounts {
    pub fn of(findings: &[Finding]) -> Self {
        let mut t = TierCounts::default();
        for f in findings {
            match f.severity {
                Severity::Low => t.low += 1,
                Severity::Medium => t.medium += 1,
                Severity::High => t.high += 1,
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.low + self.medium + self.high
    }
}

/// Eliminated and introduced findings, per tier.
pub fn security_hardening(p: &SourceUnit, p2: &SourceUnit) -> Result<(TierCounts, TierCounts), DiffError> {
    hardening_from(&diff_with(p, p2, &SeverityMap::default())?)
}

fn hardening_from(d: &DiffReport) -> Result<(TierCounts, TierCounts), DiffError> {
    Ok((TierCounts::of(&d.v_elim), TierCounts::of(&d.v_new)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub step_budget: u64,
    pub n_mutants: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            step_budget: DEFAULT_STEP_BUDGET,
            n_mutants: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub program: String,
    pub size: (usize, usize),
    pub mem: (usize, usize),
    pub atk: (usize, usize),
    pub size_red: f64,
    pub mem_red: f64,
    pub atk_red: f64,
    pub cor: f64,
    pub rob: f64,
    pub harmonized: f64,
    pub vuln_reduced: TierCounts,
    pub vuln_introduced: TierCounts,
}

/// Score `p2` against `p`. Robustness fuzzes mutants of `t_e`.
pub fn evaluate(
    p: &SourceUnit,
    p2: &SourceUnit,
    t_e: &[TestCase],
    config: &EvalConfig,
    severities: &SeverityMap,
) -> Result<MetricsReport, MetricsError> {
    let (ir, ir2) = (lower(p)?, lower(p2)?);
    let cor = correctness(p, p2, t_e, config.step_budget)?;
    let rob = fuzz_robustness(p2, t_e, config.n_mutants, config.step_budget, config.seed)?;
    let (vuln_reduced, vuln_introduced) = hardening_from(&diff_with(p, p2, severities)?)?;
    let size = (p.size(), p2.size());
    let mem = (ir.mem_size(), ir2.mem_size());
    let atk = (ir.gadget_count(), ir2.gadget_count());
    Ok(MetricsReport {
        program: p.source_name.clone(),
        size,
        mem,
        atk,
        size_red: reduction(size.0, size.1),
        mem_red: reduction(mem.0, mem.1),
        atk_red: reduction(atk.0, atk.1),
        cor,
        rob,
        harmonized: harmonized(cor, rob),
        vuln_reduced,
        vuln_introduced,
    })
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub cor: f64,
    pub rob: f64,
    pub hs: f64,
    pub size: f64,
    pub mem: f64,
    pub atk: f64,
    pub introduced: usize,
    pub introduced_high: usize,
}

impl TableRow {
    pub fn from_report(label: impl Into<String>, r: &MetricsReport) -> Self {
        TableRow {
            label: label.into(),
            cor: r.cor,
            rob: r.rob,
            hs: r.harmonized,
            size: r.size_red,
            mem: r.mem_red,
            atk: r.atk_red,
            introduced: r.vuln_introduced.total(),
            introduced_high: r.vuln_introduced.high,
        }
    }

    /// Column means; finding counts are summed. HS is the mean of the
    /// per-program scores.
    pub fn mean(label: impl Into<String>, rows: &[TableRow]) -> Self {
        let n = rows.len().max(1) as f64;
        let avg = |f: fn(&TableRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        TableRow {
            label: label.into(),
            cor: avg(|r| r.cor),
            rob: avg(|r| r.rob),
            hs: avg(|r| r.hs),
            size: avg(|r| r.size),
            mem: avg(|r| r.mem),
            atk: avg(|r| r.atk),
            introduced: rows.iter().map(|r| r.introduced).sum(),
            introduced_high: rows.iter().map(|r| r.introduced_high).sum(),
        }
    }
}

pub fn render_table(rows: &[TableRow]) -> String {
    let w = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(7);
    let mut s = format!(
        "{:<w$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>5}  {:>5}\n",
        "Program", "Cor", "Rob", "HS", "Size", "Mem", "Atk", "New", "High"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<w$}  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}  {:>6.3}  {:>5}  {:>5}",
            r.label, r.cor, r.rob, r.hs, r.size, r.mem, r.atk, r.introduced, r.introduced_high
        );
    }
    s
}

//! Brute-force counterparts of the differential analysis and the size
//! metric. Nothing here calls the routines it checks.

use std::collections::BTreeSet;

use leader::advisor::{Checker, Finding};
use leader::minic::printer::header_text;
use leader::minic::{SourceUnit, Stmt, StmtId, StmtKind};

fn all_stmts(unit: &SourceUnit) -> Vec<&Stmt> {
    let mut out = Vec::new();
    fn rec<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
        out.push(s);
        match &s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                then_block.stmts.iter().for_each(|c| rec(c, out));
                if let Some(b) = else_block {
                    b.stmts.iter().for_each(|c| rec(c, out));
                }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::Block(body) => {
                body.stmts.iter().for_each(|c| rec(c, out))
            }
            StmtKind::Switch { cases, .. } => cases.iter().for_each(|c| rec(c, out)),
            StmtKind::Case { body, .. } => body.iter().for_each(|c| rec(c, out)),
            _ => {}
        }
    }
    for f in &unit.functions {
        for s in &f.body.stmts {
            rec(s, &mut out);
        }
    }
    out
}

/// Statements of `a` whose id does not occur in `b`.
pub fn deleted_ids(a: &SourceUnit, b: &SourceUnit) -> BTreeSet<StmtId> {
    let in_b: Vec<StmtId> = all_stmts(b).iter().map(|s| s.id).collect();
    all_stmts(a).iter().map(|s| s.id).filter(|id| !in_b.contains(id)).collect()
}

/// Drop the digits after every "at line ".
fn strip_lines(msg: &str) -> String {
    let pat = "at line ";
    let mut out = String::new();
    let mut rest = msg;
    while let Some(i) = rest.find(pat) {
        out.push_str(&rest[..i]);
        out.push_str("at line #");
        rest = rest[i + pat.len()..].trim_start_matches(|c: char| c.is_ascii_digit());
    }
    out.push_str(rest);
    out
}

fn shape(unit: &SourceUnit, id: StmtId) -> Option<(&'static str, String)> {
    all_stmts(unit).into_iter().find(|s| s.id == id).map(|s| (s.kind.name(), header_text(s)))
}

fn same_finding(ori: &SourceUnit, a: &Finding, deb: &SourceUnit, b: &Finding) -> bool {
    if a.checker != b.checker || a.function != b.function {
        return false;
    }
    if strip_lines(&a.message) != strip_lines(&b.message) {
        return false;
    }
    a.checker == Checker::MissingReturn || shape(ori, a.anchor) == shape(deb, b.anchor)
}

pub struct OracleDiff {
    pub v_elim: Vec<Finding>,
    pub v_new: Vec<Finding>,
}

/// Eliminated: original findings on deleted statements. New: debloated
/// findings that match no surviving original finding, compared pairwise.
pub fn oracle_diff(ori: &SourceUnit, deb: &SourceUnit, v_ori: &[Finding], v_deb: &[Finding]) -> OracleDiff {
    let d = deleted_ids(ori, deb);
    let v_elim: Vec<Finding> = v_ori.iter().filter(|f| d.contains(&f.anchor)).cloned().collect();
    let surviving: Vec<&Finding> = v_ori.iter().filter(|f| !d.contains(&f.anchor)).collect();
    let v_new = v_deb
        .iter()
        .filter(|b| !surviving.iter().any(|a| same_finding(ori, a, deb, b)))
        .cloned()
        .collect();
    OracleDiff { v_elim, v_new }
}

/// Statement count from a direct walk of the tree; block wrappers are not
/// statements.
pub fn recount(unit: &SourceUnit) -> usize {
    all_stmts(unit).iter().filter(|s| !matches!(s.kind, StmtKind::Block(_))).count()
}

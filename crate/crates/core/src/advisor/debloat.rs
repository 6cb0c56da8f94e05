//! Deletion candidates from coverage and from static rules.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::minic::*;
use crate::runtime::CoverageReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    Uncovered,
    UnusedVarDecl,
    NullStmt,
    SideEffectFreeCond,
    UnusedLabel,
}

impl Reason {
    pub fn label(self) -> &'static str {
        match self {
            Reason::Uncovered => "uncovered",
            Reason::UnusedVarDecl => "unused variable",
            Reason::NullStmt => "null statement",
            Reason::SideEffectFreeCond => "side-effect-free condition",
            Reason::UnusedLabel => "unused label",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeletionCandidate {
    pub stmt_id: StmtId,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSuggestions {
    pub function: String,
    pub candidates: Vec<DeletionCandidate>,
}

impl FunctionSuggestions {
    pub fn ids(&self) -> BTreeSet<StmtId> {
        self.candidates.iter().map(|c| c.stmt_id).collect()
    }

    /// Reasons recorded for one statement, in canonical order.
    pub fn reasons(&self, id: StmtId) -> Vec<Reason> {
        self.candidates
            .iter()
            .filter(|c| c.stmt_id == id)
            .map(|c| c.reason)
            .collect()
    }

    pub fn retain_reasons(&self, keep: &[Reason]) -> FunctionSuggestions {
        FunctionSuggestions {
            function: self.function.clone(),
            candidates: self
                .candidates
                .iter()
                .filter(|c| keep.contains(&c.reason))
                .copied()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebloatSuggestion {
    pub functions: Vec<FunctionSuggestions>,
}

impl DebloatSuggestion {
    pub fn for_function(&self, name: &str) -> Option<&FunctionSuggestions> {
        self.functions.iter().find(|f| f.function == name)
    }

    pub fn all(&self) -> Vec<DeletionCandidate> {
        self.functions
            .iter()
            .flat_map(|f| f.candidates.iter().copied())
            .collect()
    }

    pub fn ids(&self) -> BTreeSet<StmtId> {
        self.all().into_iter().map(|c| c.stmt_id).collect()
    }
}

/// Every counted statement that no test executed.
pub fn uncovered_candidates(unit: &SourceUnit, coverage: &CoverageReport) -> Vec<DeletionCandidate> {
    unit.counted_stmt_ids()
        .into_iter()
        .filter(|id| !coverage.union.contains(id))
        .map(|stmt_id| DeletionCandidate {
            stmt_id,
            reason: Reason::Uncovered,
        })
        .collect()
}

/// Free of calls, stores, prints and expressions that can fault.
fn pure_cond(e: &Expr) -> bool {
    let mut ok = true;
    e.walk(&mut |x| {
        ok &= !matches!(
            x,
            Expr::Call(..)
                | Expr::Deref(_)
                | Expr::Index(..)
                | Expr::AddrOf(..)
                | Expr::Binary(BinOp::Div | BinOp::Rem, ..)
                | Expr::Str(_)
        )
    });
    ok
}

fn inert(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Null => true,
        StmtKind::Block(b) => b.stmts.iter().all(inert),
        StmtKind::If { .. } => side_effect_free_if(s),
        _ => false,
    }
}

fn side_effect_free_if(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            pure_cond(cond)
                && then_block.stmts.iter().all(inert)
                && else_block
                    .as_ref()
                    .is_none_or(|b| b.stmts.iter().all(inert))
        }
        _ => false,
    }
}

/// Which declaration each variable occurrence refers to; `None` for
/// parameters and globals.
struct Uses {
    /// decl id -> number of reads
    reads: HashMap<StmtId, usize>,
    /// decl id -> statements assigning to it (whole-variable or element)
    writes: HashMap<StmtId, Vec<StmtId>>,
    /// decls whose writes cannot be dropped on their own
    pinned: HashSet<StmtId>,
}

fn collect_uses(f: &Function) -> Uses {
    fn read_expr(e: &Expr, scopes: &[HashMap<String, StmtId>], uses: &mut Uses) {
        e.walk(&mut |x| {
            let name = match x {
                Expr::Var(n) | Expr::Index(n, _) | Expr::Deref(n) | Expr::AddrOf(n, _) => n,
                _ => return,
            };
            if let Some(d) = resolve(scopes, name) {
                *uses.reads.entry(d).or_default() += 1;
            }
        });
    }
    fn resolve(scopes: &[HashMap<String, StmtId>], name: &str) -> Option<StmtId> {
        scopes.iter().rev().find_map(|s| s.get(name)).copied()
    }
    fn assignment(
        a: &Assignment,
        owner: StmtId,
        in_header: bool,
        scopes: &[HashMap<String, StmtId>],
        uses: &mut Uses,
    ) {
        read_expr(&a.value, scopes, uses);
        match &a.target {
            LValue::Var(n) | LValue::Index(n, _) => {
                if let LValue::Index(_, i) = &a.target {
                    read_expr(i, scopes, uses);
                }
                if let Some(d) = resolve(scopes, n) {
                    uses.writes.entry(d).or_default().push(owner);
                    let index_impure = matches!(&a.target, LValue::Index(_, i) if !pure_cond(i));
                    if in_header || a.value.contains_call() || index_impure {
                        uses.pinned.insert(d);
                    }
                }
            }
            LValue::Deref(n) => {
                // Writing through a pointer reads the pointer.
                if let Some(d) = resolve(scopes, n) {
                    *uses.reads.entry(d).or_default() += 1;
                }
            }
        }
    }
    fn list(stmts: &[Stmt], scopes: &mut Vec<HashMap<String, StmtId>>, uses: &mut Uses) {
        scopes.push(HashMap::new());
        for s in stmts {
            match &s.kind {
                StmtKind::VarDecl(d) => {
                    if let Some(init) = &d.init {
                        read_expr(init, scopes, uses);
                        if init.contains_call() {
                            uses.pinned.insert(s.id);
                        }
                    }
                    scopes.last_mut().unwrap().insert(d.name.clone(), s.id);
                    uses.reads.entry(s.id).or_default();
                }
                StmtKind::Assign(a) => assignment(a, s.id, false, scopes, uses),
                StmtKind::For {
                    init, cond, step, ..
                } => {
                    if let Some(a) = init {
                        assignment(a, s.id, true, scopes, uses);
                    }
                    if let Some(c) = cond {
                        read_expr(c, scopes, uses);
                    }
                    if let Some(a) = step {
                        assignment(a, s.id, true, scopes, uses);
                    }
                }
                _ => {
                    for e in s.header_exprs() {
                        read_expr(e, scopes, uses);
                    }
                }
            }
            for l in s.child_lists() {
                list(l, scopes, uses);
            }
        }
        scopes.pop();
    }
    let mut uses = Uses {
        reads: HashMap::new(),
        writes: HashMap::new(),
        pinned: HashSet::new(),
    };
    // Parameters and globals resolve to nothing and are never candidates.
    let mut scopes = Vec::new();
    list(&f.body.stmts, &mut scopes, &mut uses);
    uses
}

/// Candidates from the four static categories.
pub fn unnecessary_candidates(unit: &SourceUnit) -> Vec<DeletionCandidate> {
    let mut out = Vec::new();
    for f in &unit.functions {
        let uses = collect_uses(f);
        let mut referenced = HashSet::new();
        f.walk(&mut |s| {
            if let StmtKind::Goto(l) = &s.kind {
                referenced.insert(l.clone());
            }
        });
        for (decl, n) in &uses.reads {
            if *n > 0 || uses.pinned.contains(decl) {
                continue;
            }
            out.push(DeletionCandidate {
                stmt_id: *decl,
                reason: Reason::UnusedVarDecl,
            });
            for w in uses.writes.get(decl).into_iter().flatten() {
                out.push(DeletionCandidate {
                    stmt_id: *w,
                    reason: Reason::UnusedVarDecl,
                });
            }
        }
        f.walk(&mut |s| match &s.kind {
            StmtKind::Null => out.push(DeletionCandidate {
                stmt_id: s.id,
                reason: Reason::NullStmt,
            }),
            StmtKind::If { .. } if side_effect_free_if(s) => out.push(DeletionCandidate {
                stmt_id: s.id,
                reason: Reason::SideEffectFreeCond,
            }),
            StmtKind::Label(l) if !referenced.contains(l) => out.push(DeletionCandidate {
                stmt_id: s.id,
                reason: Reason::UnusedLabel,
            }),
            _ => {}
        });
    }
    out.sort();
    out.dedup();
    out
}

/// Union of coverage-based and static candidates, grouped per function in
/// source order and sorted by statement id.
pub fn suggest(unit: &SourceUnit, coverage: &CoverageReport) -> DebloatSuggestion {
    let mut by_stmt: BTreeSet<DeletionCandidate> = BTreeSet::new();
    by_stmt.extend(uncovered_candidates(unit, coverage));
    by_stmt.extend(unnecessary_candidates(unit));
    let mut owner: BTreeMap<StmtId, usize> = BTreeMap::new();
    for (i, f) in unit.functions.iter().enumerate() {
        for id in f.stmt_ids() {
            owner.insert(id, i);
        }
    }
    let mut functions: Vec<FunctionSuggestions> = unit
        .functions
        .iter()
        .map(|f| FunctionSuggestions {
            function: f.name.clone(),
            candidates: Vec::new(),
        })
        .collect();
    for c in by_stmt {
        if let Some(&i) = owner.get(&c.stmt_id) {
            functions[i].candidates.push(c);
        }
    }
    DebloatSuggestion { functions }
}

//! Intraprocedural security checkers and the original-vs-debloated diff.
//!
//! All checkers run on the lowered IR so that control flow (gotos, switch
//! fall-through, short-circuit conditions) is handled exactly once. Each
//! finding is attributed to the statement owning the offending instruction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataflow::{fallthrough, single_defs, solve, Lattice};
use crate::minic::ast::{SourceUnit, StmtId, StmtKind, Type};
use crate::minic::ir::{CmpOp, Instr, IrFunction, IrModule, SlotKind, VarRef};
use crate::minic::lower;
use crate::minic::printer::{header_text, print_unit_mapped, Printed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Checker {
    UninitRead,
    NullDeref,
    ConstIndexOOB,
    MissingReturn,
}

impl Checker {
    pub const ALL: [Checker; 4] = [
        Checker::UninitRead,
        Checker::NullDeref,
        Checker::ConstIndexOOB,
        Checker::MissingReturn,
    ];

    pub fn default_severity(self) -> Severity {
        match self {
            Checker::MissingReturn => Severity::Medium,
            _ => Severity::High,
        }
    }
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Checker-to-tier mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityMap(pub BTreeMap<Checker, Severity>);

impl Default for SeverityMap {
    fn default() -> Self {
        SeverityMap(Checker::ALL.iter().map(|c| (*c, c.default_severity())).collect())
    }
}

impl SeverityMap {
    pub fn get(&self, c: Checker) -> Severity {
        self.0.get(&c).copied().unwrap_or_else(|| c.default_severity())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub checker: Checker,
    pub severity: Severity,
    pub function: String,
    pub anchor: StmtId,
    pub message: String,
    /// The variable or function the finding is about.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
}

/// Run every checker with the default severities.
pub fn analyze(unit: &SourceUnit) -> Vec<Finding> {
    analyze_with(unit, &SeverityMap::default())
}

/// Run every checker. Findings come out in source order. A unit that does
/// not lower yields no findings.
pub fn analyze_with(unit: &SourceUnit, severities: &SeverityMap) -> Vec<Finding> {
    run_checkers(unit, severities, None)
}

/// Findings of one function only.
pub fn analyze_function(unit: &SourceUnit, name: &str, severities: &SeverityMap) -> Vec<Finding> {
    run_checkers(unit, severities, Some(name))
}

fn run_checkers(unit: &SourceUnit, severities: &SeverityMap, only: Option<&str>) -> Vec<Finding> {
    let Ok(ir) = lower(unit) else {
        return Vec::new();
    };
    let printed = print_unit_mapped(unit);
    let mut raw: BTreeSet<(usize, u32, Checker, String, StmtId, String)> = BTreeSet::new();
    for (fi, (f, ast_f)) in ir.functions.iter().zip(&unit.functions).enumerate() {
        if only.is_some_and(|n| n != ast_f.name) {
            continue;
        }
        let mut ctx = FnCtx {
            ir: &ir,
            f,
            printed: &printed,
            out: Vec::new(),
        };
        ctx.uninit();
        ctx.null_deref();
        ctx.const_index();
        ctx.missing_return(ast_f.return_type != Type::Void && ast_f.name != "main", ast_f);
        for (checker, anchor, msg, subject) in ctx.out {
            let line = printed.lines.get(&anchor).copied().unwrap_or(0);
            raw.insert((fi, line, checker, msg, anchor, subject));
        }
    }
    raw.into_iter()
        .map(|(fi, _, checker, message, anchor, subject)| Finding {
            checker,
            severity: severities.get(checker),
            function: unit.functions[fi].name.clone(),
            anchor,
            message,
            subject: Some(subject),
        })
        .collect()
}

struct FnCtx<'a> {
    ir: &'a IrModule,
    f: &'a IrFunction,
    printed: &'a Printed,
    out: Vec<(Checker, StmtId, String, String)>,
}

impl FnCtx<'_> {
    fn line_of(&self, pc: usize) -> Option<(StmtId, u32)> {
        let id = self.f.owners[pc]?;
        Some((id, self.printed.lines.get(&id).copied().unwrap_or(0)))
    }

    fn report(&mut self, checker: Checker, pc: usize, subject: &str, msg: impl FnOnce(u32) -> String) {
        if let Some((id, line)) = self.line_of(pc) {
            self.out.push((checker, id, msg(line), subject.to_string()));
        }
    }

    fn var_name(&self, v: VarRef) -> &str {
        match v {
            VarRef::Local(i) => &self.f.slot_names[i as usize],
            VarRef::Global(i) => &self.ir.globals[i as usize].name,
        }
    }

    fn array_len(&self, v: VarRef) -> Option<u32> {
        let kind = match v {
            VarRef::Local(i) => self.f.slots[i as usize],
            VarRef::Global(i) => self.ir.globals[i as usize].kind,
        };
        match kind {
            SlotKind::Array(n) => Some(n),
            _ => None,
        }
    }

    fn uninit(&mut self) {
        let f = self.f;
        let mut entry = MaybeSet(vec![false; f.slots.len()]);
        for (i, k) in f.slots.iter().enumerate() {
            entry.0[i] = i >= f.num_params as usize && !matches!(k, SlotKind::Array(_));
        }
        let states = solve(f, entry, |pc, ins, s| {
            let mut s = s.clone();
            match ins {
                Instr::DeclVar {
                    var: VarRef::Local(i),
                } => {
                    s.0[*i as usize] = !matches!(f.slots[*i as usize], SlotKind::Array(_));
                }
                Instr::StoreVar {
                    var: VarRef::Local(i),
                    ..
                } => s.0[*i as usize] = false,
                _ => {}
            }
            fallthrough(pc, ins, s)
        });
        for (pc, st) in states.iter().enumerate() {
            let Some(st) = st else { continue };
            let (var, what) = match &f.instrs[pc] {
                Instr::LoadVar {
                    var: v @ VarRef::Local(_),
                    ..
                } => (*v, "variable"),
                Instr::LoadDeref {
                    ptr: v @ VarRef::Local(_),
                    ..
                }
                | Instr::StoreDeref {
                    ptr: v @ VarRef::Local(_),
                    ..
                } => (*v, "pointer"),
                _ => continue,
            };
            let VarRef::Local(i) = var else { continue };
            if st.0[i as usize] {
                let name = self.var_name(var).to_string();
                self.report(Checker::UninitRead, pc, &name, |line| {
                    format!("{what} '{name}' may be used uninitialized at line {line}")
                });
            }
        }
    }

    fn null_deref(&mut self) {
        let f = self.f;
        let defs = single_defs(f);
        let def_of = |r: u32| defs[r as usize].map(|pc| &f.instrs[pc]);
        let is_ptr = |i: u32| f.slots[i as usize] == SlotKind::Ptr;
        let entry = NullStates(
            (0..f.slots.len())
                .map(|i| {
                    if i < f.num_params as usize {
                        Null::Maybe
                    } else {
                        Null::NotNull
                    }
                })
                .collect(),
        );
        // Which pointer slot a branch condition tests, and whether the
        // true edge means "non-null".
        let tested = |cond: u32| -> Option<(usize, bool)> {
            let load_ptr = |r: u32| match def_of(r) {
                Some(Instr::LoadVar {
                    var: VarRef::Local(p),
                    ..
                }) if is_ptr(*p) => Some(*p as usize),
                _ => None,
            };
            let zero = |r: u32| matches!(def_of(r), Some(Instr::LoadConst { value: 0, .. }));
            if let Some(p) = load_ptr(cond) {
                return Some((p, true));
            }
            match def_of(cond) {
                Some(Instr::Compare { op, lhs, rhs, .. }) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
                    let p = match (load_ptr(*lhs), load_ptr(*rhs)) {
                        (Some(p), _) if zero(*rhs) => p,
                        (_, Some(p)) if zero(*lhs) => p,
                        _ => return None,
                    };
                    Some((p, *op == CmpOp::Ne))
                }
                _ => None,
            }
        };
        let states = solve(f, entry, |pc, ins, s| {
            let mut s = s.clone();
            match ins {
                Instr::DeclVar {
                    var: VarRef::Local(i),
                } => s.0[*i as usize] = Null::NotNull,
                Instr::StoreVar {
                    var: VarRef::Local(i),
                    src,
                } if is_ptr(*i) => {
                    s.0[*i as usize] = match def_of(*src) {
                        Some(Instr::LoadConst { value: 0, .. }) => Null::Null,
                        Some(Instr::AddrIndex { .. }) => Null::NotNull,
                        Some(Instr::LoadVar {
                            var: VarRef::Local(q),
                            ..
                        }) => s.0[*q as usize],
                        _ => Null::Maybe,
                    };
                }
                Instr::Branch {
                    cond,
                    if_true,
                    if_false,
                } if if_true != if_false => {
                    if let Some((p, true_nonnull)) = tested(*cond) {
                        let (nn, nl) = if true_nonnull {
                            (*if_true, *if_false)
                        } else {
                            (*if_false, *if_true)
                        };
                        let mut a = s.clone();
                        a.0[p] = Null::NotNull;
                        let mut b = s;
                        b.0[p] = Null::Null;
                        return vec![(nn, a), (nl, b)];
                    }
                }
                _ => {}
            }
            fallthrough(pc, ins, s)
        });
        for (pc, st) in states.iter().enumerate() {
            let Some(st) = st else { continue };
            let var = match &f.instrs[pc] {
                Instr::LoadDeref { ptr, .. } | Instr::StoreDeref { ptr, .. } => *ptr,
                _ => continue,
            };
            let VarRef::Local(i) = var else { continue };
            if st.0[i as usize] != Null::NotNull {
                let name = self.var_name(var).to_string();
                self.report(Checker::NullDeref, pc, &name, |line| {
                    format!("pointer '{name}' at line {line} could be null")
                });
            }
        }
    }

    fn const_index(&mut self) {
        let f = self.f;
        let nslots = f.slots.len();
        let entry = Consts(vec![Flat::Undef; nslots + f.num_regs as usize]);
        let reg = |r: u32| nslots + r as usize;
        let eval = |ins: &Instr, s: &Consts| -> Flat {
            match ins {
                Instr::LoadConst { value, .. } => Flat::Const(*value),
                Instr::LoadVar {
                    var: VarRef::Local(i),
                    ..
                } => match s.0[*i as usize] {
                    Flat::Const(v) => Flat::Const(v),
                    _ => Flat::Top,
                },
                Instr::Arith { op, lhs, rhs, .. } => match (s.0[reg(*lhs)], s.0[reg(*rhs)]) {
                    (Flat::Const(a), Flat::Const(b)) => op.apply(a, b)
                        .map(Flat::Const)
                        .unwrap_or(Flat::Top),
                    _ => Flat::Top,
                },
                _ => Flat::Top,
            }
        };
        let states = solve(f, entry, |pc, ins, s| {
            let mut s = s.clone();
            match ins {
                Instr::DeclVar {
                    var: VarRef::Local(i),
                } => s.0[*i as usize] = Flat::Top,
                Instr::StoreVar {
                    var: VarRef::Local(i),
                    src,
                } => s.0[*i as usize] = s.0[reg(*src)],
                _ => {}
            }
            if let Some(d) = ins.def() {
                s.0[reg(d)] = eval(ins, &s);
            }
            fallthrough(pc, ins, s)
        });
        for (pc, st) in states.iter().enumerate() {
            let Some(st) = st else { continue };
            let (array, index) = match &f.instrs[pc] {
                Instr::LoadIndex { array, index, .. }
                | Instr::StoreIndex { array, index, .. }
                | Instr::AddrIndex { array, index, .. } => (*array, *index),
                _ => continue,
            };
            let (Flat::Const(v), Some(len)) = (st.0[reg(index)], self.array_len(array)) else {
                continue;
            };
            if v < 0 || v >= len as i64 {
                let name = self.var_name(array).to_string();
                self.report(Checker::ConstIndexOOB, pc, &name, |line| {
                    format!("index {v} is out of bounds for '{name}' of length {len} at line {line}")
                });
            }
        }
    }

    fn missing_return(&mut self, needs_value: bool, ast_f: &crate::minic::ast::Function) {
        if !needs_value {
            return;
        }
        let Some(last) = ast_f.body.stmts.last() else {
            return;
        };
        let f = self.f;
        let reachable = solve(f, Unit, |pc, ins, _| fallthrough(pc, ins, Unit));
        let falls_off = f
            .owners
            .iter()
            .zip(&reachable)
            .any(|(o, r)| o.is_none() && r.is_some());
        if falls_off {
            let line = self.printed.lines.get(&last.id).copied().unwrap_or(0);
            self.out.push((
                Checker::MissingReturn,
                last.id,
                format!(
                    "function '{}' may reach its end without returning a value at line {line}",
                    f.name
                ),
                f.name.clone(),
            ));
        }
    }
}

#[derive(Clone, PartialEq)]
struct Unit;

impl Lattice for Unit {
    fn join_from(&mut self, _: &Self) -> bool {
        false
    }
}

/// Per-slot "may be uninitialized" flags.
#[derive(Clone, PartialEq)]
struct MaybeSet(Vec<bool>);

impl Lattice for MaybeSet {
    fn join_from(&mut self, other: &Self) -> bool {
        let mut changed = false;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            if *b && !*a {
                *a = true;
                changed = true;
            }
        }
        changed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Null {
    Null,
    NotNull,
    Maybe,
}

#[derive(Clone, PartialEq)]
struct NullStates(Vec<Null>);

impl Lattice for NullStates {
    fn join_from(&mut self, other: &Self) -> bool {
        let mut changed = false;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            if *a != *b && *a != Null::Maybe {
                *a = Null::Maybe;
                changed = true;
            }
        }
        changed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flat {
    Undef,
    Const(i64),
    Top,
}

#[derive(Clone, PartialEq)]
struct Consts(Vec<Flat>);

impl Lattice for Consts {
    fn join_from(&mut self, other: &Self) -> bool {
        let mut changed = false;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            let j = match (*a, *b) {
                (x, Flat::Undef) => x,
                (Flat::Undef, y) => y,
                (Flat::Const(x), Flat::Const(y)) if x == y => Flat::Const(x),
                _ => Flat::Top,
            };
            if j != *a {
                *a = j;
                changed = true;
            }
        }
        changed
    }
}

/// What two findings must share to be considered the same issue across an
/// original program and its debloated form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FindingKey {
    pub checker: Checker,
    pub function: String,
    /// Statement kind and header text of the anchor. Empty for
    /// MissingReturn, whose anchor moves whenever the tail is edited.
    pub anchor_shape: String,
    /// Message with line references removed.
    pub message: String,
}

pub fn finding_key(unit: &SourceUnit, f: &Finding) -> FindingKey {
    let anchor_shape = if f.checker == Checker::MissingReturn {
        String::new()
    } else {
        unit.find_stmt(f.anchor)
            .map(|(_, s)| format!("{}:{}", s.kind.name(), header_text(s)))
            .unwrap_or_default()
    };
    FindingKey {
        checker: f.checker,
        function: f.function.clone(),
        anchor_shape,
        message: rewrite_message(&f.message),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    /// Statements of the original absent from the debloated program.
    pub deleted: BTreeSet<StmtId>,
    pub v_ori: Vec<Finding>,
    pub v_deb: Vec<Finding>,
    /// Findings of the original anchored on deleted statements.
    pub v_elim: Vec<Finding>,
    /// Findings of the debloated program with no counterpart among the
    /// original's surviving findings.
    pub v_new: Vec<Finding>,
}

impl DiffReport {
    pub fn count_by_severity(findings: &[Finding]) -> BTreeMap<Severity, usize> {
        let mut m: BTreeMap<Severity, usize> =
            [Severity::Low, Severity::Medium, Severity::High].into_iter().map(|s| (s, 0)).collect();
        for f in findings {
            *m.entry(f.severity).or_default() += 1;
        }
        m
    }

    pub fn new_high(&self) -> usize {
        self.v_new.iter().filter(|f| f.severity == Severity::High).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("statement {id} is a {original} in the original but a {debloated} in the debloated program")]
    Provenance {
        id: StmtId,
        original: &'static str,
        debloated: &'static str,
    },
}

fn kinds(unit: &SourceUnit) -> HashMap<StmtId, &'static str> {
    let mut m = HashMap::new();
    for f in &unit.functions {
        f.walk(&mut |s| {
            m.insert(s.id, s.kind.name());
        });
    }
    m
}

pub fn diff(p_ori: &SourceUnit, p_deb: &SourceUnit) -> Result<DiffReport, DiffError> {
    diff_with(p_ori, p_deb, &SeverityMap::default())
}

pub fn diff_with(
    p_ori: &SourceUnit,
    p_deb: &SourceUnit,
    severities: &SeverityMap,
) -> Result<DiffReport, DiffError> {
    let ko = kinds(p_ori);
    let kd = kinds(p_deb);
    let mut shared: Vec<_> = kd.iter().filter_map(|(id, k)| ko.get(id).map(|o| (*id, *o, *k))).collect();
    shared.sort();
    if let Some((id, original, debloated)) = shared.into_iter().find(|(_, o, d)| o != d) {
        return Err(DiffError::Provenance {
            id,
            original,
            debloated,
        });
    }
    let deleted: BTreeSet<StmtId> = ko.keys().filter(|id| !kd.contains_key(id)).copied().collect();
    let v_ori = analyze_with(p_ori, severities);
    let v_deb = analyze_with(p_deb, severities);
    let (v_elim, kept): (Vec<_>, Vec<_>) = v_ori.iter().cloned().partition(|f| deleted.contains(&f.anchor));
    let kept_keys: BTreeSet<FindingKey> = kept.iter().map(|f| finding_key(p_ori, f)).collect();
    let v_new = v_deb
        .iter()
        .filter(|f| !kept_keys.contains(&finding_key(p_deb, f)))
        .cloned()
        .collect();
    Ok(DiffReport {
        deleted,
        v_ori,
        v_deb,
        v_elim,
        v_new,
    })
}

static LINE_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"at line (\d+)").expect("regex"));

/// Replace every "at line N" with "at this line".
pub fn rewrite_message(msg: &str) -> String {
    LINE_REF.replace_all(msg, "at this line").into_owned()
}

/// A finding message ready to be placed next to its statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedMessage {
    pub function: String,
    pub anchor: StmtId,
    pub checker: Checker,
    pub severity: Severity,
    pub message: String,
}

/// Rewrite line references. A finding whose anchor is not a statement of
/// `unit` is re-anchored to the statement its first line reference points
/// at in the canonical print of `unit`.
pub fn rewrite_messages(findings: &[Finding], unit: &SourceUnit) -> Vec<AnnotatedMessage> {
    let printed = print_unit_mapped(unit);
    let is_block: BTreeSet<StmtId> = unit
        .functions
        .iter()
        .flat_map(|f| {
            let mut v = Vec::new();
            f.walk(&mut |s| {
                if matches!(s.kind, StmtKind::Block(_)) {
                    v.push(s.id)
                }
            });
            v
        })
        .collect();
    findings
        .iter()
        .map(|f| {
            let anchor = LINE_REF
                .captures(&f.message)
                .and_then(|c| c[1].parse::<u32>().ok())
                .filter(|_| !printed.lines.contains_key(&f.anchor))
                .and_then(|line| printed.stmt_at_line(line, |id| is_block.contains(&id)))
                .unwrap_or(f.anchor);
            AnnotatedMessage {
                function: f.function.clone(),
                anchor,
                checker: f.checker,
                severity: f.severity,
                message: rewrite_message(&f.message),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::{delete_stmts, parse};

    fn unit(src: &str) -> SourceUnit {
        parse(src, "t").unwrap()
    }

    fn checkers(u: &SourceUnit) -> Vec<Checker> {
        analyze(u).into_iter().map(|f| f.checker).collect()
    }

    fn id_of(u: &SourceUnit, text: &str) -> StmtId {
        let mut hit = None;
        for f in &u.functions {
            f.walk(&mut |s| {
                if hit.is_none() && header_text(s) == text {
                    hit = Some(s.id);
                }
            });
        }
        hit.unwrap_or_else(|| panic!("no statement {text}"))
    }

    #[test]
    fn direct_null_deref() {
        let u = unit("int main() { int *p = 0; return *p; }");
        let f = analyze(&u);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].checker, Checker::NullDeref);
        assert_eq!(f[0].severity, Severity::High);
        assert_eq!(f[0].message, "pointer 'p' at line 3 could be null");
    }

    #[test]
    fn constant_overflow() {
        let u = unit("int main() { int a[3]; a[5] = 1; return 0; }");
        assert_eq!(checkers(&u), vec![Checker::ConstIndexOOB]);
        let u = unit("int main() { int a[3]; int i = 2; a[i + 1] = 1; a[i] = 2; return 0; }");
        assert_eq!(checkers(&u), vec![Checker::ConstIndexOOB]);
        let u = unit("int main() { int a[3]; a[2] = 1; return a[0]; }");
        assert!(checkers(&u).is_empty());
    }

    #[test]
    fn uninit_on_one_path() {
        let u = unit("int main() { int x; if (argc() > 1) { x = 1; } return x; }");
        let f = analyze(&u);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].checker, Checker::UninitRead);
        assert!(f[0].message.starts_with("variable 'x' may be used uninitialized at line"));
        let u = unit("int main() { int x; if (argc() > 1) { x = 1; } else { x = 2; } return x; }");
        assert!(checkers(&u).is_empty());
    }

    #[test]
    fn null_guard_suppresses() {
        let src = "int f(int *p) { if (p != 0) { return *p; } return 0; }\n\
                   int g(int *p) { if (!p) { return 0; } return *p; }\n\
                   int h(int *p) { return *p; }\n\
                   int main() { int a[2]; return f(&a[0]) + g(&a[1]) + h(&a[0]); }";
        let f = analyze(&unit(src));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].function, "h");
    }

    #[test]
    fn missing_return() {
        let u = unit("int f(int x) { if (x) { return 1; } }\nint main() { return f(1); }");
        let f = analyze(&u);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].checker, Checker::MissingReturn);
        assert_eq!(f[0].severity, Severity::Medium);
        let u = unit("int f(int x) { if (x) { return 1; } return 0; }\nint main() { return f(1); }");
        assert!(analyze(&u).is_empty());
    }

    #[test]
    fn unreachable_code_is_quiet() {
        let u = unit("int main() { int *p = 0; return 0; return *p; }");
        assert!(analyze(&u).is_empty());
    }

    const ISSPACE: &str = "int c_isspace(int c) {\n\
        int tmp;\n\
        switch (c) {\n\
        case 32: tmp = 1; break;\n\
        case 10: tmp = 1; break;\n\
        default: tmp = 0; break;\n\
        case 9: tmp = 1;\n\
        }\n\
        return tmp;\n\
        }\n\
        int main() { return c_isspace(getc()); }";

    #[test]
    fn deleting_the_tab_arm_introduces_uninit() {
        let ori = unit(ISSPACE);
        assert!(analyze(&ori).is_empty());
        let u = ori.clone();
        let mut tab = None;
        u.functions[0].walk(&mut |s| {
            if let StmtKind::Case { value: Some(9), body } = &s.kind {
                tab = Some(body[0].id);
            }
        });
        let deb = delete_stmts(&ori, &BTreeSet::from([tab.unwrap()]));
        let d = diff(&ori, &deb).unwrap();
        assert_eq!(d.deleted.len(), 1);
        assert!(d.v_elim.is_empty());
        assert_eq!(d.v_new.len(), 1);
        assert_eq!(d.v_new[0].checker, Checker::UninitRead);
        assert_eq!(d.v_new[0].anchor, id_of(&ori, "return tmp;"));
    }

    #[test]
    fn identity_diff_is_empty() {
        let u = unit("int main() { int *p = 0; int x; return *p + x; }");
        let d = diff(&u, &u).unwrap();
        assert!(d.deleted.is_empty() && d.v_elim.is_empty() && d.v_new.is_empty());
        assert_eq!(d.v_ori.len(), 2);
    }

    #[test]
    fn deleting_flagged_statement_eliminates() {
        let ori = unit("int main() { int *p = 0; *p = 1; return 0; }");
        let id = id_of(&ori, "*p = 1;");
        let deb = delete_stmts(&ori, &BTreeSet::from([id]));
        let d = diff(&ori, &deb).unwrap();
        assert_eq!(d.v_elim.len(), 1);
        assert!(d.v_new.is_empty());
    }

    #[test]
    fn provenance_mismatch() {
        let ori = unit("int main() { int x = 1; return x; }");
        let mut deb = ori.clone();
        let a = deb.functions[0].body.stmts[0].id;
        let b = deb.functions[0].body.stmts[1].id;
        deb.functions[0].body.stmts[0].id = b;
        deb.functions[0].body.stmts[1].id = a;
        assert!(matches!(diff(&ori, &deb), Err(DiffError::Provenance { .. })));
    }

    #[test]
    fn rewriting() {
        assert_eq!(
            rewrite_message("pointer P at line 2366 could be null"),
            "pointer P at this line could be null"
        );
        assert_eq!(rewrite_message("no refs here"), "no refs here");
        assert_eq!(
            rewrite_message("x at line 1 and y at line 22"),
            "x at this line and y at this line"
        );
    }

    #[test]
    fn rewrite_reanchors_to_printed_line() {
        let u = unit("int main() { int *p = 0; return *p; }");
        let f = analyze(&u);
        let m = rewrite_messages(&f, &u);
        assert_eq!(m[0].anchor, id_of(&u, "return *p;"));
        assert_eq!(m[0].message, "pointer 'p' at this line could be null");
        let mut stray = f[0].clone();
        stray.anchor = StmtId(9999);
        let m = rewrite_messages(&[stray], &u);
        assert_eq!(m[0].anchor, id_of(&u, "return *p;"));
    }
}

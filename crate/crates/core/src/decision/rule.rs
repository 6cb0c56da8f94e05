//! Deterministic decision policy.
//!
//! Start from deleting every suggestion. When the analyzer reports a new
//! uninitialized read caused by a deleted assignment, initialize the
//! variable at its declaration instead of keeping the assignment. Any other
//! new High finding (or a type error) is resolved by restoring deleted
//! statements one at a time, always taking the restoration that helps most.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Action, DecisionOutcome};
use crate::advisor::security::{analyze_function, finding_key, Checker, Finding, FindingKey, Severity, SeverityMap};
use crate::advisor::FunctionSuggestions;
use crate::minic::edit::{ancestors, delete_in_function, find_stmt_mut};
use crate::minic::{typecheck, Expr, Function, LValue, SourceUnit, StmtId, StmtKind, Type};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Score {
    type_errors: usize,
    new_high: usize,
}

impl Score {
    fn clean(&self) -> bool {
        self.type_errors == 0 && self.new_high == 0
    }
}

struct Ctx<'a> {
    unit: &'a SourceUnit,
    idx: usize,
    f: &'a Function,
    severities: &'a SeverityMap,
    v_ori: Vec<(Finding, FindingKey)>,
    anc: HashMap<StmtId, Vec<StmtId>>,
    desc: HashMap<StmtId, Vec<StmtId>>,
    preorder: Vec<StmtId>,
}

impl<'a> Ctx<'a> {
    fn new(unit: &'a SourceUnit, idx: usize, severities: &'a SeverityMap) -> Self {
        let f = &unit.functions[idx];
        let v_ori = analyze_function(unit, &f.name, severities)
            .into_iter()
            .map(|x| {
                let k = finding_key(unit, &x);
                (x, k)
            })
            .collect();
        let anc = ancestors(f);
        let mut desc: HashMap<StmtId, Vec<StmtId>> = HashMap::new();
        for (id, chain) in &anc {
            for a in chain {
                desc.entry(*a).or_default().push(*id);
            }
        }
        let mut preorder = Vec::new();
        f.walk(&mut |s| preorder.push(s.id));
        Ctx {
            unit,
            idx,
            f,
            severities,
            v_ori,
            anc,
            desc,
            preorder,
        }
    }

    fn is_gone(&self, id: StmtId, deleted: &BTreeSet<StmtId>) -> bool {
        deleted.contains(&id) || self.anc[&id].iter().any(|a| deleted.contains(a))
    }

    fn build(&self, deleted: &BTreeSet<StmtId>, rewrites: &BTreeMap<StmtId, i64>) -> Function {
        let mut cand = delete_in_function(self.f, deleted);
        for (id, v) in rewrites {
            if let Some(s) = find_stmt_mut(&mut cand, *id) {
                if let StmtKind::VarDecl(d) = &mut s.kind {
                    d.init = Some(Expr::Int(*v));
                }
            }
        }
        cand
    }

    fn evaluate(&self, cand: &Function, deleted: &BTreeSet<StmtId>) -> (Score, Vec<Finding>) {
        let mut u = self.unit.clone();
        u.functions[self.idx] = cand.clone();
        let type_errors = match typecheck(&u) {
            Ok(()) => 0,
            Err(d) => d.0.len().max(1),
        };
        if type_errors > 0 {
            return (
                Score {
                    type_errors,
                    new_high: usize::MAX,
                },
                Vec::new(),
            );
        }
        let kept: BTreeSet<&FindingKey> = self
            .v_ori
            .iter()
            .filter(|(x, _)| !self.is_gone(x.anchor, deleted))
            .map(|(_, k)| k)
            .collect();
        let new_high: Vec<Finding> = analyze_function(&u, &self.f.name, self.severities)
            .into_iter()
            .filter(|x| x.severity == Severity::High && !kept.contains(&finding_key(&u, x)))
            .collect();
        (
            Score {
                type_errors: 0,
                new_high: new_high.len(),
            },
            new_high,
        )
    }

    /// Declaration-initialization fix for an uninitialized read of `var`:
    /// the undeleted declaration of `var` closest before the read, and the
    /// value of the first deleted assignment to it.
    fn init_fix(&self, finding: &Finding, deleted: &BTreeSet<StmtId>) -> Option<(StmtId, i64)> {
        let var = finding.subject.as_deref()?;
        let at = self.preorder.iter().position(|id| *id == finding.anchor)?;
        let mut decl = None;
        let mut value = None;
        let mut assigned = false;
        let mut pos = 0;
        self.f.walk(&mut |s| {
            match &s.kind {
                StmtKind::VarDecl(d)
                    if d.name == var && d.ty == Type::Int && d.init.is_none() && pos < at && !self.is_gone(s.id, deleted) =>
                {
                    decl = Some(s.id);
                }
                StmtKind::Assign(a) if a.target == LValue::Var(var.to_string()) && self.is_gone(s.id, deleted)
                    && !assigned => {
                        assigned = true;
                        value = Some(match a.value {
                            Expr::Int(v) => v,
                            _ => 0,
                        });
                    }
                _ => {}
            }
            pos += 1;
        });
        Some((decl?, value?))
    }

    fn restore(&self, deleted: &BTreeSet<StmtId>, id: StmtId) -> BTreeSet<StmtId> {
        let mut out = deleted.clone();
        out.remove(&id);
        for a in &self.anc[&id] {
            out.remove(a);
        }
        for d in self.desc.get(&id).into_iter().flatten() {
            out.remove(d);
        }
        out
    }
}

/// Decide which suggested deletions of `function` to apply.
///
/// `findings` are the risks the security advisor predicted for deleting
/// every suggestion; they are echoed in the outcome's notes. The policy
/// itself re-analyzes each candidate it considers.
pub fn decide_rule_based(
    unit: &SourceUnit,
    function: &str,
    suggestions: &FunctionSuggestions,
    findings: &[Finding],
    severities: &SeverityMap,
) -> Option<DecisionOutcome> {
    let idx = unit.function_index(function)?;
    let ctx = Ctx::new(unit, idx, severities);
    let own: BTreeSet<StmtId> = ctx.preorder.iter().copied().collect();
    let suggested: BTreeSet<StmtId> = suggestions.ids().intersection(&own).copied().collect();
    let mut notes: Vec<String> = findings
        .iter()
        .filter(|x| x.function == function)
        .map(|x| format!("predicted {} ({}): {}", x.checker, x.severity, x.message))
        .collect();

    let mut deleted = suggested.clone();
    let mut rewrites: BTreeMap<StmtId, i64> = BTreeMap::new();
    let mut cand = ctx.build(&deleted, &rewrites);
    let (mut score, mut highs) = ctx.evaluate(&cand, &deleted);

    // Declaration initialization first; it keeps the deletions.
    loop {
        let mut added = false;
        for x in highs.iter().filter(|x| x.checker == Checker::UninitRead) {
            if let Some((decl, v)) = ctx.init_fix(x, &deleted) {
                if rewrites.insert(decl, v).is_none() {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
        let trial = ctx.build(&deleted, &rewrites);
        let (s, h) = ctx.evaluate(&trial, &deleted);
        cand = trial;
        score = s;
        highs = h;
    }

    // Greedy retention.
    while !score.clean() {
        let mut best: Option<(Score, usize, BTreeSet<StmtId>)> = None;
        for id in ctx.preorder.iter().filter(|id| deleted.contains(id)) {
            let trial_set = ctx.restore(&deleted, *id);
            let restored = deleted.len() - trial_set.len();
            let trial = ctx.build(&trial_set, &rewrites);
            let (s, _) = ctx.evaluate(&trial, &trial_set);
            if s < score && best.as_ref().is_none_or(|(bs, br, _)| (&s, restored) < (bs, *br)) {
                best = Some((s, restored, trial_set));
            }
        }
        match best {
            Some((_, _, set)) => {
                deleted = set;
                cand = ctx.build(&deleted, &rewrites);
                let (s, h) = ctx.evaluate(&cand, &deleted);
                score = s;
                highs = h;
            }
            None => {
                notes.push("no safe subset found; keeping the original function".into());
                deleted.clear();
                rewrites.clear();
                cand = ctx.f.clone();
                score = Score {
                    type_errors: 0,
                    new_high: 0,
                };
                highs.clear();
            }
        }
    }
    debug_assert!(highs.is_empty());

    // Drop rewrites that turned out unnecessary.
    for id in rewrites.keys().copied().collect::<Vec<_>>() {
        let mut fewer = rewrites.clone();
        fewer.remove(&id);
        let trial = ctx.build(&deleted, &fewer);
        if ctx.evaluate(&trial, &deleted).0.clean() {
            rewrites = fewer;
            cand = trial;
        }
    }

    let mut actions = BTreeMap::new();
    for id in &suggested {
        let a = if ctx.is_gone(*id, &deleted) {
            Action::Delete
        } else {
            Action::Retain
        };
        actions.insert(*id, a);
    }
    for (id, v) in &rewrites {
        actions.insert(*id, Action::Rewrite);
        notes.push(format!("initialized declaration {id} to {v}"));
    }
    Some(DecisionOutcome {
        function: function.to_string(),
        candidate: cand,
        actions,
        notes,
        next_id: unit.next_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::{analyze, DeletionCandidate, Reason};
    use crate::minic::printer::header_text;
    use crate::minic::{parse, print_function};

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

    fn sugg(f: &str, ids: &[StmtId]) -> FunctionSuggestions {
        FunctionSuggestions {
            function: f.into(),
            candidates: ids
                .iter()
                .map(|id| DeletionCandidate {
                    stmt_id: *id,
                    reason: Reason::Uncovered,
                })
                .collect(),
        }
    }

    fn decide(u: &SourceUnit, f: &str, ids: &[StmtId]) -> DecisionOutcome {
        decide_rule_based(u, f, &sugg(f, ids), &[], &SeverityMap::default()).unwrap()
    }

    #[test]
    fn harmless_deletions_all_go() {
        let u = parse(
            "int main() { int x = 1; if (argc() > 3) { print(x); } print(2); return 0; }",
            "t",
        )
        .unwrap();
        let a = id_of(&u, "if (argc() > 3) {");
        let b = id_of(&u, "print(2);");
        let o = decide(&u, "main", &[a, b]);
        assert_eq!(o.actions[&a], Action::Delete);
        assert_eq!(o.actions[&b], Action::Delete);
        assert_eq!(o.candidate.size(), 2);
    }

    #[test]
    fn uninit_is_fixed_at_declaration() {
        let u = parse(
            "int f(int c) { int tmp; switch (c) { case 32: tmp = 1; break; default: tmp = 0; break; case 9: tmp = 1; } return tmp; }\n\
             int main() { return f(getc()); }",
            "t",
        )
        .unwrap();
        let mut tab = None;
        u.functions[0].walk(&mut |s| {
            if let StmtKind::Case { value: Some(9), body } = &s.kind {
                tab = Some(body[0].id);
            }
        });
        let tab = tab.unwrap();
        let o = decide(&u, "f", &[tab]);
        assert_eq!(o.actions[&tab], Action::Delete);
        let decl = id_of(&u, "int tmp;");
        assert_eq!(o.actions[&decl], Action::Rewrite);
        assert!(print_function(&o.candidate).contains("int tmp = 1;"));
        let mut out = u.clone();
        out.functions[0] = o.candidate;
        assert!(analyze(&out).is_empty());
    }

    #[test]
    fn null_guard_is_retained() {
        let u = parse(
            "int get(int *p) { if (p == 0) { return -1; } return *p; }\n\
             int main() { int a[2]; return get(&a[1]); }",
            "t",
        )
        .unwrap();
        let guard = id_of(&u, "if (p == 0) {");
        let ret = id_of(&u, "return -1;");
        let o = decide(&u, "get", &[guard, ret]);
        assert_eq!(o.actions[&guard], Action::Retain);
        assert_eq!(o.actions[&ret], Action::Retain);
        assert_eq!(print_function(&o.candidate), print_function(&u.functions[0]));
    }

    #[test]
    fn type_errors_are_repaired() {
        let u = parse("int main() { int x = 1; print(x); return 0; }", "t").unwrap();
        let d = id_of(&u, "int x = 1;");
        let o = decide(&u, "main", &[d]);
        assert_eq!(o.actions[&d], Action::Retain);
    }

    #[test]
    fn deterministic() {
        let u = parse(
            "int main() { int x; if (argc() > 1) { x = 2; } else { x = 3; } print(x); return 0; }",
            "t",
        )
        .unwrap();
        let a = id_of(&u, "x = 2;");
        let b = id_of(&u, "x = 3;");
        let o1 = decide(&u, "main", &[a, b]);
        let o2 = decide(&u, "main", &[a, b]);
        assert_eq!(o1, o2);
        assert!(print_function(&o1.candidate).contains("int x = 2;"));
    }
}

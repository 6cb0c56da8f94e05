//! Structural edits that keep statement ids stable.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::ast::*;
use super::printer::{header_text, print_unit, stmt_text};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
}

/// Structural equality: same canonical text. Ids and spans are ignored.
pub fn shape_eq(a: &SourceUnit, b: &SourceUnit) -> bool {
    print_unit(a) == print_unit(b)
}

fn assign_fresh(s: &mut Stmt, next: &mut u32) {
    let mut fresh = || {
        let id = StmtId(*next);
        *next += 1;
        id
    };
    s.id = fresh();
    match &mut s.kind {
        StmtKind::If {
            then_block,
            else_block,
            ..
        } => {
            then_block.id = fresh();
            if let Some(e) = else_block {
                e.id = fresh();
            }
        }
        StmtKind::While { body, .. } | StmtKind::For { body, .. } => body.id = fresh(),
        StmtKind::Block(b) => b.id = s.id,
        _ => {}
    }
    for list in s.child_lists_mut() {
        for c in list {
            assign_fresh(c, next);
        }
    }
}

/// Copy ids from `old` onto the structurally identical `new`.
fn copy_ids(old: &Stmt, new: &mut Stmt) {
    new.id = old.id;
    copy_block_ids(old, new);
    let olds = old.child_lists();
    for (ol, nl) in olds.into_iter().zip(new.child_lists_mut()) {
        for (o, n) in ol.iter().zip(nl.iter_mut()) {
            copy_ids(o, n);
        }
    }
}

fn copy_block_ids(old: &Stmt, new: &mut Stmt) {
    match (&old.kind, &mut new.kind) {
        (
            StmtKind::If {
                then_block: ot,
                else_block: oe,
                ..
            },
            StmtKind::If {
                then_block: nt,
                else_block: ne,
                ..
            },
        ) => {
            nt.id = ot.id;
            if let (Some(o), Some(n)) = (oe, ne) {
                n.id = o.id;
            }
        }
        (StmtKind::While { body: ob, .. }, StmtKind::While { body: nb, .. })
        | (StmtKind::For { body: ob, .. }, StmtKind::For { body: nb, .. }) => nb.id = ob.id,
        (StmtKind::Block(ob), StmtKind::Block(nb)) => nb.id = ob.id,
        _ => {}
    }
}

/// Longest common subsequence of two key sequences, as index pairs.
fn lcs<K: PartialEq>(a: &[K], b: &[K]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if a[i] == b[j] {
                t[i + 1][j + 1] + 1
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n && j < m {
        if a[i] == b[j] {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Re-anchor `new` against `old`: exact subtree matches first, then
/// header-level matches between the exact anchors, recursing into children.
fn align(old: &[Stmt], new: &mut [Stmt], next: &mut u32) {
    let ok: Vec<String> = old.iter().map(stmt_text).collect();
    let nk: Vec<String> = new.iter().map(stmt_text).collect();
    let exact = lcs(&ok, &nk);
    let mut matched_new = vec![false; new.len()];
    for &(i, j) in &exact {
        copy_ids(&old[i], &mut new[j]);
        matched_new[j] = true;
    }
    // Gaps between consecutive exact anchors.
    let mut bounds = vec![(0usize, 0usize)];
    bounds.extend(exact.iter().map(|&(i, j)| (i + 1, j + 1)));
    let mut ends: Vec<(usize, usize)> = exact.clone();
    ends.push((old.len(), new.len()));
    for (&(os, ns), &(oe, ne)) in bounds.iter().zip(&ends) {
        let oh: Vec<(String, &str)> = old[os..oe]
            .iter()
            .map(|s| (header_text(s), s.kind.name()))
            .collect();
        let nh: Vec<(String, &str)> = new[ns..ne]
            .iter()
            .map(|s| (header_text(s), s.kind.name()))
            .collect();
        let heads = lcs(&oh, &nh);
        for (i, j) in heads {
            let o = &old[os + i];
            let n = &mut new[ns + j];
            matched_new[ns + j] = true;
            n.id = o.id;
            copy_block_ids(o, n);
            if let StmtKind::Block(b) = &mut n.kind {
                b.id = o.id;
            }
            let olds = o.child_lists();
            let news = n.child_lists_mut();
            let mut olds_iter = olds.into_iter();
            for nl in news {
                match olds_iter.next() {
                    Some(ol) => align(ol, nl, next),
                    None => {
                        for c in nl.iter_mut() {
                            assign_fresh(c, next);
                        }
                    }
                }
            }
            // An `else` present only in the new statement needs its own id.
            if let (
                StmtKind::If {
                    else_block: None, ..
                },
                StmtKind::If {
                    else_block: Some(nb),
                    ..
                },
            ) = (&o.kind, &mut n.kind)
            {
                nb.id = StmtId(*next);
                *next += 1;
            }
        }
    }
    for (j, s) in new.iter_mut().enumerate() {
        if !matched_new[j] {
            assign_fresh(s, next);
        }
    }
}

/// Replace function `name` with `new_fn`. Statements of `new_fn` that match
/// statements of the replaced function inherit their ids; the rest get
/// fresh ids. Other functions are untouched.
pub fn replace_function(
    unit: &SourceUnit,
    name: &str,
    new_fn: &Function,
) -> Result<SourceUnit, EditError> {
    let idx = unit
        .function_index(name)
        .ok_or_else(|| EditError::UnknownFunction(name.to_string()))?;
    let old = &unit.functions[idx];
    let mut f = new_fn.clone();
    let mut next = unit.next_id;
    f.body.id = old.body.id;
    align(&old.body.stmts, &mut f.body.stmts, &mut next);
    let mut out = unit.clone();
    out.functions[idx] = f;
    out.next_id = next;
    Ok(out)
}

/// Re-anchor `derived`, typically a reparsed debloated file, on the ids of
/// `original`. Functions are matched by name; unmatched ones get fresh ids.
pub fn align_unit(original: &SourceUnit, derived: &SourceUnit) -> SourceUnit {
    let mut out = original.clone();
    out.globals = derived.globals.clone();
    let mut functions = Vec::with_capacity(derived.functions.len());
    for f in &derived.functions {
        match replace_function(&out, &f.name, f) {
            Ok(u) => {
                functions.push(u.function(&f.name).expect("replaced").clone());
                out.next_id = u.next_id;
            }
            Err(_) => {
                let mut g = f.clone();
                g.body.id = out.fresh_id();
                for s in &mut g.body.stmts {
                    assign_fresh(s, &mut out.next_id);
                }
                functions.push(g);
            }
        }
    }
    out.functions = functions;
    out
}

fn delete_in(list: &mut Vec<Stmt>, ids: &BTreeSet<StmtId>) {
    list.retain(|s| !ids.contains(&s.id));
    for s in list.iter_mut() {
        for l in s.child_lists_mut() {
            delete_in(l, ids);
        }
    }
}

/// Remove the given statements (with their subtrees) from a function.
pub fn delete_in_function(f: &Function, ids: &BTreeSet<StmtId>) -> Function {
    let mut f = f.clone();
    delete_in(&mut f.body.stmts, ids);
    f
}

/// Remove the given statements (with their subtrees) from every function.
pub fn delete_stmts(unit: &SourceUnit, ids: &BTreeSet<StmtId>) -> SourceUnit {
    let mut out = unit.clone();
    for f in &mut out.functions {
        delete_in(&mut f.body.stmts, ids);
    }
    out
}

fn find_in(list: &mut [Stmt], id: StmtId) -> Option<&mut Stmt> {
    for s in list.iter_mut() {
        if s.id == id {
            return Some(s);
        }
        for l in s.child_lists_mut() {
            if let Some(hit) = find_in(l, id) {
                return Some(hit);
            }
        }
    }
    None
}

pub fn find_stmt_mut(f: &mut Function, id: StmtId) -> Option<&mut Stmt> {
    find_in(&mut f.body.stmts, id)
}

/// For each statement, the ids of its enclosing statements from the
/// innermost outwards. Block wrappers that only serve as a body are not
/// listed; free-standing blocks are.
pub fn ancestors(f: &Function) -> HashMap<StmtId, Vec<StmtId>> {
    fn go(list: &[Stmt], chain: &mut Vec<StmtId>, out: &mut HashMap<StmtId, Vec<StmtId>>) {
        for s in list {
            out.insert(s.id, chain.iter().rev().copied().collect());
            chain.push(s.id);
            for l in s.child_lists() {
                go(l, chain, out);
            }
            chain.pop();
        }
    }
    let mut out = HashMap::new();
    go(&f.body.stmts, &mut Vec::new(), &mut out);
    out
}

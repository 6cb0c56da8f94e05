//! A forward worklist solver over one IR function.

use std::collections::VecDeque;

use crate::minic::ir::{Instr, IrFunction};

pub trait Lattice: Clone + PartialEq {
    /// Least upper bound; returns true if `self` changed.
    fn join_from(&mut self, other: &Self) -> bool;
}

/// Solve to a fixpoint. `transfer` maps the in-state at `pc` to the
/// out-state on each successor edge. Unreachable instructions get `None`.
pub fn solve<S: Lattice>(
    f: &IrFunction,
    entry: S,
    mut transfer: impl FnMut(usize, &Instr, &S) -> Vec<(usize, S)>,
) -> Vec<Option<S>> {
    let n = f.instrs.len();
    let mut states: Vec<Option<S>> = vec![None; n];
    if n == 0 {
        return states;
    }
    states[0] = Some(entry);
    let mut queue = VecDeque::from([0usize]);
    let mut queued = vec![false; n];
    queued[0] = true;
    while let Some(pc) = queue.pop_front() {
        queued[pc] = false;
        let Some(input) = states[pc].clone() else {
            continue;
        };
        for (succ, out) in transfer(pc, &f.instrs[pc], &input) {
            if succ >= n {
                continue;
            }
            let changed = match &mut states[succ] {
                Some(s) => s.join_from(&out),
                slot @ None => {
                    *slot = Some(out);
                    true
                }
            };
            if changed && !queued[succ] {
                queued[succ] = true;
                queue.push_back(succ);
            }
        }
    }
    states
}

/// Successor list paired with a copy of `s` for each edge.
pub fn fallthrough<S: Clone>(pc: usize, ins: &Instr, s: S) -> Vec<(usize, S)> {
    ins.successors(pc).into_iter().map(|p| (p, s.clone())).collect()
}

/// For each register, the index of its unique defining instruction, if it
/// has exactly one.
pub fn single_defs(f: &IrFunction) -> Vec<Option<usize>> {
    let mut defs: Vec<Option<usize>> = vec![None; f.num_regs as usize];
    let mut multi = vec![false; f.num_regs as usize];
    for (pc, ins) in f.instrs.iter().enumerate() {
        if let Some(r) = ins.def() {
            let r = r as usize;
            if defs[r].is_some() {
                multi[r] = true;
            }
            defs[r] = Some(pc);
        }
    }
    for (d, m) in defs.iter_mut().zip(multi) {
        if m {
            *d = None;
        }
    }
    defs
}

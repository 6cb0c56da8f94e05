//! Seeded random MiniC programs. Loops are counted `for` loops over a
//! variable the body never assigns, so every program terminates.

use std::collections::BTreeSet;

use leader::minic::{delete_stmts, lower, parse, SourceUnit, StmtId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Ptr,
    Array(u32),
}

#[derive(Clone)]
struct Var {
    name: String,
    kind: Kind,
    assignable: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    budget: usize,
    fresh: usize,
    scopes: Vec<Vec<Var>>,
    out: String,
    in_helper: bool,
    loop_depth: usize,
}

impl Gen {
    fn name(&mut self, p: &str) -> String {
        self.fresh += 1;
        format!("{p}{}", self.fresh)
    }

    fn vars(&self, k: impl Fn(Kind) -> bool) -> Vec<Var> {
        self.scopes.iter().flatten().filter(|v| k(v.kind)).cloned().collect()
    }

    fn declare(&mut self, name: &str, kind: Kind, assignable: bool) {
        self.scopes.last_mut().unwrap().push(Var {
            name: name.to_string(),
            kind,
            assignable,
        });
    }

    fn pick<T: Clone>(&mut self, v: &[T]) -> Option<T> {
        v.choose(&mut self.rng).cloned()
    }

    fn literal(&mut self) -> String {
        ["0", "1", "2", "3", "5", "-1", "7"][self.rng.gen_range(0..7)].to_string()
    }

    /// Mostly in bounds.
    fn index(&mut self, kind: Kind) -> u32 {
        let len = match kind {
            Kind::Array(n) => n,
            _ => 1,
        };
        if self.rng.gen_bool(0.1) {
            self.rng.gen_range(len..len + 2)
        } else {
            self.rng.gen_range(0..len)
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        let choice = if depth == 0 { self.rng.gen_range(0..4) } else { self.rng.gen_range(0..9) };
        match choice {
            0 | 1 => self.literal(),
            2 | 3 => match self.pick(&self.vars(|k| k == Kind::Int)) {
                Some(v) => v.name,
                None => self.literal(),
            },
            4 => match self.pick(&self.vars(|k| matches!(k, Kind::Array(_)))) {
                Some(v) => {
                    let i = if self.rng.gen_bool(0.7) {
                        self.index(v.kind).to_string()
                    } else {
                        self.expr(depth - 1)
                    };
                    format!("{}[{i}]", v.name)
                }
                None => self.literal(),
            },
            5 => match self.pick(&self.vars(|k| k == Kind::Ptr)) {
                Some(v) => format!("*{}", v.name),
                None => self.literal(),
            },
            6 => {
                let op = ["+", "-", "*", "/", "%", "<", "==", "!=", ">=", "&&", "||"][self.rng.gen_range(0..11)];
                format!("({} {op} {})", self.expr(depth - 1), self.expr(depth - 1))
            }
            7 => ["argc()", "getc()", "arglen(0)"][self.rng.gen_range(0..3)].to_string(),
            _ => {
                if !self.in_helper && self.rng.gen_bool(0.5) {
                    let p = self.pointer_value();
                    format!("helper({p}, {})", self.expr(depth - 1))
                } else {
                    format!("-{}", self.expr(depth - 1))
                }
            }
        }
    }

    fn cond(&mut self) -> String {
        let ptrs = self.vars(|k| k == Kind::Ptr);
        if !ptrs.is_empty() && self.rng.gen_bool(0.3) {
            let p = self.pick(&ptrs).unwrap().name;
            return match self.rng.gen_range(0..3) {
                0 => p,
                1 => format!("{p} != 0"),
                _ => format!("{p} == 0"),
            };
        }
        self.expr(2)
    }

    fn pointer_value(&mut self) -> String {
        let arrays = self.vars(|k| matches!(k, Kind::Array(_)));
        match self.pick(&arrays) {
            Some(a) if self.rng.gen_bool(0.7) => format!("&{}[{}]", a.name, self.rng.gen_range(0..4)),
            _ => "0".into(),
        }
    }

    fn line(&mut self, indent: usize, s: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn block(&mut self, indent: usize, max: usize) {
        self.scopes.push(Vec::new());
        let n = self.rng.gen_range(1..=max.max(1));
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            self.stmt(indent);
        }
        self.scopes.pop();
    }

    fn stmt(&mut self, indent: usize) {
        self.budget -= 1;
        let nested = self.budget >= 3 && indent < 4;
        let roll = self.rng.gen_range(0..if nested { 16 } else { 11 });
        match roll {
            0 => {
                let n = self.name("u");
                self.line(indent, &format!("int {n};"));
                self.declare(&n, Kind::Int, true);
            }
            1 | 2 => {
                let n = self.name("v");
                let e = self.expr(2);
                self.line(indent, &format!("int {n} = {e};"));
                self.declare(&n, Kind::Int, true);
            }
            3 => {
                let n = self.name("q");
                let p = self.pointer_value();
                self.line(indent, &format!("int *{n} = {p};"));
                self.declare(&n, Kind::Ptr, true);
            }
            4 => {
                let n = self.name("b");
                let len = self.rng.gen_range(1..5);
                self.line(indent, &format!("int {n}[{len}];"));
                self.declare(&n, Kind::Array(len), false);
            }
            5 | 6 => {
                let targets: Vec<Var> = self.vars(|k| k == Kind::Int).into_iter().filter(|v| v.assignable).collect();
                match self.pick(&targets) {
                    Some(v) => {
                        let e = self.expr(2);
                        self.line(indent, &format!("{} = {e};", v.name));
                    }
                    None => {
                        let e = self.expr(1);
                        self.line(indent, &format!("print({e});"));
                    }
                }
            }
            7 => {
                let ptrs: Vec<Var> = self.vars(|k| k == Kind::Ptr).into_iter().filter(|v| v.assignable).collect();
                match self.pick(&ptrs) {
                    Some(p) if self.rng.gen_bool(0.5) => {
                        let v = self.pointer_value();
                        self.line(indent, &format!("{} = {v};", p.name));
                    }
                    Some(p) => {
                        let e = self.expr(1);
                        self.line(indent, &format!("*{} = {e};", p.name));
                    }
                    None => {
                        let e = self.expr(1);
                        self.line(indent, &format!("print({e});"));
                    }
                }
            }
            8 => {
                let e = self.expr(2);
                self.line(indent, &format!("print({e});"));
            }
            9 => {
                let arrays = self.vars(|k| matches!(k, Kind::Array(_)));
                match self.pick(&arrays) {
                    Some(a) => {
                        let i = self.index(a.kind);
                        let e = self.expr(1);
                        self.line(indent, &format!("{}[{i}] = {e};", a.name));
                    }
                    None => self.line(indent, ";"),
                }
            }
            10 => {
                if self.in_helper && self.rng.gen_bool(0.6) {
                    let e = self.expr(1);
                    self.line(indent, &format!("return {e};"));
                } else if self.loop_depth > 0 && self.rng.gen_bool(0.5) {
                    let s = if self.rng.gen_bool(0.5) { "break;" } else { "continue;" };
                    self.line(indent, s);
                } else {
                    self.line(indent, ";");
                }
            }
            11 | 12 => {
                let c = self.cond();
                self.line(indent, &format!("if ({c}) {{"));
                self.block(indent + 1, 3);
                if self.budget > 0 && self.rng.gen_bool(0.5) {
                    self.line(indent, "} else {");
                    self.block(indent + 1, 3);
                }
                self.line(indent, "}");
            }
            13 | 14 => {
                let i = self.name("i");
                let k = self.rng.gen_range(0..4);
                self.line(indent, &format!("int {i} = 0;"));
                self.declare(&i, Kind::Int, false);
                self.line(indent, &format!("for ({i} = 0; {i} < {k}; {i} = {i} + 1) {{"));
                self.loop_depth += 1;
                self.block(indent + 1, 3);
                self.loop_depth -= 1;
                self.line(indent, "}");
            }
            _ => {
                let e = self.expr(1);
                self.line(indent, &format!("switch ({e}) {{"));
                for (n, label) in ["case 1:", "case 2:", "default:"].iter().enumerate() {
                    if self.budget == 0 && n > 0 {
                        break;
                    }
                    self.line(indent, label);
                    self.scopes.push(Vec::new());
                    if self.budget > 0 {
                        self.stmt(indent + 1);
                    }
                    self.scopes.pop();
                    if self.rng.gen_bool(0.6) {
                        self.line(indent + 1, "break;");
                    }
                }
                self.line(indent, "}");
            }
        }
    }
}

/// A random program with at most `max_stmts` generated statements.
pub fn random_source(seed: u64, max_stmts: usize) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        budget: max_stmts,
        fresh: 0,
        scopes: vec![Vec::new()],
        out: String::new(),
        in_helper: true,
        loop_depth: 0,
    };
    g.line(0, "int g;");
    g.line(0, "int arr[4];");
    g.declare("g", Kind::Int, true);
    g.declare("arr", Kind::Array(4), false);
    g.line(0, "int helper(int *p, int x) {");
    g.scopes.push(Vec::new());
    g.declare("p", Kind::Ptr, true);
    g.declare("x", Kind::Int, true);
    let share = max_stmts / 3;
    g.budget = share.max(1);
    g.block(1, share.max(1));
    if g.rng.gen_bool(0.7) {
        let e = g.expr(1);
        g.line(1, &format!("return {e};"));
    }
    g.scopes.pop();
    g.line(0, "}");
    g.in_helper = false;
    g.line(0, "int main() {");
    g.scopes.push(Vec::new());
    g.budget = max_stmts.saturating_sub(share + 1).max(1);
    // `main` gets most of the budget; keep calling blocks until it is spent.
    while g.budget > 0 {
        g.stmt(1);
    }
    g.line(1, "return 0;");
    g.scopes.pop();
    g.line(0, "}");
    g.out
}

/// A random program that parses and type-checks.
pub fn random_unit(seed: u64, max_stmts: usize) -> SourceUnit {
    let mut s = seed;
    loop {
        let src = random_source(s, max_stmts);
        if let Ok(u) = parse(&src, "rand") {
            return u;
        }
        s = s.wrapping_add(0x9e37_79b9);
    }
}

/// A random deletion of statements of `unit`, preferring deletions after
/// which the program still lowers.
pub fn random_deletion(unit: &SourceUnit, seed: u64, rate: f64) -> (SourceUnit, BTreeSet<StmtId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = unit.stmt_ids();
    let mut last = (unit.clone(), BTreeSet::new());
    for _ in 0..8 {
        let pick: BTreeSet<StmtId> = ids.iter().copied().filter(|_| rng.gen_bool(rate)).collect();
        let deb = delete_stmts(unit, &pick);
        let ok = lower(&deb).is_ok();
        last = (deb, pick);
        if ok {
            break;
        }
    }
    last
}

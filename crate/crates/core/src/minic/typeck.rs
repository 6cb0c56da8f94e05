//! Static checks run after parsing: name resolution, types, control-flow
//! placement of `break`/`continue`, label visibility, and builtin arity.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::diag::{Diagnostic, DiagnosticKind, Diagnostics};

/// Signature of a builtin: parameter kinds and whether it yields an int.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinArg {
    Int,
    Str,
}

pub fn builtin_signature(name: &str) -> Option<(&'static [BuiltinArg], bool)> {
    use BuiltinArg::*;
    Some(match name {
        "argc" => (&[], true),
        "arglen" => (&[Int], true),
        "arg" => (&[Int, Int], true),
        "getc" => (&[], true),
        "print" => (&[Int], false),
        "putc" => (&[Int], false),
        "prints" => (&[Str], false),
        "putarg" => (&[Int], false),
        "exit" => (&[Int], false),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ETy {
    Int,
    Ptr,
    Void,
}

struct FnSig {
    params: Vec<Type>,
    ret: Type,
}

struct Checker<'a> {
    sigs: HashMap<&'a str, FnSig>,
    globals: HashMap<&'a str, Type>,
    diags: Vec<Diagnostic>,
    scopes: Vec<HashMap<String, Type>>,
    label_scopes: Vec<HashSet<String>>,
    ret: Type,
    loop_depth: usize,
    break_depth: usize,
    line: u32,
    col: u32,
}

impl<'a> Checker<'a> {
    fn err(&mut self, msg: impl Into<String>) {
        self.diags
            .push(Diagnostic::new(DiagnosticKind::Type, self.line, self.col, msg));
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        for s in self.scopes.iter().rev() {
            if let Some(t) = s.get(name) {
                return Some(*t);
            }
        }
        self.globals.get(name).copied()
    }

    fn declare(&mut self, name: &str, ty: Type) {
        let scope = self.scopes.last_mut().expect("scope");
        if scope.insert(name.to_string(), ty).is_some() {
            self.err(format!("'{name}' is already declared in this scope"));
        }
    }

    fn var_type(&mut self, name: &str) -> Option<Type> {
        let t = self.lookup(name);
        if t.is_none() {
            self.err(format!("use of undeclared variable '{name}'"));
        }
        t
    }

    fn expect_int(&mut self, e: &Expr, what: &str) {
        let t = self.expr(e);
        if !matches!(t, Some(ETy::Int)) && t.is_some() {
            self.err(format!("{what} must be an int"));
        }
    }

    fn expect_cond(&mut self, e: &Expr) {
        match self.expr(e) {
            Some(ETy::Int) | Some(ETy::Ptr) | None => {}
            Some(ETy::Void) => self.err("condition must be an int or pointer"),
        }
    }

    /// Type of `e`; `None` if an error was already reported.
    fn expr(&mut self, e: &Expr) -> Option<ETy> {
        match e {
            Expr::Int(_) => Some(ETy::Int),
            Expr::Str(_) => {
                self.err("string literals may only be passed to prints()");
                None
            }
            Expr::Var(n) => match self.var_type(n)? {
                Type::Int => Some(ETy::Int),
                Type::IntPtr => Some(ETy::Ptr),
                Type::IntArray(_) => {
                    self.err(format!("array '{n}' cannot be used as a value"));
                    None
                }
                Type::Void => None,
            },
            Expr::Index(n, i) | Expr::AddrOf(n, i) => {
                let t = self.var_type(n);
                self.expect_int(i, "array index");
                match t? {
                    Type::IntArray(_) => Some(if matches!(e, Expr::Index(..)) {
                        ETy::Int
                    } else {
                        ETy::Ptr
                    }),
                    _ => {
                        self.err(format!("'{n}' is not an array"));
                        None
                    }
                }
            }
            Expr::Deref(n) => match self.var_type(n)? {
                Type::IntPtr => Some(ETy::Int),
                _ => {
                    self.err(format!("'{n}' is not a pointer"));
                    None
                }
            },
            Expr::Unary(UnOp::Neg, inner) => {
                self.expect_int(inner, "operand of '-'");
                Some(ETy::Int)
            }
            Expr::Unary(UnOp::Not, inner) => {
                self.expect_cond(inner);
                Some(ETy::Int)
            }
            Expr::Binary(op, l, r) => {
                match op {
                    BinOp::And | BinOp::Or => {
                        self.expect_cond(l);
                        self.expect_cond(r);
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let lt = self.expr(l);
                        let rt = self.expr(r);
                        let null_l = matches!(**l, Expr::Int(0));
                        let null_r = matches!(**r, Expr::Int(0));
                        match (lt, rt) {
                            (Some(ETy::Int), Some(ETy::Int)) | (Some(ETy::Ptr), Some(ETy::Ptr)) => {}
                            (Some(ETy::Ptr), Some(ETy::Int)) if null_r => {}
                            (Some(ETy::Int), Some(ETy::Ptr)) if null_l => {}
                            (None, _) | (_, None) => {}
                            _ => self.err("pointers may only be compared with pointers or 0"),
                        }
                    }
                    _ => {
                        self.expect_int(l, &format!("operand of '{}'", op.symbol()));
                        self.expect_int(r, &format!("operand of '{}'", op.symbol()));
                    }
                }
                Some(ETy::Int)
            }
            Expr::Call(name, args) => self.call(name, args),
        }
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Option<ETy> {
        if let Some((params, yields)) = builtin_signature(name) {
            if params.len() != args.len() {
                self.err(format!(
                    "{name}() takes {} argument(s), {} given",
                    params.len(),
                    args.len()
                ));
                return if yields { Some(ETy::Int) } else { Some(ETy::Void) };
            }
            for (p, a) in params.iter().zip(args) {
                match p {
                    BuiltinArg::Int => self.expect_int(a, &format!("argument of {name}()")),
                    BuiltinArg::Str => {
                        if !matches!(a, Expr::Str(_)) {
                            self.err(format!("{name}() expects a string literal"));
                        }
                    }
                }
            }
            return Some(if yields { ETy::Int } else { ETy::Void });
        }
        let Some(sig) = self.sigs.get(name) else {
            self.err(format!("call to undefined function '{name}'"));
            args.iter().for_each(|a| {
                self.expr(a);
            });
            return None;
        };
        let params = sig.params.clone();
        let ret = sig.ret;
        if params.len() != args.len() {
            self.err(format!(
                "'{name}' takes {} argument(s), {} given",
                params.len(),
                args.len()
            ));
        }
        for (p, a) in params.iter().zip(args) {
            let t = self.expr(a);
            match (p, t) {
                (_, None) => {}
                (Type::Int, Some(ETy::Int)) | (Type::IntPtr, Some(ETy::Ptr)) => {}
                (Type::IntPtr, Some(ETy::Int)) if matches!(a, Expr::Int(0)) => {}
                _ => self.err(format!("argument type mismatch in call to '{name}'")),
            }
        }
        Some(match ret {
            Type::Void => ETy::Void,
            _ => ETy::Int,
        })
    }

    fn assignment(&mut self, a: &Assignment) {
        match &a.target {
            LValue::Var(n) => {
                let Some(t) = self.var_type(n) else {
                    self.expr(&a.value);
                    return;
                };
                let vt = self.expr(&a.value);
                match (t, vt) {
                    (_, None) => {}
                    (Type::Int, Some(ETy::Int)) | (Type::IntPtr, Some(ETy::Ptr)) => {}
                    (Type::IntPtr, Some(ETy::Int)) if matches!(a.value, Expr::Int(0)) => {}
                    (Type::IntArray(_), _) => self.err(format!("cannot assign to array '{n}'")),
                    (Type::IntPtr, _) => self.err(format!(
                        "pointer '{n}' can only be assigned a pointer or 0"
                    )),
                    _ => self.err(format!("type mismatch in assignment to '{n}'")),
                }
            }
            LValue::Index(..) | LValue::Deref(_) => {
                let target = match &a.target {
                    LValue::Index(n, i) => Expr::Index(n.clone(), i.clone()),
                    LValue::Deref(n) => Expr::Deref(n.clone()),
                    LValue::Var(_) => unreachable!(),
                };
                self.expr(&target);
                self.expect_int(&a.value, "assigned value");
            }
        }
    }

    fn list(&mut self, stmts: &[Stmt], new_scope: bool) {
        let labels = stmts
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Label(l) => Some(l.clone()),
                _ => None,
            })
            .collect();
        self.label_scopes.push(labels);
        if new_scope {
            self.scopes.push(HashMap::new());
        }
        for s in stmts {
            self.stmt(s);
        }
        if new_scope {
            self.scopes.pop();
        }
        self.label_scopes.pop();
    }

    fn stmt(&mut self, s: &Stmt) {
        self.line = s.span.start_line;
        self.col = s.span.start_col;
        match &s.kind {
            StmtKind::VarDecl(d) => {
                if let Some(init) = &d.init {
                    match d.ty {
                        Type::IntArray(_) => self.err("arrays cannot have initializers"),
                        ty => {
                            let a = Assignment {
                                target: LValue::Var(d.name.clone()),
                                value: init.clone(),
                            };
                            // Check the initializer before the name is in scope.
                            let vt = self.expr(init);
                            match (ty, vt) {
                                (_, None) => {}
                                (Type::Int, Some(ETy::Int)) | (Type::IntPtr, Some(ETy::Ptr)) => {}
                                (Type::IntPtr, Some(ETy::Int))
                                    if matches!(a.value, Expr::Int(0)) => {}
                                _ => self.err(format!("type mismatch in initializer of '{}'", d.name)),
                            }
                        }
                    }
                }
                self.declare(&d.name, d.ty);
            }
            StmtKind::Assign(a) => self.assignment(a),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expect_cond(cond);
                self.list(&then_block.stmts, true);
                if let Some(e) = else_block {
                    self.list(&e.stmts, true);
                }
            }
            StmtKind::While { cond, body } => {
                self.expect_cond(cond);
                self.loop_depth += 1;
                self.break_depth += 1;
                self.list(&body.stmts, true);
                self.loop_depth -= 1;
                self.break_depth -= 1;
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(a) = init {
                    self.assignment(a);
                }
                if let Some(c) = cond {
                    self.expect_cond(c);
                }
                if let Some(a) = step {
                    self.assignment(a);
                }
                self.loop_depth += 1;
                self.break_depth += 1;
                self.list(&body.stmts, true);
                self.loop_depth -= 1;
                self.break_depth -= 1;
            }
            StmtKind::Switch { scrutinee, cases } => {
                self.expect_int(scrutinee, "switch value");
                let mut seen = HashSet::new();
                let mut defaults = 0;
                self.break_depth += 1;
                for c in cases {
                    self.line = c.span.start_line;
                    self.col = c.span.start_col;
                    let StmtKind::Case { value, body } = &c.kind else {
                        self.err("switch body may only contain case labels");
                        continue;
                    };
                    match value {
                        Some(v) => {
                            if !seen.insert(*v) {
                                self.err(format!("duplicate case value {v}"));
                            }
                        }
                        None => {
                            defaults += 1;
                            if defaults > 1 {
                                self.err("multiple default labels in one switch");
                            }
                        }
                    }
                    self.list(body, true);
                }
                self.break_depth -= 1;
            }
            StmtKind::Case { .. } => self.err("case label outside of switch"),
            StmtKind::Goto(l) => {
                if !self.label_scopes.iter().any(|ls| ls.contains(l)) {
                    self.err(format!(
                        "label '{l}' is not defined in an enclosing statement list"
                    ));
                }
            }
            StmtKind::Label(_) | StmtKind::Null => {}
            StmtKind::Return(e) => match (self.ret, e) {
                (Type::Void, None) => {}
                (Type::Void, Some(_)) => self.err("void function cannot return a value"),
                (_, None) => self.err("non-void function must return a value"),
                (_, Some(e)) => self.expect_int(e, "return value"),
            },
            StmtKind::Expr(e) => {
                if !matches!(e, Expr::Call(..)) {
                    self.err("expression statements must be function calls");
                }
                self.expr(e);
            }
            StmtKind::Block(b) => self.list(&b.stmts, true),
            StmtKind::Break => {
                if self.break_depth == 0 {
                    self.err("'break' outside of loop or switch");
                }
            }
            StmtKind::Continue => {
                if self.loop_depth == 0 {
                    self.err("'continue' outside of loop");
                }
            }
        }
    }
}

/// Type-check a whole unit. Returns every diagnostic found.
pub fn typecheck(unit: &SourceUnit) -> Result<(), Diagnostics> {
    let mut diags = Vec::new();
    let mut sigs = HashMap::new();
    for f in &unit.functions {
        let at = |msg: String| Diagnostic::new(DiagnosticKind::Type, f.span.start_line, f.span.start_col, msg);
        if builtin_signature(&f.name).is_some() {
            diags.push(at(format!("'{}' is a builtin and cannot be redefined", f.name)));
        }
        if f.return_type == Type::IntPtr {
            diags.push(at(format!("function '{}' cannot return a pointer", f.name)));
        }
        let mut names = HashSet::new();
        for p in &f.params {
            if !names.insert(p.name.as_str()) {
                diags.push(at(format!(
                    "duplicate parameter '{}' in '{}'",
                    p.name, f.name
                )));
            }
        }
        if sigs
            .insert(
                f.name.as_str(),
                FnSig {
                    params: f.params.iter().map(|p| p.ty).collect(),
                    ret: f.return_type,
                },
            )
            .is_some()
        {
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateFunction,
                f.span.start_line,
                f.span.start_col,
                format!("function '{}' is defined more than once", f.name),
            ));
        }
    }
    match unit.function("main") {
        None => diags.push(Diagnostic::new(
            DiagnosticKind::Type,
            1,
            1,
            "program has no 'main' function",
        )),
        Some(m) => {
            if m.return_type != Type::Int || !m.params.is_empty() {
                diags.push(Diagnostic::new(
                    DiagnosticKind::Type,
                    m.span.start_line,
                    m.span.start_col,
                    "main must be declared as 'int main()'",
                ));
            }
        }
    }
    let mut globals = HashMap::new();
    for g in &unit.globals {
        let at = |msg: String| Diagnostic::new(DiagnosticKind::Type, 1, 1, msg);
        match (g.ty, &g.init) {
            (Type::IntPtr, _) => diags.push(at(format!("global '{}' cannot be a pointer", g.name))),
            (Type::IntArray(_), Some(_)) => {
                diags.push(at(format!("global array '{}' cannot have an initializer", g.name)))
            }
            (_, Some(Expr::Int(_))) | (_, None) => {}
            (_, Some(_)) => diags.push(at(format!(
                "initializer of global '{}' must be an integer constant",
                g.name
            ))),
        }
        if globals.insert(g.name.as_str(), g.ty).is_some() {
            diags.push(at(format!("global '{}' declared more than once", g.name)));
        }
    }
    let mut ck = Checker {
        sigs,
        globals,
        diags,
        scopes: Vec::new(),
        label_scopes: Vec::new(),
        ret: Type::Void,
        loop_depth: 0,
        break_depth: 0,
        line: 1,
        col: 1,
    };
    for f in &unit.functions {
        ck.ret = f.return_type;
        ck.line = f.span.start_line;
        ck.col = f.span.start_col;
        let mut labels = HashSet::new();
        let mut dup_labels = Vec::new();
        f.walk(&mut |s| {
            if let StmtKind::Label(l) = &s.kind {
                if !labels.insert(l.clone()) {
                    dup_labels.push(l.clone());
                }
            }
        });
        for l in dup_labels {
            ck.err(format!("label '{l}' defined more than once in '{}'", f.name));
        }
        let params = f
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty))
            .collect::<HashMap<_, _>>();
        ck.scopes = vec![params];
        ck.list(&f.body.stmts, true);
    }
    if ck.diags.is_empty() {
        Ok(())
    } else {
        Err(Diagnostics(ck.diags))
    }
}

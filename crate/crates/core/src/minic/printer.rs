//! Canonical pretty-printer: one statement per line, four-space indent.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Printed text plus the line (1-based) on which each statement's header
/// appears.
#[derive(Debug, Clone, Default)]
pub struct Printed {
    pub text: String,
    pub lines: BTreeMap<StmtId, u32>,
}

impl Printed {
    /// The statement whose header sits on `line`, if any. Block wrappers
    /// share lines with their parents and are skipped.
    pub fn stmt_at_line(&self, line: u32, skip: impl Fn(StmtId) -> bool) -> Option<StmtId> {
        self.lines
            .iter()
            .find(|(id, l)| **l == line && !skip(**id))
            .map(|(id, _)| *id)
    }
}

struct Emitter {
    out: Printed,
    line: u32,
}

impl Emitter {
    fn new() -> Self {
        Emitter {
            out: Printed::default(),
            line: 1,
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.text.push_str(INDENT);
        }
        self.out.text.push_str(text);
        self.out.text.push('\n');
        self.line += 1;
    }

    fn mark(&mut self, id: StmtId) {
        self.out.lines.insert(id, self.line);
    }
}

pub fn print_unit(unit: &SourceUnit) -> String {
    print_unit_mapped(unit).text
}

pub fn print_unit_mapped(unit: &SourceUnit) -> Printed {
    let mut em = Emitter::new();
    for g in &unit.globals {
        em.line(0, &decl_text(g));
    }
    for (i, f) in unit.functions.iter().enumerate() {
        if i > 0 || !unit.globals.is_empty() {
            em.line(0, "");
        }
        function(&mut em, f);
    }
    em.out
}

pub fn print_function(f: &Function) -> String {
    print_function_mapped(f).text
}

pub fn print_function_mapped(f: &Function) -> Printed {
    let mut em = Emitter::new();
    function(&mut em, f);
    em.out
}

pub fn signature_text(f: &Function) -> String {
    let params = f
        .params
        .iter()
        .map(|p| match p.ty {
            Type::IntPtr => format!("int *{}", p.name),
            _ => format!("int {}", p.name),
        })
        .collect::<Vec<_>>()
        .join(", ");
    let ret = match f.return_type {
        Type::Void => "void ",
        Type::IntPtr => "int *",
        _ => "int ",
    };
    format!("{ret}{}({params})", f.name)
}

fn function(em: &mut Emitter, f: &Function) {
    em.mark(f.body.id);
    em.line(0, &format!("{} {{", signature_text(f)));
    for s in &f.body.stmts {
        stmt(em, s, 1);
    }
    em.line(0, "}");
}

fn block_body(em: &mut Emitter, b: &Block, depth: usize) {
    for s in &b.stmts {
        stmt(em, s, depth);
    }
}

fn stmt(em: &mut Emitter, s: &Stmt, depth: usize) {
    em.mark(s.id);
    match &s.kind {
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            em.mark(then_block.id);
            em.line(depth, &format!("if ({}) {{", expr_text(cond)));
            block_body(em, then_block, depth + 1);
            let mut tail = else_block.as_ref();
            while let Some(eb) = tail {
                // `else if` chains print flat; the parser wraps the nested
                // `if` in a block again, so the tree is unchanged.
                if let [inner] = eb.stmts.as_slice() {
                    if let StmtKind::If {
                        cond,
                        then_block,
                        else_block,
                    } = &inner.kind
                    {
                        em.mark(eb.id);
                        em.mark(inner.id);
                        em.mark(then_block.id);
                        em.line(depth, &format!("}} else if ({}) {{", expr_text(cond)));
                        block_body(em, then_block, depth + 1);
                        tail = else_block.as_ref();
                        continue;
                    }
                }
                em.mark(eb.id);
                em.line(depth, "} else {");
                block_body(em, eb, depth + 1);
                tail = None;
            }
            em.line(depth, "}");
        }
        StmtKind::While { cond, body } => {
            em.mark(body.id);
            em.line(depth, &format!("while ({}) {{", expr_text(cond)));
            block_body(em, body, depth + 1);
            em.line(depth, "}");
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            em.mark(body.id);
            em.line(depth, &format!("{} {{", for_header(init, cond, step)));
            block_body(em, body, depth + 1);
            em.line(depth, "}");
        }
        StmtKind::Switch { scrutinee, cases } => {
            em.line(depth, &format!("switch ({}) {{", expr_text(scrutinee)));
            for c in cases {
                stmt(em, c, depth);
            }
            em.line(depth, "}");
        }
        StmtKind::Case { body, .. } => {
            em.line(depth, &simple_text(s));
            for b in body {
                stmt(em, b, depth + 1);
            }
        }
        StmtKind::Block(b) => {
            em.line(depth, "{");
            block_body(em, b, depth + 1);
            em.line(depth, "}");
        }
        _ => em.line(depth, &simple_text(s)),
    }
}

fn for_header(init: &Option<Assignment>, cond: &Option<Expr>, step: &Option<Assignment>) -> String {
    format!(
        "for ({}; {}; {})",
        init.as_ref().map(assign_text).unwrap_or_default(),
        cond.as_ref().map(expr_text).unwrap_or_default(),
        step.as_ref().map(assign_text).unwrap_or_default()
    )
    .replace("for (; ; )", "for (;;)")
}

pub fn decl_text(d: &VarDecl) -> String {
    let base = match d.ty {
        Type::IntArray(n) => format!("int {}[{n}]", d.name),
        Type::IntPtr => format!("int *{}", d.name),
        _ => format!("int {}", d.name),
    };
    match &d.init {
        Some(e) => format!("{base} = {};", expr_text(e)),
        None => format!("{base};"),
    }
}

fn assign_text(a: &Assignment) -> String {
    format!("{} = {}", lvalue_text(&a.target), expr_text(&a.value))
}

pub fn lvalue_text(l: &LValue) -> String {
    match l {
        LValue::Var(n) => n.clone(),
        LValue::Index(n, i) => format!("{n}[{}]", expr_text(i)),
        LValue::Deref(n) => format!("*{n}"),
    }
}

/// Text of a statement's header alone: the whole statement for simple
/// statements, the opening line for compound ones.
pub fn header_text(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::If { cond, .. } => format!("if ({}) {{", expr_text(cond)),
        StmtKind::While { cond, .. } => format!("while ({}) {{", expr_text(cond)),
        StmtKind::For {
            init, cond, step, ..
        } => format!("{} {{", for_header(init, cond, step)),
        StmtKind::Switch { scrutinee, .. } => format!("switch ({}) {{", expr_text(scrutinee)),
        StmtKind::Block(_) => "{".to_string(),
        _ => simple_text(s),
    }
}

/// Full canonical text of one statement subtree, without indentation.
pub fn stmt_text(s: &Stmt) -> String {
    let mut em = Emitter::new();
    stmt(&mut em, s, 0);
    em.out.text
}

fn simple_text(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::VarDecl(d) => decl_text(d),
        StmtKind::Assign(a) => format!("{};", assign_text(a)),
        StmtKind::Case { value: Some(v), .. } => format!("case {v}:"),
        StmtKind::Case { value: None, .. } => "default:".to_string(),
        StmtKind::Goto(l) => format!("goto {l};"),
        StmtKind::Label(l) => format!("{l}:"),
        StmtKind::Return(Some(e)) => format!("return {};", expr_text(e)),
        StmtKind::Return(None) => "return;".to_string(),
        StmtKind::Expr(e) => format!("{};", expr_text(e)),
        StmtKind::Break => "break;".to_string(),
        StmtKind::Continue => "continue;".to_string(),
        StmtKind::Null => ";".to_string(),
        _ => header_text(s),
    }
}

fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\u{b}' => out.push_str("\\v"),
            '\u{c}' => out.push_str("\\f"),
            '\0' => out.push_str("\\0"),
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn expr_text(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        _ => u8::MAX,
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Str(s) => out.push_str(&escape_str(s)),
        Expr::Var(n) => out.push_str(n),
        Expr::Index(n, i) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, i);
            out.push(']');
        }
        Expr::Deref(n) => {
            out.push('*');
            out.push_str(n);
        }
        Expr::AddrOf(n, i) => {
            out.push('&');
            out.push_str(n);
            out.push('[');
            write_expr(out, i);
            out.push(']');
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            // `-5` would re-parse as a folded literal, and a binary operand
            // needs grouping either way.
            let wrap = matches!(**inner, Expr::Binary(..))
                || (*op == UnOp::Neg && matches!(**inner, Expr::Int(v) if v >= 0));
            if wrap {
                out.push('(');
                write_expr(out, inner);
                out.push(')');
            } else {
                write_expr(out, inner);
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let lw = prec(l) < p;
            let rw = prec(r) <= p;
            if lw {
                out.push('(');
            }
            write_expr(out, l);
            if lw {
                out.push(')');
            }
            let _ = write!(out, " {} ", op.symbol());
            if rw {
                out.push('(');
            }
            write_expr(out, r);
            if rw {
                out.push(')');
            }
        }
        Expr::Call(n, args) => {
            out.push_str(n);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

//! Syntax tree for MiniC.
//!
//! Every statement carries a [`StmtId`] that is unique within its
//! [`SourceUnit`]. Ids survive edits: deleting a statement retires its id and
//! [`crate::minic::replace_function`] re-anchors surviving statements onto the
//! ids they had before.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable identity of a statement within a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StmtId(pub u32);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32) -> Self {
        Span {
            start_line,
            start_col,
            end_line,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Int,
    /// Fixed-length array of ints; the length is at least one.
    IntArray(u32),
    /// Nullable pointer to an int.
    IntPtr,
    Void,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::IntArray(n) => write!(f, "int[{n}]"),
            Type::IntPtr => f.write_str("int *"),
            Type::Void => f.write_str("void"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    /// String literal; only legal as the argument of `prints`.
    Str(String),
    Var(String),
    Index(String, Box<Expr>),
    Deref(String),
    /// `&a[i]`
    AddrOf(String, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_string(), args)
    }

    /// Pre-order walk over this expression and its operands.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Int(_) | Expr::Str(_) | Expr::Var(_) | Expr::Deref(_) => {}
            Expr::Index(_, i) | Expr::AddrOf(_, i) => i.walk(f),
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
        }
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Call(..)));
        found
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LValue {
    Var(String),
    Index(String, Box<Expr>),
    Deref(String),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) | LValue::Deref(n) => n,
        }
    }
}

/// `target = value`, as used by assignments and `for` headers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub target: LValue,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    pub id: StmtId,
    pub span: Span,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stmt {
    pub id: StmtId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum StmtKind {
    VarDecl(VarDecl),
    Assign(Assignment),
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    For {
        init: Option<Assignment>,
        cond: Option<Expr>,
        step: Option<Assignment>,
        body: Block,
    },
    /// Every element of `cases` is a [`StmtKind::Case`].
    Switch {
        scrutinee: Expr,
        cases: Vec<Stmt>,
    },
    /// `case N:` or, with `value == None`, `default:`.
    Case {
        value: Option<i64>,
        body: Vec<Stmt>,
    },
    Goto(String),
    Label(String),
    Return(Option<Expr>),
    Expr(Expr),
    Block(Block),
    Break,
    Continue,
    Null,
}

impl StmtKind {
    pub fn name(&self) -> &'static str {
        match self {
            StmtKind::VarDecl(_) => "VarDecl",
            StmtKind::Assign(_) => "Assign",
            StmtKind::If { .. } => "If",
            StmtKind::While { .. } => "While",
            StmtKind::For { .. } => "For",
            StmtKind::Switch { .. } => "Switch",
            StmtKind::Case { .. } => "Case",
            StmtKind::Goto(_) => "Goto",
            StmtKind::Label(_) => "Label",
            StmtKind::Return(_) => "Return",
            StmtKind::Expr(_) => "ExprStmt",
            StmtKind::Block(_) => "Block",
            StmtKind::Break => "Break",
            StmtKind::Continue => "Continue",
            StmtKind::Null => "Null",
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(
            self,
            StmtKind::If { .. }
                | StmtKind::While { .. }
                | StmtKind::For { .. }
                | StmtKind::Switch { .. }
                | StmtKind::Case { .. }
                | StmtKind::Block(_)
        )
    }
}

impl Stmt {
    /// Statement lists directly nested in this statement, in source order.
    pub fn child_lists(&self) -> Vec<&Vec<Stmt>> {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut v = vec![&then_block.stmts];
                if let Some(e) = else_block {
                    v.push(&e.stmts);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => vec![&body.stmts],
            StmtKind::Switch { cases, .. } => vec![cases],
            StmtKind::Case { body, .. } => vec![body],
            StmtKind::Block(b) => vec![&b.stmts],
            _ => vec![],
        }
    }

    pub fn child_lists_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut v = vec![&mut then_block.stmts];
                if let Some(e) = else_block {
                    v.push(&mut e.stmts);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => vec![&mut body.stmts],
            StmtKind::Switch { cases, .. } => vec![cases],
            StmtKind::Case { body, .. } => vec![body],
            StmtKind::Block(b) => vec![&mut b.stmts],
            _ => vec![],
        }
    }

    /// Pre-order traversal including `self`.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        for list in self.child_lists() {
            for s in list {
                s.walk(f);
            }
        }
    }

    /// Expressions evaluated by this statement's own header (not its
    /// children).
    pub fn header_exprs(&self) -> Vec<&Expr> {
        fn assign_exprs(a: &Assignment) -> Vec<&Expr> {
            let mut v = vec![&a.value];
            if let LValue::Index(_, i) = &a.target {
                v.push(i);
            }
            v
        }
        match &self.kind {
            StmtKind::VarDecl(d) => d.init.iter().collect(),
            StmtKind::Assign(a) => assign_exprs(a),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For {
                init, cond, step, ..
            } => {
                let mut v = Vec::new();
                if let Some(a) = init {
                    v.extend(assign_exprs(a));
                }
                v.extend(cond.iter());
                if let Some(a) = step {
                    v.extend(assign_exprs(a));
                }
                v
            }
            StmtKind::Switch { scrutinee, .. } => vec![scrutinee],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Expr(e) => vec![e],
            _ => vec![],
        }
    }
}

impl Block {
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        for s in &self.stmts {
            s.walk(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: Type,
    pub body: Block,
    pub span: Span,
}

impl Function {
    /// Pre-order walk over every statement of the body, Block wrappers
    /// included.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        self.body.walk(f);
    }

    pub fn stmt_ids(&self) -> Vec<StmtId> {
        let mut ids = Vec::new();
        self.walk(&mut |s| ids.push(s.id));
        ids
    }

    pub fn find(&self, id: StmtId) -> Option<&Stmt> {
        let mut hit = None;
        self.walk(&mut |s| {
            if s.id == id && hit.is_none() {
                hit = Some(s);
            }
        });
        hit
    }

    /// Number of counted statements (everything but Block wrappers).
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |s| {
            if !matches!(s.kind, StmtKind::Block(_)) {
                n += 1;
            }
        });
        n
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceUnit {
    pub source_name: String,
    pub globals: Vec<VarDecl>,
    pub functions: Vec<Function>,
    /// Next fresh statement id; ids below this are considered allocated.
    pub next_id: u32,
}

impl SourceUnit {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    /// Statement count used by the size metric.
    pub fn size(&self) -> usize {
        self.functions.iter().map(Function::size).sum()
    }

    /// Every statement id (excluding function body blocks).
    pub fn stmt_ids(&self) -> Vec<StmtId> {
        self.functions.iter().flat_map(|f| f.stmt_ids()).collect()
    }

    /// Ids of counted statements, i.e. without Block wrappers.
    pub fn counted_stmt_ids(&self) -> Vec<StmtId> {
        let mut ids = Vec::new();
        for f in &self.functions {
            f.walk(&mut |s| {
                if !matches!(s.kind, StmtKind::Block(_)) {
                    ids.push(s.id)
                }
            });
        }
        ids
    }

    /// Locate a statement and the function that owns it.
    pub fn find_stmt(&self, id: StmtId) -> Option<(&Function, &Stmt)> {
        self.functions
            .iter()
            .find_map(|f| f.find(id).map(|s| (f, s)))
    }

    pub fn fresh_id(&mut self) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        id
    }
}

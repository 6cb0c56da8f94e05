//! Recursive-descent parser producing an untyped [`SourceUnit`].
//!
//! Bodies of `if`/`while`/`for` are always stored as [`Block`]s; a single
//! unbraced statement is wrapped in a synthesized block so printing and
//! re-parsing yields the same tree.

use super::ast::*;
use super::diag::{Diagnostic, DiagnosticKind, Diagnostics};
use super::lexer::{tokenize, Tok, Token};

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    pub fn new(src: &str, first_id: u32) -> Result<Self, Diagnostics> {
        let toks = tokenize(src).map_err(Diagnostics::single)?;
        Ok(Parser {
            toks,
            pos: 0,
            next_id: first_id,
        })
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    fn fresh(&mut self) -> StmtId {
        let id = StmtId(self.next_id);
        self.next_id += 1;
        id
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn prev_line(&self) -> u32 {
        self.toks[self.pos.saturating_sub(1)].line
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(Diagnostic::new(DiagnosticKind::Syntax, line, col, msg))
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn int_const(&mut self) -> PResult<i64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                let v = if neg { -v } else { v };
                i64::try_from(v).or_else(|_| self.error("integer constant out of range"))
            }
            other => self.error(format!(
                "expected integer constant, found {}",
                other.describe()
            )),
        }
    }

    pub fn parse_unit(&mut self, source_name: &str) -> PResult<SourceUnit> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            let (line, col) = self.here();
            let base = match self.peek() {
                Tok::KwInt => Type::Int,
                Tok::KwVoid => Type::Void,
                other => {
                    return self.error(format!(
                        "expected declaration or function, found {}",
                        other.describe()
                    ))
                }
            };
            self.bump();
            let mut ty = base;
            if *self.peek() == Tok::Star {
                self.bump();
                ty = Type::IntPtr;
            }
            let name = self.ident()?;
            if *self.peek() == Tok::LParen {
                functions.push(self.function_rest(ty, name, line, col)?);
            } else {
                globals.push(self.decl_rest(ty, name)?);
            }
        }
        Ok(SourceUnit {
            source_name: source_name.to_string(),
            globals,
            functions,
            next_id: self.next_id,
        })
    }

    /// Parse exactly one function and nothing else.
    pub fn parse_single_function(&mut self) -> PResult<Function> {
        let (line, col) = self.here();
        let ty = match self.bump() {
            Tok::KwInt => Type::Int,
            Tok::KwVoid => Type::Void,
            other => {
                return Err(Diagnostic::new(
                    DiagnosticKind::Syntax,
                    line,
                    col,
                    format!("expected function definition, found {}", other.describe()),
                ))
            }
        };
        let ty = if *self.peek() == Tok::Star {
            self.bump();
            Type::IntPtr
        } else {
            ty
        };
        let name = self.ident()?;
        if *self.peek() != Tok::LParen {
            return self.error("expected '(' after function name");
        }
        let f = self.function_rest(ty, name, line, col)?;
        if *self.peek() != Tok::Eof {
            return self.error(format!(
                "unexpected {} after function body",
                self.peek().describe()
            ));
        }
        Ok(f)
    }

    fn function_rest(&mut self, ret: Type, name: String, line: u32, col: u32) -> PResult<Function> {
        self.expect(Tok::LParen, "'('")?;
        let mut params = Vec::new();
        if *self.peek() == Tok::KwVoid && *self.peek_at(1) == Tok::RParen {
            self.bump();
        }
        if *self.peek() != Tok::RParen {
            loop {
                self.expect(Tok::KwInt, "parameter type 'int'")?;
                let ty = if *self.peek() == Tok::Star {
                    self.bump();
                    Type::IntPtr
                } else {
                    Type::Int
                };
                let pname = self.ident()?;
                params.push(Param { name: pname, ty });
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        if *self.peek() != Tok::LBrace {
            return self.error("expected '{' to open function body");
        }
        let body = self.block()?;
        let end = body.span.end_line;
        Ok(Function {
            name,
            params,
            return_type: ret,
            body,
            span: Span::new(line, col, end),
        })
    }

    /// After `int [*] name`: optional `[N]`, optional `= expr`, then `;`.
    fn decl_rest(&mut self, mut ty: Type, name: String) -> PResult<VarDecl> {
        if *self.peek() == Tok::LBracket {
            if ty != Type::Int {
                return self.error("arrays must have element type int");
            }
            self.bump();
            let n = match self.bump() {
                Tok::Int(n) => n,
                other => {
                    return self.error(format!(
                        "expected array length, found {}",
                        other.describe()
                    ))
                }
            };
            if n < 1 || n > u32::MAX as i128 {
                return self.error("array length must be at least 1");
            }
            ty = Type::IntArray(n as u32);
            self.expect(Tok::RBracket, "']'")?;
        } else if ty == Type::Void {
            return self.error("variables cannot have type void");
        }
        let init = if *self.peek() == Tok::Assign {
            self.bump();
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi, "';'")?;
        Ok(VarDecl { name, ty, init })
    }

    fn block(&mut self) -> PResult<Block> {
        let (line, col) = self.here();
        let id = self.fresh();
        self.expect(Tok::LBrace, "'{'")?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("unexpected end of input, expected '}'");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block {
            id,
            span: Span::new(line, col, self.prev_line()),
            stmts,
        })
    }

    /// A body position: a braced block, or one statement wrapped in a block.
    fn body(&mut self) -> PResult<Block> {
        if *self.peek() == Tok::LBrace {
            self.block()
        } else {
            let (line, col) = self.here();
            let id = self.fresh();
            let s = self.stmt()?;
            let end = s.span.end_line;
            Ok(Block {
                id,
                span: Span::new(line, col, end),
                stmts: vec![s],
            })
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if *self.peek() == Tok::LBrace {
            let b = self.block()?;
            return Ok(Stmt {
                id: b.id,
                span: b.span,
                kind: StmtKind::Block(b),
            });
        }
        let (line, col) = self.here();
        let id = self.fresh();
        let kind = match self.peek().clone() {
            Tok::KwInt => {
                self.bump();
                let ty = if *self.peek() == Tok::Star {
                    self.bump();
                    Type::IntPtr
                } else {
                    Type::Int
                };
                let name = self.ident()?;
                StmtKind::VarDecl(self.decl_rest(ty, name)?)
            }
            Tok::KwVoid => return self.error("variables cannot have type void"),
            Tok::KwIf => {
                self.bump();
                self.expect(Tok::LParen, "'('")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                let then_block = self.body()?;
                let else_block = if *self.peek() == Tok::KwElse {
                    self.bump();
                    Some(self.body()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                }
            }
            Tok::KwWhile => {
                self.bump();
                self.expect(Tok::LParen, "'('")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                let body = self.body()?;
                StmtKind::While { cond, body }
            }
            Tok::KwFor => {
                self.bump();
                self.expect(Tok::LParen, "'('")?;
                let init = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.assignment()?)
                };
                self.expect(Tok::Semi, "';'")?;
                let cond = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "';'")?;
                let step = if *self.peek() == Tok::RParen {
                    None
                } else {
                    Some(self.assignment()?)
                };
                self.expect(Tok::RParen, "')'")?;
                let body = self.body()?;
                StmtKind::For {
                    init,
                    cond,
                    step,
                    body,
                }
            }
            Tok::KwSwitch => {
                self.bump();
                self.expect(Tok::LParen, "'('")?;
                let scrutinee = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                self.expect(Tok::LBrace, "'{'")?;
                let mut cases = Vec::new();
                loop {
                    match self.peek() {
                        Tok::RBrace => {
                            self.bump();
                            break;
                        }
                        Tok::KwCase | Tok::KwDefault => cases.push(self.case()?),
                        other => {
                            return self.error(format!(
                                "expected 'case' or 'default', found {}",
                                other.describe()
                            ))
                        }
                    }
                }
                StmtKind::Switch { scrutinee, cases }
            }
            Tok::KwCase | Tok::KwDefault => {
                return self.error("case label outside of switch");
            }
            Tok::KwGoto => {
                self.bump();
                let l = self.ident()?;
                self.expect(Tok::Semi, "';'")?;
                StmtKind::Goto(l)
            }
            Tok::KwReturn => {
                self.bump();
                let e = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "';'")?;
                StmtKind::Return(e)
            }
            Tok::KwBreak => {
                self.bump();
                self.expect(Tok::Semi, "';'")?;
                StmtKind::Break
            }
            Tok::KwContinue => {
                self.bump();
                self.expect(Tok::Semi, "';'")?;
                StmtKind::Continue
            }
            Tok::Semi => {
                self.bump();
                StmtKind::Null
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::Colon => {
                self.bump();
                self.bump();
                StmtKind::Label(name)
            }
            _ => {
                let lhs = self.expr()?;
                if *self.peek() == Tok::Assign {
                    self.bump();
                    let target = self.to_lvalue(lhs)?;
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "';'")?;
                    StmtKind::Assign(Assignment { target, value })
                } else {
                    self.expect(Tok::Semi, "';'")?;
                    StmtKind::Expr(lhs)
                }
            }
        };
        Ok(Stmt {
            id,
            span: Span::new(line, col, self.prev_line()),
            kind,
        })
    }

    fn case(&mut self) -> PResult<Stmt> {
        let (line, col) = self.here();
        let id = self.fresh();
        let value = if self.bump() == Tok::KwCase {
            Some(self.int_const()?)
        } else {
            None
        };
        self.expect(Tok::Colon, "':'")?;
        let mut body = Vec::new();
        while !matches!(
            self.peek(),
            Tok::KwCase | Tok::KwDefault | Tok::RBrace | Tok::Eof
        ) {
            body.push(self.stmt()?);
        }
        Ok(Stmt {
            id,
            span: Span::new(line, col, self.prev_line()),
            kind: StmtKind::Case { value, body },
        })
    }

    fn assignment(&mut self) -> PResult<Assignment> {
        let lhs = self.expr()?;
        self.expect(Tok::Assign, "'='")?;
        let target = self.to_lvalue(lhs)?;
        let value = self.expr()?;
        Ok(Assignment { target, value })
    }

    fn to_lvalue(&self, e: Expr) -> PResult<LValue> {
        match e {
            Expr::Var(n) => Ok(LValue::Var(n)),
            Expr::Index(n, i) => Ok(LValue::Index(n, i)),
            Expr::Deref(n) => Ok(LValue::Deref(n)),
            _ => {
                let t = &self.toks[self.pos.saturating_sub(1)];
                Err(Diagnostic::new(
                    DiagnosticKind::Syntax,
                    t.line,
                    t.col,
                    "left-hand side of assignment is not assignable",
                ))
            }
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                if let Tok::Int(v) = *self.peek() {
                    self.bump();
                    return i64::try_from(-v)
                        .map(Expr::Int)
                        .or_else(|_| self.error("integer constant out of range"));
                }
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Bang => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            Tok::Star => {
                self.bump();
                let n = self.ident()?;
                Ok(Expr::Deref(n))
            }
            Tok::Amp => {
                self.bump();
                let n = self.ident()?;
                self.expect(Tok::LBracket, "'[' (only array elements can be addressed)")?;
                let i = self.expr()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(Expr::AddrOf(n, Box::new(i)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                i64::try_from(v)
                    .map(Expr::Int)
                    .or_else(|_| self.error("integer constant out of range"))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::LParen => {
                        self.bump();
                        let mut args = Vec::new();
                        if *self.peek() != Tok::RParen {
                            loop {
                                args.push(self.expr()?);
                                if *self.peek() == Tok::Comma {
                                    self.bump();
                                } else {
                                    break;
                                }
                            }
                        }
                        self.expect(Tok::RParen, "')'")?;
                        Ok(Expr::Call(name, args))
                    }
                    Tok::LBracket => {
                        self.bump();
                        let i = self.expr()?;
                        self.expect(Tok::RBracket, "']'")?;
                        Ok(Expr::Index(name, Box::new(i)))
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            other => self.error(format!("expected expression, found {}", other.describe())),
        }
    }
}

/// Parse without type checking. Duplicate function names are still rejected.
pub fn parse_untyped(src: &str, source_name: &str) -> Result<SourceUnit, Diagnostics> {
    let mut p = Parser::new(src, 0)?;
    let unit = p.parse_unit(source_name).map_err(Diagnostics::single)?;
    let mut seen = std::collections::HashSet::new();
    let mut dups = Vec::new();
    for f in &unit.functions {
        if !seen.insert(f.name.as_str()) {
            dups.push(Diagnostic::new(
                DiagnosticKind::DuplicateFunction,
                f.span.start_line,
                f.span.start_col,
                format!("function '{}' is defined more than once", f.name),
            ));
        }
    }
    if dups.is_empty() {
        Ok(unit)
    } else {
        Err(Diagnostics(dups))
    }
}

/// Parse a standalone function definition. Ids start at `first_id`.
pub fn parse_function(src: &str, first_id: u32) -> Result<(Function, u32), Diagnostics> {
    let mut p = Parser::new(src, first_id)?;
    let f = p.parse_single_function().map_err(Diagnostics::single)?;
    Ok((f, p.next_id()))
}

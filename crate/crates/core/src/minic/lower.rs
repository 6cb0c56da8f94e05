//! Lowering from the AST to [`IrModule`].

use std::collections::HashMap;

use thiserror::Error;

use super::ast::*;
use super::ir::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("unsupported construct in '{function}': {what}")]
    Unsupported { function: String, what: String },
}

type Label = usize;

struct FnLowerer<'a> {
    func_index: &'a HashMap<String, u32>,
    returns: &'a HashMap<u32, bool>,
    globals: &'a HashMap<String, (u32, SlotKind)>,
    strings: &'a mut Vec<String>,
    fname: String,
    slots: Vec<SlotKind>,
    slot_names: Vec<String>,
    scopes: Vec<HashMap<String, (VarRef, SlotKind)>>,
    instrs: Vec<Instr>,
    owners: Vec<Option<StmtId>>,
    next_reg: Reg,
    labels: Vec<Option<usize>>,
    named_labels: HashMap<String, Label>,
    /// (break target, continue target) for each enclosing breakable.
    loops: Vec<(Label, Option<Label>)>,
    owner: Option<StmtId>,
}

impl<'a> FnLowerer<'a> {
    fn unsupported<T>(&self, what: impl Into<String>) -> Result<T, LowerError> {
        Err(LowerError::Unsupported {
            function: self.fname.clone(),
            what: what.into(),
        })
    }

    fn reg(&mut self) -> Reg {
        let r = self.next_reg;
        self.next_reg += 1;
        r
    }

    fn emit(&mut self, i: Instr) {
        self.instrs.push(i);
        self.owners.push(self.owner);
    }

    fn label(&mut self) -> Label {
        self.labels.push(None);
        self.labels.len() - 1
    }

    fn place(&mut self, l: Label) {
        self.labels[l] = Some(self.instrs.len());
    }

    fn jump(&mut self, l: Label) {
        self.emit(Instr::Jump { target: l });
    }

    fn branch(&mut self, cond: Reg, t: Label, f: Label) {
        self.emit(Instr::Branch {
            cond,
            if_true: t,
            if_false: f,
        });
    }

    fn lookup(&self, name: &str) -> Result<(VarRef, SlotKind), LowerError> {
        for s in self.scopes.iter().rev() {
            if let Some(v) = s.get(name) {
                return Ok(*v);
            }
        }
        match self.globals.get(name) {
            Some((i, k)) => Ok((VarRef::Global(*i), *k)),
            None => self.unsupported(format!("unresolved name '{name}'")),
        }
    }

    fn new_slot(&mut self, name: &str, ty: Type) -> Result<VarRef, LowerError> {
        let kind = match ty {
            Type::Int => SlotKind::Int,
            Type::IntPtr => SlotKind::Ptr,
            Type::IntArray(n) => SlotKind::Array(n),
            Type::Void => return self.unsupported("void variable"),
        };
        let idx = self.slots.len() as u32;
        self.slots.push(kind);
        self.slot_names.push(name.to_string());
        let v = VarRef::Local(idx);
        self.scopes
            .last_mut()
            .expect("scope")
            .insert(name.to_string(), (v, kind));
        Ok(v)
    }

    fn expr(&mut self, e: &Expr) -> Result<Reg, LowerError> {
        match e {
            Expr::Int(v) => {
                let dst = self.reg();
                self.emit(Instr::LoadConst { dst, value: *v });
                Ok(dst)
            }
            Expr::Str(_) => self.unsupported("string literal outside prints()"),
            Expr::Var(n) => {
                let (var, _) = self.lookup(n)?;
                let dst = self.reg();
                self.emit(Instr::LoadVar { dst, var });
                Ok(dst)
            }
            Expr::Index(n, i) => {
                let (array, _) = self.lookup(n)?;
                let index = self.expr(i)?;
                let dst = self.reg();
                self.emit(Instr::LoadIndex { dst, array, index });
                Ok(dst)
            }
            Expr::AddrOf(n, i) => {
                let (array, _) = self.lookup(n)?;
                let index = self.expr(i)?;
                let dst = self.reg();
                self.emit(Instr::AddrIndex { dst, array, index });
                Ok(dst)
            }
            Expr::Deref(n) => {
                let (ptr, _) = self.lookup(n)?;
                let dst = self.reg();
                self.emit(Instr::LoadDeref { dst, ptr });
                Ok(dst)
            }
            Expr::Unary(UnOp::Neg, inner) => {
                let zero = self.reg();
                self.emit(Instr::LoadConst { dst: zero, value: 0 });
                let rhs = self.expr(inner)?;
                let dst = self.reg();
                self.emit(Instr::Arith {
                    op: ArithOp::Sub,
                    dst,
                    lhs: zero,
                    rhs,
                });
                Ok(dst)
            }
            Expr::Unary(UnOp::Not, inner) => {
                let lhs = self.expr(inner)?;
                let zero = self.reg();
                self.emit(Instr::LoadConst { dst: zero, value: 0 });
                let dst = self.reg();
                self.emit(Instr::Compare {
                    op: CmpOp::Eq,
                    dst,
                    lhs,
                    rhs: zero,
                });
                Ok(dst)
            }
            Expr::Binary(BinOp::And | BinOp::Or, ..) => {
                let (t, f, end) = (self.label(), self.label(), self.label());
                self.cond(e, t, f)?;
                let dst = self.reg();
                self.place(t);
                self.emit(Instr::LoadConst { dst, value: 1 });
                self.jump(end);
                self.place(f);
                self.emit(Instr::LoadConst { dst, value: 0 });
                self.place(end);
                Ok(dst)
            }
            Expr::Binary(op, l, r) => {
                let lhs = self.expr(l)?;
                let rhs = self.expr(r)?;
                let dst = self.reg();
                let ins = match op {
                    BinOp::Add => Instr::Arith { op: ArithOp::Add, dst, lhs, rhs },
                    BinOp::Sub => Instr::Arith { op: ArithOp::Sub, dst, lhs, rhs },
                    BinOp::Mul => Instr::Arith { op: ArithOp::Mul, dst, lhs, rhs },
                    BinOp::Div => Instr::Arith { op: ArithOp::Div, dst, lhs, rhs },
                    BinOp::Rem => Instr::Arith { op: ArithOp::Rem, dst, lhs, rhs },
                    BinOp::Eq => Instr::Compare { op: CmpOp::Eq, dst, lhs, rhs },
                    BinOp::Ne => Instr::Compare { op: CmpOp::Ne, dst, lhs, rhs },
                    BinOp::Lt => Instr::Compare { op: CmpOp::Lt, dst, lhs, rhs },
                    BinOp::Le => Instr::Compare { op: CmpOp::Le, dst, lhs, rhs },
                    BinOp::Gt => Instr::Compare { op: CmpOp::Gt, dst, lhs, rhs },
                    BinOp::Ge => Instr::Compare { op: CmpOp::Ge, dst, lhs, rhs },
                    BinOp::And | BinOp::Or => unreachable!(),
                };
                self.emit(ins);
                Ok(dst)
            }
            Expr::Call(name, args) => match self.call(name, args)? {
                Some(r) => Ok(r),
                None => self.unsupported(format!("void call '{name}' used as a value")),
            },
        }
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Result<Option<Reg>, LowerError> {
        let arg_reg = |s: &mut Self, i: usize| -> Result<Reg, LowerError> {
            match args.get(i) {
                Some(a) => s.expr(a),
                None => s.unsupported(format!("missing argument to {name}()")),
            }
        };
        match name {
            "argc" => {
                let dst = self.reg();
                self.emit(Instr::ArgvRead {
                    dst,
                    query: ArgvQuery::Count,
                });
                Ok(Some(dst))
            }
            "arglen" => {
                let i = arg_reg(self, 0)?;
                let dst = self.reg();
                self.emit(Instr::ArgvRead {
                    dst,
                    query: ArgvQuery::Len(i),
                });
                Ok(Some(dst))
            }
            "arg" => {
                let i = arg_reg(self, 0)?;
                let j = arg_reg(self, 1)?;
                let dst = self.reg();
                self.emit(Instr::ArgvRead {
                    dst,
                    query: ArgvQuery::Byte(i, j),
                });
                Ok(Some(dst))
            }
            "getc" => {
                let dst = self.reg();
                self.emit(Instr::ReadByte { dst });
                Ok(Some(dst))
            }
            "print" | "putc" | "putarg" => {
                let r = arg_reg(self, 0)?;
                let arg = match name {
                    "print" => PrintArg::Int(r),
                    "putc" => PrintArg::Char(r),
                    _ => PrintArg::Arg(r),
                };
                self.emit(Instr::Print { arg });
                Ok(None)
            }
            "prints" => {
                let Some(Expr::Str(s)) = args.first() else {
                    return self.unsupported("prints() without a string literal");
                };
                let idx = match self.strings.iter().position(|x| x == s) {
                    Some(i) => i,
                    None => {
                        self.strings.push(s.clone());
                        self.strings.len() - 1
                    }
                } as u32;
                self.emit(Instr::Print {
                    arg: PrintArg::Str(idx),
                });
                Ok(None)
            }
            "exit" => {
                let src = arg_reg(self, 0)?;
                self.emit(Instr::Exit { src });
                Ok(None)
            }
            _ => {
                let Some(&func) = self.func_index.get(name) else {
                    return self.unsupported(format!("call to unknown function '{name}'"));
                };
                let mut regs = Vec::with_capacity(args.len());
                for a in args {
                    regs.push(self.expr(a)?);
                }
                let dst = if self.returns[&func] {
                    Some(self.reg())
                } else {
                    None
                };
                self.emit(Instr::Call {
                    dst,
                    func,
                    args: regs,
                });
                Ok(dst)
            }
        }
    }

    /// Jumping code for a condition.
    fn cond(&mut self, e: &Expr, t: Label, f: Label) -> Result<(), LowerError> {
        match e {
            Expr::Binary(BinOp::And, l, r) => {
                let mid = self.label();
                self.cond(l, mid, f)?;
                self.place(mid);
                self.cond(r, t, f)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let mid = self.label();
                self.cond(l, t, mid)?;
                self.place(mid);
                self.cond(r, t, f)
            }
            Expr::Unary(UnOp::Not, inner) => self.cond(inner, f, t),
            _ => {
                let r = self.expr(e)?;
                self.branch(r, t, f);
                Ok(())
            }
        }
    }

    fn assignment(&mut self, a: &Assignment) -> Result<(), LowerError> {
        match &a.target {
            LValue::Var(n) => {
                let (var, _) = self.lookup(n)?;
                let src = self.expr(&a.value)?;
                self.emit(Instr::StoreVar { var, src });
            }
            LValue::Index(n, i) => {
                let (array, _) = self.lookup(n)?;
                let index = self.expr(i)?;
                let src = self.expr(&a.value)?;
                self.emit(Instr::StoreIndex { array, index, src });
            }
            LValue::Deref(n) => {
                let (ptr, _) = self.lookup(n)?;
                let src = self.expr(&a.value)?;
                self.emit(Instr::StoreDeref { ptr, src });
            }
        }
        Ok(())
    }

    fn list(&mut self, stmts: &[Stmt]) -> Result<(), LowerError> {
        self.scopes.push(HashMap::new());
        for s in stmts {
            if let StmtKind::Label(name) = &s.kind {
                let l = self.label();
                self.named_labels.insert(name.clone(), l);
            }
        }
        for s in stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), LowerError> {
        self.owner = Some(s.id);
        match &s.kind {
            StmtKind::VarDecl(d) => {
                // The initializer is evaluated before the new name is bound.
                let src = match &d.init {
                    Some(init) => Some(self.expr(init)?),
                    None => None,
                };
                let var = self.new_slot(&d.name, d.ty)?;
                self.emit(Instr::DeclVar { var });
                if let Some(src) = src {
                    self.emit(Instr::StoreVar { var, src });
                }
            }
            StmtKind::Assign(a) => self.assignment(a)?,
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let (t, f, end) = (self.label(), self.label(), self.label());
                self.cond(cond, t, f)?;
                self.place(t);
                self.list(&then_block.stmts)?;
                if let Some(eb) = else_block {
                    self.owner = Some(s.id);
                    self.jump(end);
                    self.place(f);
                    self.list(&eb.stmts)?;
                } else {
                    self.place(f);
                }
                self.place(end);
            }
            StmtKind::While { cond, body } => {
                let (head, t, end) = (self.label(), self.label(), self.label());
                self.place(head);
                self.cond(cond, t, end)?;
                self.place(t);
                self.loops.push((end, Some(head)));
                self.list(&body.stmts)?;
                self.loops.pop();
                self.owner = Some(s.id);
                self.jump(head);
                self.place(end);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(a) = init {
                    self.assignment(a)?;
                }
                let (head, t, stepl, end) = (self.label(), self.label(), self.label(), self.label());
                self.place(head);
                match cond {
                    Some(c) => self.cond(c, t, end)?,
                    None => self.jump(t),
                }
                self.place(t);
                self.loops.push((end, Some(stepl)));
                self.list(&body.stmts)?;
                self.loops.pop();
                self.owner = Some(s.id);
                self.place(stepl);
                if let Some(a) = step {
                    self.assignment(a)?;
                }
                self.jump(head);
                self.place(end);
            }
            StmtKind::Switch { scrutinee, cases } => {
                let scr = self.expr(scrutinee)?;
                let end = self.label();
                let entries: Vec<Label> = cases.iter().map(|_| self.label()).collect();
                let mut default = None;
                for (c, entry) in cases.iter().zip(&entries) {
                    match &c.kind {
                        StmtKind::Case { value: Some(v), .. } => {
                            self.owner = Some(c.id);
                            let k = self.reg();
                            self.emit(Instr::LoadConst { dst: k, value: *v });
                            let hit = self.reg();
                            self.emit(Instr::Compare {
                                op: CmpOp::Eq,
                                dst: hit,
                                lhs: scr,
                                rhs: k,
                            });
                            let next = self.label();
                            self.branch(hit, *entry, next);
                            self.place(next);
                        }
                        StmtKind::Case { value: None, .. } => default = Some(*entry),
                        _ => return self.unsupported("non-case statement in switch"),
                    }
                }
                self.owner = Some(s.id);
                self.jump(default.unwrap_or(end));
                self.loops.push((end, None));
                for (c, entry) in cases.iter().zip(&entries) {
                    let StmtKind::Case { body, .. } = &c.kind else {
                        unreachable!()
                    };
                    self.owner = Some(c.id);
                    self.place(*entry);
                    let next = self.label();
                    self.jump(next);
                    self.place(next);
                    self.list(body)?;
                }
                // `continue` inside a switch targets the enclosing loop.
                self.loops.pop();
                self.place(end);
            }
            StmtKind::Case { .. } => return self.unsupported("case outside switch"),
            StmtKind::Goto(name) => {
                let Some(&l) = self.named_labels.get(name) else {
                    return self.unsupported(format!("goto to unknown label '{name}'"));
                };
                self.jump(l);
            }
            StmtKind::Label(name) => {
                let l = self.named_labels[name];
                self.place(l);
                let next = self.label();
                self.jump(next);
                self.place(next);
            }
            StmtKind::Return(e) => {
                let src = match e {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                self.emit(Instr::Return { src });
            }
            StmtKind::Expr(e) => match e {
                Expr::Call(name, args) => {
                    self.call(name, args)?;
                }
                _ => return self.unsupported("expression statement without a call"),
            },
            StmtKind::Block(b) => self.list(&b.stmts)?,
            StmtKind::Break => {
                let Some(&(brk, _)) = self.loops.last() else {
                    return self.unsupported("break outside loop or switch");
                };
                self.jump(brk);
            }
            StmtKind::Continue => {
                let Some(cont) = self.loops.iter().rev().find_map(|(_, c)| *c) else {
                    return self.unsupported("continue outside loop");
                };
                self.jump(cont);
            }
            StmtKind::Null => {
                let next = self.label();
                self.jump(next);
                self.place(next);
            }
        }
        Ok(())
    }
}

/// Lower a type-checked unit.
pub fn lower(unit: &SourceUnit) -> Result<IrModule, LowerError> {
    let func_index: HashMap<String, u32> = unit
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.clone(), i as u32))
        .collect();
    let returns: HashMap<u32, bool> = unit
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (i as u32, f.return_type != Type::Void))
        .collect();
    let mut globals = Vec::new();
    let mut gmap = HashMap::new();
    for (i, g) in unit.globals.iter().enumerate() {
        let kind = match g.ty {
            Type::Int => SlotKind::Int,
            Type::IntArray(n) => SlotKind::Array(n),
            _ => {
                return Err(LowerError::Unsupported {
                    function: String::new(),
                    what: format!("global '{}' of type {}", g.name, g.ty),
                })
            }
        };
        let init = match &g.init {
            Some(Expr::Int(v)) => *v,
            None => 0,
            Some(_) => {
                return Err(LowerError::Unsupported {
                    function: String::new(),
                    what: format!("non-constant initializer of '{}'", g.name),
                })
            }
        };
        gmap.insert(g.name.clone(), (i as u32, kind));
        globals.push(IrGlobal {
            name: g.name.clone(),
            kind,
            init,
        });
    }
    let mut strings = Vec::new();
    let mut functions = Vec::new();
    for f in &unit.functions {
        let mut lw = FnLowerer {
            func_index: &func_index,
            returns: &returns,
            globals: &gmap,
            strings: &mut strings,
            fname: f.name.clone(),
            slots: Vec::new(),
            slot_names: Vec::new(),
            scopes: vec![HashMap::new()],
            instrs: Vec::new(),
            owners: Vec::new(),
            next_reg: 0,
            labels: Vec::new(),
            named_labels: HashMap::new(),
            loops: Vec::new(),
            owner: None,
        };
        for p in &f.params {
            lw.new_slot(&p.name, p.ty)?;
        }
        lw.list(&f.body.stmts)?;
        lw.owner = None;
        lw.emit(Instr::Return { src: None });
        let labels = lw.labels;
        let resolve = |l: usize| labels[l].expect("label placed");
        let instrs = lw
            .instrs
            .into_iter()
            .map(|ins| match ins {
                Instr::Jump { target } => Instr::Jump {
                    target: resolve(target),
                },
                Instr::Branch {
                    cond,
                    if_true,
                    if_false,
                } => Instr::Branch {
                    cond,
                    if_true: resolve(if_true),
                    if_false: resolve(if_false),
                },
                other => other,
            })
            .collect();
        functions.push(IrFunction {
            name: f.name.clone(),
            num_params: f.params.len() as u32,
            slots: lw.slots,
            slot_names: lw.slot_names,
            num_regs: lw.next_reg,
            returns_value: f.return_type != Type::Void,
            instrs,
            owners: lw.owners,
        });
    }
    let main = func_index.get("main").copied().ok_or(LowerError::Unsupported {
        function: String::new(),
        what: "missing main".into(),
    })?;
    Ok(IrModule {
        globals,
        functions,
        strings,
        main,
    })
}

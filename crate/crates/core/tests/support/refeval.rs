//! Reference evaluator: walks the syntax tree directly and records which
//! statements it reaches. Shares no code with lowering or the interpreter.

use std::collections::{BTreeSet, HashMap};

use leader::minic::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefStop {
    Normal,
    Uninit,
    Null,
    Bounds,
    DivZero,
    OutOfFuel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOutcome {
    pub stdout: Vec<u8>,
    pub exit: i32,
    pub stop: RefStop,
    pub visited: BTreeSet<StmtId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Storage {
    Global(usize),
    Param(u64, usize),
    Local(u64, StmtId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum V {
    Int(i64),
    Ptr(Storage, usize),
    Poison,
}

#[derive(Debug, Clone, Copy)]
enum Binding {
    Global(usize, Type),
    Param(usize, Type),
    Local(StmtId, Type),
}

type Env = HashMap<String, Binding>;

enum Flow {
    Next,
    Break,
    Continue,
    Return(Option<V>),
    Goto(String),
}

enum Halt {
    Exit(i64),
    Stop(RefStop),
}

type R<T> = Result<T, Halt>;

fn fail<T>(s: RefStop) -> R<T> {
    Err(Halt::Stop(s))
}

/// Static environment visible at each statement, from a lexical pre-pass.
fn scope_pass(f: &Function, globals: &Env) -> HashMap<StmtId, Env> {
    fn list(stmts: &[Stmt], env: &Env, out: &mut HashMap<StmtId, Env>) {
        let mut env = env.clone();
        for s in stmts {
            out.insert(s.id, env.clone());
            match &s.kind {
                StmtKind::VarDecl(d) => {
                    env.insert(d.name.clone(), Binding::Local(s.id, d.ty));
                }
                _ => {
                    for l in s.child_lists() {
                        list(l, &env, out);
                    }
                }
            }
        }
    }
    let mut env = globals.clone();
    for (i, p) in f.params.iter().enumerate() {
        env.insert(p.name.clone(), Binding::Param(i, p.ty));
    }
    let mut out = HashMap::new();
    list(&f.body.stmts, &env, &mut out);
    out
}

struct Frame {
    serial: u64,
    func: usize,
    params: Vec<V>,
    scalars: HashMap<StmtId, V>,
}

struct Eval<'a> {
    unit: &'a SourceUnit,
    envs: Vec<HashMap<StmtId, Env>>,
    argv: &'a [String],
    stdin: &'a [u8],
    pos: usize,
    out: Vec<u8>,
    globals: Vec<V>,
    arrays: HashMap<Storage, Vec<i64>>,
    frames: Vec<Frame>,
    serial: u64,
    fuel: u64,
    visited: BTreeSet<StmtId>,
}

impl<'a> Eval<'a> {
    fn burn(&mut self) -> R<()> {
        if self.fuel == 0 {
            return fail(RefStop::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn frame(&self) -> &Frame {
        self.frames.last().unwrap()
    }

    fn binding(&self, at: StmtId, name: &str) -> Binding {
        let f = self.frame().func;
        self.envs[f][&at][name]
    }

    fn storage(&self, b: Binding) -> Storage {
        match b {
            Binding::Global(i, _) => Storage::Global(i),
            Binding::Param(i, _) => Storage::Param(self.frame().serial, i),
            Binding::Local(id, _) => Storage::Local(self.frame().serial, id),
        }
    }

    fn array_len(&self, b: Binding) -> usize {
        match b {
            Binding::Global(_, Type::IntArray(n)) | Binding::Local(_, Type::IntArray(n)) => {
                n as usize
            }
            _ => 0,
        }
    }

    fn read_scalar(&self, b: Binding) -> V {
        match b {
            Binding::Global(i, _) => self.globals[i],
            Binding::Param(i, _) => self.frame().params[i],
            Binding::Local(id, _) => *self.frame().scalars.get(&id).unwrap_or(&V::Poison),
        }
    }

    fn write_scalar(&mut self, b: Binding, v: V) -> R<()> {
        match b {
            Binding::Global(i, _) => {
                if v == V::Poison {
                    return fail(RefStop::Uninit);
                }
                self.globals[i] = v;
            }
            Binding::Param(i, _) => self.frames.last_mut().unwrap().params[i] = v,
            Binding::Local(id, _) => {
                self.frames.last_mut().unwrap().scalars.insert(id, v);
            }
        }
        Ok(())
    }

    fn cell(&mut self, b: Binding, idx: V) -> R<(Storage, usize)> {
        let i = match idx {
            V::Int(i) => i,
            V::Poison => return fail(RefStop::Uninit),
            V::Ptr(..) => return fail(RefStop::Bounds),
        };
        let len = self.array_len(b);
        if i < 0 || i as usize >= len {
            return fail(RefStop::Bounds);
        }
        Ok((self.storage(b), i as usize))
    }

    fn array_mut(&mut self, s: Storage, len: usize) -> &mut Vec<i64> {
        self.arrays.entry(s).or_insert_with(|| vec![0; len])
    }

    fn through(&self, b: Binding) -> R<(Storage, usize)> {
        match self.read_scalar(b) {
            V::Poison => fail(RefStop::Uninit),
            V::Int(_) => fail(RefStop::Null),
            V::Ptr(s, i) => Ok((s, i)),
        }
    }

    fn storage_len(&self, s: Storage) -> usize {
        match s {
            Storage::Global(i) => match self.unit.globals[i].ty {
                Type::IntArray(n) => n as usize,
                _ => 0,
            },
            Storage::Local(_, id) => match self.unit.find_stmt(id).map(|(_, s)| &s.kind) {
                Some(StmtKind::VarDecl(VarDecl {
                    ty: Type::IntArray(n),
                    ..
                })) => *n as usize,
                _ => 0,
            },
            Storage::Param(..) => 0,
        }
    }

    fn as_int(v: V) -> R<i64> {
        match v {
            V::Int(i) => Ok(i),
            V::Poison => fail(RefStop::Uninit),
            V::Ptr(..) => fail(RefStop::Bounds),
        }
    }

    fn truth(v: V) -> R<bool> {
        match v {
            V::Int(i) => Ok(i != 0),
            V::Ptr(..) => Ok(true),
            V::Poison => fail(RefStop::Uninit),
        }
    }

    fn argi(&self, v: V) -> R<usize> {
        let i = Self::as_int(v)?;
        if i < 0 || i as usize >= self.argv.len() {
            return fail(RefStop::Bounds);
        }
        Ok(i as usize)
    }

    fn expr(&mut self, at: StmtId, e: &Expr) -> R<V> {
        self.burn()?;
        Ok(match e {
            Expr::Int(v) => V::Int(*v),
            Expr::Str(_) => unreachable!("checked programs only"),
            Expr::Var(n) => {
                let b = self.binding(at, n);
                self.read_scalar(b)
            }
            Expr::Index(n, i) => {
                let b = self.binding(at, n);
                let iv = self.expr(at, i)?;
                let (s, k) = self.cell(b, iv)?;
                let len = self.array_len(b);
                V::Int(self.array_mut(s, len)[k])
            }
            Expr::AddrOf(n, i) => {
                let b = self.binding(at, n);
                let iv = self.expr(at, i)?;
                let (s, k) = self.cell(b, iv)?;
                V::Ptr(s, k)
            }
            Expr::Deref(n) => {
                let b = self.binding(at, n);
                let (s, k) = self.through(b)?;
                let len = self.storage_len(s);
                V::Int(self.array_mut(s, len)[k])
            }
            Expr::Unary(UnOp::Neg, inner) => match self.expr(at, inner)? {
                V::Int(v) => V::Int(0i64.wrapping_sub(v)),
                V::Poison => V::Poison,
                V::Ptr(..) => return fail(RefStop::Bounds),
            },
            Expr::Unary(UnOp::Not, inner) => match self.expr(at, inner)? {
                V::Int(v) => V::Int((v == 0) as i64),
                V::Ptr(..) => V::Int(0),
                V::Poison => V::Poison,
            },
            Expr::Binary(BinOp::And, l, r) => {
                let lv = self.expr(at, l)?;
                if !Self::truth(lv)? {
                    V::Int(0)
                } else {
                    let rv = self.expr(at, r)?;
                    V::Int(Self::truth(rv)? as i64)
                }
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let lv = self.expr(at, l)?;
                if Self::truth(lv)? {
                    V::Int(1)
                } else {
                    let rv = self.expr(at, r)?;
                    V::Int(Self::truth(rv)? as i64)
                }
            }
            Expr::Binary(op, l, r) => {
                let lv = self.expr(at, l)?;
                let rv = self.expr(at, r)?;
                if lv == V::Poison || rv == V::Poison {
                    return Ok(V::Poison);
                }
                if let (V::Int(a), V::Int(b)) = (lv, rv) {
                    V::Int(match op {
                        BinOp::Add => a.wrapping_add(b),
                        BinOp::Sub => a.wrapping_sub(b),
                        BinOp::Mul => a.wrapping_mul(b),
                        BinOp::Div | BinOp::Rem if b == 0 => return fail(RefStop::DivZero),
                        BinOp::Div => a.wrapping_div(b),
                        BinOp::Rem => a.wrapping_rem(b),
                        BinOp::Eq => (a == b) as i64,
                        BinOp::Ne => (a != b) as i64,
                        BinOp::Lt => (a < b) as i64,
                        BinOp::Le => (a <= b) as i64,
                        BinOp::Gt => (a > b) as i64,
                        BinOp::Ge => (a >= b) as i64,
                        BinOp::And | BinOp::Or => unreachable!(),
                    })
                } else {
                    match op {
                        BinOp::Eq => V::Int((lv == rv) as i64),
                        BinOp::Ne => V::Int((lv != rv) as i64),
                        _ => return fail(RefStop::Bounds),
                    }
                }
            }
            Expr::Call(name, args) => self.call(at, name, args)?.unwrap_or(V::Poison),
        })
    }

    fn call(&mut self, at: StmtId, name: &str, args: &[Expr]) -> R<Option<V>> {
        match name {
            "argc" => return Ok(Some(V::Int(self.argv.len() as i64))),
            "arglen" => {
                let v = self.expr(at, &args[0])?;
                let i = self.argi(v)?;
                return Ok(Some(V::Int(self.argv[i].len() as i64)));
            }
            "arg" => {
                let a = self.expr(at, &args[0])?;
                let b = self.expr(at, &args[1])?;
                let i = self.argi(a)?;
                let j = Self::as_int(b)?;
                if j < 0 {
                    return fail(RefStop::Bounds);
                }
                let byte = self.argv[i].as_bytes().get(j as usize).map(|c| *c as i64);
                return Ok(Some(V::Int(byte.unwrap_or(-1))));
            }
            "getc" => {
                let v = match self.stdin.get(self.pos) {
                    Some(c) => {
                        self.pos += 1;
                        *c as i64
                    }
                    None => -1,
                };
                return Ok(Some(V::Int(v)));
            }
            "print" => {
                let v = self.expr(at, &args[0])?;
                let n = Self::as_int(v)?;
                self.out.extend(format!("{n}").bytes());
                return Ok(None);
            }
            "putc" => {
                let v = self.expr(at, &args[0])?;
                let n = Self::as_int(v)?;
                self.out.push(n as u8);
                return Ok(None);
            }
            "prints" => {
                if let Expr::Str(s) = &args[0] {
                    self.out.extend(s.bytes());
                }
                return Ok(None);
            }
            "putarg" => {
                let v = self.expr(at, &args[0])?;
                let i = self.argi(v)?;
                let bytes = self.argv[i].clone();
                self.out.extend(bytes.bytes());
                return Ok(None);
            }
            "exit" => {
                let v = self.expr(at, &args[0])?;
                return Err(Halt::Exit(Self::as_int(v)?));
            }
            _ => {}
        }
        let mut vals = Vec::new();
        for a in args {
            vals.push(self.expr(at, a)?);
        }
        if vals.contains(&V::Poison) {
            return fail(RefStop::Uninit);
        }
        if self.frames.len() >= 4096 {
            return fail(RefStop::OutOfFuel);
        }
        let fi = self.unit.function_index(name).unwrap();
        self.invoke(fi, vals)
    }

    fn invoke(&mut self, fi: usize, params: Vec<V>) -> R<Option<V>> {
        self.serial += 1;
        self.frames.push(Frame {
            serial: self.serial,
            func: fi,
            params,
            scalars: HashMap::new(),
        });
        let unit = self.unit;
        let f = &unit.functions[fi];
        let flow = self.list(&f.body.stmts, 0);
        let serial = self.frame().serial;
        self.arrays.retain(|k, _| match k {
            Storage::Local(s, _) | Storage::Param(s, _) => *s != serial,
            Storage::Global(_) => true,
        });
        self.frames.pop();
        match flow? {
            Flow::Return(v) => {
                if v == Some(V::Poison) {
                    return fail(RefStop::Uninit);
                }
                if v.is_none() && f.return_type != Type::Void && f.name != "main" {
                    return fail(RefStop::Uninit);
                }
                Ok(v)
            }
            _ => {
                if f.return_type != Type::Void && f.name != "main" {
                    return fail(RefStop::Uninit);
                }
                Ok(None)
            }
        }
    }

    fn assign(&mut self, at: StmtId, a: &Assignment) -> R<()> {
        match &a.target {
            LValue::Var(n) => {
                let b = self.binding(at, n);
                let v = self.expr(at, &a.value)?;
                self.write_scalar(b, v)
            }
            LValue::Index(n, i) => {
                let b = self.binding(at, n);
                let iv = self.expr(at, i)?;
                let v = self.expr(at, &a.value)?;
                let (s, k) = self.cell(b, iv)?;
                let x = Self::as_int(v)?;
                let len = self.array_len(b);
                self.array_mut(s, len)[k] = x;
                Ok(())
            }
            LValue::Deref(n) => {
                let b = self.binding(at, n);
                let v = self.expr(at, &a.value)?;
                let (s, k) = self.through(b)?;
                let x = Self::as_int(v)?;
                let len = self.storage_len(s);
                self.array_mut(s, len)[k] = x;
                Ok(())
            }
        }
    }

    fn visit(&mut self, s: &Stmt) -> R<()> {
        self.burn()?;
        if !matches!(s.kind, StmtKind::Block(_)) {
            self.visited.insert(s.id);
        }
        Ok(())
    }

    /// Run `stmts` from `start`, resolving gotos that target this list.
    fn list(&mut self, stmts: &[Stmt], start: usize) -> R<Flow> {
        let mut i = start;
        while i < stmts.len() {
            match self.stmt(&stmts[i])? {
                Flow::Next => i += 1,
                Flow::Goto(l) => {
                    let hit = stmts
                        .iter()
                        .position(|s| matches!(&s.kind, StmtKind::Label(x) if *x == l));
                    match hit {
                        Some(k) => i = k,
                        None => return Ok(Flow::Goto(l)),
                    }
                }
                other => return Ok(other),
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&mut self, s: &Stmt) -> R<Flow> {
        self.visit(s)?;
        let at = s.id;
        match &s.kind {
            StmtKind::VarDecl(d) => {
                let serial = self.frame().serial;
                match d.ty {
                    Type::IntArray(n) => {
                        self.arrays
                            .insert(Storage::Local(serial, s.id), vec![0; n as usize]);
                    }
                    _ => {
                        self.frames.last_mut().unwrap().scalars.insert(s.id, V::Poison);
                        if let Some(init) = &d.init {
                            // The initializer sees the enclosing scope.
                            let v = self.expr(at, init)?;
                            self.frames.last_mut().unwrap().scalars.insert(s.id, v);
                        }
                    }
                }
                Ok(Flow::Next)
            }
            StmtKind::Assign(a) => {
                self.assign(at, a)?;
                Ok(Flow::Next)
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let c = self.expr(at, cond)?;
                if Self::truth(c)? {
                    self.list(&then_block.stmts, 0)
                } else if let Some(e) = else_block {
                    self.list(&e.stmts, 0)
                } else {
                    Ok(Flow::Next)
                }
            }
            StmtKind::While { cond, body } => loop {
                self.burn()?;
                let c = self.expr(at, cond)?;
                if !Self::truth(c)? {
                    return Ok(Flow::Next);
                }
                match self.list(&body.stmts, 0)? {
                    Flow::Next | Flow::Continue => {}
                    Flow::Break => return Ok(Flow::Next),
                    other => return Ok(other),
                }
            },
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(a) = init {
                    self.assign(at, a)?;
                }
                loop {
                    self.burn()?;
                    if let Some(c) = cond {
                        let v = self.expr(at, c)?;
                        if !Self::truth(v)? {
                            return Ok(Flow::Next);
                        }
                    }
                    match self.list(&body.stmts, 0)? {
                        Flow::Next | Flow::Continue => {}
                        Flow::Break => return Ok(Flow::Next),
                        other => return Ok(other),
                    }
                    if let Some(a) = step {
                        self.assign(at, a)?;
                    }
                }
            }
            StmtKind::Switch { scrutinee, cases } => {
                let v = self.expr(at, scrutinee)?;
                let mut chosen = None;
                for (k, c) in cases.iter().enumerate() {
                    if let StmtKind::Case { value: Some(x), .. } = &c.kind {
                        self.visit(c)?;
                        let hit = match v {
                            V::Poison => return fail(RefStop::Uninit),
                            V::Int(n) => n == *x,
                            V::Ptr(..) => false,
                        };
                        if hit {
                            chosen = Some(k);
                            break;
                        }
                    }
                }
                let chosen = chosen.or_else(|| {
                    cases
                        .iter()
                        .position(|c| matches!(c.kind, StmtKind::Case { value: None, .. }))
                });
                let Some(start) = chosen else {
                    return Ok(Flow::Next);
                };
                for c in &cases[start..] {
                    self.visit(c)?;
                    let StmtKind::Case { body, .. } = &c.kind else {
                        unreachable!()
                    };
                    match self.list(body, 0)? {
                        Flow::Next => {}
                        Flow::Break => return Ok(Flow::Next),
                        other => return Ok(other),
                    }
                }
                Ok(Flow::Next)
            }
            StmtKind::Case { .. } => unreachable!("handled by switch"),
            StmtKind::Goto(l) => Ok(Flow::Goto(l.clone())),
            StmtKind::Label(_) | StmtKind::Null => Ok(Flow::Next),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.expr(at, e)?),
                    None => None,
                };
                if v == Some(V::Poison) {
                    return fail(RefStop::Uninit);
                }
                Ok(Flow::Return(v))
            }
            StmtKind::Expr(Expr::Call(n, args)) => {
                self.call(at, n, args)?;
                Ok(Flow::Next)
            }
            StmtKind::Expr(_) => unreachable!(),
            StmtKind::Block(b) => self.list(&b.stmts, 0),
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
        }
    }
}

pub fn ref_execute(unit: &SourceUnit, argv: &[String], stdin: &[u8], fuel: u64) -> RefOutcome {
    let mut genv = Env::new();
    for (i, g) in unit.globals.iter().enumerate() {
        genv.insert(g.name.clone(), Binding::Global(i, g.ty));
    }
    let envs = unit.functions.iter().map(|f| scope_pass(f, &genv)).collect();
    let globals = unit
        .globals
        .iter()
        .map(|g| match g.init {
            Some(Expr::Int(v)) => V::Int(v),
            _ => V::Int(0),
        })
        .collect();
    let mut ev = Eval {
        unit,
        envs,
        argv,
        stdin,
        pos: 0,
        out: Vec::new(),
        globals,
        arrays: HashMap::new(),
        frames: Vec::new(),
        serial: 0,
        fuel,
        visited: BTreeSet::new(),
    };
    let main = unit.function_index("main").unwrap();
    let (exit, stop) = match ev.invoke(main, Vec::new()) {
        Ok(Some(V::Int(v))) | Err(Halt::Exit(v)) => ((v & 0xff) as i32, RefStop::Normal),
        Ok(_) => (0, RefStop::Normal),
        Err(Halt::Stop(s)) => (
            match s {
                RefStop::Uninit => 134,
                RefStop::Null | RefStop::Bounds => 139,
                RefStop::DivZero => 136,
                RefStop::OutOfFuel => 124,
                RefStop::Normal => 0,
            },
            s,
        ),
    };
    RefOutcome {
        stdout: ev.out,
        exit,
        stop,
        visited: ev.visited,
    }
}

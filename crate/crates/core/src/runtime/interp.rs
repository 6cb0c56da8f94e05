//! Deterministic interpreter for [`IrModule`].

use serde::{Deserialize, Serialize};

use crate::minic::ir::*;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
/// Calls nested deeper than this end the run like an exhausted budget.
pub const MAX_CALL_DEPTH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrapKind {
    NullDeref,
    OutOfBounds,
    UninitRead,
    DivByZero,
}

impl TrapKind {
    /// Exit status a native process would report for this fault.
    pub fn exit_code(self) -> i32 {
        match self {
            TrapKind::NullDeref | TrapKind::OutOfBounds => 139,
            TrapKind::UninitRead => 134,
            TrapKind::DivByZero => 136,
        }
    }
}

pub const STEP_LIMIT_EXIT: i32 = 124;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Normal,
    Trap(TrapKind),
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecResult {
    pub stdout: Vec<u8>,
    pub exit_code: i32,
    pub termination: Termination,
}

impl ExecResult {
    pub fn is_normal(&self) -> bool {
        self.termination == Termination::Normal
    }

    /// Same observable behaviour: stdout, exit status and termination.
    pub fn same_behavior(&self, other: &ExecResult) -> bool {
        self == other
    }
}

/// Per-function flags of which instructions ran.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub executed: Vec<Vec<bool>>,
    /// Function index and pc of the faulting instruction for trapped runs.
    /// A value-returning function that falls off its end is blamed on its
    /// implicit return.
    pub trap_site: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Int(i64),
    Ptr { alloc: u32, off: u32 },
    Poison,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Scalar(Value),
    Array(u32),
}

struct Frame {
    func: usize,
    pc: usize,
    regs: Vec<Value>,
    slots: Vec<Slot>,
    heap_base: usize,
    ret_dst: Option<Reg>,
}

enum Stop {
    Exit(i64),
    Trap(TrapKind),
    StepLimit,
}

struct Machine<'a> {
    ir: &'a IrModule,
    argv: &'a [String],
    stdin: &'a [u8],
    stdin_pos: usize,
    out: Vec<u8>,
    heap: Vec<Vec<i64>>,
    globals: Vec<Slot>,
    frames: Vec<Frame>,
}

fn truthy(v: Value) -> Result<bool, Stop> {
    match v {
        Value::Int(n) => Ok(n != 0),
        Value::Ptr { .. } => Ok(true),
        Value::Poison => Err(Stop::Trap(TrapKind::UninitRead)),
    }
}

fn defined(v: Value) -> Result<Value, Stop> {
    match v {
        Value::Poison => Err(Stop::Trap(TrapKind::UninitRead)),
        v => Ok(v),
    }
}

fn int(v: Value) -> Result<i64, Stop> {
    match v {
        Value::Int(n) => Ok(n),
        Value::Poison => Err(Stop::Trap(TrapKind::UninitRead)),
        // Not reachable for type-checked programs.
        Value::Ptr { .. } => Err(Stop::Trap(TrapKind::OutOfBounds)),
    }
}

impl<'a> Machine<'a> {
    fn new_frame(&mut self, func: usize, args: Vec<Value>, ret_dst: Option<Reg>) -> Frame {
        let f = &self.ir.functions[func];
        let heap_base = self.heap.len();
        let mut slots = Vec::with_capacity(f.slots.len());
        for (i, k) in f.slots.iter().enumerate() {
            let slot = match k {
                SlotKind::Array(n) => {
                    self.heap.push(vec![0; *n as usize]);
                    Slot::Array((self.heap.len() - 1) as u32)
                }
                _ => Slot::Scalar(args.get(i).copied().unwrap_or(Value::Poison)),
            };
            slots.push(slot);
        }
        Frame {
            func,
            pc: 0,
            regs: vec![Value::Poison; f.num_regs as usize],
            slots,
            heap_base,
            ret_dst,
        }
    }

    fn slot(&self, v: VarRef) -> Slot {
        match v {
            VarRef::Local(i) => self.frames.last().expect("frame").slots[i as usize],
            VarRef::Global(i) => self.globals[i as usize],
        }
    }

    fn set_scalar(&mut self, v: VarRef, val: Value) -> Result<(), Stop> {
        match v {
            VarRef::Local(i) => {
                self.frames.last_mut().expect("frame").slots[i as usize] = Slot::Scalar(val);
            }
            VarRef::Global(i) => {
                self.globals[i as usize] = Slot::Scalar(defined(val)?);
            }
        }
        Ok(())
    }

    fn element(&self, array: VarRef, index: Value) -> Result<(u32, u32), Stop> {
        let i = int(index)?;
        let Slot::Array(alloc) = self.slot(array) else {
            return Err(Stop::Trap(TrapKind::OutOfBounds));
        };
        let len = self.heap[alloc as usize].len() as i64;
        if i < 0 || i >= len {
            return Err(Stop::Trap(TrapKind::OutOfBounds));
        }
        Ok((alloc, i as u32))
    }

    fn pointee(&self, ptr: VarRef) -> Result<(u32, u32), Stop> {
        let Slot::Scalar(v) = self.slot(ptr) else {
            return Err(Stop::Trap(TrapKind::OutOfBounds));
        };
        match v {
            Value::Poison => Err(Stop::Trap(TrapKind::UninitRead)),
            Value::Int(_) => Err(Stop::Trap(TrapKind::NullDeref)),
            Value::Ptr { alloc, off } => {
                let live = self
                    .heap
                    .get(alloc as usize)
                    .is_some_and(|a| (off as usize) < a.len());
                if live {
                    Ok((alloc, off))
                } else {
                    Err(Stop::Trap(TrapKind::OutOfBounds))
                }
            }
        }
    }

    fn arg_index(&self, v: Value) -> Result<usize, Stop> {
        let i = int(v)?;
        if i < 0 || i as usize >= self.argv.len() {
            return Err(Stop::Trap(TrapKind::OutOfBounds));
        }
        Ok(i as usize)
    }

    fn run(&mut self, budget: u64, mut trace: Option<&mut Trace>) -> Stop {
        let main = self.ir.main as usize;
        let frame = self.new_frame(main, Vec::new(), None);
        self.frames.push(frame);
        let mut steps: u64 = 0;
        loop {
            steps += 1;
            if steps > budget {
                return Stop::StepLimit;
            }
            let site = {
                let fr = self.frames.last().expect("frame");
                (fr.func, fr.pc)
            };
            match self.step(&mut trace) {
                Ok(None) => {}
                Ok(Some(stop)) => return stop,
                Err(stop) => {
                    if let (Stop::Trap(_), Some(t)) = (&stop, trace.as_deref_mut()) {
                        t.trap_site = Some(site);
                    }
                    return stop;
                }
            }
        }
    }

    fn step(&mut self, trace: &mut Option<&mut Trace>) -> Result<Option<Stop>, Stop> {
        let ir = self.ir;
        let (func, pc) = {
            let fr = self.frames.last().expect("frame");
            (fr.func, fr.pc)
        };
        let f = &ir.functions[func];
        if let Some(t) = trace.as_deref_mut() {
            t.executed[func][pc] = true;
        }
        let ins = &f.instrs[pc];
        let mut next = pc + 1;
        macro_rules! reg {
            ($r:expr) => {
                self.frames.last().expect("frame").regs[*$r as usize]
            };
        }
        macro_rules! set {
            ($r:expr, $v:expr) => {{
                let v = $v;
                self.frames.last_mut().expect("frame").regs[*$r as usize] = v;
            }};
        }
        match ins {
            Instr::LoadConst { dst, value } => set!(dst, Value::Int(*value)),
            Instr::LoadVar { dst, var } => {
                let v = match self.slot(*var) {
                    Slot::Scalar(v) => v,
                    Slot::Array(_) => Value::Poison,
                };
                set!(dst, v)
            }
            Instr::StoreVar { var, src } => {
                let v = reg!(src);
                self.set_scalar(*var, v)?;
            }
            Instr::LoadIndex { dst, array, index } => {
                let (a, i) = self.element(*array, reg!(index))?;
                set!(dst, Value::Int(self.heap[a as usize][i as usize]))
            }
            Instr::StoreIndex { array, index, src } => {
                let (a, i) = self.element(*array, reg!(index))?;
                let v = int(reg!(src))?;
                self.heap[a as usize][i as usize] = v;
            }
            Instr::AddrIndex { dst, array, index } => {
                let (alloc, off) = self.element(*array, reg!(index))?;
                set!(dst, Value::Ptr { alloc, off })
            }
            Instr::LoadDeref { dst, ptr } => {
                let (a, i) = self.pointee(*ptr)?;
                set!(dst, Value::Int(self.heap[a as usize][i as usize]))
            }
            Instr::StoreDeref { ptr, src } => {
                let (a, i) = self.pointee(*ptr)?;
                let v = int(reg!(src))?;
                self.heap[a as usize][i as usize] = v;
            }
            Instr::Arith { op, dst, lhs, rhs } => {
                let (l, r) = (reg!(lhs), reg!(rhs));
                let v = if l == Value::Poison || r == Value::Poison {
                    Value::Poison
                } else {
                    let (a, b) = (int(l)?, int(r)?);
                    match op.apply(a, b) {
                        Some(v) => Value::Int(v),
                        None => return Err(Stop::Trap(TrapKind::DivByZero)),
                    }
                };
                set!(dst, v)
            }
            Instr::Compare { op, dst, lhs, rhs } => {
                let (l, r) = (reg!(lhs), reg!(rhs));
                let v = match (l, r) {
                    (Value::Poison, _) | (_, Value::Poison) => Value::Poison,
                    (Value::Int(a), Value::Int(b)) => Value::Int(match op {
                        CmpOp::Eq => a == b,
                        CmpOp::Ne => a != b,
                        CmpOp::Lt => a < b,
                        CmpOp::Le => a <= b,
                        CmpOp::Gt => a > b,
                        CmpOp::Ge => a >= b,
                    } as i64),
                    (a, b) => {
                        let eq = a == b;
                        match op {
                            CmpOp::Eq => Value::Int(eq as i64),
                            CmpOp::Ne => Value::Int(!eq as i64),
                            _ => return Err(Stop::Trap(TrapKind::OutOfBounds)),
                        }
                    }
                };
                set!(dst, v)
            }
            Instr::Jump { target } => next = *target,
            Instr::Branch {
                cond,
                if_true,
                if_false,
            } => {
                next = if truthy(reg!(cond))? {
                    *if_true
                } else {
                    *if_false
                };
            }
            Instr::Call { dst, func: callee, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(defined(reg!(a))?);
                }
                if self.frames.len() >= MAX_CALL_DEPTH {
                    return Ok(Some(Stop::StepLimit));
                }
                self.frames.last_mut().expect("frame").pc = next;
                let frame = self.new_frame(*callee as usize, vals, *dst);
                self.frames.push(frame);
                return Ok(None);
            }
            Instr::Return { src } => {
                let val = match src {
                    Some(r) => Some(defined(reg!(r))?),
                    None => None,
                };
                let done = self.frames.pop().expect("frame");
                self.heap.truncate(done.heap_base);
                if self.frames.is_empty() {
                    return match val {
                        Some(v) => Ok(Some(Stop::Exit(int(v)?))),
                        None => Ok(Some(Stop::Exit(0))),
                    };
                }
                if let Some(d) = done.ret_dst {
                    // A value-returning function that fell off its end.
                    let v = val.ok_or(Stop::Trap(TrapKind::UninitRead))?;
                    self.frames.last_mut().expect("frame").regs[d as usize] = v;
                }
                return Ok(None);
            }
            Instr::Print { arg } => match arg {
                PrintArg::Int(r) => {
                    let v = int(reg!(r))?;
                    self.out.extend_from_slice(v.to_string().as_bytes());
                }
                PrintArg::Char(r) => {
                    let v = int(reg!(r))?;
                    self.out.push((v & 0xff) as u8);
                }
                PrintArg::Str(s) => self.out.extend_from_slice(ir.strings[*s as usize].as_bytes()),
                PrintArg::Arg(r) => {
                    let i = self.arg_index(reg!(r))?;
                    self.out.extend_from_slice(self.argv[i].as_bytes());
                }
            },
            Instr::ArgvRead { dst, query } => {
                let v = match query {
                    ArgvQuery::Count => self.argv.len() as i64,
                    ArgvQuery::Len(r) => {
                        let i = self.arg_index(reg!(r))?;
                        self.argv[i].len() as i64
                    }
                    ArgvQuery::Byte(a, b) => {
                        let i = self.arg_index(reg!(a))?;
                        let j = int(reg!(b))?;
                        if j < 0 {
                            return Err(Stop::Trap(TrapKind::OutOfBounds));
                        }
                        match self.argv[i].as_bytes().get(j as usize) {
                            Some(c) => *c as i64,
                            None => -1,
                        }
                    }
                };
                set!(dst, Value::Int(v))
            }
            Instr::ReadByte { dst } => {
                let v = match self.stdin.get(self.stdin_pos) {
                    Some(c) => {
                        self.stdin_pos += 1;
                        *c as i64
                    }
                    None => -1,
                };
                set!(dst, Value::Int(v))
            }
            Instr::Exit { src } => {
                let v = int(reg!(src))?;
                return Ok(Some(Stop::Exit(v)));
            }
            Instr::DeclVar { var } => match self.slot(*var) {
                Slot::Array(a) => self.heap[a as usize].iter_mut().for_each(|x| *x = 0),
                Slot::Scalar(_) => self.set_scalar(*var, Value::Poison)?,
            },
        }
        self.frames.last_mut().expect("frame").pc = next;
        Ok(None)
    }
}

fn run_machine(
    ir: &IrModule,
    argv: &[String],
    stdin: &[u8],
    step_budget: u64,
    trace: Option<&mut Trace>,
) -> ExecResult {
    let mut heap = Vec::new();
    let globals = ir
        .globals
        .iter()
        .map(|g| match g.kind {
            SlotKind::Array(n) => {
                heap.push(vec![0; n as usize]);
                Slot::Array((heap.len() - 1) as u32)
            }
            _ => Slot::Scalar(Value::Int(g.init)),
        })
        .collect();
    let mut m = Machine {
        ir,
        argv,
        stdin,
        stdin_pos: 0,
        out: Vec::new(),
        heap,
        globals,
        frames: Vec::new(),
    };
    let stop = m.run(step_budget.max(1), trace);
    let (exit_code, termination) = match stop {
        Stop::Exit(v) => ((v & 0xff) as i32, Termination::Normal),
        Stop::Trap(k) => (k.exit_code(), Termination::Trap(k)),
        Stop::StepLimit => (STEP_LIMIT_EXIT, Termination::StepLimit),
    };
    ExecResult {
        stdout: m.out,
        exit_code,
        termination,
    }
}

/// Run `ir` on one input.
pub fn execute(ir: &IrModule, argv: &[String], stdin: &[u8], step_budget: u64) -> ExecResult {
    run_machine(ir, argv, stdin, step_budget, None)
}

/// Run `ir` and also report which instructions executed.
pub fn execute_traced(
    ir: &IrModule,
    argv: &[String],
    stdin: &[u8],
    step_budget: u64,
) -> (ExecResult, Trace) {
    let mut trace = Trace {
        executed: ir
            .functions
            .iter()
            .map(|f| vec![false; f.instrs.len()])
            .collect(),
        trap_site: None,
    };
    let r = run_machine(ir, argv, stdin, step_budget, Some(&mut trace));
    (r, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::{lower, parse};

    fn run(src: &str, argv: &[&str], stdin: &[u8]) -> ExecResult {
        let u = parse(src, "t").unwrap();
        let ir = lower(&u).unwrap();
        let argv: Vec<String> = argv.iter().map(|s| s.to_string()).collect();
        execute(&ir, &argv, stdin, 10_000)
    }

    #[test]
    fn echo_first_argument() {
        let r = run("int main() { putarg(1); return 0; }", &["p", "hi"], b"");
        assert_eq!(r.stdout, b"hi");
        assert_eq!(r.termination, Termination::Normal);
        assert_eq!(r.exit_code, 0);
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let r = run("int main() { while (1) { } return 0; }", &["p"], b"");
        assert_eq!(r.termination, Termination::StepLimit);
        assert_eq!(r.exit_code, STEP_LIMIT_EXIT);
    }

    #[test]
    fn returning_uninitialized_traps() {
        let r = run("int f() { int t; return t; } int main() { return f(); }", &["p"], b"");
        assert_eq!(r.termination, Termination::Trap(TrapKind::UninitRead));
        assert_eq!(r.exit_code, 134);
    }

    #[test]
    fn poison_flows_through_arithmetic_until_observed() {
        let r = run(
            "int main() { int t; int u = t + 1; prints(\"x\"); print(u); return 0; }",
            &["p"],
            b"",
        );
        assert_eq!(r.stdout, b"x");
        assert_eq!(r.termination, Termination::Trap(TrapKind::UninitRead));
    }

    #[test]
    fn null_deref_and_bounds() {
        let r = run("int main() { int *p = 0; return *p; }", &["p"], b"");
        assert_eq!(r.termination, Termination::Trap(TrapKind::NullDeref));
        let r = run("int main() { int a[3]; int i = 3; a[i] = 1; return 0; }", &["p"], b"");
        assert_eq!(r.termination, Termination::Trap(TrapKind::OutOfBounds));
    }

    #[test]
    fn pointers_alias_array_elements() {
        let r = run(
            "void set(int *p, int v) { *p = v; }
             int main() { int a[2]; set(&a[1], 7); print(a[1]); print(a[0]); return 0; }",
            &["p"],
            b"",
        );
        assert_eq!(r.stdout, b"70");
    }

    #[test]
    fn stdin_and_exit_code() {
        let r = run(
            "int main() { int c = getc(); while (c != -1) { putc(c + 1); c = getc(); } exit(258); return 1; }",
            &["p"],
            b"ab",
        );
        assert_eq!(r.stdout, b"bc");
        assert_eq!(r.exit_code, 2);
    }

    #[test]
    fn division_by_zero_traps() {
        let r = run("int main() { int z = 0; return 4 / z; }", &["p"], b"");
        assert_eq!(r.termination, Termination::Trap(TrapKind::DivByZero));
    }

    #[test]
    fn argument_bytes_past_end_read_as_minus_one() {
        let r = run("int main() { print(arg(1, 5)); print(arglen(1)); return argc(); }", &["p", "ab"], b"");
        assert_eq!(r.stdout, b"-12");
        assert_eq!(r.exit_code, 2);
    }

    #[test]
    fn deep_recursion_ends_as_step_limit() {
        let r = run("int f(int n) { return f(n + 1); } int main() { return f(0); }", &["p"], b"");
        assert_eq!(r.termination, Termination::StepLimit);
    }
}

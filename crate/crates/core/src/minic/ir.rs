//! Linear register-machine IR.
//!
//! Registers are per-function and statically single-assignment except for
//! the result register of a value-context `&&`/`||`, which is written on
//! both arms. Each instruction records the statement that owns it so
//! execution can be attributed back to source statements.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ast::StmtId;

pub type Reg = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarRef {
    Local(u32),
    Global(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl ArithOp {
    /// Wrapping two's-complement result; `None` on division by zero.
    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        Some(match self {
            ArithOp::Add => a.wrapping_add(b),
            ArithOp::Sub => a.wrapping_sub(b),
            ArithOp::Mul => a.wrapping_mul(b),
            ArithOp::Div | ArithOp::Rem if b == 0 => return None,
            ArithOp::Div => a.wrapping_div(b),
            ArithOp::Rem => a.wrapping_rem(b),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrintArg {
    /// Decimal rendering of an int.
    Int(Reg),
    /// Low byte of an int.
    Char(Reg),
    /// Entry of the module string table.
    Str(u32),
    /// The bytes of `argv[reg]`.
    Arg(Reg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArgvQuery {
    Count,
    Len(Reg),
    Byte(Reg, Reg),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instr {
    LoadConst { dst: Reg, value: i64 },
    LoadVar { dst: Reg, var: VarRef },
    StoreVar { var: VarRef, src: Reg },
    LoadIndex { dst: Reg, array: VarRef, index: Reg },
    StoreIndex { array: VarRef, index: Reg, src: Reg },
    AddrIndex { dst: Reg, array: VarRef, index: Reg },
    LoadDeref { dst: Reg, ptr: VarRef },
    StoreDeref { ptr: VarRef, src: Reg },
    Arith { op: ArithOp, dst: Reg, lhs: Reg, rhs: Reg },
    Compare { op: CmpOp, dst: Reg, lhs: Reg, rhs: Reg },
    Jump { target: usize },
    Branch { cond: Reg, if_true: usize, if_false: usize },
    Call { dst: Option<Reg>, func: u32, args: Vec<Reg> },
    Return { src: Option<Reg> },
    Print { arg: PrintArg },
    ArgvRead { dst: Reg, query: ArgvQuery },
    ReadByte { dst: Reg },
    Exit { src: Reg },
    /// Entry into a declaration's scope: scalars become uninitialized,
    /// arrays are zero-filled.
    DeclVar { var: VarRef },
}

impl Instr {
    pub fn opcode(&self) -> u8 {
        match self {
            Instr::LoadConst { .. } => 0x01,
            Instr::LoadVar { .. } => 0x02,
            Instr::StoreVar { .. } => 0x03,
            Instr::LoadIndex { .. } => 0x04,
            Instr::StoreIndex { .. } => 0x05,
            Instr::AddrIndex { .. } => 0x06,
            Instr::LoadDeref { .. } => 0x07,
            Instr::StoreDeref { .. } => 0x08,
            Instr::Arith { .. } => 0x09,
            Instr::Compare { .. } => 0x0a,
            Instr::Jump { .. } => 0x0b,
            Instr::Branch { .. } => 0x0c,
            Instr::Call { .. } => 0x0d,
            Instr::Return { .. } => 0x0e,
            Instr::Print { .. } => 0x0f,
            Instr::ArgvRead { .. } => 0x10,
            Instr::ReadByte { .. } => 0x11,
            Instr::Exit { .. } => 0x12,
            Instr::DeclVar { .. } => 0x13,
        }
    }

    /// Register written by this instruction, if any.
    pub fn def(&self) -> Option<Reg> {
        match self {
            Instr::LoadConst { dst, .. }
            | Instr::LoadVar { dst, .. }
            | Instr::LoadIndex { dst, .. }
            | Instr::AddrIndex { dst, .. }
            | Instr::LoadDeref { dst, .. }
            | Instr::Arith { dst, .. }
            | Instr::Compare { dst, .. }
            | Instr::ArgvRead { dst, .. }
            | Instr::ReadByte { dst } => Some(*dst),
            Instr::Call { dst, .. } => *dst,
            _ => None,
        }
    }

    /// Control-flow successors of the instruction at `pc`.
    pub fn successors(&self, pc: usize) -> Vec<usize> {
        match self {
            Instr::Jump { target } => vec![*target],
            Instr::Branch {
                if_true, if_false, ..
            } => {
                if if_true == if_false {
                    vec![*if_true]
                } else {
                    vec![*if_true, *if_false]
                }
            }
            Instr::Return { .. } | Instr::Exit { .. } => vec![],
            _ => vec![pc + 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotKind {
    Int,
    Ptr,
    Array(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrGlobal {
    pub name: String,
    pub kind: SlotKind,
    pub init: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrFunction {
    pub name: String,
    /// The first `num_params` slots hold the arguments.
    pub num_params: u32,
    pub slots: Vec<SlotKind>,
    /// Source-level name of each slot, for diagnostics.
    pub slot_names: Vec<String>,
    pub num_regs: u32,
    pub returns_value: bool,
    pub instrs: Vec<Instr>,
    /// Owning statement of each instruction; `None` for the implicit
    /// trailing return.
    pub owners: Vec<Option<StmtId>>,
}

impl IrFunction {
    /// Instruction indices attributed to each statement.
    pub fn stmt_instrs(&self) -> BTreeMap<StmtId, Vec<usize>> {
        let mut map: BTreeMap<StmtId, Vec<usize>> = BTreeMap::new();
        for (i, o) in self.owners.iter().enumerate() {
            if let Some(id) = o {
                map.entry(*id).or_default().push(i);
            }
        }
        map
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrModule {
    pub globals: Vec<IrGlobal>,
    pub functions: Vec<IrFunction>,
    pub strings: Vec<String>,
    pub main: u32,
}

fn varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn svarint(out: &mut Vec<u8>, v: i64) {
    varint(out, ((v << 1) ^ (v >> 63)) as u64);
}

fn var(out: &mut Vec<u8>, v: VarRef) {
    match v {
        VarRef::Local(i) => varint(out, (i as u64) << 1),
        VarRef::Global(i) => varint(out, ((i as u64) << 1) | 1),
    }
}

fn regs(out: &mut Vec<u8>, rs: &[Reg]) {
    for r in rs {
        varint(out, *r as u64);
    }
}

/// Append the binary encoding of one instruction: opcode byte followed by
/// LEB128 operands. Owner tags are not part of the encoding.
pub fn encode_instr(out: &mut Vec<u8>, ins: &Instr) {
    out.push(ins.opcode());
    match ins {
        Instr::LoadConst { dst, value } => {
            regs(out, &[*dst]);
            svarint(out, *value);
        }
        Instr::LoadVar { dst, var: v } | Instr::LoadDeref { dst, ptr: v } => {
            regs(out, &[*dst]);
            var(out, *v);
        }
        Instr::StoreVar { var: v, src } | Instr::StoreDeref { ptr: v, src } => {
            var(out, *v);
            regs(out, &[*src]);
        }
        Instr::LoadIndex { dst, array, index } | Instr::AddrIndex { dst, array, index } => {
            regs(out, &[*dst]);
            var(out, *array);
            regs(out, &[*index]);
        }
        Instr::StoreIndex { array, index, src } => {
            var(out, *array);
            regs(out, &[*index, *src]);
        }
        Instr::Arith { op, dst, lhs, rhs } => {
            out.push(*op as u8);
            regs(out, &[*dst, *lhs, *rhs]);
        }
        Instr::Compare { op, dst, lhs, rhs } => {
            out.push(*op as u8);
            regs(out, &[*dst, *lhs, *rhs]);
        }
        Instr::Jump { target } => varint(out, *target as u64),
        Instr::Branch {
            cond,
            if_true,
            if_false,
        } => {
            regs(out, &[*cond]);
            varint(out, *if_true as u64);
            varint(out, *if_false as u64);
        }
        Instr::Call { dst, func, args } => {
            match dst {
                Some(d) => varint(out, *d as u64 + 1),
                None => varint(out, 0),
            }
            varint(out, *func as u64);
            varint(out, args.len() as u64);
            regs(out, args);
        }
        Instr::Return { src } => match src {
            Some(r) => varint(out, *r as u64 + 1),
            None => varint(out, 0),
        },
        Instr::Print { arg } => match arg {
            PrintArg::Int(r) => {
                out.push(0);
                regs(out, &[*r]);
            }
            PrintArg::Char(r) => {
                out.push(1);
                regs(out, &[*r]);
            }
            PrintArg::Str(s) => {
                out.push(2);
                varint(out, *s as u64);
            }
            PrintArg::Arg(r) => {
                out.push(3);
                regs(out, &[*r]);
            }
        },
        Instr::ArgvRead { dst, query } => {
            regs(out, &[*dst]);
            match query {
                ArgvQuery::Count => out.push(0),
                ArgvQuery::Len(r) => {
                    out.push(1);
                    regs(out, &[*r]);
                }
                ArgvQuery::Byte(a, b) => {
                    out.push(2);
                    regs(out, &[*a, *b]);
                }
            }
        }
        Instr::ReadByte { dst } => regs(out, &[*dst]),
        Instr::Exit { src } => regs(out, &[*src]),
        Instr::DeclVar { var: v } => var(out, *v),
    }
}

fn slot(out: &mut Vec<u8>, k: SlotKind) {
    match k {
        SlotKind::Int => out.push(0),
        SlotKind::Ptr => out.push(1),
        SlotKind::Array(n) => {
            out.push(2);
            varint(out, n as u64);
        }
    }
}

impl IrFunction {
    pub fn encode(&self, out: &mut Vec<u8>) {
        varint(out, self.num_params as u64);
        varint(out, self.slots.len() as u64);
        for k in &self.slots {
            slot(out, *k);
        }
        varint(out, self.num_regs as u64);
        out.push(self.returns_value as u8);
        varint(out, self.instrs.len() as u64);
        for ins in &self.instrs {
            encode_instr(out, ins);
        }
    }

    /// Distinct encoded instruction windows of length 1 to 3 that end in a
    /// `Return`.
    pub fn return_gadgets(&self) -> usize {
        let enc: Vec<Vec<u8>> = self
            .instrs
            .iter()
            .map(|i| {
                let mut b = Vec::new();
                encode_instr(&mut b, i);
                b
            })
            .collect();
        let mut seen: HashSet<Vec<u8>> = HashSet::new();
        for (i, ins) in self.instrs.iter().enumerate() {
            if !matches!(ins, Instr::Return { .. }) {
                continue;
            }
            for len in 1..=3usize {
                if len > i + 1 {
                    break;
                }
                seen.insert(enc[i + 1 - len..=i].concat());
            }
        }
        seen.len()
    }
}

impl IrModule {
    /// Canonical binary serialization.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        varint(&mut out, self.globals.len() as u64);
        for g in &self.globals {
            slot(&mut out, g.kind);
            svarint(&mut out, g.init);
        }
        varint(&mut out, self.strings.len() as u64);
        for s in &self.strings {
            varint(&mut out, s.len() as u64);
            out.extend_from_slice(s.as_bytes());
        }
        varint(&mut out, self.main as u64);
        varint(&mut out, self.functions.len() as u64);
        for f in &self.functions {
            f.encode(&mut out);
        }
        out
    }

    /// Memory-footprint proxy: size of the canonical encoding in bytes.
    pub fn mem_size(&self) -> usize {
        self.encode().len()
    }

    /// Attack-surface proxy: return-terminated gadgets summed over functions.
    pub fn gadget_count(&self) -> usize {
        self.functions.iter().map(IrFunction::return_gadgets).sum()
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }
}

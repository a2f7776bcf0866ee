//! Tautology compiler: formula → IR → RV32I machine code.
//!
//! Every sequence starts by setting `Result_Reg` to 1, computes the
//! formula's truth value into a temp, ANDs it into `Result_Reg` and sets
//! `Finish_Reg` last.

mod emit;
mod ir;
pub mod isa;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::Formula;

pub use emit::emit_rv32i;
pub use ir::{lower_to_ir, Directive, IrOp, IrProgram, Operand, Temp};
pub use isa::{BranchCond, ImmOp, Instr, Reg, RegOp, NOP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("`{0}` is not boolean-valued")]
    NotBoolean(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("`{name}` has {count} free variables; at most {max} fit in input registers")]
    TooManyInputs { name: String, count: usize, max: usize },
    #[error("`{name}` needs more than the {available} temporary registers available")]
    RegisterPressure { name: String, available: usize },
    #[error("`{name}`: branch offset {offset} is out of range")]
    BranchRange { name: String, offset: i64 },
    #[error("`{name}`: immediate {value} does not fit in 12 bits")]
    ImmediateRange { name: String, value: i64 },
}

/// Register roles used by the code generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegPlan {
    /// Input registers, assigned to free variables in name order.
    pub inputs: Vec<Reg>,
    pub temps: Vec<Reg>,
    pub result: Option<Reg>,
    pub finish: Option<Reg>,
}

pub const RESULT_REG: usize = 30;
pub const FINISH_REG: usize = 31;

fn regs(range: std::ops::RangeInclusive<u8>) -> Vec<Reg> {
    range.map(Reg::new).collect()
}

impl RegPlan {
    /// x1–x6 inputs, x7–x29 temporaries, x30 `Result_Reg`, x31 `Finish_Reg`.
    pub fn standard() -> RegPlan {
        RegPlan {
            inputs: regs(1..=6),
            temps: regs(7..=29),
            result: Some(Reg::new(RESULT_REG as u8)),
            finish: Some(Reg::new(FINISH_REG as u8)),
        }
    }

    /// Lower half only and no bookkeeping registers, so the body can be
    /// duplicated sixteen registers up. Temps stop at x13 because the
    /// duplicates of x14 and x15 would be x30 and x31.
    pub fn lower_half() -> RegPlan {
        RegPlan {
            inputs: regs(1..=6),
            temps: regs(7..=13),
            result: None,
            finish: None,
        }
    }
}

/// Where each logical role lives in the register file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterMap {
    pub inputs: Vec<(String, Reg)>,
    pub temps: BTreeMap<u32, Reg>,
    pub result: Option<Reg>,
    pub finish: Option<Reg>,
}

impl RegisterMap {
    pub fn input(&self, name: &str) -> Option<Reg> {
        self.inputs.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

/// Encoded instructions for one tautology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrSequence {
    pub name: String,
    pub words: Vec<u32>,
    pub registers: RegisterMap,
    /// Label → instruction index.
    pub labels: BTreeMap<String, usize>,
}

impl InstrSequence {
    /// Builds a sequence from raw words with no role metadata.
    pub fn from_words(name: &str, words: Vec<u32>) -> InstrSequence {
        InstrSequence {
            name: name.to_string(),
            words,
            registers: RegisterMap {
                inputs: Vec::new(),
                temps: BTreeMap::new(),
                result: None,
                finish: None,
            },
            labels: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn instrs(&self) -> Vec<Instr> {
        self.words.iter().map(|&w| Instr::decode(w)).collect()
    }

    /// Checks that inputs, temps, the bookkeeping registers and x0 are
    /// pairwise disjoint.
    pub fn check_roles(&self) -> Result<(), String> {
        let mut owner: BTreeMap<Reg, String> = BTreeMap::new();
        owner.insert(Reg::ZERO, "x0".into());
        let mut claim = |reg: Reg, role: String| match owner.get(&reg) {
            Some(prev) if *prev != role => Err(format!("{reg} is both {prev} and {role}")),
            _ => {
                owner.insert(reg, role);
                Ok(())
            }
        };
        for (name, r) in &self.registers.inputs {
            claim(*r, format!("input {name}"))?;
        }
        for r in self.registers.temps.values() {
            claim(*r, "temp".into())?;
        }
        if let Some(r) = self.registers.result {
            claim(r, "Result_Reg".into())?;
        }
        if let Some(r) = self.registers.finish {
            claim(r, "Finish_Reg".into())?;
        }
        Ok(())
    }

    /// Assembly listing with a provenance header.
    pub fn assembly(&self, formula: Option<&Formula>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tautology {}", self.name);
        if let Some(f) = formula {
            let _ = writeln!(out, "# formula {f}");
        }
        for (name, r) in &self.registers.inputs {
            let _ = writeln!(out, "# input {name} = {r}");
        }
        if let Some(r) = self.registers.result {
            let _ = writeln!(out, "# Result_Reg = {r}");
        }
        if let Some(r) = self.registers.finish {
            let _ = writeln!(out, "# Finish_Reg = {r}");
        }
        let mut labels: Vec<(usize, &str)> =
            self.labels.iter().map(|(l, &i)| (i, l.as_str())).collect();
        labels.sort();
        let mut next_label = labels.iter().peekable();
        for (i, instr) in self.instrs().iter().enumerate() {
            while let Some((_, l)) = next_label.next_if(|(at, _)| *at == i) {
                let _ = writeln!(out, "{l}:");
            }
            let _ = writeln!(out, "    {instr}");
        }
        for (_, l) in next_label {
            let _ = writeln!(out, "{l}:");
        }
        out
    }

    /// Little-endian image of the words.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_bytes(name: &str, bytes: &[u8]) -> Result<InstrSequence, String> {
        if bytes.len() % 4 != 0 {
            return Err(format!("binary length {} is not a multiple of 4", bytes.len()));
        }
        let words = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(InstrSequence::from_words(name, words))
    }
}

/// A compiled tautology: IR plus machine code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compiled {
    pub ir: IrProgram,
    pub code: InstrSequence,
}

pub fn compile(name: &str, f: &Formula, plan: &RegPlan) -> Result<Compiled, CompileError> {
    let ir = lower_to_ir(name, f)?;
    let code = emit_rv32i(&ir, plan)?;
    Ok(Compiled { ir, code })
}

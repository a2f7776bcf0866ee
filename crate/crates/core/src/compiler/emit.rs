//! Register allocation and RV32I code generation from IR.

use std::collections::BTreeMap;

use super::ir::{Directive, IrOp, IrProgram, Operand, Temp};
use super::isa::{fits_signed, BranchCond, ImmOp, Instr, Reg, RegOp};
use super::{CompileError, InstrSequence, RegPlan, RegisterMap};

/// Assigns registers to temps by scanning live intervals in program order.
///
/// Control flow only jumps forward, so the linear interval from first
/// definition to last use covers every path. A destination is allocated
/// before the operands that die at the same directive are released, so no
/// instruction overwrites one of its own sources.
fn allocate(ir: &IrProgram, plan: &RegPlan) -> Result<BTreeMap<Temp, Reg>, CompileError> {
    let mut last: BTreeMap<Temp, usize> = BTreeMap::new();
    for (i, d) in ir.directives.iter().enumerate() {
        for t in d.def().into_iter().chain(d.uses()) {
            last.insert(t, i);
        }
    }
    let mut free: Vec<Reg> = plan.temps.iter().rev().copied().collect();
    let mut assigned: BTreeMap<Temp, Reg> = BTreeMap::new();
    for (i, d) in ir.directives.iter().enumerate() {
        if let Some(t) = d.def() {
            if !assigned.contains_key(&t) {
                let reg = free.pop().ok_or_else(|| CompileError::RegisterPressure {
                    name: ir.name.clone(),
                    available: plan.temps.len(),
                })?;
                assigned.insert(t, reg);
            }
        }
        let mut dying: Vec<Temp> = d
            .def()
            .into_iter()
            .chain(d.uses())
            .filter(|t| last[t] == i)
            .collect();
        dying.sort();
        dying.dedup();
        for t in dying {
            free.push(assigned[&t]);
        }
        // Keep the lowest-numbered free register on top.
        free.sort_by(|a, b| b.cmp(a));
    }
    Ok(assigned)
}

struct Emitter<'a> {
    ir: &'a IrProgram,
    plan: &'a RegPlan,
    regs: BTreeMap<Temp, Reg>,
    out: Vec<Instr>,
    /// (instruction index, label) pairs awaiting offsets.
    fixups: Vec<(usize, String)>,
    labels: BTreeMap<String, usize>,
}

impl Emitter<'_> {
    fn reg(&self, o: &Operand) -> Result<Reg, CompileError> {
        match o {
            Operand::Temp(t) => Ok(self.regs[t]),
            Operand::Input(i) => Ok(self.plan.inputs[*i]),
            Operand::Const(0) => Ok(Reg::ZERO),
            Operand::Const(c) => Err(CompileError::Unsupported(format!(
                "constant {c} in register position in `{}`",
                self.ir.name
            ))),
        }
    }

    fn imm(&mut self, op: ImmOp, rd: Reg, rs1: Reg, imm: i64) {
        self.out.push(Instr::OpImm {
            op,
            rd,
            rs1,
            imm: imm as i32,
        });
    }

    fn op(&mut self, op: RegOp, rd: Reg, rs1: Reg, rs2: Reg) {
        self.out.push(Instr::Op { op, rd, rs1, rs2 });
    }

    fn compute(&mut self, rd: Reg, op: IrOp, a: &Operand, b: &Operand) -> Result<(), CompileError> {
        if let Operand::Const(c) = *b {
            if c != 0 || matches!(op, IrOp::Seq | IrOp::Sne) {
                return self.compute_imm(rd, op, a, c);
            }
        }
        let ra = self.reg(a)?;
        let rb = self.reg(b)?;
        let simple = match op {
            IrOp::Add => Some(RegOp::Add),
            IrOp::Sub => Some(RegOp::Sub),
            IrOp::Mul => Some(RegOp::Mul),
            IrOp::And => Some(RegOp::And),
            IrOp::Or => Some(RegOp::Or),
            IrOp::Xor => Some(RegOp::Xor),
            IrOp::Slt => Some(RegOp::Slt),
            IrOp::Sltu => Some(RegOp::Sltu),
            IrOp::Seq | IrOp::Sne => None,
        };
        match (simple, op) {
            (Some(r), _) => self.op(r, rd, ra, rb),
            (None, IrOp::Seq) => {
                self.op(RegOp::Sub, rd, ra, rb);
                self.imm(ImmOp::Sltiu, rd, rd, 1);
            }
            (None, _) => {
                self.op(RegOp::Sub, rd, ra, rb);
                self.op(RegOp::Sltu, rd, Reg::ZERO, rd);
            }
        }
        Ok(())
    }

    fn compute_imm(&mut self, rd: Reg, op: IrOp, a: &Operand, c: i64) -> Result<(), CompileError> {
        let ra = self.reg(a)?;
        let (iop, imm) = match op {
            IrOp::Add => (ImmOp::Addi, c),
            IrOp::Sub => (ImmOp::Addi, -c),
            IrOp::And => (ImmOp::Andi, c),
            IrOp::Or => (ImmOp::Ori, c),
            IrOp::Xor => (ImmOp::Xori, c),
            IrOp::Slt => (ImmOp::Slti, c),
            IrOp::Sltu => (ImmOp::Sltiu, c),
            IrOp::Seq if c == 0 => (ImmOp::Sltiu, 1),
            IrOp::Sne if c == 0 => {
                self.op(RegOp::Sltu, rd, Reg::ZERO, ra);
                return Ok(());
            }
            _ => {
                return Err(CompileError::Unsupported(format!(
                    "`{}` with constant operand {c} in `{}`",
                    op.name(),
                    self.ir.name
                )))
            }
        };
        if !fits_signed(imm, 12) {
            return Err(CompileError::ImmediateRange {
                name: self.ir.name.clone(),
                value: imm,
            });
        }
        self.imm(iop, rd, ra, imm);
        Ok(())
    }

    fn load_imm(&mut self, rd: Reg, value: i64) {
        let v = value as i32;
        if fits_signed(v as i64, 12) {
            self.imm(ImmOp::Addi, rd, Reg::ZERO, v as i64);
            return;
        }
        let lo = (v << 20) >> 20;
        let hi = (v.wrapping_sub(lo) as u32) >> 12;
        self.out.push(Instr::Lui { rd, imm: hi });
        if lo != 0 {
            self.imm(ImmOp::Addi, rd, rd, lo as i64);
        }
    }

    fn directive(&mut self, d: &Directive) -> Result<(), CompileError> {
        match d {
            Directive::Compute { dst, op, a, b } => {
                let rd = self.regs[dst];
                self.compute(rd, *op, a, b)?;
            }
            Directive::LoadImm { dst, value } => self.load_imm(self.regs[dst], *value),
            Directive::MemAddr { dst, index } => {
                let rd = self.regs[dst];
                let ri = self.reg(index)?;
                self.imm(ImmOp::Andi, rd, ri, 0xFF);
                self.imm(ImmOp::Slli, rd, rd, 2);
            }
            Directive::MemLoad { dst, addr } => self.out.push(Instr::Lw {
                rd: self.regs[dst],
                rs1: self.regs[addr],
                offset: 0,
            }),
            Directive::MemStore { addr, value } => {
                let rs2 = self.reg(value)?;
                self.out.push(Instr::Sw {
                    rs1: self.regs[addr],
                    rs2,
                    offset: 0,
                })
            }
            Directive::Branch { cond, target } => {
                self.fixups.push((self.out.len(), target.clone()));
                self.out.push(Instr::Branch {
                    cond: BranchCond::Eq,
                    rs1: self.regs[cond],
                    rs2: Reg::ZERO,
                    offset: 0,
                });
            }
            Directive::Jump { target } => {
                self.fixups.push((self.out.len(), target.clone()));
                self.out.push(Instr::Jal {
                    rd: Reg::ZERO,
                    offset: 0,
                });
            }
            Directive::Label(l) => {
                self.labels.insert(l.clone(), self.out.len());
            }
            Directive::ResultAccumulate(t) => {
                if let Some(result) = self.plan.result {
                    self.op(RegOp::And, result, result, self.regs[t]);
                }
            }
            Directive::Finish => {
                if let Some(finish) = self.plan.finish {
                    self.imm(ImmOp::Addi, finish, Reg::ZERO, 1);
                }
            }
        }
        Ok(())
    }

    fn resolve(&mut self) -> Result<(), CompileError> {
        for (at, label) in std::mem::take(&mut self.fixups) {
            let target = self.labels[&label];
            let delta = (target as i64 - at as i64) * 4;
            let fixed = match self.out[at] {
                Instr::Branch { cond, rs1, rs2, .. } => Instr::Branch {
                    cond,
                    rs1,
                    rs2,
                    offset: delta as i32,
                },
                Instr::Jal { rd, .. } => Instr::Jal {
                    rd,
                    offset: delta as i32,
                },
                _ => unreachable!("fixups point at control transfers"),
            };
            if fixed.validate().is_err() {
                return Err(CompileError::BranchRange {
                    name: self.ir.name.clone(),
                    offset: delta,
                });
            }
            self.out[at] = fixed;
        }
        Ok(())
    }
}

/// Generates machine code for `ir` under `plan`.
pub fn emit_rv32i(ir: &IrProgram, plan: &RegPlan) -> Result<InstrSequence, CompileError> {
    if ir.inputs.len() > plan.inputs.len() {
        return Err(CompileError::TooManyInputs {
            name: ir.name.clone(),
            count: ir.inputs.len(),
            max: plan.inputs.len(),
        });
    }
    let regs = allocate(ir, plan)?;
    let mut e = Emitter {
        ir,
        plan,
        regs,
        out: Vec::new(),
        fixups: Vec::new(),
        labels: BTreeMap::new(),
    };
    if let Some(result) = plan.result {
        e.imm(ImmOp::Addi, result, Reg::ZERO, 1);
    }
    for d in &ir.directives {
        e.directive(d)?;
    }
    e.resolve()?;
    let registers = RegisterMap {
        inputs: ir
            .inputs
            .iter()
            .cloned()
            .zip(plan.inputs.iter().copied())
            .collect(),
        temps: e.regs.iter().map(|(t, r)| (t.0, *r)).collect(),
        result: plan.result,
        finish: plan.finish,
    };
    Ok(InstrSequence {
        name: ir.name.clone(),
        words: e.out.iter().map(Instr::encode).collect(),
        registers,
        labels: e.labels,
    })
}

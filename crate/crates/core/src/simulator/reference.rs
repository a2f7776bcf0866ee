//! Single-instruction reference interpreter with no pipeline, used to
//! cross-check the pipelined model.

use crate::compiler::{BranchCond, ImmOp, Instr, RegOp};

use super::MEMORY_WORDS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchState {
    pub regs: [u32; 32],
    pub mem: Vec<u32>,
    /// Instruction index.
    pub pc: i64,
}

impl ArchState {
    pub fn new(regs: [u32; 32]) -> ArchState {
        ArchState {
            regs,
            mem: vec![0; MEMORY_WORDS],
            pc: 0,
        }
    }

    fn get(&self, r: crate::compiler::Reg) -> u32 {
        if r.index() == 0 {
            0
        } else {
            self.regs[r.index()]
        }
    }

    fn set(&mut self, r: crate::compiler::Reg, v: u32) {
        if r.index() != 0 {
            self.regs[r.index()] = v;
        }
    }

    fn slot(addr: u32) -> usize {
        (addr / 4) as usize & (MEMORY_WORDS - 1)
    }

    /// Executes one instruction and advances `pc`.
    pub fn execute(&mut self, instr: Instr) {
        let mut next = self.pc + 1;
        match instr {
            Instr::Lui { rd, imm } => self.set(rd, imm.wrapping_shl(12)),
            Instr::Jal { rd, offset } => {
                self.set(rd, (self.pc as u32).wrapping_mul(4).wrapping_add(4));
                next = jump(self.pc, offset);
            }
            Instr::Branch {
                cond,
                rs1,
                rs2,
                offset,
            } => {
                let (a, b) = (self.get(rs1), self.get(rs2));
                let (sa, sb) = (a as i32, b as i32);
                let taken = match cond {
                    BranchCond::Eq => a == b,
                    BranchCond::Ne => a != b,
                    BranchCond::Lt => sa < sb,
                    BranchCond::Ge => !(sa < sb),
                    BranchCond::Ltu => a < b,
                    BranchCond::Geu => !(a < b),
                };
                if taken {
                    next = jump(self.pc, offset);
                }
            }
            Instr::Lw { rd, rs1, offset } => {
                let v = self.mem[Self::slot(self.get(rs1).wrapping_add(offset as u32))];
                self.set(rd, v);
            }
            Instr::Sw { rs1, rs2, offset } => {
                let slot = Self::slot(self.get(rs1).wrapping_add(offset as u32));
                self.mem[slot] = self.get(rs2);
            }
            Instr::OpImm { op, rd, rs1, imm } => {
                let a = self.get(rs1);
                let sh = (imm & 0x1F) as u32;
                let v = match op {
                    ImmOp::Addi => (a as i64 + imm as i64) as u32,
                    ImmOp::Slti => u32::from((a as i32 as i64) < imm as i64),
                    ImmOp::Sltiu => u32::from((a as u64) < (imm as i64 as u32) as u64),
                    ImmOp::Xori => a ^ imm as u32,
                    ImmOp::Ori => a | imm as u32,
                    ImmOp::Andi => a & imm as u32,
                    ImmOp::Slli => a.wrapping_shl(sh),
                    ImmOp::Srli => a.wrapping_shr(sh),
                    ImmOp::Srai => (a as i32).wrapping_shr(sh) as u32,
                };
                self.set(rd, v);
            }
            Instr::Op { op, rd, rs1, rs2 } => {
                let (a, b) = (self.get(rs1), self.get(rs2));
                let (sa, sb) = (a as i32 as i64, b as i32 as i64);
                let (ua, ub) = (a as u64, b as u64);
                let sh = b & 0x1F;
                let v = match op {
                    RegOp::Add => (ua + ub) as u32,
                    RegOp::Sub => (sa - sb) as u32,
                    RegOp::Sll => a.wrapping_shl(sh),
                    RegOp::Slt => u32::from(sa < sb),
                    RegOp::Sltu => u32::from(ua < ub),
                    RegOp::Xor => a ^ b,
                    RegOp::Srl => a.wrapping_shr(sh),
                    RegOp::Sra => (a as i32).wrapping_shr(sh) as u32,
                    RegOp::Or => a | b,
                    RegOp::And => a & b,
                    RegOp::Mul => (ua * ub) as u32,
                    RegOp::Mulh => ((sa * sb) >> 32) as u32,
                    RegOp::Mulhsu => ((sa as i128 * ub as i128) >> 32) as u32,
                    RegOp::Mulhu => ((ua * ub) >> 32) as u32,
                };
                self.set(rd, v);
            }
            Instr::Illegal(_) => {}
        }
        self.pc = next;
    }

    /// Executes `program` from index 0 until `pc` leaves it or `max_steps`
    /// instructions have run.
    pub fn run(&mut self, program: &[Instr], max_steps: usize) {
        let mut steps = 0;
        while self.pc >= 0 && (self.pc as usize) < program.len() && steps < max_steps {
            self.execute(program[self.pc as usize]);
            steps += 1;
        }
    }
}

fn jump(pc: i64, offset: i32) -> i64 {
    let bytes = pc * 4 + offset as i64;
    if bytes < 0 || bytes % 4 != 0 {
        -1
    } else {
        bytes / 4
    }
}

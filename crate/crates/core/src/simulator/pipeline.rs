//! Five-stage in-order pipeline: fetch, decode, execute, memory, writeback.
//!
//! Stages are evaluated back to front each cycle. Execute sees the register
//! file after this cycle's writeback and forwards from the instruction that
//! just left memory, so no stalls are needed. Branches and jumps resolve in
//! execute with not-taken prediction; a taken one flushes the two younger
//! instructions fetched behind it.

use crate::compiler::{ImmOp, Instr, Reg, RegOp, FINISH_REG, NOP};

use super::anomaly::Anomaly;
use super::scheduler::Scheduler;
use super::{word_index, TraceEntry, MEMORY_WORDS};

/// Fetch address far from any queue, so `pc + 1` stays outside as well.
const OUTSIDE: i64 = i64::MIN / 2;

#[derive(Clone, Copy)]
struct Fetched {
    pc: i64,
    word: u32,
}

#[derive(Clone, Copy)]
struct Decoded {
    pc: i64,
    instr: Instr,
}

#[derive(Clone, Copy)]
enum MemOp {
    None,
    Load { index: usize },
    Store { index: usize, value: u32 },
}

#[derive(Clone, Copy)]
struct Executed {
    pc: i64,
    instr: Instr,
    rd: Option<(Reg, u32)>,
    mem: MemOp,
}

pub(super) struct Pipeline<'a> {
    pub regs: [u32; 32],
    pub mem: Vec<u32>,
    pub cycle: u64,
    pub retired: u64,
    pub illegal: u64,
    pub trace: Option<Vec<TraceEntry>>,
    pc: i64,
    scheduler: Scheduler<'a>,
    anomaly: Anomaly,
    /// Queue index right after the first multiply, for a13/a14.
    trigger: Option<i64>,
    after_mul: bool,
    if_id: Option<Fetched>,
    id_ex: Option<Decoded>,
    ex_mem: Option<Executed>,
    mem_wb: Option<Executed>,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        words: &'a [u32],
        trigger: Option<i64>,
        anomaly: Anomaly,
        regs: [u32; 32],
        mem: Vec<u32>,
        record_trace: bool,
    ) -> Pipeline<'a> {
        debug_assert_eq!(mem.len(), MEMORY_WORDS);
        Pipeline {
            regs,
            mem,
            cycle: 0,
            retired: 0,
            illegal: 0,
            trace: record_trace.then(Vec::new),
            pc: 0,
            scheduler: Scheduler::new(words),
            anomaly,
            trigger,
            after_mul: false,
            if_id: None,
            id_ex: None,
            ex_mem: None,
            mem_wb: None,
        }
    }

    pub fn finished(&self) -> bool {
        self.regs[FINISH_REG] != 0
    }

    fn x0_writable(&self) -> bool {
        self.anomaly == Anomaly::A06
    }

    fn read_reg(&self, r: Reg, bypass: Option<(Reg, u32)>) -> u32 {
        if r == Reg::ZERO && !self.x0_writable() {
            return 0;
        }
        match bypass {
            Some((rd, v)) if rd == r => v,
            _ => self.regs[r.index()],
        }
    }

    pub fn step(&mut self) {
        self.cycle += 1;
        self.writeback();
        self.memory();
        let redirect = self.execute();
        let decoded = self.decode();
        let fetched = self.fetch();
        match redirect {
            Some(target) if self.anomaly != Anomaly::A15 => {
                for (pc, instr) in [
                    decoded.map(|d| (d.pc, d.instr)),
                    fetched.map(|f| (f.pc, Instr::decode(f.word))),
                ]
                .into_iter()
                .flatten()
                {
                    self.scheduler.squashed(pc);
                    self.record(pc, instr, None, None, true);
                }
                self.id_ex = None;
                self.if_id = None;
                self.pc = target;
            }
            Some(target) => {
                self.id_ex = decoded;
                self.if_id = fetched;
                self.pc = target;
            }
            None => {
                self.id_ex = decoded;
                self.if_id = fetched;
            }
        }
    }

    fn record(
        &mut self,
        pc: i64,
        instr: Instr,
        writeback: Option<(Reg, u32)>,
        store: Option<(u32, u32)>,
        squashed: bool,
    ) {
        let cycle = self.cycle;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry {
                cycle,
                pc,
                instr,
                writeback,
                store,
                squashed,
            });
        }
    }

    fn writeback(&mut self) {
        let Some(e) = self.mem_wb.take() else { return };
        let mut shown = None;
        if let Some((rd, v)) = e.rd {
            if rd != Reg::ZERO || self.x0_writable() {
                self.regs[rd.index()] = v;
                shown = Some((rd, v));
            }
        }
        let store = match e.mem {
            MemOp::Store { index, value } => Some(((index * 4) as u32, value)),
            _ => None,
        };
        self.retired += 1;
        self.record(e.pc, e.instr, shown, store, false);
    }

    fn memory(&mut self) {
        let Some(mut e) = self.ex_mem.take() else { return };
        match e.mem {
            MemOp::Load { index } => {
                if let Some((rd, _)) = e.rd {
                    e.rd = Some((rd, self.mem[index]));
                }
            }
            MemOp::Store { index, value } => self.mem[index] = value,
            MemOp::None => {}
        }
        self.mem_wb = Some(e);
    }

    /// Returns the redirect target of a taken branch or jump.
    fn execute(&mut self) -> Option<i64> {
        let d = self.id_ex.take()?;
        let bypass = self.mem_wb.and_then(|e| e.rd);
        let zero_rs1 = self.anomaly == Anomaly::A14 && self.trigger == Some(d.pc);
        let rs1_val = |this: &Self, r: Reg| -> u32 {
            if zero_rs1 {
                return 0;
            }
            if let Anomaly::A17 { reg } = this.anomaly {
                if r.index() == reg as usize {
                    return 0;
                }
            }
            this.read_reg(r, bypass)
        };
        let target = |offset: i32| -> i64 {
            let bytes = d.pc * 4 + offset as i64;
            if bytes >= 0 && bytes % 4 == 0 {
                bytes / 4
            } else {
                // Negative or misaligned targets leave the queue for good.
                OUTSIDE
            }
        };

        let mut rd = None;
        let mut mem = MemOp::None;
        let mut redirect = None;
        match d.instr {
            Instr::Lui { rd: r, imm } => rd = Some((r, imm << 12)),
            Instr::Jal { rd: r, offset } => {
                rd = Some((r, ((d.pc + 1) * 4) as u32));
                redirect = Some(target(offset));
            }
            Instr::Branch {
                cond,
                rs1,
                rs2,
                offset,
            } => {
                let mut taken = cond.holds(rs1_val(self, rs1), self.read_reg(rs2, bypass));
                if self.anomaly == Anomaly::A11 {
                    taken = !taken;
                }
                if taken {
                    let delta = match self.anomaly {
                        Anomaly::A10 { delta_bytes } => delta_bytes,
                        _ => 0,
                    };
                    redirect = Some(target(offset.wrapping_add(delta)));
                }
            }
            Instr::Lw { rd: r, rs1, offset } => {
                let addr = rs1_val(self, rs1).wrapping_add(offset as u32);
                rd = Some((r, 0));
                mem = MemOp::Load {
                    index: word_index(addr),
                };
            }
            Instr::Sw { rs1, rs2, offset } => {
                let addr = rs1_val(self, rs1).wrapping_add(offset as u32);
                mem = MemOp::Store {
                    index: word_index(addr),
                    value: self.read_reg(rs2, bypass),
                };
            }
            Instr::OpImm { op, rd: r, rs1, imm } => {
                rd = Some((r, alu_imm(op, rs1_val(self, rs1), imm)));
            }
            Instr::Op { op, rd: r, rs1, rs2 } => {
                let mut a = rs1_val(self, rs1);
                let b = self.read_reg(rs2, bypass);
                let mut op = op;
                match self.anomaly {
                    Anomaly::A18 if op == RegOp::Add => op = RegOp::Sub,
                    Anomaly::A16 if op.is_mul() && a & 0x8000_0000 != 0 => {
                        a = (a & 0x7FFF_FFFF).wrapping_neg();
                    }
                    _ => {}
                }
                let v = if self.anomaly == Anomaly::A05 && op == RegOp::Sltu {
                    (a <= b) as u32
                } else {
                    alu(op, a, b)
                };
                rd = Some((r, v));
            }
            Instr::Illegal(_) => self.illegal += 1,
        }
        self.ex_mem = Some(Executed {
            pc: d.pc,
            instr: d.instr,
            rd,
            mem,
        });
        redirect
    }

    fn decode(&mut self) -> Option<Decoded> {
        let f = self.if_id.take()?;
        let mut word = f.word;
        if self.anomaly == Anomaly::A12 && self.after_mul {
            word ^= 1 << 20;
        }
        let mut instr = Instr::decode(word);
        self.after_mul = matches!(instr, Instr::Op { op, .. } if op.is_mul());
        match self.anomaly {
            Anomaly::A03 { from, to } => {
                instr = instr.map_regs(|r| r, |r| if r.index() == from as usize { Reg::new(to) } else { r });
            }
            Anomaly::A04 { from, to } => {
                instr = instr.map_regs(|r| if r.index() == from as usize { Reg::new(to) } else { r }, |r| r);
            }
            Anomaly::A13 if self.trigger == Some(f.pc) => instr = NOP,
            _ => {}
        }
        Some(Decoded { pc: f.pc, instr })
    }

    fn fetch(&mut self) -> Option<Fetched> {
        let pc = self.pc;
        let word = self.scheduler.serve(pc);
        self.pc += 1;
        Some(Fetched { pc, word })
    }
}

pub(super) fn alu(op: RegOp, a: u32, b: u32) -> u32 {
    match op {
        RegOp::Add => a.wrapping_add(b),
        RegOp::Sub => a.wrapping_sub(b),
        RegOp::Sll => a << (b & 31),
        RegOp::Slt => ((a as i32) < (b as i32)) as u32,
        RegOp::Sltu => (a < b) as u32,
        RegOp::Xor => a ^ b,
        RegOp::Srl => a >> (b & 31),
        RegOp::Sra => ((a as i32) >> (b & 31)) as u32,
        RegOp::Or => a | b,
        RegOp::And => a & b,
        RegOp::Mul => a.wrapping_mul(b),
        RegOp::Mulh => ((a as i32 as i64 * b as i32 as i64) >> 32) as u32,
        RegOp::Mulhsu => ((a as i32 as i64 * b as i64) >> 32) as u32,
        RegOp::Mulhu => ((a as u64 * b as u64) >> 32) as u32,
    }
}

pub(super) fn alu_imm(op: ImmOp, a: u32, imm: i32) -> u32 {
    let b = imm as u32;
    match op {
        ImmOp::Addi => a.wrapping_add(b),
        ImmOp::Slti => ((a as i32) < imm) as u32,
        ImmOp::Sltiu => (a < b) as u32,
        ImmOp::Xori => a ^ b,
        ImmOp::Ori => a | b,
        ImmOp::Andi => a & b,
        ImmOp::Slli => a << (b & 31),
        ImmOp::Srli => a >> (b & 31),
        ImmOp::Srai => ((a as i32) >> (b & 31)) as u32,
    }
}

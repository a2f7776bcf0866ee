//! RV32I base plus the MUL family of the M extension: instruction model,
//! bit-exact encoding, decoding and disassembly.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Architectural register index, `x0`..`x31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reg(u8);

impl Reg {
    pub const ZERO: Reg = Reg(0);

    pub const fn new(index: u8) -> Reg {
        assert!(index < 32, "register index out of range");
        Reg(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    fn field(word: u32, shift: u32) -> Reg {
        Reg(((word >> shift) & 0x1F) as u8)
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchCond {
    Eq,
    Ne,
    Lt,
    Ge,
    Ltu,
    Geu,
}

impl BranchCond {
    const ALL: [(BranchCond, u32, &'static str); 6] = [
        (BranchCond::Eq, 0b000, "beq"),
        (BranchCond::Ne, 0b001, "bne"),
        (BranchCond::Lt, 0b100, "blt"),
        (BranchCond::Ge, 0b101, "bge"),
        (BranchCond::Ltu, 0b110, "bltu"),
        (BranchCond::Geu, 0b111, "bgeu"),
    ];

    fn funct3(self) -> u32 {
        Self::ALL.iter().find(|c| c.0 == self).unwrap().1
    }

    pub fn mnemonic(self) -> &'static str {
        Self::ALL.iter().find(|c| c.0 == self).unwrap().2
    }

    pub fn holds(self, a: u32, b: u32) -> bool {
        match self {
            BranchCond::Eq => a == b,
            BranchCond::Ne => a != b,
            BranchCond::Lt => (a as i32) < (b as i32),
            BranchCond::Ge => (a as i32) >= (b as i32),
            BranchCond::Ltu => a < b,
            BranchCond::Geu => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImmOp {
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
}

impl ImmOp {
    pub const ALL: [ImmOp; 9] = [
        ImmOp::Addi,
        ImmOp::Slti,
        ImmOp::Sltiu,
        ImmOp::Xori,
        ImmOp::Ori,
        ImmOp::Andi,
        ImmOp::Slli,
        ImmOp::Srli,
        ImmOp::Srai,
    ];

    pub fn is_shift(self) -> bool {
        matches!(self, ImmOp::Slli | ImmOp::Srli | ImmOp::Srai)
    }

    fn funct3(self) -> u32 {
        match self {
            ImmOp::Addi => 0b000,
            ImmOp::Slli => 0b001,
            ImmOp::Slti => 0b010,
            ImmOp::Sltiu => 0b011,
            ImmOp::Xori => 0b100,
            ImmOp::Srli | ImmOp::Srai => 0b101,
            ImmOp::Ori => 0b110,
            ImmOp::Andi => 0b111,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            ImmOp::Addi => "addi",
            ImmOp::Slti => "slti",
            ImmOp::Sltiu => "sltiu",
            ImmOp::Xori => "xori",
            ImmOp::Ori => "ori",
            ImmOp::Andi => "andi",
            ImmOp::Slli => "slli",
            ImmOp::Srli => "srli",
            ImmOp::Srai => "srai",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
}

impl RegOp {
    pub const ALL: [RegOp; 14] = [
        RegOp::Add,
        RegOp::Sub,
        RegOp::Sll,
        RegOp::Slt,
        RegOp::Sltu,
        RegOp::Xor,
        RegOp::Srl,
        RegOp::Sra,
        RegOp::Or,
        RegOp::And,
        RegOp::Mul,
        RegOp::Mulh,
        RegOp::Mulhsu,
        RegOp::Mulhu,
    ];

    /// (funct7, funct3)
    fn functs(self) -> (u32, u32) {
        match self {
            RegOp::Add => (0b0000000, 0b000),
            RegOp::Sub => (0b0100000, 0b000),
            RegOp::Sll => (0b0000000, 0b001),
            RegOp::Slt => (0b0000000, 0b010),
            RegOp::Sltu => (0b0000000, 0b011),
            RegOp::Xor => (0b0000000, 0b100),
            RegOp::Srl => (0b0000000, 0b101),
            RegOp::Sra => (0b0100000, 0b101),
            RegOp::Or => (0b0000000, 0b110),
            RegOp::And => (0b0000000, 0b111),
            RegOp::Mul => (0b0000001, 0b000),
            RegOp::Mulh => (0b0000001, 0b001),
            RegOp::Mulhsu => (0b0000001, 0b010),
            RegOp::Mulhu => (0b0000001, 0b011),
        }
    }

    pub fn is_mul(self) -> bool {
        matches!(self, RegOp::Mul | RegOp::Mulh | RegOp::Mulhsu | RegOp::Mulhu)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            RegOp::Add => "add",
            RegOp::Sub => "sub",
            RegOp::Sll => "sll",
            RegOp::Slt => "slt",
            RegOp::Sltu => "sltu",
            RegOp::Xor => "xor",
            RegOp::Srl => "srl",
            RegOp::Sra => "sra",
            RegOp::Or => "or",
            RegOp::And => "and",
            RegOp::Mul => "mul",
            RegOp::Mulh => "mulh",
            RegOp::Mulhsu => "mulhsu",
            RegOp::Mulhu => "mulhu",
        }
    }
}

/// A decoded instruction. Immediates are stored as their sign-extended
/// values (byte offsets for branches and jumps); `Lui::imm` is the 20-bit
/// upper immediate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instr {
    Lui { rd: Reg, imm: u32 },
    Jal { rd: Reg, offset: i32 },
    Branch { cond: BranchCond, rs1: Reg, rs2: Reg, offset: i32 },
    Lw { rd: Reg, rs1: Reg, offset: i32 },
    Sw { rs1: Reg, rs2: Reg, offset: i32 },
    OpImm { op: ImmOp, rd: Reg, rs1: Reg, imm: i32 },
    Op { op: RegOp, rd: Reg, rs1: Reg, rs2: Reg },
    /// An encoding outside the supported subset.
    Illegal(u32),
}

const OPC_LUI: u32 = 0b0110111;
const OPC_JAL: u32 = 0b1101111;
const OPC_BRANCH: u32 = 0b1100011;
const OPC_LOAD: u32 = 0b0000011;
const OPC_STORE: u32 = 0b0100011;
const OPC_OP_IMM: u32 = 0b0010011;
const OPC_OP: u32 = 0b0110011;

pub const NOP: Instr = Instr::OpImm {
    op: ImmOp::Addi,
    rd: Reg::ZERO,
    rs1: Reg::ZERO,
    imm: 0,
};

fn sign_extend(value: u32, bits: u32) -> i32 {
    let shift = 32 - bits;
    ((value << shift) as i32) >> shift
}

pub fn fits_signed(value: i64, bits: u32) -> bool {
    let lo = -(1i64 << (bits - 1));
    let hi = (1i64 << (bits - 1)) - 1;
    (lo..=hi).contains(&value)
}

impl Instr {
    /// Checks that every field is representable in the encoding.
    pub fn validate(&self) -> Result<(), String> {
        let ok = match *self {
            Instr::Lui { imm, .. } => imm < (1 << 20),
            Instr::Jal { offset, .. } => offset % 2 == 0 && fits_signed(offset as i64, 21),
            Instr::Branch { offset, .. } => offset % 2 == 0 && fits_signed(offset as i64, 13),
            Instr::Lw { offset, .. } | Instr::Sw { offset, .. } => fits_signed(offset as i64, 12),
            Instr::OpImm { op, imm, .. } if op.is_shift() => (0..32).contains(&imm),
            Instr::OpImm { imm, .. } => fits_signed(imm as i64, 12),
            Instr::Op { .. } | Instr::Illegal(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("immediate out of range in `{self}`"))
        }
    }

    pub fn encode(&self) -> u32 {
        debug_assert!(self.validate().is_ok(), "{self:?}");
        let r = |reg: Reg, shift: u32| (reg.0 as u32) << shift;
        match *self {
            Instr::Lui { rd, imm } => (imm << 12) | r(rd, 7) | OPC_LUI,
            Instr::Jal { rd, offset } => {
                let o = offset as u32;
                ((o >> 20) & 1) << 31
                    | ((o >> 1) & 0x3FF) << 21
                    | ((o >> 11) & 1) << 20
                    | ((o >> 12) & 0xFF) << 12
                    | r(rd, 7)
                    | OPC_JAL
            }
            Instr::Branch {
                cond,
                rs1,
                rs2,
                offset,
            } => {
                let o = offset as u32;
                ((o >> 12) & 1) << 31
                    | ((o >> 5) & 0x3F) << 25
                    | r(rs2, 20)
                    | r(rs1, 15)
                    | cond.funct3() << 12
                    | ((o >> 1) & 0xF) << 8
                    | ((o >> 11) & 1) << 7
                    | OPC_BRANCH
            }
            Instr::Lw { rd, rs1, offset } => {
                ((offset as u32) & 0xFFF) << 20 | r(rs1, 15) | 0b010 << 12 | r(rd, 7) | OPC_LOAD
            }
            Instr::Sw { rs1, rs2, offset } => {
                let o = offset as u32;
                ((o >> 5) & 0x7F) << 25
                    | r(rs2, 20)
                    | r(rs1, 15)
                    | 0b010 << 12
                    | (o & 0x1F) << 7
                    | OPC_STORE
            }
            Instr::OpImm { op, rd, rs1, imm } => {
                let imm_field = match op {
                    ImmOp::Srai => 0b0100000 << 5 | (imm as u32 & 0x1F),
                    ImmOp::Slli | ImmOp::Srli => imm as u32 & 0x1F,
                    _ => imm as u32 & 0xFFF,
                };
                imm_field << 20 | r(rs1, 15) | op.funct3() << 12 | r(rd, 7) | OPC_OP_IMM
            }
            Instr::Op { op, rd, rs1, rs2 } => {
                let (f7, f3) = op.functs();
                f7 << 25 | r(rs2, 20) | r(rs1, 15) | f3 << 12 | r(rd, 7) | OPC_OP
            }
            Instr::Illegal(word) => word,
        }
    }

    /// Decodes a word. Total: unsupported encodings become `Illegal`.
    pub fn decode(word: u32) -> Instr {
        let rd = Reg::field(word, 7);
        let rs1 = Reg::field(word, 15);
        let rs2 = Reg::field(word, 20);
        let funct3 = (word >> 12) & 0x7;
        let funct7 = word >> 25;
        match word & 0x7F {
            OPC_LUI => Instr::Lui {
                rd,
                imm: word >> 12,
            },
            OPC_JAL => {
                let raw = ((word >> 31) & 1) << 20
                    | ((word >> 21) & 0x3FF) << 1
                    | ((word >> 20) & 1) << 11
                    | ((word >> 12) & 0xFF) << 12;
                Instr::Jal {
                    rd,
                    offset: sign_extend(raw, 21),
                }
            }
            OPC_BRANCH => {
                let Some(&(cond, _, _)) = BranchCond::ALL.iter().find(|c| c.1 == funct3) else {
                    return Instr::Illegal(word);
                };
                let raw = ((word >> 31) & 1) << 12
                    | ((word >> 25) & 0x3F) << 5
                    | ((word >> 8) & 0xF) << 1
                    | ((word >> 7) & 1) << 11;
                Instr::Branch {
                    cond,
                    rs1,
                    rs2,
                    offset: sign_extend(raw, 13),
                }
            }
            OPC_LOAD if funct3 == 0b010 => Instr::Lw {
                rd,
                rs1,
                offset: sign_extend(word >> 20, 12),
            },
            OPC_STORE if funct3 == 0b010 => {
                let raw = (word >> 25) << 5 | ((word >> 7) & 0x1F);
                Instr::Sw {
                    rs1,
                    rs2,
                    offset: sign_extend(raw, 12),
                }
            }
            OPC_OP_IMM => {
                let op = match (funct3, funct7) {
                    (0b000, _) => ImmOp::Addi,
                    (0b010, _) => ImmOp::Slti,
                    (0b011, _) => ImmOp::Sltiu,
                    (0b100, _) => ImmOp::Xori,
                    (0b110, _) => ImmOp::Ori,
                    (0b111, _) => ImmOp::Andi,
                    (0b001, 0b0000000) => ImmOp::Slli,
                    (0b101, 0b0000000) => ImmOp::Srli,
                    (0b101, 0b0100000) => ImmOp::Srai,
                    _ => return Instr::Illegal(word),
                };
                let imm = if op.is_shift() {
                    ((word >> 20) & 0x1F) as i32
                } else {
                    sign_extend(word >> 20, 12)
                };
                Instr::OpImm { op, rd, rs1, imm }
            }
            OPC_OP => match RegOp::ALL.iter().find(|op| op.functs() == (funct7, funct3)) {
                Some(&op) => Instr::Op { op, rd, rs1, rs2 },
                None => Instr::Illegal(word),
            },
            _ => Instr::Illegal(word),
        }
    }

    /// Destination register, if the instruction writes one.
    pub fn rd(&self) -> Option<Reg> {
        match *self {
            Instr::Lui { rd, .. }
            | Instr::Jal { rd, .. }
            | Instr::Lw { rd, .. }
            | Instr::OpImm { rd, .. }
            | Instr::Op { rd, .. } => Some(rd),
            Instr::Branch { .. } | Instr::Sw { .. } | Instr::Illegal(_) => None,
        }
    }

    /// Source registers actually read.
    pub fn sources(&self) -> (Option<Reg>, Option<Reg>) {
        match *self {
            Instr::Branch { rs1, rs2, .. } | Instr::Sw { rs1, rs2, .. } | Instr::Op { rs1, rs2, .. } => {
                (Some(rs1), Some(rs2))
            }
            Instr::Lw { rs1, .. } | Instr::OpImm { rs1, .. } => (Some(rs1), None),
            Instr::Lui { .. } | Instr::Jal { .. } | Instr::Illegal(_) => (None, None),
        }
    }

    /// Applies `f` to every register field.
    pub fn map_regs(&self, mut read: impl FnMut(Reg) -> Reg, mut write: impl FnMut(Reg) -> Reg) -> Instr {
        match *self {
            Instr::Lui { rd, imm } => Instr::Lui { rd: write(rd), imm },
            Instr::Jal { rd, offset } => Instr::Jal {
                rd: write(rd),
                offset,
            },
            Instr::Branch {
                cond,
                rs1,
                rs2,
                offset,
            } => Instr::Branch {
                cond,
                rs1: read(rs1),
                rs2: read(rs2),
                offset,
            },
            Instr::Lw { rd, rs1, offset } => Instr::Lw {
                rd: write(rd),
                rs1: read(rs1),
                offset,
            },
            Instr::Sw { rs1, rs2, offset } => Instr::Sw {
                rs1: read(rs1),
                rs2: read(rs2),
                offset,
            },
            Instr::OpImm { op, rd, rs1, imm } => Instr::OpImm {
                op,
                rd: write(rd),
                rs1: read(rs1),
                imm,
            },
            Instr::Op { op, rd, rs1, rs2 } => Instr::Op {
                op,
                rd: write(rd),
                rs1: read(rs1),
                rs2: read(rs2),
            },
            Instr::Illegal(w) => Instr::Illegal(w),
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instr::Lui { rd, imm } => write!(f, "lui {rd}, {imm:#x}"),
            Instr::Jal { rd, offset } => write!(f, "jal {rd}, {offset}"),
            Instr::Branch {
                cond,
                rs1,
                rs2,
                offset,
            } => write!(f, "{} {rs1}, {rs2}, {offset}", cond.mnemonic()),
            Instr::Lw { rd, rs1, offset } => write!(f, "lw {rd}, {offset}({rs1})"),
            Instr::Sw { rs1, rs2, offset } => write!(f, "sw {rs2}, {offset}({rs1})"),
            Instr::OpImm { op, rd, rs1, imm } => write!(f, "{} {rd}, {rs1}, {imm}", op.mnemonic()),
            Instr::Op { op, rd, rs1, rs2 } => write!(f, "{} {rd}, {rs1}, {rs2}", op.mnemonic()),
            Instr::Illegal(w) => write!(f, ".word {w:#010x}"),
        }
    }
}

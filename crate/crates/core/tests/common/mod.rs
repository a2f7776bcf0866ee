//! Random formula generators and a from-scratch evaluator used as an
//! independent reference.

#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use tiup::formula::{BinaryOp, Expr, UnaryOp};

pub const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => prop::sample::select(&VARS[..]).prop_map(Expr::var),
        1 => (-20i64..20).prop_map(Expr::Const),
        1 => prop::sample::select(vec![0x7FFF_FFFFi64, -0x8000_0000, 0x1234_5678]).prop_map(Expr::Const),
    ]
}

/// Bitvector-valued expressions, with loads from the memory `mem`.
pub fn bv_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        let arith = prop::sample::select(vec![
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::And,
            BinaryOp::Or,
            BinaryOp::Xor,
        ]);
        let unary = prop::sample::select(vec![UnaryOp::BitNot, UnaryOp::Neg]);
        prop_oneof![
            4 => (arith, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            1 => (unary, inner.clone()).prop_map(|(op, e)| Expr::unary(op, e)),
            1 => inner.clone().prop_map(|i| Expr::load(Expr::var("mem"), i)),
            1 => (inner.clone(), inner.clone(), inner).prop_map(|(i, v, j)| {
                Expr::load(Expr::store(Expr::var("mem"), i, v), j)
            }),
        ]
    })
}

fn comparison() -> impl Strategy<Value = Expr> {
    let op = prop::sample::select(vec![
        BinaryOp::LtS,
        BinaryOp::LtU,
        BinaryOp::GtS,
        BinaryOp::Eq,
        BinaryOp::Ne,
    ]);
    (op, bv_expr(), bv_expr()).prop_map(|(op, l, r)| Expr::binary(op, l, r))
}

/// Boolean-valued expressions.
pub fn bool_expr() -> impl Strategy<Value = Expr> {
    comparison().prop_recursive(3, 8, 2, |inner| {
        let op = prop::sample::select(vec![BinaryOp::LogAnd, BinaryOp::LogOr, BinaryOp::Implies]);
        prop_oneof![
            3 => (op, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            1 => inner.prop_map(|e| Expr::unary(UnaryOp::LogNot, e)),
        ]
    })
}

/// Values for `VARS`, biased toward small magnitudes and extremes.
pub fn sigma() -> impl Strategy<Value = [i64; 4]> {
    let v = prop_oneof![
        2 => -8i64..8,
        2 => any::<i32>().prop_map(i64::from),
        1 => prop::sample::select(vec![i32::MIN as i64, i32::MAX as i64, -1, 0, 1]),
    ];
    [v.clone(), v.clone(), v.clone(), v]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefValue {
    Bool(bool),
    Bits(u64),
}

/// Straightforward recursive evaluator with its own memory model: a sparse
/// map of word index to value, indices taken modulo `mem_words`.
pub struct RefEval<'a> {
    pub width: u32,
    pub vars: &'a HashMap<String, i64>,
    pub mem_words: u64,
}

impl RefEval<'_> {
    fn trunc(&self, v: i128) -> u64 {
        let m = if self.width >= 64 { u64::MAX } else { (1u64 << self.width) - 1 };
        (v as u64) & m
    }

    fn signed(&self, v: u64) -> i128 {
        let top = 1u64 << (self.width - 1);
        if v & top != 0 {
            v as i128 - (1i128 << self.width)
        } else {
            v as i128
        }
    }

    fn bits(&self, e: &Expr, mem: &HashMap<u64, u64>) -> u64 {
        match self.eval(e, mem) {
            RefValue::Bits(v) => v,
            RefValue::Bool(_) => panic!("expected a bitvector"),
        }
    }

    fn truth(&self, e: &Expr, mem: &HashMap<u64, u64>) -> bool {
        match self.eval(e, mem) {
            RefValue::Bool(b) => b,
            RefValue::Bits(_) => panic!("expected a boolean"),
        }
    }

    fn memory(&self, e: &Expr, base: &HashMap<u64, u64>) -> HashMap<u64, u64> {
        match e {
            Expr::Var(_) => base.clone(),
            Expr::Store(m, i, v) => {
                let mut out = self.memory(m, base);
                let i = self.bits(i, base) % self.mem_words;
                out.insert(i, self.bits(v, base));
                out
            }
            _ => panic!("not a memory term"),
        }
    }

    pub fn eval(&self, e: &Expr, mem: &HashMap<u64, u64>) -> RefValue {
        use RefValue::*;
        match e {
            Expr::Var(n) => Bits(self.trunc(self.vars[n] as i128)),
            Expr::Const(c) => Bits(self.trunc(*c as i128)),
            Expr::Unary(UnaryOp::LogNot, c) => Bool(!self.truth(c, mem)),
            Expr::Unary(UnaryOp::BitNot, c) => Bits(self.trunc(!(self.bits(c, mem) as i128))),
            Expr::Unary(UnaryOp::Neg, c) => Bits(self.trunc(-(self.bits(c, mem) as i128))),
            Expr::Binary(op, l, r) if op.is_logical() => {
                let (a, b) = (self.truth(l, mem), self.truth(r, mem));
                Bool(match op {
                    BinaryOp::LogAnd => a && b,
                    BinaryOp::LogOr => a || b,
                    _ => !a || b,
                })
            }
            Expr::Binary(op, l, r) => {
                let (a, b) = (self.bits(l, mem), self.bits(r, mem));
                let (sa, sb) = (self.signed(a), self.signed(b));
                match op {
                    BinaryOp::Add => Bits(self.trunc(a as i128 + b as i128)),
                    BinaryOp::Sub => Bits(self.trunc(a as i128 - b as i128)),
                    BinaryOp::Mul => Bits(self.trunc(a as i128 * b as i128)),
                    BinaryOp::And => Bits(a & b),
                    BinaryOp::Or => Bits(a | b),
                    BinaryOp::Xor => Bits(a ^ b),
                    BinaryOp::LtS => Bool(sa < sb),
                    BinaryOp::GtS => Bool(sa > sb),
                    BinaryOp::LtU => Bool(a < b),
                    BinaryOp::Eq => Bool(a == b),
                    BinaryOp::Ne => Bool(a != b),
                    _ => unreachable!(),
                }
            }
            Expr::Load(m, i) => {
                let contents = self.memory(m, mem);
                let i = self.bits(i, mem) % self.mem_words;
                Bits(contents.get(&i).copied().unwrap_or(0))
            }
            Expr::Store(..) => panic!("store outside a load"),
        }
    }
}

pub mod isa {
    use proptest::prelude::*;
    use tiup::compiler::{BranchCond, ImmOp, Instr, Reg, RegOp};

    pub fn reg() -> impl Strategy<Value = Reg> {
        (0u8..32).prop_map(Reg::new)
    }

    /// Registers a test program may write: never `Result_Reg` or
    /// `Finish_Reg`, which the scheduler epilogue owns.
    pub fn data_reg() -> impl Strategy<Value = Reg> {
        (0u8..30).prop_map(Reg::new)
    }

    fn imm_op() -> impl Strategy<Value = (ImmOp, i32)> {
        prop::sample::select(ImmOp::ALL.to_vec()).prop_flat_map(|op| {
            let imm = if op.is_shift() { (0i32..32).boxed() } else { (-2048i32..2048).boxed() };
            imm.prop_map(move |i| (op, i))
        })
    }

    /// Instructions without control transfer, writing only `rd_strategy`.
    pub fn straight(rd: BoxedStrategy<Reg>) -> impl Strategy<Value = Instr> {
        let op = prop::sample::select(RegOp::ALL.to_vec());
        prop_oneof![
            (rd.clone(), 0u32..(1 << 20)).prop_map(|(rd, imm)| Instr::Lui { rd, imm }),
            (rd.clone(), reg(), -2048i32..2048).prop_map(|(rd, rs1, offset)| Instr::Lw { rd, rs1, offset }),
            (reg(), reg(), -2048i32..2048).prop_map(|(rs1, rs2, offset)| Instr::Sw { rs1, rs2, offset }),
            (imm_op(), rd.clone(), reg()).prop_map(|((op, imm), rd, rs1)| Instr::OpImm { op, rd, rs1, imm }),
            (op, rd, reg(), reg()).prop_map(|(op, rd, rs1, rs2)| Instr::Op { op, rd, rs1, rs2 }),
        ]
    }

    pub fn branch_cond() -> impl Strategy<Value = BranchCond> {
        prop::sample::select(vec![
            BranchCond::Eq,
            BranchCond::Ne,
            BranchCond::Lt,
            BranchCond::Ge,
            BranchCond::Ltu,
            BranchCond::Geu,
        ])
    }

    /// Any supported, encodable instruction.
    pub fn any_instr() -> impl Strategy<Value = Instr> {
        prop_oneof![
            4 => straight(reg().boxed()),
            1 => (reg(), (-(1i32 << 19)..(1 << 19))).prop_map(|(rd, o)| Instr::Jal { rd, offset: o * 2 }),
            1 => (branch_cond(), reg(), reg(), -2048i32..2048)
                .prop_map(|(cond, rs1, rs2, o)| Instr::Branch { cond, rs1, rs2, offset: o * 2 }),
        ]
    }
}

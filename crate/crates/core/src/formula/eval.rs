use std::collections::BTreeMap;
use std::fmt;

use super::{BinaryOp, Expr, Formula, UnaryOp};

/// Result of evaluating a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    /// W-bit value, zero-extended into a u64.
    Bv(u64),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Bv(_) => None,
        }
    }

    /// Numeric view: booleans are 0/1.
    pub fn bits(self) -> u64 {
        match self {
            Value::Bool(b) => b as u64,
            Value::Bv(v) => v,
        }
    }
}

/// Word-indexed data memory. Indices are reduced modulo the memory size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    words: Vec<u64>,
}

impl Memory {
    pub fn zeroed(size: usize) -> Memory {
        assert!(size > 0, "memory must have at least one word");
        Memory {
            words: vec![0; size],
        }
    }

    pub fn from_words(words: Vec<u64>) -> Memory {
        assert!(!words.is_empty(), "memory must have at least one word");
        Memory { words }
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn read(&self, index: u64) -> u64 {
        self.words[(index % self.words.len() as u64) as usize]
    }

    pub fn write(&mut self, index: u64, value: u64) {
        let n = self.words.len() as u64;
        self.words[(index % n) as usize] = value;
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Assignment of signed integer values to variable names. Values are
/// reduced to the evaluation width, so `-1` and `15` coincide at W=4.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Assignment(BTreeMap<String, i64>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment(BTreeMap::new())
    }

    pub fn set(&mut self, name: &str, value: i64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn with(mut self, name: &str, value: i64) -> Assignment {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, i64)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, i64)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Sign-extends a W-bit value to i64.
pub fn to_signed(v: u64, width: u32) -> i64 {
    if width >= 64 {
        return v as i64;
    }
    let shift = 64 - width;
    ((v << shift) as i64) >> shift
}

pub(crate) struct Evaluator<'a> {
    width: u32,
    mask: u64,
    lookup: &'a dyn Fn(&str) -> u64,
    mem0: &'a Memory,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(width: u32, lookup: &'a dyn Fn(&str) -> u64, mem0: &'a Memory) -> Self {
        assert!((1..=64).contains(&width), "width must be in 1..=64");
        Evaluator {
            width,
            mask: mask(width),
            lookup,
            mem0,
        }
    }

    fn bv(&self, e: &Expr) -> u64 {
        match self.eval(e) {
            Value::Bv(v) => v,
            Value::Bool(b) => b as u64,
        }
    }

    fn boolean(&self, e: &Expr) -> bool {
        match self.eval(e) {
            Value::Bool(b) => b,
            Value::Bv(v) => v != 0,
        }
    }

    fn memory(&self, e: &Expr) -> Memory {
        match e {
            Expr::Var(_) => self.mem0.clone(),
            Expr::Store(m, i, v) => {
                let mut mem = self.memory(m);
                let idx = self.bv(i);
                let val = self.bv(v);
                mem.write(idx, val);
                mem
            }
            _ => unreachable!("memory operand is a variable or a store"),
        }
    }

    pub(crate) fn eval(&self, e: &Expr) -> Value {
        let m = self.mask;
        match e {
            Expr::Var(name) => Value::Bv((self.lookup)(name) & m),
            Expr::Const(c) => Value::Bv((*c as u64) & m),
            Expr::Unary(op, child) => match op {
                UnaryOp::LogNot => Value::Bool(!self.boolean(child)),
                UnaryOp::BitNot => Value::Bv(!self.bv(child) & m),
                UnaryOp::Neg => Value::Bv(self.bv(child).wrapping_neg() & m),
            },
            Expr::Binary(op, l, r) => match op {
                BinaryOp::LogAnd => Value::Bool(self.boolean(l) && self.boolean(r)),
                BinaryOp::LogOr => Value::Bool(self.boolean(l) || self.boolean(r)),
                BinaryOp::Implies => Value::Bool(!self.boolean(l) || self.boolean(r)),
                _ => {
                    let a = self.bv(l);
                    let b = self.bv(r);
                    let w = self.width;
                    match op {
                        BinaryOp::Add => Value::Bv(a.wrapping_add(b) & m),
                        BinaryOp::Sub => Value::Bv(a.wrapping_sub(b) & m),
                        BinaryOp::Mul => Value::Bv(a.wrapping_mul(b) & m),
                        BinaryOp::And => Value::Bv(a & b),
                        BinaryOp::Or => Value::Bv(a | b),
                        BinaryOp::Xor => Value::Bv(a ^ b),
                        BinaryOp::LtS => Value::Bool(to_signed(a, w) < to_signed(b, w)),
                        BinaryOp::GtS => Value::Bool(to_signed(a, w) > to_signed(b, w)),
                        BinaryOp::LtU => Value::Bool(a < b),
                        BinaryOp::Eq => Value::Bool(a == b),
                        BinaryOp::Ne => Value::Bool(a != b),
                        BinaryOp::LogAnd | BinaryOp::LogOr | BinaryOp::Implies => unreachable!(),
                    }
                }
            },
            Expr::Load(mem, idx) => {
                let memory = self.memory(mem);
                Value::Bv(memory.read(self.bv(idx)) & m)
            }
            Expr::Store(..) => unreachable!("stores only occur under ld"),
        }
    }
}

/// Evaluates `f` under `sigma` with W-bit wraparound arithmetic.
///
/// Panics if `sigma` does not assign a free variable of `f`.
pub fn eval_formula(f: &Formula, sigma: &Assignment, mem0: &Memory, width: u32) -> Value {
    let lookup = |name: &str| -> u64 {
        sigma
            .get(name)
            .unwrap_or_else(|| panic!("variable `{name}` is not assigned")) as u64
    };
    Evaluator::new(width, &lookup, mem0).eval(f.root())
}

/// Like [`eval_formula`], with variable values supplied by a callback.
pub fn eval_formula_with(
    f: &Formula,
    lookup: &dyn Fn(&str) -> u64,
    mem0: &Memory,
    width: u32,
) -> Value {
    Evaluator::new(width, lookup, mem0).eval(f.root())
}

//! Three-address intermediate representation and AST lowering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::{BinaryOp, Expr, Formula, UnaryOp};

use super::CompileError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Temp(pub u32);

impl fmt::Display for Temp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%t{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Temp(Temp),
    /// Input variable, by position in [`IrProgram::inputs`].
    Input(usize),
    Const(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Slt,
    Sltu,
    Seq,
    Sne,
}

impl IrOp {
    pub fn name(self) -> &'static str {
        match self {
            IrOp::Add => "add",
            IrOp::Sub => "sub",
            IrOp::Mul => "mul",
            IrOp::And => "and",
            IrOp::Or => "or",
            IrOp::Xor => "xor",
            IrOp::Slt => "slt",
            IrOp::Sltu => "sltu",
            IrOp::Seq => "seq",
            IrOp::Sne => "sne",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Compute {
        dst: Temp,
        op: IrOp,
        a: Operand,
        b: Operand,
    },
    LoadImm {
        dst: Temp,
        value: i64,
    },
    /// `dst = (index & 0xFF) << 2`, a byte address in the data segment.
    MemAddr {
        dst: Temp,
        index: Operand,
    },
    MemLoad {
        dst: Temp,
        addr: Temp,
    },
    MemStore {
        addr: Temp,
        value: Operand,
    },
    /// Jumps to `target` when `cond` is zero.
    Branch {
        cond: Temp,
        target: String,
    },
    Jump {
        target: String,
    },
    Label(String),
    ResultAccumulate(Temp),
    Finish,
}

impl Directive {
    pub fn def(&self) -> Option<Temp> {
        match self {
            Directive::Compute { dst, .. }
            | Directive::LoadImm { dst, .. }
            | Directive::MemAddr { dst, .. }
            | Directive::MemLoad { dst, .. } => Some(*dst),
            _ => None,
        }
    }

    pub fn uses(&self) -> Vec<Temp> {
        fn op(o: &Operand) -> Option<Temp> {
            match o {
                Operand::Temp(t) => Some(*t),
                _ => None,
            }
        }
        match self {
            Directive::Compute { a, b, .. } => op(a).into_iter().chain(op(b)).collect(),
            Directive::MemAddr { index, .. } => op(index).into_iter().collect(),
            Directive::MemLoad { addr, .. } => vec![*addr],
            Directive::MemStore { addr, value } => std::iter::once(*addr).chain(op(value)).collect(),
            Directive::Branch { cond, .. } => vec![*cond],
            Directive::ResultAccumulate(t) => vec![*t],
            _ => Vec::new(),
        }
    }
}

/// Lowered form of one tautology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrProgram {
    pub name: String,
    /// Free variables in register order.
    pub inputs: Vec<String>,
    pub directives: Vec<Directive>,
    /// Temps that merge the two arms of an implication. They are assigned
    /// once per arm (plus a zero default) instead of once overall.
    pub join_temps: BTreeSet<Temp>,
}

impl IrProgram {
    pub fn temp_count(&self) -> usize {
        self.directives
            .iter()
            .filter_map(Directive::def)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Checks single assignment (join temps excepted), definition before
    /// use in program order, unique labels and resolvable targets.
    pub fn check_structure(&self) -> Result<(), String> {
        let mut defined = BTreeSet::new();
        let mut labels = BTreeMap::new();
        for (i, d) in self.directives.iter().enumerate() {
            if let Directive::Label(l) = d {
                if labels.insert(l.clone(), i).is_some() {
                    return Err(format!("label `{l}` defined twice"));
                }
            }
        }
        let mut accumulates = 0;
        for (i, d) in self.directives.iter().enumerate() {
            for u in d.uses() {
                if !defined.contains(&u) {
                    return Err(format!("{u} used before definition at directive {i}"));
                }
            }
            if let Some(t) = d.def() {
                if !defined.insert(t) && !self.join_temps.contains(&t) {
                    return Err(format!("{t} assigned twice"));
                }
            }
            match d {
                Directive::Branch { target, .. } | Directive::Jump { target } => {
                    match labels.get(target) {
                        Some(&at) if at > i => {}
                        Some(_) => return Err(format!("backward jump to `{target}`")),
                        None => return Err(format!("undefined label `{target}`")),
                    }
                }
                Directive::ResultAccumulate(_) => accumulates += 1,
                Directive::Finish => {
                    if accumulates != 1 {
                        return Err("finish must follow exactly one accumulate".into());
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, o: &Operand, inputs: &[String]) -> fmt::Result {
    match o {
        Operand::Temp(t) => write!(f, "{t}"),
        Operand::Input(i) => write!(f, "%{}", inputs[*i]),
        Operand::Const(c) => write!(f, "{c}"),
    }
}

impl fmt::Display for IrProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "; {}", self.name)?;
        for d in &self.directives {
            match d {
                Directive::Label(l) => {
                    writeln!(f, "{l}:")?;
                    continue;
                }
                _ => f.write_str("  ")?,
            }
            match d {
                Directive::Compute { dst, op, a, b } => {
                    write!(f, "{dst} = {} i32 ", op.name())?;
                    write_operand(f, a, &self.inputs)?;
                    f.write_str(", ")?;
                    write_operand(f, b, &self.inputs)?;
                }
                Directive::LoadImm { dst, value } => write!(f, "{dst} = li i32 {value}")?,
                Directive::MemAddr { dst, index } => {
                    write!(f, "{dst} = addr i32 ")?;
                    write_operand(f, index, &self.inputs)?;
                }
                Directive::MemLoad { dst, addr } => write!(f, "{dst} = ld i32 {addr}")?,
                Directive::MemStore { addr, value } => {
                    write!(f, "st i32 {addr}, ")?;
                    write_operand(f, value, &self.inputs)?;
                }
                Directive::Branch { cond, target } => write!(f, "beq {cond}, {target}")?,
                Directive::Jump { target } => write!(f, "jmp {target}")?,
                Directive::ResultAccumulate(t) => write!(f, "%result_reg = and i32 {t}, %result_reg")?,
                Directive::Finish => f.write_str("finish")?,
                Directive::Label(_) => unreachable!(),
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Lowerer<'a> {
    inputs: &'a [String],
    out: Vec<Directive>,
    next_temp: u32,
    next_label: u32,
    join_temps: BTreeSet<Temp>,
}

impl Lowerer<'_> {
    fn fresh(&mut self) -> Temp {
        let t = Temp(self.next_temp);
        self.next_temp += 1;
        t
    }

    fn compute(&mut self, op: IrOp, a: Operand, b: Operand) -> Temp {
        let dst = self.fresh();
        self.out.push(Directive::Compute { dst, op, a, b });
        dst
    }

    fn temp_of(&mut self, o: Operand) -> Temp {
        match o {
            Operand::Temp(t) => t,
            other => self.compute(IrOp::Add, other, Operand::Const(0)),
        }
    }

    fn lower(&mut self, e: &Expr) -> Result<Operand, CompileError> {
        Ok(match e {
            Expr::Var(name) => {
                let i = self.inputs.iter().position(|v| v == name).ok_or_else(|| {
                    CompileError::Unsupported(format!("variable `{name}` outside an input role"))
                })?;
                Operand::Input(i)
            }
            Expr::Const(0) => Operand::Const(0),
            Expr::Const(c) => {
                let dst = self.fresh();
                self.out.push(Directive::LoadImm {
                    dst,
                    value: *c as i32 as i64,
                });
                Operand::Temp(dst)
            }
            Expr::Unary(op, child) => {
                let a = self.lower(child)?;
                let t = match op {
                    UnaryOp::LogNot => self.compute(IrOp::Seq, a, Operand::Const(0)),
                    UnaryOp::BitNot => self.compute(IrOp::Xor, a, Operand::Const(-1)),
                    UnaryOp::Neg => self.compute(IrOp::Sub, Operand::Const(0), a),
                };
                Operand::Temp(t)
            }
            Expr::Binary(BinaryOp::Implies, p, q) => Operand::Temp(self.implies(p, q)?),
            Expr::Binary(op, l, r) => {
                let a = self.lower(l)?;
                let b = self.lower(r)?;
                let (op, a, b) = match op {
                    BinaryOp::Add => (IrOp::Add, a, b),
                    BinaryOp::Sub => (IrOp::Sub, a, b),
                    BinaryOp::Mul => (IrOp::Mul, a, b),
                    BinaryOp::And | BinaryOp::LogAnd => (IrOp::And, a, b),
                    BinaryOp::Or | BinaryOp::LogOr => (IrOp::Or, a, b),
                    BinaryOp::Xor => (IrOp::Xor, a, b),
                    BinaryOp::LtS => (IrOp::Slt, a, b),
                    BinaryOp::GtS => (IrOp::Slt, b, a),
                    BinaryOp::LtU => (IrOp::Sltu, a, b),
                    BinaryOp::Eq => (IrOp::Seq, a, b),
                    BinaryOp::Ne => (IrOp::Sne, a, b),
                    BinaryOp::Implies => unreachable!(),
                };
                Operand::Temp(self.compute(op, a, b))
            }
            Expr::Load(mem, idx) => Operand::Temp(self.load(mem, idx)?),
            Expr::Store(..) => {
                return Err(CompileError::Unsupported("store outside a load".into()));
            }
        })
    }

    /// `P -> Q`: the consequent block runs only when `P` holds; the other
    /// arm yields `P == 0`, which is 1 on that path.
    fn implies(&mut self, p: &Expr, q: &Expr) -> Result<Temp, CompileError> {
        let n = self.next_label;
        self.next_label += 1;
        let (if_l, else_l, join_l) = (format!("if_{n}"), format!("else_{n}"), format!("join_{n}"));

        let tp = self.lower(p)?;
        let tp = self.temp_of(tp);
        let tr = self.fresh();
        self.join_temps.insert(tr);
        self.out.push(Directive::LoadImm { dst: tr, value: 0 });
        self.out.push(Directive::Branch {
            cond: tp,
            target: else_l.clone(),
        });
        self.out.push(Directive::Label(if_l));
        let tq = self.lower(q)?;
        self.out.push(Directive::Compute {
            dst: tr,
            op: IrOp::And,
            a: tq,
            b: Operand::Temp(tp),
        });
        self.out.push(Directive::Jump {
            target: join_l.clone(),
        });
        self.out.push(Directive::Label(else_l));
        self.out.push(Directive::Compute {
            dst: tr,
            op: IrOp::Seq,
            a: Operand::Temp(tp),
            b: Operand::Const(0),
        });
        self.out.push(Directive::Label(join_l));
        Ok(tr)
    }

    /// Applies the stores of `mem` to the data segment, reads `idx`, then
    /// puts back the overwritten words so later loads see the initial memory.
    fn load(&mut self, mem: &Expr, idx: &Expr) -> Result<Temp, CompileError> {
        let mut stores = Vec::new();
        let mut cur = mem;
        while let Expr::Store(m, i, v) = cur {
            stores.push((i.as_ref(), v.as_ref()));
            cur = m;
        }
        stores.reverse();
        let mut lowered = Vec::new();
        for (i, v) in &stores {
            let i = self.lower(i)?;
            let v = self.lower(v)?;
            lowered.push((i, v));
        }
        let read_index = self.lower(idx)?;

        let mut saved = Vec::new();
        for (i, v) in lowered {
            let addr = self.fresh();
            self.out.push(Directive::MemAddr { dst: addr, index: i });
            let old = self.fresh();
            self.out.push(Directive::MemLoad { dst: old, addr });
            self.out.push(Directive::MemStore { addr, value: v });
            saved.push((addr, old));
        }
        let addr = self.fresh();
        self.out.push(Directive::MemAddr {
            dst: addr,
            index: read_index,
        });
        let result = self.fresh();
        self.out.push(Directive::MemLoad { dst: result, addr });
        for (addr, old) in saved.into_iter().rev() {
            self.out.push(Directive::MemStore {
                addr,
                value: Operand::Temp(old),
            });
        }
        Ok(result)
    }
}

/// Lowers a boolean formula to IR, ending with the result accumulation and
/// the finish marker.
pub fn lower_to_ir(name: &str, f: &Formula) -> Result<IrProgram, CompileError> {
    if !f.is_boolean() {
        return Err(CompileError::NotBoolean(name.to_string()));
    }
    let inputs: Vec<String> = f.free_vars().into_iter().collect();
    let mut l = Lowerer {
        inputs: &inputs,
        out: Vec::new(),
        next_temp: 1,
        next_label: 0,
        join_temps: BTreeSet::new(),
    };
    let top = l.lower(f.root())?;
    let top = l.temp_of(top);
    l.out.push(Directive::ResultAccumulate(top));
    l.out.push(Directive::Finish);
    let join_temps = l.join_temps;
    let directives = l.out;
    Ok(IrProgram {
        name: name.to_string(),
        inputs,
        directives,
        join_temps,
    })
}

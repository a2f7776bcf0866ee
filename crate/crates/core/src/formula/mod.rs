//! Formula language: a small first-order language over fixed-width
//! bitvectors with logical connectives and a functional word memory.
//!
//! Formulas are used in three roles: seeds (first-order tautologies over
//! machine operations), templates (propositional skeletons whose leaves are
//! placeholders), and instantiated tautologies produced by the synthesizer.

mod eval;
mod library;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{eval_formula, eval_formula_with, to_signed, Assignment, Memory, Value};
pub use library::{
    parse_corpus, CorpusEntry, Seed, SeedLibrary, Template, TemplateLibrary, SHIPPED_SEEDS,
    SHIPPED_TEMPLATES,
};
pub use parse::{parse_expr, parse_formula};
pub use print::print_formula;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("type error at {path}: {message}")]
    Type { path: String, message: String },
    #[error("{context}: {source}")]
    Corpus {
        context: String,
        #[source]
        source: Box<FormulaError>,
    },
    #[error("{0}")]
    Library(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    /// Bitwise complement `~`.
    BitNot,
    /// Logical negation `!`.
    LogNot,
    /// Two's-complement negation `-`.
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    LtS,
    LtU,
    GtS,
    Eq,
    Ne,
    LogAnd,
    LogOr,
    Implies,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::LtS => "<",
            BinaryOp::LtU => "<u",
            BinaryOp::GtS => ">",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
            BinaryOp::Implies => "->",
        }
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::LogAnd | BinaryOp::LogOr | BinaryOp::Implies)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::LtS | BinaryOp::LtU | BinaryOp::GtS | BinaryOp::Eq | BinaryOp::Ne
        )
    }

    pub fn is_bitwise(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or | BinaryOp::Xor)
    }
}

/// Expression node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    /// Integer literal as written; reduced modulo 2^W at evaluation.
    Const(i64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// `ld(mem, index)`
    Load(Box<Expr>, Box<Expr>),
    /// `st(mem, index, value)`
    Store(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn load(mem: Expr, idx: Expr) -> Expr {
        Expr::Load(Box::new(mem), Box::new(idx))
    }

    pub fn store(mem: Expr, idx: Expr, val: Expr) -> Expr {
        Expr::Store(Box::new(mem), Box::new(idx), Box::new(val))
    }

    /// Replaces every `Var(name)` for which `f` returns a replacement.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(name) => f(name).unwrap_or_else(|| self.clone()),
            Expr::Const(_) => self.clone(),
            Expr::Unary(op, e) => Expr::unary(*op, e.substitute(f)),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.substitute(f), r.substitute(f)),
            Expr::Load(m, i) => Expr::load(m.substitute(f), i.substitute(f)),
            Expr::Store(m, i, v) => Expr::store(m.substitute(f), i.substitute(f), v.substitute(f)),
        }
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Var(_) | Expr::Const(_) => {}
            Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Load(m, i) => {
                m.visit(f);
                i.visit(f);
            }
            Expr::Store(m, i, v) => {
                m.visit(f);
                i.visit(f);
                v.visit(f);
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

/// Sort of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Bv,
    Mem,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "boolean",
            Sort::Bv => "bitvector",
            Sort::Mem => "memory",
        })
    }
}

/// A well-typed formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    root: Expr,
}

impl Formula {
    /// Type-checks `root` and wraps it.
    pub fn new(root: Expr) -> Result<Formula, FormulaError> {
        validate_root(&root)?;
        Ok(Formula { root })
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn into_root(self) -> Expr {
        self.root
    }

    pub fn sort(&self) -> Sort {
        typecheck(&self.root).expect("formula was type-checked at construction")
    }

    pub fn is_boolean(&self) -> bool {
        self.sort() == Sort::Bool
    }

    /// Bitvector free variables, sorted by name. Memory variables are
    /// excluded; they all denote the initial memory.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut mem = BTreeSet::new();
        collect_mem_vars(&self.root, &mut mem);
        let mut vars = BTreeSet::new();
        self.root.visit(&mut |e| {
            if let Expr::Var(name) = e {
                if !mem.contains(name) {
                    vars.insert(name.clone());
                }
            }
        });
        vars
    }

    /// Memory variables (names used in the memory position of `ld`/`st`).
    pub fn memory_vars(&self) -> BTreeSet<String> {
        let mut mem = BTreeSet::new();
        collect_mem_vars(&self.root, &mut mem);
        mem
    }

    pub fn uses_memory(&self) -> bool {
        let mut found = false;
        self.root.visit(&mut |e| {
            if matches!(e, Expr::Load(..)) {
                found = true
            }
        });
        found
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

fn collect_mem_vars(e: &Expr, out: &mut BTreeSet<String>) {
    e.visit(&mut |node| match node {
        Expr::Load(m, _) | Expr::Store(m, _, _) => {
            if let Expr::Var(name) = m.as_ref() {
                out.insert(name.clone());
            }
        }
        _ => {}
    });
}

fn type_err(path: &str, message: impl Into<String>) -> FormulaError {
    FormulaError::Type {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Computes the sort of `root`, rejecting ill-typed trees.
pub fn typecheck(root: &Expr) -> Result<Sort, FormulaError> {
    let mut mem = BTreeSet::new();
    collect_mem_vars(root, &mut mem);
    sort_of(root, &mem, "root")
}

fn expect(
    e: &Expr,
    want: Sort,
    mem: &BTreeSet<String>,
    path: &str,
) -> Result<(), FormulaError> {
    let got = sort_of(e, mem, path)?;
    if got != want {
        return Err(type_err(path, format!("expected {want}, found {got}")));
    }
    Ok(())
}

fn sort_of(e: &Expr, mem: &BTreeSet<String>, path: &str) -> Result<Sort, FormulaError> {
    match e {
        Expr::Var(name) => {
            if mem.contains(name) {
                Ok(Sort::Mem)
            } else {
                Ok(Sort::Bv)
            }
        }
        Expr::Const(_) => Ok(Sort::Bv),
        Expr::Unary(op, child) => {
            let p = format!("{path}.arg");
            match op {
                UnaryOp::LogNot => {
                    expect(child, Sort::Bool, mem, &p)?;
                    Ok(Sort::Bool)
                }
                UnaryOp::BitNot | UnaryOp::Neg => {
                    expect(child, Sort::Bv, mem, &p)?;
                    Ok(Sort::Bv)
                }
            }
        }
        Expr::Binary(op, l, r) => {
            let lp = format!("{path}.left");
            let rp = format!("{path}.right");
            if op.is_logical() {
                expect(l, Sort::Bool, mem, &lp)?;
                expect(r, Sort::Bool, mem, &rp)?;
                Ok(Sort::Bool)
            } else if matches!(op, BinaryOp::Eq | BinaryOp::Ne) {
                let ls = sort_of(l, mem, &lp)?;
                if ls == Sort::Mem {
                    return Err(type_err(&lp, "memory values cannot be compared"));
                }
                expect(r, ls, mem, &rp)?;
                Ok(Sort::Bool)
            } else if op.is_comparison() {
                expect(l, Sort::Bv, mem, &lp)?;
                expect(r, Sort::Bv, mem, &rp)?;
                Ok(Sort::Bool)
            } else {
                expect(l, Sort::Bv, mem, &lp)?;
                expect(r, Sort::Bv, mem, &rp)?;
                Ok(Sort::Bv)
            }
        }
        Expr::Load(m, i) => {
            check_mem_operand(m, mem, &format!("{path}.mem"))?;
            expect(i, Sort::Bv, mem, &format!("{path}.index"))?;
            Ok(Sort::Bv)
        }
        Expr::Store(m, i, v) => {
            check_mem_operand(m, mem, &format!("{path}.mem"))?;
            expect(i, Sort::Bv, mem, &format!("{path}.index"))?;
            expect(v, Sort::Bv, mem, &format!("{path}.value"))?;
            Ok(Sort::Mem)
        }
    }
}

fn check_mem_operand(m: &Expr, mem: &BTreeSet<String>, path: &str) -> Result<(), FormulaError> {
    match m {
        Expr::Var(_) => Ok(()),
        Expr::Store(..) => sort_of(m, mem, path).map(|_| ()),
        _ => Err(type_err(path, "memory operand must be a memory variable or st(...)")),
    }
}

/// Checks that a top-level expression is not a bare memory value and that
/// memory variables are used only as memories.
pub(crate) fn validate_root(root: &Expr) -> Result<Sort, FormulaError> {
    let sort = typecheck(root)?;
    if sort == Sort::Mem {
        return Err(type_err("root", "a memory value may only appear inside ld(...)"));
    }
    let mut mem = BTreeSet::new();
    collect_mem_vars(root, &mut mem);
    // A memory variable must not also occur as a bitvector operand.
    check_var_roles(root, &mem, false, "root")?;
    Ok(sort)
}

fn check_var_roles(
    e: &Expr,
    mem: &BTreeSet<String>,
    in_mem_position: bool,
    path: &str,
) -> Result<(), FormulaError> {
    match e {
        Expr::Var(name) => {
            if mem.contains(name) && !in_mem_position {
                return Err(type_err(
                    path,
                    format!("`{name}` is used both as a memory and as a bitvector"),
                ));
            }
            Ok(())
        }
        Expr::Const(_) => Ok(()),
        Expr::Unary(_, c) => check_var_roles(c, mem, false, &format!("{path}.arg")),
        Expr::Binary(_, l, r) => {
            check_var_roles(l, mem, false, &format!("{path}.left"))?;
            check_var_roles(r, mem, false, &format!("{path}.right"))
        }
        Expr::Load(m, i) => {
            check_var_roles(m, mem, true, &format!("{path}.mem"))?;
            check_var_roles(i, mem, false, &format!("{path}.index"))
        }
        Expr::Store(m, i, v) => {
            check_var_roles(m, mem, true, &format!("{path}.mem"))?;
            check_var_roles(i, mem, false, &format!("{path}.index"))?;
            check_var_roles(v, mem, false, &format!("{path}.value"))
        }
    }
}

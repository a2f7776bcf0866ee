use super::{BinaryOp, Expr, Formula, FormulaError, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FormulaError {
    FormulaError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

// Longest operators first so that "<u" wins over "<" and "->" over "-".
const OPERATORS: &[&str] = &[
    "->", "&&", "||", "==", "!=", "<u", "<", ">", "+", "-", "*", "&", "|", "^", "~", "!",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<Token>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let start_col = col;
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line,
                column: start_col,
            })
        };
        if is_ident_start(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            push(&mut out, Tok::Ident(word));
            col += j - i;
            i = j;
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            let value = if c == '0' && matches!(chars.get(i + 1), Some('x') | Some('X')) {
                j += 2;
                let s = j;
                while j < chars.len() && chars[j].is_ascii_hexdigit() {
                    j += 1;
                }
                let digits: String = chars[s..j].iter().collect();
                if digits.is_empty() {
                    return Err(syntax(line, start_col, "hex literal has no digits"));
                }
                i64::from_str_radix(&digits, 16)
                    .map_err(|_| syntax(line, start_col, "integer literal too large"))?
            } else {
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[i..j].iter().collect();
                digits
                    .parse::<i64>()
                    .map_err(|_| syntax(line, start_col, "integer literal too large"))?
            };
            if j < chars.len() && is_ident_char(chars[j]) {
                return Err(syntax(line, col + (j - i), "malformed integer literal"));
            }
            push(&mut out, Tok::Int(value));
            col += j - i;
            i = j;
            continue;
        }
        match c {
            '(' => push(&mut out, Tok::LParen),
            ')' => push(&mut out, Tok::RParen),
            ',' => push(&mut out, Tok::Comma),
            _ => {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                let op = OPERATORS.iter().find(|op| {
                    rest.starts_with(**op)
                        // "<u" only when the u is not the start of an identifier
                        && (**op != "<u"
                            || !chars.get(i + 2).copied().is_some_and(is_ident_char))
                });
                match op {
                    Some(op) => {
                        push(&mut out, Tok::Op(op));
                        col += op.len();
                        i += op.len();
                        continue;
                    }
                    None => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
                }
            }
        }
        col += 1;
        i += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

// Binding powers, loosest first.
const PREC_IMPLIES: u8 = 1;
const PREC_LOGOR: u8 = 2;
const PREC_LOGAND: u8 = 3;
const PREC_LOGNOT: u8 = 4;
const PREC_CMP: u8 = 5;
const PREC_BITWISE: u8 = 6;
const PREC_ADD: u8 = 7;
const PREC_MUL: u8 = 8;

pub(super) fn binary_prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Implies => PREC_IMPLIES,
        BinaryOp::LogOr => PREC_LOGOR,
        BinaryOp::LogAnd => PREC_LOGAND,
        BinaryOp::LtS | BinaryOp::LtU | BinaryOp::GtS | BinaryOp::Eq | BinaryOp::Ne => PREC_CMP,
        BinaryOp::And | BinaryOp::Or | BinaryOp::Xor => PREC_BITWISE,
        BinaryOp::Add | BinaryOp::Sub => PREC_ADD,
        BinaryOp::Mul => PREC_MUL,
    }
}

pub(super) const PREC_LOGNOT_OPERAND: u8 = PREC_LOGNOT;

fn binary_op(s: &str) -> Option<BinaryOp> {
    Some(match s {
        "->" => BinaryOp::Implies,
        "||" => BinaryOp::LogOr,
        "&&" => BinaryOp::LogAnd,
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "<" => BinaryOp::LtS,
        "<u" => BinaryOp::LtU,
        ">" => BinaryOp::GtS,
        "&" => BinaryOp::And,
        "|" => BinaryOp::Or,
        "^" => BinaryOp::Xor,
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> FormulaError {
        let t = self.peek();
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek().tok == want {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    /// Precedence climbing. `min` is the loosest binding power accepted.
    fn expr(&mut self, min: u8) -> Result<Expr, FormulaError> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Op(s) => match binary_op(s) {
                    Some(op) => op,
                    None => break,
                },
                _ => break,
            };
            let prec = binary_prec(op);
            if prec < min {
                break;
            }
            self.next();
            // implies is right-associative; everything else is left.
            let rhs = if op == BinaryOp::Implies {
                self.expr(prec)?
            } else {
                self.expr(prec + 1)?
            };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, FormulaError> {
        match self.peek().tok.clone() {
            Tok::Op("!") => {
                self.next();
                // `!` binds looser than comparisons: `!x < y` is `!(x < y)`.
                let e = self.expr(PREC_LOGNOT)?;
                Ok(Expr::unary(UnaryOp::LogNot, e))
            }
            Tok::Op("~") => {
                self.next();
                Ok(Expr::unary(UnaryOp::BitNot, self.prefix()?))
            }
            Tok::Op("-") => {
                self.next();
                if let Tok::Int(v) = self.peek().tok {
                    self.next();
                    return Ok(Expr::Const(-v));
                }
                Ok(Expr::unary(UnaryOp::Neg, self.prefix()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, FormulaError> {
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(Expr::Const(v)),
            Tok::Ident(name) if name == "ld" || name == "st" => {
                self.expect(Tok::LParen, "`(` after memory operator")?;
                let mem = self.expr(PREC_IMPLIES)?;
                self.expect(Tok::Comma, "`,`")?;
                let idx = self.expr(PREC_IMPLIES)?;
                let e = if name == "st" {
                    self.expect(Tok::Comma, "`,`")?;
                    let val = self.expr(PREC_IMPLIES)?;
                    Expr::store(mem, idx, val)
                } else {
                    Expr::load(mem, idx)
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => Ok(Expr::Var(name)),
            Tok::LParen => {
                let e = self.expr(PREC_IMPLIES)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Eof => Err(syntax(t.line, t.column, "unexpected end of input")),
            other => Err(syntax(t.line, t.column, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses the surface syntax without type checking.
pub fn parse_expr(text: &str) -> Result<Expr, FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.expr(PREC_IMPLIES)?;
    if p.peek().tok != Tok::Eof {
        return Err(p.err_here("trailing input"));
    }
    Ok(e)
}

/// Parses and type-checks a formula. Integer literals must be representable
/// in `width` bits, either as signed or as unsigned values.
pub fn parse_formula(text: &str, width: u32) -> Result<Formula, FormulaError> {
    let e = parse_expr(text)?;
    check_literals(&e, width, "root")?;
    Formula::new(e)
}

fn check_literals(e: &Expr, width: u32, path: &str) -> Result<(), FormulaError> {
    match e {
        Expr::Const(v) => {
            let w = width.min(63);
            let lo = -(1i64 << (w - 1));
            let hi = (1i64 << w) - 1;
            if *v < lo || *v > hi {
                return Err(FormulaError::Type {
                    path: path.to_string(),
                    message: format!("literal {v} does not fit in {width} bits"),
                });
            }
            Ok(())
        }
        Expr::Var(_) => Ok(()),
        Expr::Unary(_, c) => check_literals(c, width, &format!("{path}.arg")),
        Expr::Binary(_, l, r) => {
            check_literals(l, width, &format!("{path}.left"))?;
            check_literals(r, width, &format!("{path}.right"))
        }
        Expr::Load(m, i) => {
            check_literals(m, width, &format!("{path}.mem"))?;
            check_literals(i, width, &format!("{path}.index"))
        }
        Expr::Store(m, i, v) => {
            check_literals(m, width, &format!("{path}.mem"))?;
            check_literals(i, width, &format!("{path}.index"))?;
            check_literals(v, width, &format!("{path}.value"))
        }
    }
}

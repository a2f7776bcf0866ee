use super::parse::{binary_prec, PREC_LOGNOT_OPERAND};
use super::{BinaryOp, Expr, Formula, UnaryOp};

const PREC_PREFIX: u8 = 9;
const PREC_ATOM: u8 = 10;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => binary_prec(*op),
        Expr::Unary(UnaryOp::LogNot, _) => PREC_LOGNOT_OPERAND,
        Expr::Unary(_, _) => PREC_PREFIX,
        _ => PREC_ATOM,
    }
}

/// Renders a formula in the surface syntax, with the minimal parentheses
/// needed for `parse_formula` to rebuild the same tree. Mixed bitwise
/// operators and binary operands of `!` are always parenthesized for
/// readability.
pub fn print_formula(f: &Formula) -> String {
    print_expr(f.root())
}

pub(crate) fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_child(child: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_expr(child, out);
        out.push(')');
    } else {
        write_expr(child, out);
    }
}

fn mixed_bitwise(parent: BinaryOp, child: &Expr) -> bool {
    match child {
        Expr::Binary(op, _, _) => parent.is_bitwise() && op.is_bitwise() && *op != parent,
        _ => false,
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Var(name) => out.push_str(name),
        Expr::Const(v) => out.push_str(&v.to_string()),
        Expr::Unary(op, child) => {
            match op {
                UnaryOp::LogNot => {
                    // `!` binds looser than comparisons; a binary operand is
                    // parenthesized anyway so `!(a == b)` reads unambiguously.
                    out.push('!');
                    write_child(child, matches!(child.as_ref(), Expr::Binary(..)), out);
                }
                UnaryOp::BitNot | UnaryOp::Neg => {
                    out.push(if *op == UnaryOp::BitNot { '~' } else { '-' });
                    // `-4` would read back as a literal, so a negated
                    // non-negative literal keeps its parentheses.
                    let literal_clash =
                        *op == UnaryOp::Neg && matches!(child.as_ref(), Expr::Const(v) if *v >= 0);
                    write_child(child, literal_clash || prec(child) < PREC_PREFIX, out);
                }
            }
        }
        Expr::Binary(op, l, r) => {
            let p = binary_prec(*op);
            let (left_min, right_min) = if *op == BinaryOp::Implies {
                (p + 1, p)
            } else {
                (p, p + 1)
            };
            write_child(l, prec(l) < left_min || mixed_bitwise(*op, l), out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_child(r, prec(r) < right_min || mixed_bitwise(*op, r), out);
        }
        Expr::Load(m, i) => {
            out.push_str("ld(");
            write_expr(m, out);
            out.push_str(", ");
            write_expr(i, out);
            out.push(')');
        }
        Expr::Store(m, i, v) => {
            out.push_str("st(");
            write_expr(m, out);
            out.push_str(", ");
            write_expr(i, out);
            out.push_str(", ");
            write_expr(v, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::{parse_expr, parse_formula};
    use super::*;

    #[test]
    fn reflexivity() {
        let f = Formula::new(Expr::binary(BinaryOp::Eq, Expr::var("x"), Expr::var("x"))).unwrap();
        assert_eq!(print_formula(&f), "x == x");
    }

    #[test]
    fn de_morgan_layout() {
        let text = "x ^ y == ~((x & y) | (~x & ~y))";
        let f = parse_formula(text, 32).unwrap();
        assert_eq!(print_formula(&f), text);
    }

    #[test]
    fn implication_round_trip() {
        let f = parse_formula("(x+y>0)&&(y+z<0)->(x+y)*(y+z)<0", 32).unwrap();
        let printed = print_formula(&f);
        assert_eq!(printed, "x + y > 0 && y + z < 0 -> (x + y) * (y + z) < 0");
        assert_eq!(parse_formula(&printed, 32).unwrap(), f);
    }

    #[test]
    fn awkward_shapes_round_trip() {
        for text in [
            "(a -> b) -> c",
            "a -> b -> c",
            "!(a == b) == c",
            "(!a) == b",
            "-(4) == x",
            "--4 == x",
            "x - -4 == 0",
            "x - (y - z) == 0",
            "~(x + 1) == -(x * 2)",
            "ld(st(st(mem, i, 1), j, v), k) == 0",
            "(x & y) & z == x & (y & z)",
        ] {
            let e = parse_expr(text).unwrap();
            let again = parse_expr(&print_expr(&e)).unwrap();
            assert_eq!(e, again, "{text} printed as {}", print_expr(&e));
        }
    }
}

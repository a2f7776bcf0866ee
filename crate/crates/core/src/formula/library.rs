use super::eval::Evaluator;
use super::print::print_expr;
use super::{parse_expr, parse_formula, BinaryOp, Expr, Formula, FormulaError, Memory, UnaryOp};

/// Shipped seed corpus.
pub const SHIPPED_SEEDS: &str = include_str!("../../corpus/seeds.txt");
/// Shipped template corpus.
pub const SHIPPED_TEMPLATES: &str = include_str!("../../corpus/templates.txt");

/// One `name : formula-text` line of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub text: String,
    pub line: usize,
}

/// Splits a corpus file into entries. `#` starts a comment; blank lines are
/// skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, FormulaError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let (name, body) = content.split_once(':').ok_or_else(|| {
            FormulaError::Library(format!("line {line}: expected `name : formula`"))
        })?;
        let name = name.trim();
        if name.is_empty() {
            return Err(FormulaError::Library(format!("line {line}: empty entry name")));
        }
        out.push(CorpusEntry {
            name: name.to_string(),
            text: body.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

fn with_context(entry: &CorpusEntry, err: FormulaError) -> FormulaError {
    FormulaError::Corpus {
        context: format!("line {} (`{}`)", entry.line, entry.name),
        source: Box::new(err),
    }
}

/// A named seed formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub name: String,
    pub formula: Formula,
}

/// Named collection of boolean-valued seed formulas.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedLibrary {
    pub seeds: Vec<Seed>,
}

impl SeedLibrary {
    /// Parses a seed corpus. Seeds must be boolean-valued, since they
    /// replace propositional placeholders.
    pub fn parse(text: &str, width: u32) -> Result<SeedLibrary, FormulaError> {
        let mut seeds: Vec<Seed> = Vec::new();
        for entry in parse_corpus(text)? {
            let formula = parse_formula(&entry.text, width).map_err(|e| with_context(&entry, e))?;
            if !formula.is_boolean() {
                return Err(with_context(
                    &entry,
                    FormulaError::Type {
                        path: "root".into(),
                        message: "seed must be boolean-valued".into(),
                    },
                ));
            }
            if seeds.iter().any(|s| s.name == entry.name) {
                return Err(FormulaError::Library(format!(
                    "line {}: duplicate seed `{}`",
                    entry.line, entry.name
                )));
            }
            seeds.push(Seed {
                name: entry.name,
                formula,
            });
        }
        Ok(SeedLibrary { seeds })
    }

    pub fn shipped() -> SeedLibrary {
        SeedLibrary::parse(SHIPPED_SEEDS, 32).expect("shipped seed corpus parses")
    }

    pub fn get(&self, name: &str) -> Option<&Seed> {
        self.seeds.iter().find(|s| s.name == name)
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

/// A propositional tautology skeleton with placeholder leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    skeleton: Expr,
    placeholders: Vec<String>,
}

impl Template {
    /// Builds a template from surface syntax.
    ///
    /// The skeleton may only use `&&`, `||`, `->` and `!`. Its leaves are
    /// placeholders (names) or closed boolean formulas such as `0 == 0`.
    /// The skeleton must be a propositional tautology.
    pub fn parse(name: &str, text: &str) -> Result<Template, FormulaError> {
        let skeleton = parse_expr(text)?;
        let mut placeholders = Vec::new();
        check_skeleton(&skeleton, &mut placeholders, "root")?;
        let t = Template {
            name: name.to_string(),
            skeleton,
            placeholders,
        };
        if let Some(row) = t.falsifying_row() {
            let shown: Vec<String> = t
                .placeholders
                .iter()
                .zip(&row)
                .map(|(p, v)| format!("{p}={}", *v as u8))
                .collect();
            return Err(FormulaError::Library(format!(
                "template `{name}` is not a propositional tautology (falsified by {})",
                shown.join(" ")
            )));
        }
        Ok(t)
    }

    pub fn skeleton(&self) -> &Expr {
        &self.skeleton
    }

    /// Distinct placeholders in first-occurrence order, left to right.
    pub fn placeholders(&self) -> &[String] {
        &self.placeholders
    }

    pub fn text(&self) -> String {
        print_expr(&self.skeleton)
    }

    /// Evaluates the skeleton with the given truth value per placeholder.
    pub fn eval(&self, values: &[bool]) -> bool {
        eval_skeleton(&self.skeleton, &self.placeholders, values)
    }

    /// First row of the truth table (in binary counting order over the
    /// placeholders) that falsifies the skeleton.
    pub fn falsifying_row(&self) -> Option<Vec<bool>> {
        let n = self.placeholders.len();
        (0u64..(1u64 << n)).find_map(|bits| {
            let row: Vec<bool> = (0..n).map(|i| bits >> (n - 1 - i) & 1 == 1).collect();
            (!self.eval(&row)).then_some(row)
        })
    }

    /// Replaces each placeholder with the matching expression.
    pub fn instantiate(&self, replacements: &[&Expr]) -> Result<Formula, FormulaError> {
        assert_eq!(replacements.len(), self.placeholders.len());
        let e = self.skeleton.substitute(&|name| {
            self.placeholders
                .iter()
                .position(|p| p == name)
                .map(|i| replacements[i].clone())
        });
        Formula::new(e)
    }
}

fn check_skeleton(
    e: &Expr,
    placeholders: &mut Vec<String>,
    path: &str,
) -> Result<(), FormulaError> {
    match e {
        Expr::Var(name) => {
            if !placeholders.contains(name) {
                placeholders.push(name.clone());
            }
            Ok(())
        }
        Expr::Unary(UnaryOp::LogNot, c) => check_skeleton(c, placeholders, &format!("{path}.arg")),
        Expr::Binary(op, l, r) if op.is_logical() => {
            check_skeleton(l, placeholders, &format!("{path}.left"))?;
            check_skeleton(r, placeholders, &format!("{path}.right"))
        }
        other => {
            // A closed boolean leaf.
            let f = Formula::new(other.clone()).map_err(|_| FormulaError::Type {
                path: path.to_string(),
                message: "template leaves must be placeholders or closed boolean formulas"
                    .into(),
            })?;
            if !f.is_boolean() || !f.free_vars().is_empty() || f.uses_memory() {
                return Err(FormulaError::Type {
                    path: path.to_string(),
                    message: "template leaves must be placeholders or closed boolean formulas"
                        .into(),
                });
            }
            Ok(())
        }
    }
}

fn eval_skeleton(e: &Expr, placeholders: &[String], values: &[bool]) -> bool {
    match e {
        Expr::Var(name) => {
            let i = placeholders
                .iter()
                .position(|p| p == name)
                .expect("placeholder collected at parse time");
            values[i]
        }
        Expr::Unary(UnaryOp::LogNot, c) => !eval_skeleton(c, placeholders, values),
        Expr::Binary(BinaryOp::LogAnd, l, r) => {
            eval_skeleton(l, placeholders, values) && eval_skeleton(r, placeholders, values)
        }
        Expr::Binary(BinaryOp::LogOr, l, r) => {
            eval_skeleton(l, placeholders, values) || eval_skeleton(r, placeholders, values)
        }
        Expr::Binary(BinaryOp::Implies, l, r) => {
            !eval_skeleton(l, placeholders, values) || eval_skeleton(r, placeholders, values)
        }
        closed => {
            let mem = Memory::zeroed(1);
            let lookup = |_: &str| 0u64;
            Evaluator::new(32, &lookup, &mem).eval(closed).bits() != 0
        }
    }
}

/// Named collection of templates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateLibrary {
    pub templates: Vec<Template>,
}

impl TemplateLibrary {
    pub fn parse(text: &str) -> Result<TemplateLibrary, FormulaError> {
        let mut templates: Vec<Template> = Vec::new();
        for entry in parse_corpus(text)? {
            let t = Template::parse(&entry.name, &entry.text).map_err(|e| with_context(&entry, e))?;
            if templates.iter().any(|o| o.name == t.name) {
                return Err(FormulaError::Library(format!(
                    "line {}: duplicate template `{}`",
                    entry.line, entry.name
                )));
            }
            templates.push(t);
        }
        Ok(TemplateLibrary { templates })
    }

    pub fn shipped() -> TemplateLibrary {
        TemplateLibrary::parse(SHIPPED_TEMPLATES).expect("shipped template corpus parses")
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_lines_and_comments() {
        let entries = parse_corpus("# header\n\na : x == x  # trailing\n b: y==y\n").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].name, "a");
        assert_eq!(entries[0].text, "x == x");
        assert_eq!(entries[0].line, 3);
        assert_eq!(entries[1].name, "b");
        assert!(parse_corpus("no colon here").is_err());
    }

    #[test]
    fn shipped_libraries_load() {
        let seeds = SeedLibrary::shipped();
        let names: Vec<&str> = seeds.seeds.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "assoc",
                "de_morgan",
                "load_store",
                "trichotomy",
                "unsigned_antisym",
                "mul_by_two",
                "eq_refl"
            ]
        );
        let templates = TemplateLibrary::shipped();
        assert_eq!(templates.len(), 4);
        let counts: Vec<usize> = templates
            .templates
            .iter()
            .map(|t| t.placeholders().len())
            .collect();
        assert_eq!(counts, [2, 2, 1, 2]);
    }

    #[test]
    fn de_morgan_seed_prints_canonically() {
        let seeds = SeedLibrary::shipped();
        assert_eq!(
            seeds.get("de_morgan").unwrap().formula.to_string(),
            "x ^ y == ~((x & y) | (~x & ~y))"
        );
    }

    #[test]
    fn placeholder_order_is_first_occurrence() {
        let t = Template::parse("t", "(Q -> P) -> (!Q || P)").unwrap();
        assert_eq!(t.placeholders(), ["Q", "P"]);
    }

    #[test]
    fn non_tautological_template_is_rejected() {
        let err = Template::parse("bad", "P -> Q").unwrap_err();
        assert!(err.to_string().contains("P=1 Q=0"), "{err}");
    }

    #[test]
    fn template_rejects_arithmetic() {
        assert!(Template::parse("bad", "P + Q").is_err());
        assert!(Template::parse("bad", "P && x < y").is_err());
    }

    #[test]
    fn zero_placeholder_template() {
        let t = Template::parse("closed", "0 == 0 || !(0 == 0)").unwrap();
        assert!(t.placeholders().is_empty());
        assert!(Template::parse("closed_bad", "0 == 1").is_err());
    }

    #[test]
    fn non_boolean_seed_rejected() {
        assert!(SeedLibrary::parse("s : x + 1", 32).is_err());
    }

    #[test]
    fn seed_errors_carry_line() {
        let err = SeedLibrary::parse("a : x == x\nb : x ==", 32).unwrap_err();
        assert!(err.to_string().starts_with("line 2 (`b`)"), "{err}");
    }

    #[test]
    fn each_connective_matches_its_truth_table() {
        let cases: [(&str, fn(bool, bool) -> bool); 3] = [
            ("P && Q", |a, b| a && b),
            ("P || Q", |a, b| a || b),
            ("P -> Q", |a, b| !a || b),
        ];
        for (text, table) in cases {
            let skeleton = parse_expr(text).unwrap();
            let ph = vec!["P".to_string(), "Q".to_string()];
            for a in [false, true] {
                for b in [false, true] {
                    assert_eq!(eval_skeleton(&skeleton, &ph, &[a, b]), table(a, b), "{text}");
                }
            }
        }
        let neg = parse_expr("!P").unwrap();
        let ph = vec!["P".to_string()];
        assert!(eval_skeleton(&neg, &ph, &[false]));
        assert!(!eval_skeleton(&neg, &ph, &[true]));
    }
}

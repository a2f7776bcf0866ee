//! Tautology synthesis: every template instantiated with every tuple of
//! seeds, enumerated by an explicit-stack depth-first search.

use thiserror::Error;

use crate::formula::{Formula, FormulaError, Seed, Template};

pub const DEFAULT_MAX_INSTANCES: u128 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("template `{0}` has placeholders but the seed set is empty")]
    NoSeeds(String),
    #[error("synthesis would produce {count} instances, above the cap of {cap}")]
    TooMany { count: u128, cap: u128 },
    #[error("instantiating template `{template}`: {source}")]
    Instantiate {
        template: String,
        #[source]
        source: FormulaError,
    },
}

/// A template with each placeholder replaced by a seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantiatedTautology {
    pub formula: Formula,
    pub template: String,
    /// Seed names in placeholder order.
    pub seeds: Vec<String>,
}

impl InstantiatedTautology {
    /// Stable identifier such as `and_elim(assoc,eq_refl)`.
    pub fn name(&self) -> String {
        if self.seeds.is_empty() {
            self.template.clone()
        } else {
            format!("{}({})", self.template, self.seeds.join(","))
        }
    }
}

/// Number of instances `synthesize` produces, saturating at `u128::MAX`.
pub fn count_instances(templates: &[Template], seeds: &[Seed]) -> u128 {
    let e = seeds.len() as u128;
    templates.iter().fold(0u128, |acc, t| {
        let n = t.placeholders().len() as u32;
        let k = e.checked_pow(n).unwrap_or(u128::MAX);
        acc.saturating_add(k)
    })
}

/// Instantiates every template with every seed tuple.
///
/// Templates are processed in input order. Within a template, seed tuples
/// come out in lexicographic order of seed positions: the stack receives
/// seeds in reverse so the first seed is popped first.
pub fn synthesize(
    templates: &[Template],
    seeds: &[Seed],
    max_instances: u128,
) -> Result<Vec<InstantiatedTautology>, SynthError> {
    if seeds.is_empty() {
        if let Some(t) = templates.iter().find(|t| !t.placeholders().is_empty()) {
            return Err(SynthError::NoSeeds(t.name.clone()));
        }
    }
    let count = count_instances(templates, seeds);
    if count > max_instances {
        return Err(SynthError::TooMany {
            count,
            cap: max_instances,
        });
    }

    let mut out = Vec::with_capacity(count as usize);
    for template in templates {
        let n = template.placeholders().len();
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        while let Some(choice) = stack.pop() {
            if choice.len() == n {
                let replacements: Vec<&_> =
                    choice.iter().map(|&i| seeds[i].formula.root()).collect();
                let formula =
                    template
                        .instantiate(&replacements)
                        .map_err(|source| SynthError::Instantiate {
                            template: template.name.clone(),
                            source,
                        })?;
                out.push(InstantiatedTautology {
                    formula,
                    template: template.name.clone(),
                    seeds: choice.iter().map(|&i| seeds[i].name.clone()).collect(),
                });
                continue;
            }
            for s in (0..seeds.len()).rev() {
                let mut next = choice.clone();
                next.push(s);
                stack.push(next);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, SeedLibrary, TemplateLibrary};

    fn seed(name: &str, text: &str) -> Seed {
        Seed {
            name: name.into(),
            formula: parse_formula(text, 32).unwrap(),
        }
    }

    #[test]
    fn two_seeds_two_placeholders() {
        let t = Template::parse("and_elim", "(P && Q) -> P").unwrap();
        let seeds = [seed("s1", "x == x"), seed("s2", "y == y")];
        let out = synthesize(&[t], &seeds, 100).unwrap();
        let prov: Vec<Vec<String>> = out.iter().map(|i| i.seeds.clone()).collect();
        assert_eq!(
            prov,
            [["s1", "s1"], ["s1", "s2"], ["s2", "s1"], ["s2", "s2"]]
        );
        assert_eq!(
            out[1].formula.to_string(),
            "x == x && y == y -> x == x"
        );
        assert_eq!(out[1].name(), "and_elim(s1,s2)");
    }

    #[test]
    fn single_placeholder_single_seed() {
        let t = Template::parse("em", "P || !P").unwrap();
        let seeds = [seed("assoc", "x - y - z == x - (y + z)")];
        let out = synthesize(&[t], &seeds, 100).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(
            out[0].formula.to_string(),
            "x - y - z == x - (y + z) || !(x - y - z == x - (y + z))"
        );
    }

    #[test]
    fn counts_add_per_template() {
        let templates = [
            Template::parse("one", "P || !P").unwrap(),
            Template::parse("two", "(P && Q) -> P").unwrap(),
        ];
        let seeds: Vec<Seed> = (0..6).map(|i| seed(&format!("s{i}"), "x == x")).collect();
        assert_eq!(count_instances(&templates, &seeds), 42);
        assert_eq!(count_instances(&templates[1..], &seeds), 36);
        assert_eq!(synthesize(&templates, &seeds, 1000).unwrap().len(), 42);
        assert_eq!(count_instances(&[], &seeds), 0);
    }

    #[test]
    fn zero_placeholders_pass_through() {
        let t = Template::parse("closed", "0 == 0 || !(0 == 0)").unwrap();
        assert_eq!(count_instances(std::slice::from_ref(&t), &[]), 1);
        let out = synthesize(&[t], &[], 10).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].name(), "closed");
    }

    #[test]
    fn empty_seed_set_is_an_error() {
        let t = Template::parse("em", "P || !P").unwrap();
        assert_eq!(
            synthesize(&[t], &[], 10),
            Err(SynthError::NoSeeds("em".into()))
        );
    }

    #[test]
    fn cap_is_enforced() {
        let t = Template::parse("two", "(P && Q) -> P").unwrap();
        let seeds: Vec<Seed> = (0..4).map(|i| seed(&format!("s{i}"), "x == x")).collect();
        assert!(matches!(
            synthesize(&[t], &seeds, 15),
            Err(SynthError::TooMany { count: 16, cap: 15 })
        ));
    }

    #[test]
    fn shipped_corpus_count() {
        let seeds = SeedLibrary::shipped();
        let templates = TemplateLibrary::shipped();
        let out = synthesize(&templates.templates, &seeds.seeds, DEFAULT_MAX_INSTANCES).unwrap();
        assert_eq!(out.len(), 49 + 49 + 7 + 49);
    }

    #[test]
    fn uniform_substitution() {
        let t = Template::parse("mp", "(P && (P -> Q)) -> Q").unwrap();
        let seeds = [seed("a", "x == x"), seed("b", "y <u z -> !(z <u y)")];
        for inst in synthesize(&[t.clone()], &seeds, 10).unwrap() {
            let reps: Vec<&_> = inst
                .seeds
                .iter()
                .map(|n| seeds.iter().find(|s| &s.name == n).unwrap().formula.root())
                .collect();
            assert_eq!(t.instantiate(&reps).unwrap(), inst.formula);
        }
    }
}

//! Exhaustive small-width validity checking.

use rayon::prelude::*;
use thiserror::Error;

use crate::formula::{Assignment, Formula, Memory, Seed, SeedLibrary};
use crate::formula::{eval_formula_with, to_signed};

/// Default ceiling on the number of assignments enumerated.
pub const DEFAULT_LIMIT: u64 = 1 << 26;
/// Words of memory visible to memory formulas during enumeration.
pub const ORACLE_MEMORY_WORDS: usize = 8;
/// Widths at which seeds are admitted.
pub const ADMISSION_WIDTHS: [u32; 2] = [4, 5];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("formula is not boolean-valued")]
    NotBoolean,
    #[error("{vars} variables at width {width} exceed the limit of {limit} assignments")]
    TooLarge { vars: usize, width: u32, limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub valid: bool,
    /// First falsifying assignment; values are shown signed.
    pub counterexample: Option<Assignment>,
    pub width: u32,
    pub assignments_checked: u64,
}

/// Checks `f` under every assignment of W-bit values to its free variables.
///
/// Variables are ordered by name and enumerated as unsigned W-bit values,
/// the first variable most significant, so the reported counterexample is
/// the lexicographically first one. Memory starts zeroed.
pub fn check_tautology(f: &Formula, width: u32, limit: u64) -> Result<OracleVerdict, OracleError> {
    if !f.is_boolean() {
        return Err(OracleError::NotBoolean);
    }
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    let too_large = OracleError::TooLarge {
        vars: vars.len(),
        width,
        limit,
    };
    let bits = width as u64 * vars.len() as u64;
    if bits >= 64 {
        return Err(too_large);
    }
    let total = 1u64 << bits;
    if total > limit {
        return Err(too_large);
    }

    let mem0 = Memory::zeroed(ORACLE_MEMORY_WORDS);
    let digit_mask = (1u64 << width) - 1;
    let n = vars.len();
    let value_of = |index: u64, pos: usize| (index >> (width as usize * (n - 1 - pos))) & digit_mask;
    let holds = |index: u64| {
        let lookup = |name: &str| {
            let pos = vars.iter().position(|v| v == name).expect("free variable");
            value_of(index, pos)
        };
        eval_formula_with(f, &lookup, &mem0, width).bits() == 1
    };

    let first_bad = (0..total).into_par_iter().find_first(|&i| !holds(i));
    Ok(match first_bad {
        None => OracleVerdict {
            valid: true,
            counterexample: None,
            width,
            assignments_checked: total,
        },
        Some(i) => OracleVerdict {
            valid: false,
            counterexample: Some(
                vars.iter()
                    .enumerate()
                    .map(|(pos, v)| (v.clone(), to_signed(value_of(i, pos), width)))
                    .collect(),
            ),
            width,
            assignments_checked: i + 1,
        },
    })
}

/// A seed that failed admission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub seed: Seed,
    pub reason: RejectionReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectionReason {
    Falsified(OracleVerdict),
    Unchecked(OracleError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Admission {
    pub admitted: Vec<Seed>,
    pub rejected: Vec<Rejection>,
}

/// Partitions seeds by whether they are valid at every width in `widths`.
pub fn admit_seeds(library: &SeedLibrary, widths: &[u32], limit: u64) -> Admission {
    let mut result = Admission::default();
    'seeds: for seed in &library.seeds {
        for &w in widths {
            let reason = match check_tautology(&seed.formula, w, limit) {
                Ok(v) if v.valid => continue,
                Ok(v) => RejectionReason::Falsified(v),
                Err(e) => RejectionReason::Unchecked(e),
            };
            result.rejected.push(Rejection {
                seed: seed.clone(),
                reason,
            });
            continue 'seeds;
        }
        result.admitted.push(seed.clone());
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn check(text: &str, width: u32) -> OracleVerdict {
        check_tautology(&parse_formula(text, width).unwrap(), width, DEFAULT_LIMIT).unwrap()
    }

    #[test]
    fn de_morgan_at_two_bits() {
        let v = check("x ^ y == ~((x & y) | (~x & ~y))", 2);
        assert!(v.valid);
        assert_eq!(v.assignments_checked, 16);
        assert_eq!(v.counterexample, None);
    }

    #[test]
    fn successor_is_never_equal() {
        let v = check("x == x + 1", 4);
        assert!(!v.valid);
        assert_eq!(v.counterexample, Some(Assignment::new().with("x", 0)));
        assert_eq!(v.assignments_checked, 1);
    }

    #[test]
    fn non_boolean_rejected() {
        let f = parse_formula("x + 1", 4).unwrap();
        assert_eq!(check_tautology(&f, 4, 100), Err(OracleError::NotBoolean));
    }

    #[test]
    fn limit_enforced() {
        let f = parse_formula("x == y", 8).unwrap();
        assert!(matches!(
            check_tautology(&f, 8, 1000),
            Err(OracleError::TooLarge { vars: 2, .. })
        ));
    }

    #[test]
    fn closed_formula_checks_one_assignment() {
        let v = check("1 + 1 == 2", 4);
        assert!(v.valid);
        assert_eq!(v.assignments_checked, 1);
    }

    #[test]
    fn memory_seed_valid() {
        let v = check("ld(st(mem, j, v), j) == v", 4);
        assert!(v.valid);
        assert_eq!(v.assignments_checked, 256);
    }

    #[test]
    fn empty_library() {
        let a = admit_seeds(&SeedLibrary::default(), &ADMISSION_WIDTHS, DEFAULT_LIMIT);
        assert!(a.admitted.is_empty() && a.rejected.is_empty());
    }
}

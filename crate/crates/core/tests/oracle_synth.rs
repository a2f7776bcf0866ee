mod common;

use std::collections::HashMap;

use common::{bool_expr, RefEval, RefValue, VARS};
use proptest::prelude::*;
use tiup::formula::{parse_formula, Assignment, Formula, SeedLibrary, TemplateLibrary, SHIPPED_SEEDS};
use tiup::oracle::{admit_seeds, check_tautology, RejectionReason, DEFAULT_LIMIT, ORACLE_MEMORY_WORDS};
use tiup::synthesizer::{count_instances, synthesize, DEFAULT_MAX_INSTANCES};

const LISTING: &str = "(x+y>0) && (y+z<0) -> (x+y)*(y+z)<0";

/// First falsifier of the listing formula at 4 bits, found by direct
/// integer arithmetic with `x` as the slowest-varying input.
fn listing_first_falsifier() -> (i64, i64, i64) {
    let s = |v: i64| if v & 8 != 0 { v - 16 } else { v };
    let w = |v: i64| s(v & 15);
    for x in 0..16 {
        for y in 0..16 {
            for z in 0..16 {
                let (sx, sy, sz) = (s(x), s(y), s(z));
                let xy = w(sx + sy);
                let yz = w(sy + sz);
                let holds = !(xy > 0 && yz < 0) || w(xy * yz) < 0;
                if !holds {
                    return (sx, sy, sz);
                }
            }
        }
    }
    unreachable!("the formula is falsifiable at 4 bits")
}

#[test]
fn listing_formula_first_falsifier_matches_brute_force() {
    let f = parse_formula(LISTING, 4).unwrap();
    let v = check_tautology(&f, 4, DEFAULT_LIMIT).unwrap();
    assert!(!v.valid);
    let (x, y, z) = listing_first_falsifier();
    let want = Assignment::new().with("x", x).with("y", y).with("z", z);
    assert_eq!(v.counterexample, Some(want));
    assert_eq!((x, y, z), (0, 2, 6));
}

#[test]
fn shipped_seeds_admitted_and_listing_rejected() {
    let text = format!("{SHIPPED_SEEDS}\nlisting : {LISTING}\n");
    let lib = SeedLibrary::parse(&text, 32).unwrap();
    let a = admit_seeds(&lib, &[4, 5], DEFAULT_LIMIT);
    assert_eq!(a.admitted.len(), 7);
    assert_eq!(a.rejected.len(), 1);
    assert_eq!(a.rejected[0].seed.name, "listing");
    match &a.rejected[0].reason {
        RejectionReason::Falsified(v) => assert_eq!(v.width, 4),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn counterexample_is_stable_across_runs() {
    let f = parse_formula(LISTING, 5).unwrap();
    let a = check_tautology(&f, 5, DEFAULT_LIMIT).unwrap();
    let b = check_tautology(&f, 5, DEFAULT_LIMIT).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_agrees_with_reference_evaluator(e in bool_expr()) {
        let f = Formula::new(e).unwrap();
        let width = 2;
        let verdict = check_tautology(&f, width, DEFAULT_LIMIT).unwrap();
        let free: Vec<String> = f.free_vars().into_iter().collect();
        let eval = |vals: &HashMap<String, i64>| {
            let r = RefEval { width, vars: vals, mem_words: ORACLE_MEMORY_WORDS as u64 };
            r.eval(f.root(), &HashMap::new()) == RefValue::Bool(true)
        };
        let mut all_true = true;
        for i in 0..(1u64 << (width as usize * free.len())) {
            let mut vals: HashMap<String, i64> = VARS.iter().map(|v| (v.to_string(), 0)).collect();
            for (pos, name) in free.iter().enumerate() {
                let shift = width as usize * (free.len() - 1 - pos);
                vals.insert(name.clone(), ((i >> shift) & 3) as i64);
            }
            if !eval(&vals) {
                all_true = false;
                break;
            }
        }
        prop_assert_eq!(verdict.valid, all_true);
        if let Some(cx) = verdict.counterexample {
            let mut vals: HashMap<String, i64> = VARS.iter().map(|v| (v.to_string(), 0)).collect();
            for (k, v) in cx.iter() {
                vals.insert(k.to_string(), v);
            }
            prop_assert!(!eval(&vals));
        }
    }

    #[test]
    fn synthesis_count_matches_formula(t_mask in 1u8..16, s_count in 1usize..=7) {
        let templates: Vec<_> = TemplateLibrary::shipped()
            .templates
            .into_iter()
            .enumerate()
            .filter(|(i, _)| t_mask & (1 << i) != 0)
            .map(|(_, t)| t)
            .collect();
        let seeds = &SeedLibrary::shipped().seeds[..s_count];
        let out = synthesize(&templates, seeds, DEFAULT_MAX_INSTANCES).unwrap();
        prop_assert_eq!(out.len() as u128, count_instances(&templates, seeds));
        let expected: u128 = templates
            .iter()
            .map(|t| (s_count as u128).pow(t.placeholders().len() as u32))
            .sum();
        prop_assert_eq!(out.len() as u128, expected);
        prop_assert_eq!(&out, &synthesize(&templates, seeds, DEFAULT_MAX_INSTANCES).unwrap());
    }
}

#[test]
fn provenance_determines_formula() {
    let templates = TemplateLibrary::shipped();
    let seeds = SeedLibrary::shipped();
    for inst in synthesize(&templates.templates, &seeds.seeds, DEFAULT_MAX_INSTANCES).unwrap() {
        let t = templates.templates.iter().find(|t| t.name == inst.template).unwrap();
        let roots: Vec<_> = inst
            .seeds
            .iter()
            .map(|n| seeds.get(n).unwrap().formula.root())
            .collect();
        assert_eq!(t.instantiate(&roots).unwrap(), inst.formula);
    }
}

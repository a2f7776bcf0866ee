mod common;

use std::collections::HashMap;

use common::isa::any_instr;
use common::{bool_expr, sigma, RefEval, RefValue, VARS};
use proptest::prelude::*;
use tiup::compiler::{compile, lower_to_ir, CompileError, Instr, RegPlan};
use tiup::formula::{Formula, SeedLibrary, TemplateLibrary};
use tiup::simulator::{Anomaly, RunConfig, RunOutcome, Simulator};
use tiup::synthesizer::{synthesize, DEFAULT_MAX_INSTANCES};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn encode_then_decode_is_identity(i in any_instr()) {
        prop_assert!(i.validate().is_ok());
        prop_assert_eq!(Instr::decode(i.encode()), i);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Golden execution of the compiled code computes what the reference
    /// evaluator computes, for arbitrary (mostly non-tautological) formulas.
    #[test]
    fn compiled_code_matches_reference(e in bool_expr(), samples in prop::collection::vec(sigma(), 8)) {
        let f = Formula::new(e).unwrap();
        let code = match compile("random", &f, &RegPlan::standard()) {
            Ok(c) => c.code,
            Err(CompileError::RegisterPressure { .. }) => return Ok(()),
            Err(other) => return Err(TestCaseError::fail(other.to_string())),
        };
        code.check_roles().map_err(TestCaseError::fail)?;
        let sim = Simulator::new(&code.words, Anomaly::Golden);
        for s in samples {
            let vars: HashMap<String, i64> = VARS.iter().map(|v| v.to_string()).zip(s).collect();
            let mut regs = [0u32; 32];
            for (name, r) in &code.registers.inputs {
                regs[r.index()] = vars[name] as u32;
            }
            let run = sim.run_inputs(regs, RunConfig::default());
            let want = RefEval { width: 32, vars: &vars, mem_words: 256 }.eval(f.root(), &HashMap::new());
            prop_assert_eq!(run.outcome, RunOutcome::Finished);
            prop_assert_eq!(run.finish_reg(), 1);
            prop_assert_eq!(RefValue::Bool(run.result_reg() == 1), want);
            prop_assert!(run.result_reg() <= 1);
            prop_assert!(run.mem.iter().all(|&w| w == 0), "memory restored");
        }
    }
}

#[test]
fn every_instance_lowers_to_well_formed_code() {
    let inst = synthesize(
        &TemplateLibrary::shipped().templates,
        &SeedLibrary::shipped().seeds,
        DEFAULT_MAX_INSTANCES,
    )
    .unwrap();
    for t in &inst {
        let ir = lower_to_ir(&t.name(), &t.formula).unwrap();
        ir.check_structure().unwrap_or_else(|e| panic!("{}: {e}", t.name()));
        let code = compile(&t.name(), &t.formula, &RegPlan::standard()).unwrap().code;
        code.check_roles().unwrap_or_else(|e| panic!("{}: {e}", t.name()));
        for w in &code.words {
            assert!(!matches!(Instr::decode(*w), Instr::Illegal(_)));
            assert_eq!(Instr::decode(*w).encode(), *w);
        }
    }
}

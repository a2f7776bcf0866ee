use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::compiler::{InstrSequence, Reg};
use crate::formula::Assignment;
use crate::simulator::{Anomaly, RunConfig, RunOutcome, RunResult, Simulator};

use super::search::explore;
use super::{Budget, Counterexample, Method, MethodReport, Mismatch, Outcome, ProgramVerdict};

/// Inputs of a program: each named value is loaded into every listed
/// register.
pub(super) type InputSlots = Vec<(String, Vec<Reg>)>;

/// Searches one program for a run that `judge` rejects. `judge` returns the
/// mismatches of a violating run, or `None` if the run is acceptable.
pub(super) fn check_program(
    name: &str,
    sim: &Simulator,
    inputs: &InputSlots,
    budget: &Budget,
    judge: &(dyn Fn(&RunResult) -> Option<Vec<Mismatch>> + Sync),
) -> ProgramVerdict {
    let load = |values: &[i64]| {
        let mut regs = [0u32; 32];
        for ((_, slots), &v) in inputs.iter().zip(values) {
            for r in slots {
                regs[r.index()] = v as u32;
            }
        }
        regs
    };
    let mut found: Option<(Vec<i64>, RunResult)> = None;
    let (tried, complete) = explore(name, inputs.len(), budget, |values| {
        let run = sim.run_inputs(load(values), RunConfig::default());
        if run.outcome == RunOutcome::Hang || judge(&run).is_some() {
            found = Some((values.to_vec(), run));
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });

    let witness = found.map(|(values, run)| {
        let mut sigma = Assignment::new();
        for ((n, _), &v) in inputs.iter().zip(&values) {
            sigma.set(n, v);
        }
        let (outcome, mismatches) = match run.outcome {
            RunOutcome::Hang => (Outcome::Hang, Vec::new()),
            RunOutcome::Finished => (Outcome::Violated, judge(&run).unwrap_or_default()),
        };
        Counterexample {
            program: name.to_string(),
            sigma,
            outcome,
            result_reg: run.result_reg(),
            finish_reg: run.finish_reg(),
            cycles: run.cycles,
            retired: run.retired,
            mismatches,
            trace: Vec::new(),
        }
    });
    let outcome = match &witness {
        Some(w) => w.outcome,
        None if complete => Outcome::Pass,
        None => Outcome::PassWithinBudget,
    };
    ProgramVerdict {
        program: name.to_string(),
        outcome,
        assignments_tried: tried,
        witness,
    }
}

/// Replays a witness with tracing on.
pub(super) fn replay(
    witness: &Counterexample,
    sim: &Simulator,
    inputs: &InputSlots,
) -> Counterexample {
    let mut regs = [0u32; 32];
    for (n, slots) in inputs {
        let v = witness.sigma.get(n).unwrap_or(0);
        for r in slots {
            regs[r.index()] = v as u32;
        }
    }
    let run = sim.run_inputs(regs, RunConfig::traced());
    debug_assert_eq!(run.result_reg(), witness.result_reg);
    Counterexample {
        trace: run.trace,
        ..witness.clone()
    }
}

pub(super) fn tiup_inputs(seq: &InstrSequence) -> InputSlots {
    seq.registers
        .inputs
        .iter()
        .map(|(n, r)| (n.clone(), vec![*r]))
        .collect()
}

fn tiup_judge(run: &RunResult) -> Option<Vec<Mismatch>> {
    run.violates().then(Vec::new)
}

/// Checks that every compiled tautology leaves `Result_Reg` non-zero when
/// `Finish_Reg` is set, under `anomaly`.
pub fn verify_tiup(programs: &[InstrSequence], anomaly: Anomaly, budget: &Budget) -> MethodReport {
    let verdicts: Vec<ProgramVerdict> = programs
        .par_iter()
        .map(|seq| {
            let sim = Simulator::new(&seq.words, anomaly);
            check_program(&seq.name, &sim, &tiup_inputs(seq), budget, &tiup_judge)
        })
        .collect();
    let counterexample = programs.iter().zip(&verdicts).find_map(|(seq, v)| {
        let sim = Simulator::new(&seq.words, anomaly);
        v.witness.as_ref().map(|w| replay(w, &sim, &tiup_inputs(seq)))
    });
    MethodReport {
        method: Method::Tiup,
        anomaly,
        outcome: Outcome::merge(verdicts.iter().map(|v| v.outcome)),
        counterexample,
        programs: verdicts,
    }
}

//! Duplicate-and-compare baseline. A program confined to `x0`..`x15` is
//! followed by a copy of itself renamed into `x16`..`x31`; both copies start
//! from the same inputs and every register the original writes must end
//! equal to its twin.

use rayon::prelude::*;
use thiserror::Error;

use crate::compiler::{Instr, InstrSequence, Reg, NOP};
use crate::formula::Assignment;
use crate::simulator::{Anomaly, RunResult, Simulator};

use super::tiup::{check_program, replay, InputSlots};
use super::{Budget, Method, MethodReport, Mismatch, Outcome, ProgramVerdict};

/// Offset between a register and its duplicate.
const SHIFT: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqedError {
    #[error("`{program}` uses {reg}; duplication needs x0..x15 only")]
    RegisterOutOfRange { program: String, reg: Reg },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EddivProgram {
    pub name: String,
    pub original: Vec<Instr>,
    pub duplicate: Vec<Instr>,
    /// (original, duplicate) registers compared at the end.
    pub checks: Vec<(Reg, Reg)>,
    pub inputs: Vec<(String, Reg)>,
    /// Original followed by duplicate, encoded.
    pub words: Vec<u32>,
}

fn twin(r: Reg) -> Reg {
    Reg::new(r.index() as u8 + SHIFT)
}

/// Duplicates `seq` into the upper register half. Reads of `x0` in the copy
/// go to `x16`, which starts and stays zero; writes to `x0` stay on `x0`.
pub fn build_eddiv(seq: &InstrSequence) -> Result<EddivProgram, SqedError> {
    let original = seq.instrs();
    for instr in &original {
        let (a, b) = instr.sources();
        for r in [instr.rd(), a, b].into_iter().flatten() {
            if r.index() >= SHIFT as usize {
                return Err(SqedError::RegisterOutOfRange {
                    program: seq.name.clone(),
                    reg: r,
                });
            }
        }
    }
    let duplicate: Vec<Instr> = original
        .iter()
        .map(|i| i.map_regs(twin, |r| if r == Reg::ZERO { r } else { twin(r) }))
        .collect();

    let mut checks = Vec::new();
    for instr in &original {
        let Some(rd) = instr.rd() else { continue };
        if rd == Reg::ZERO && *instr == NOP {
            continue;
        }
        if !checks.iter().any(|&(r, _)| r == rd) {
            checks.push((rd, twin(rd)));
        }
    }
    let words = original.iter().chain(&duplicate).map(|i| i.encode()).collect();
    Ok(EddivProgram {
        name: seq.name.clone(),
        original,
        duplicate,
        checks,
        inputs: seq.registers.inputs.clone(),
        words,
    })
}

impl EddivProgram {
    fn slots(&self) -> InputSlots {
        self.inputs
            .iter()
            .map(|(n, r)| (n.clone(), vec![*r, twin(*r)]))
            .collect()
    }

    /// QED-consistent start state: each input in its register and its twin.
    pub fn initial_registers(&self, sigma: &Assignment) -> [u32; 32] {
        let mut regs = [0u32; 32];
        for (n, r) in &self.inputs {
            let v = sigma.get(n).unwrap_or(0) as u32;
            regs[r.index()] = v;
            regs[twin(*r).index()] = v;
        }
        regs
    }

    /// Registers whose copies disagree in `regs`.
    pub fn mismatches(&self, regs: &[u32; 32]) -> Vec<Mismatch> {
        self.checks
            .iter()
            .filter(|(o, d)| regs[o.index()] != regs[d.index()])
            .map(|&(o, d)| Mismatch {
                original: o,
                duplicate: d,
                original_value: regs[o.index()],
                duplicate_value: regs[d.index()],
            })
            .collect()
    }

    /// Assembly of both copies and the final comparisons.
    pub fn listing(&self) -> String {
        let mut out = format!("# {}\n", self.name);
        for (n, r) in &self.inputs {
            out.push_str(&format!("# input {n} = {r}, {}\n", twin(*r)));
        }
        out.push_str("original:\n");
        for i in &self.original {
            out.push_str(&format!("    {i}\n"));
        }
        out.push_str("duplicate:\n");
        for i in &self.duplicate {
            out.push_str(&format!("    {i}\n"));
        }
        out.push_str("checks:\n");
        for (o, d) in &self.checks {
            out.push_str(&format!("    bne {o}, {d}, error\n"));
        }
        out
    }
}

/// Runs every duplicated program under `anomaly` and reports any whose
/// copies diverge.
pub fn verify_sqed(programs: &[EddivProgram], anomaly: Anomaly, budget: &Budget) -> MethodReport {
    let verdicts: Vec<ProgramVerdict> = programs
        .par_iter()
        .map(|p| {
            let sim = Simulator::new(&p.words, anomaly);
            let judge = |run: &RunResult| {
                let m = p.mismatches(&run.regs);
                (!m.is_empty()).then_some(m)
            };
            check_program(&p.name, &sim, &p.slots(), budget, &judge)
        })
        .collect();
    let counterexample = programs.iter().zip(&verdicts).find_map(|(p, v)| {
        let sim = Simulator::new(&p.words, anomaly);
        v.witness.as_ref().map(|w| replay(w, &sim, &p.slots()))
    });
    MethodReport {
        method: Method::Sqed,
        anomaly,
        outcome: Outcome::merge(verdicts.iter().map(|v| v.outcome)),
        counterexample,
        programs: verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, RegPlan};
    use crate::formula::parse_formula;

    fn build(text: &str) -> EddivProgram {
        let seq = compile("t", &parse_formula(text, 32).unwrap(), &RegPlan::lower_half())
            .unwrap()
            .code;
        build_eddiv(&seq).unwrap()
    }

    fn small() -> Budget {
        Budget {
            samples: 50,
            ..Budget::default()
        }
    }

    #[test]
    fn rename_moves_everything_but_x0_writes() {
        let p = build("(x < y) -> !(y < x)");
        assert_eq!(p.original.len(), p.duplicate.len());
        for (o, d) in p.original.iter().zip(&p.duplicate) {
            match o.rd() {
                Some(r) if r == Reg::ZERO => assert_eq!(d.rd(), Some(Reg::ZERO)),
                Some(r) => assert_eq!(d.rd(), Some(twin(r))),
                None => assert_eq!(d.rd(), None),
            }
            let (a, b) = o.sources();
            assert_eq!(d.sources(), (a.map(twin), b.map(twin)));
        }
        assert!(p.checks.contains(&(Reg::ZERO, Reg::new(16))));
        assert!(p.listing().contains("bne x7, x23, error"));
    }

    #[test]
    fn standard_plan_is_rejected() {
        let seq = compile("t", &parse_formula("x == x", 32).unwrap(), &RegPlan::standard())
            .unwrap()
            .code;
        assert!(matches!(
            build_eddiv(&seq),
            Err(SqedError::RegisterOutOfRange { .. })
        ));
    }

    #[test]
    fn golden_copies_agree() {
        let p = vec![build("x - y - z == x - (y + z)"), build("(x <u y) -> !(y <u x)")];
        let r = verify_sqed(&p, Anomaly::Golden, &small());
        assert!(!r.detected());
    }

    #[test]
    fn consistent_bug_is_missed_and_asymmetric_one_caught() {
        let p = vec![build("x - y - z == x - (y + z)")];
        assert!(!verify_sqed(&p, Anomaly::A18, &small()).detected());
        let r = verify_sqed(&p, Anomaly::A17 { reg: 17 }, &small());
        assert!(r.detected());
        let c = r.counterexample.unwrap();
        assert!(!c.mismatches.is_empty());
        assert!(!c.trace.is_empty());
    }
}

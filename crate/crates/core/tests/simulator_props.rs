mod common;

use common::isa::{branch_cond, data_reg, straight};
use proptest::prelude::*;
use tiup::compiler::{Instr, NOP};
use tiup::simulator::reference::ArchState;
use tiup::simulator::{Anomaly, RunConfig, RunOutcome, Scheduler, Simulator, EPILOGUE, MEMORY_WORDS};

fn state() -> impl Strategy<Value = ([u32; 32], Vec<u32>)> {
    (
        prop::array::uniform32(any::<u32>()),
        prop::collection::vec(any::<u32>(), MEMORY_WORDS),
    )
        .prop_map(|(mut regs, mem)| {
            regs[0] = 0;
            regs[31] = 0;
            (regs, mem)
        })
}

/// One instruction of any kind. Control transfers leave the one-entry
/// queue, so they never loop.
fn single() -> impl Strategy<Value = Instr> {
    prop_oneof![
        4 => straight(data_reg().boxed()),
        1 => (data_reg(), prop_oneof![(-(1i32 << 19)..0), (1..(1i32 << 19))])
            .prop_map(|(rd, o)| Instr::Jal { rd, offset: o * 2 }),
        1 => (branch_cond(), common::isa::reg(), common::isa::reg(), prop_oneof![(-2048i32..0), (1..2048i32)])
            .prop_map(|(cond, rs1, rs2, o)| Instr::Branch { cond, rs1, rs2, offset: o * 2 }),
    ]
}

fn assert_same(program: &[Instr], regs: [u32; 32], mem: Vec<u32>) -> Result<(), TestCaseError> {
    let words: Vec<u32> = program.iter().map(|i| i.encode()).collect();
    let run = Simulator::new(&words, Anomaly::Golden).run(regs, mem.clone(), RunConfig::traced());
    prop_assert_eq!(run.outcome, RunOutcome::Finished);

    let mut reference = ArchState::new(regs);
    reference.mem = mem;
    reference.run(program, program.len());
    prop_assert_eq!(&run.regs[..30], &reference.regs[..30]);
    prop_assert_eq!(&run.mem, &reference.mem);

    // Retired queue entries come out in program order.
    let in_queue = |pc: i64| pc >= 0 && (pc as usize) < program.len();
    let retired: Vec<i64> = run
        .trace
        .iter()
        .filter(|e| !e.squashed && in_queue(e.pc))
        .map(|e| e.pc)
        .collect();
    prop_assert!(retired.windows(2).all(|w| w[0] < w[1]), "{:?}", retired);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn single_instruction_matches_reference(i in single(), (regs, mem) in state()) {
        assert_same(&[i], regs, mem)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn straight_line_programs_match_reference(
        program in prop::collection::vec(straight(data_reg().boxed()), 1..40),
        (regs, mem) in state(),
    ) {
        assert_same(&program, regs, mem)?;
    }

    #[test]
    fn scheduler_serves_every_pc(len in 0usize..8, pcs in prop::collection::vec(-20i64..40, 1..20)) {
        let words = vec![NOP.encode(); len];
        let mut s = Scheduler::new(&words);
        for pc in pcs {
            let i = Instr::decode(s.serve(pc));
            prop_assert!(i == NOP || EPILOGUE.contains(&i));
        }
    }

    #[test]
    fn runs_are_deterministic(program in prop::collection::vec(straight(data_reg().boxed()), 1..20), (regs, mem) in state()) {
        let words: Vec<u32> = program.iter().map(|i| i.encode()).collect();
        let sim = Simulator::new(&words, Anomaly::A15);
        let a = sim.run(regs, mem.clone(), RunConfig::traced());
        let b = sim.run(regs, mem, RunConfig::traced());
        prop_assert_eq!(a, b);
    }
}

//! Instruction queue feeding the fetch stage.

use crate::compiler::{ImmOp, Instr, Reg, FINISH_REG, NOP, RESULT_REG};

/// `Result_Reg ← 0` then `Finish_Reg ← 1`: what the scheduler serves once
/// fetch leaves the queue.
pub const EPILOGUE: [Instr; 2] = [
    Instr::OpImm {
        op: ImmOp::Addi,
        rd: Reg::new(RESULT_REG as u8),
        rs1: Reg::ZERO,
        imm: 0,
    },
    Instr::OpImm {
        op: ImmOp::Addi,
        rd: Reg::new(FINISH_REG as u8),
        rs1: Reg::ZERO,
        imm: 1,
    },
];

#[derive(Debug, Clone)]
pub struct Scheduler<'a> {
    words: &'a [u32],
    /// pc of the first out-of-range fetch, while the epilogue is in flight.
    origin: Option<i64>,
}

impl<'a> Scheduler<'a> {
    pub fn new(words: &'a [u32]) -> Scheduler<'a> {
        Scheduler {
            words,
            origin: None,
        }
    }

    pub fn in_range(&self, pc: i64) -> bool {
        pc >= 0 && (pc as usize) < self.words.len()
    }

    /// Raw word at `pc`. Out-of-range fetches get the epilogue once, then
    /// NOPs.
    pub fn serve(&mut self, pc: i64) -> u32 {
        if self.in_range(pc) {
            return self.words[pc as usize];
        }
        let origin = *self.origin.get_or_insert(pc);
        match pc.checked_sub(origin) {
            Some(0) => EPILOGUE[0].encode(),
            Some(1) => EPILOGUE[1].encode(),
            _ => NOP.encode(),
        }
    }

    /// Called for every flushed fetch. Flushing the first epilogue slot
    /// re-arms the epilogue.
    pub fn squashed(&mut self, pc: i64) {
        if self.origin == Some(pc) {
            self.origin = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_range_then_epilogue_then_nops() {
        let words = [0x0020_81B3u32, 0x0010_0F93];
        let mut s = Scheduler::new(&words);
        assert_eq!(s.serve(0), words[0]);
        assert_eq!(s.serve(1), words[1]);
        assert_eq!(s.serve(2), 0x0000_0F13);
        assert_eq!(Instr::decode(s.serve(3)), EPILOGUE[1]);
        assert_eq!(Instr::decode(s.serve(4)), NOP);
        assert_eq!(Instr::decode(s.serve(-7)), NOP);
    }

    #[test]
    fn flushed_epilogue_is_served_again() {
        let mut s = Scheduler::new(&[]);
        assert_eq!(Instr::decode(s.serve(5)), EPILOGUE[0]);
        s.squashed(5);
        assert_eq!(Instr::decode(s.serve(9)), EPILOGUE[0]);
        assert_eq!(Instr::decode(s.serve(10)), EPILOGUE[1]);
    }

    #[test]
    fn epilogue_disassembly() {
        assert_eq!(EPILOGUE[0].to_string(), "addi x30, x0, 0");
        assert_eq!(EPILOGUE[1].to_string(), "addi x31, x0, 1");
    }
}

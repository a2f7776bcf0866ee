//! The device under verification: a pipelined RV32IM simulator fed by a
//! scheduler, with injectable anomalies.

mod anomaly;
mod pipeline;
pub mod reference;
mod scheduler;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{Instr, InstrSequence, Reg, FINISH_REG, RESULT_REG};
use crate::formula::Assignment;

pub use anomaly::{inject, Anomaly, AnomalyError, Category, Stage, CATALOG};
pub use scheduler::{Scheduler, EPILOGUE};

use pipeline::Pipeline;

/// Words of data memory; addresses wrap onto it.
pub const MEMORY_WORDS: usize = 256;

pub(crate) fn word_index(addr: u32) -> usize {
    ((addr >> 2) as usize) % MEMORY_WORDS
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("no value given for input `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not an input of this sequence")]
    UnknownInput(String),
}

/// One retired or flushed instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub cycle: u64,
    pub pc: i64,
    pub instr: Instr,
    pub writeback: Option<(Reg, u32)>,
    /// (byte address, value) for stores.
    pub store: Option<(u32, u32)>,
    pub squashed: bool,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pc = if self.pc >= 0 {
            self.pc.to_string()
        } else {
            "-".to_string()
        };
        write!(f, "{:>6} {:>5}  {:<24}", self.cycle, pc, self.instr.to_string())?;
        if self.squashed {
            return f.write_str(" [squashed]");
        }
        if let Some((r, v)) = self.writeback {
            write!(f, " {r}={v:#010x}")?;
        }
        if let Some((a, v)) = self.store {
            write!(f, " mem[{a:#x}]={v:#010x}")?;
        }
        Ok(())
    }
}

/// Renders a trace, one line per entry, with a header.
pub fn format_trace(trace: &[TraceEntry]) -> String {
    let mut out = String::from(" cycle    pc  instruction\n");
    for e in trace {
        out.push_str(e.to_string().trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunOutcome {
    Finished,
    /// The cycle cap was reached before `Finish_Reg` was set.
    Hang,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunConfig {
    /// Defaults to `10 * queue length + 100`.
    pub cycle_cap: Option<u64>,
    pub record_trace: bool,
}

impl RunConfig {
    pub fn traced() -> RunConfig {
        RunConfig {
            record_trace: true,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub regs: [u32; 32],
    pub mem: Vec<u32>,
    pub cycles: u64,
    pub retired: u64,
    pub illegal: u64,
    pub trace: Vec<TraceEntry>,
}

impl RunResult {
    pub fn result_reg(&self) -> u32 {
        self.regs[RESULT_REG]
    }

    pub fn finish_reg(&self) -> u32 {
        self.regs[FINISH_REG]
    }

    /// `Finish_Reg` set while `Result_Reg` is 0.
    pub fn violates(&self) -> bool {
        self.outcome == RunOutcome::Finished && self.result_reg() == 0
    }
}

/// A loaded program ready to run many times under one anomaly.
#[derive(Debug, Clone)]
pub struct Simulator {
    words: Vec<u32>,
    anomaly: Anomaly,
    trigger: Option<i64>,
}

impl Simulator {
    pub fn new(words: &[u32], anomaly: Anomaly) -> Simulator {
        let trigger = words
            .iter()
            .position(|&w| matches!(Instr::decode(w), Instr::Op { op, .. } if op.is_mul()))
            .map(|i| i as i64 + 1);
        Simulator {
            words: words.to_vec(),
            anomaly,
            trigger,
        }
    }

    pub fn anomaly(&self) -> Anomaly {
        self.anomaly
    }

    pub fn default_cycle_cap(&self) -> u64 {
        10 * self.words.len() as u64 + 100
    }

    /// Runs from `regs` and `mem` until `Finish_Reg` is set or the cycle cap
    /// is reached.
    pub fn run(&self, regs: [u32; 32], mem: Vec<u32>, cfg: RunConfig) -> RunResult {
        let cap = cfg.cycle_cap.unwrap_or_else(|| self.default_cycle_cap());
        let mut p = Pipeline::new(&self.words, self.trigger, self.anomaly, regs, mem, cfg.record_trace);
        while !p.finished() && p.cycle < cap {
            p.step();
        }
        RunResult {
            outcome: if p.finished() {
                RunOutcome::Finished
            } else {
                RunOutcome::Hang
            },
            regs: p.regs,
            cycles: p.cycle,
            retired: p.retired,
            illegal: p.illegal,
            trace: p.trace.take().unwrap_or_default(),
            mem: p.mem,
        }
    }

    /// Runs with zeroed memory and registers holding the inputs.
    pub fn run_inputs(&self, regs: [u32; 32], cfg: RunConfig) -> RunResult {
        self.run(regs, vec![0; MEMORY_WORDS], cfg)
    }
}

/// Register file with each input of `seq` set from `sigma` and everything
/// else zero.
pub fn initial_registers(seq: &InstrSequence, sigma: &Assignment) -> Result<[u32; 32], SimError> {
    for (name, _) in sigma.iter() {
        if seq.registers.input(name).is_none() {
            return Err(SimError::UnknownInput(name.to_string()));
        }
    }
    let mut regs = [0u32; 32];
    for (name, r) in &seq.registers.inputs {
        let v = sigma
            .get(name)
            .ok_or_else(|| SimError::MissingInput(name.clone()))?;
        regs[r.index()] = v as u32;
    }
    Ok(regs)
}

/// Runs `seq` with inputs `sigma` under `anomaly`.
pub fn run_to_finish(
    seq: &InstrSequence,
    sigma: &Assignment,
    anomaly: Anomaly,
    cfg: RunConfig,
) -> Result<RunResult, SimError> {
    let regs = initial_registers(seq, sigma)?;
    Ok(Simulator::new(&seq.words, anomaly).run_inputs(regs, cfg))
}

/// Whether any instruction of `words` is a multiply.
pub fn has_multiply(words: &[u32]) -> bool {
    words
        .iter()
        .any(|&w| matches!(Instr::decode(w), Instr::Op { op, .. } if op.is_mul()))
}

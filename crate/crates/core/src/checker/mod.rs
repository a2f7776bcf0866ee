//! Bounded search for inputs that expose an anomaly, with the tautology
//! property and a duplicate-and-compare baseline.
//!
//! Every program is run on a deterministic set of input assignments: a grid
//! of small signed values, then random 32-bit samples drawn from a stream
//! seeded by the program name. A program's verdict therefore does not
//! depend on which other programs are checked alongside it.

mod matrix;
mod search;
mod sqed;
mod tiup;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::compiler::Reg;
use crate::formula::Assignment;
use crate::simulator::{Anomaly, TraceEntry};

pub use matrix::{campaign_tautologies, detection_matrix, prepare_corpus, Corpus, DetectionMatrix, MatrixRow};
pub use search::{search_space, CORNERS};
pub use sqed::{build_eddiv, verify_sqed, EddivProgram, SqedError};
pub use tiup::verify_tiup;

/// Limits of the input search for one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Inclusive bounds of the per-input grid.
    pub grid_min: i64,
    pub grid_max: i64,
    /// Largest grid enumerated in full. Bigger grids shrink to [`CORNERS`].
    pub max_grid_points: u64,
    /// Random assignments tried after the grid.
    pub samples: u64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            grid_min: -8,
            grid_max: 7,
            max_grid_points: 20_000,
            samples: 2_000,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tiup,
    Sqed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tiup => "TIUP",
            Method::Sqed => "SQED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Every possible input was tried.
    Pass,
    /// The budget ran out without a violation.
    PassWithinBudget,
    Violated,
    /// The cycle cap was hit before `Finish_Reg` was set.
    Hang,
}

impl Outcome {
    pub fn detected(self) -> bool {
        matches!(self, Outcome::Violated | Outcome::Hang)
    }

    /// Combined outcome of several programs: the first detection wins,
    /// otherwise the weakest pass.
    pub fn merge(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
        let mut merged = Outcome::Pass;
        for o in outcomes {
            if o.detected() {
                return o;
            }
            if o == Outcome::PassWithinBudget {
                merged = o;
            }
        }
        merged
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::PassWithinBudget => "pass-within-budget",
            Outcome::Violated => "violated",
            Outcome::Hang => "hang",
        })
    }
}

/// A duplicated register whose two copies disagree at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub original: Reg,
    pub duplicate: Reg,
    pub original_value: u32,
    pub duplicate_value: u32,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}={:#x} != {}={:#x}",
            self.original, self.original_value, self.duplicate, self.duplicate_value
        )
    }
}

/// Inputs on which a program misbehaved, with what was observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub program: String,
    pub sigma: Assignment,
    pub outcome: Outcome,
    pub result_reg: u32,
    pub finish_reg: u32,
    pub cycles: u64,
    pub retired: u64,
    /// Disagreeing register pairs (duplicate-and-compare only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<Mismatch>,
    /// Filled in only for the counterexample reported per anomaly.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramVerdict {
    pub program: String,
    pub outcome: Outcome,
    pub assignments_tried: u64,
    /// Present exactly when the outcome is a detection.
    pub witness: Option<Counterexample>,
}

/// Result of checking a batch of programs under one anomaly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub anomaly: Anomaly,
    pub outcome: Outcome,
    /// First detection in program order, replayed with a trace.
    pub counterexample: Option<Counterexample>,
    pub programs: Vec<ProgramVerdict>,
}

impl MethodReport {
    pub fn detected(&self) -> bool {
        self.outcome.detected()
    }

    pub fn assignments_tried(&self) -> u64 {
        self.programs.iter().map(|p| p.assignments_tried).sum()
    }

    pub fn detections(&self) -> usize {
        self.programs.iter().filter(|p| p.outcome.detected()).count()
    }
}

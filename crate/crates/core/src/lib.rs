//! Tautology-based processor verification: formula synthesis, validity
//! checking, compilation to RV32IM, pipelined simulation and bug detection.

pub mod formula;
pub mod oracle;
pub mod synthesizer;
pub mod compiler;
pub mod simulator;
pub mod checker;

//! Injectable design anomalies.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnomalyError {
    #[error("unknown anomaly `{0}`")]
    Unknown(String),
    #[error("anomaly `{id}` has no parameter `{param}`")]
    UnknownParam { id: String, param: String },
    #[error("anomaly `{id}`: parameter `{param}` = {value} is out of range")]
    BadParam { id: String, param: String, value: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Single,
    Multiple,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Single => "single",
            Category::Multiple => "multiple",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Fetch,
    Decode,
    Execute,
    Writeback,
    BranchUnit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Fetch => "fetch",
            Stage::Decode => "decode",
            Stage::Execute => "execute",
            Stage::Writeback => "writeback",
            Stage::BranchUnit => "branch-unit",
        })
    }
}

/// One mutation of the golden pipeline. "Next instruction" anomalies
/// (a13, a14) fire on the queue slot after the first multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum Anomaly {
    Golden,
    /// Decode writes to `to` whenever the destination field names `from`.
    A03 { from: u8, to: u8 },
    /// Decode reads `to` whenever a source field names `from`.
    A04 { from: u8, to: u8 },
    /// SLTU compares with `<=` instead of `<`.
    A05,
    /// x0 keeps whatever is written to it.
    A06,
    /// Taken conditional branches land `delta_bytes` past their target.
    A10 { delta_bytes: i32 },
    /// Conditional branches take the opposite direction.
    A11,
    /// The instruction decoded right after a multiply has bit 20 flipped,
    /// the low bit of its rs2 field.
    A12,
    /// The queue slot after the first multiply decodes as a NOP.
    A13,
    /// The queue slot after the first multiply reads rs1 as 0.
    A14,
    /// Taken branches and jumps do not flush the two younger instructions.
    A15,
    /// Multiplies read rs1 as a sign-magnitude number.
    A16,
    /// Reads of register `reg` through rs1 return 0.
    A17 { reg: u8 },
    /// ADD executes as SUB.
    A18,
}

/// Implemented anomaly ids in catalog order.
pub const CATALOG: [&str; 13] = [
    "a03", "a04", "a05", "a06", "a10", "a11", "a12", "a13", "a14", "a15", "a16", "a17", "a18",
];

impl Anomaly {
    pub fn id(&self) -> &'static str {
        match self {
            Anomaly::Golden => "golden",
            Anomaly::A03 { .. } => "a03",
            Anomaly::A04 { .. } => "a04",
            Anomaly::A05 => "a05",
            Anomaly::A06 => "a06",
            Anomaly::A10 { .. } => "a10",
            Anomaly::A11 => "a11",
            Anomaly::A12 => "a12",
            Anomaly::A13 => "a13",
            Anomaly::A14 => "a14",
            Anomaly::A15 => "a15",
            Anomaly::A16 => "a16",
            Anomaly::A17 { .. } => "a17",
            Anomaly::A18 => "a18",
        }
    }

    pub fn synopsis(&self) -> &'static str {
        match self {
            Anomaly::Golden => "No anomaly",
            Anomaly::A03 { .. } => "Register target redirection",
            Anomaly::A04 { .. } => "Register source redirection",
            Anomaly::A05 => "Unsigned less-than compare is wrong",
            Anomaly::A06 => "GPR0 is writable",
            Anomaly::A10 { .. } => "Wrong branch target address",
            Anomaly::A11 => "Wrong branch direction",
            Anomaly::A12 => "Next instruction's operand decoded wrongly",
            Anomaly::A13 => "Next instruction decoded as NOP",
            Anomaly::A14 => "Next register read returns 0",
            Anomaly::A15 => "Speculative instructions not flushed",
            Anomaly::A16 => "Unsigned multiply operand treated as signed",
            Anomaly::A17 { .. } => "Source operand read as 0",
            Anomaly::A18 => "ALU opcode mismatch (ADD runs SUB)",
        }
    }

    pub fn category(&self) -> Option<Category> {
        match self {
            Anomaly::Golden => None,
            Anomaly::A03 { .. }
            | Anomaly::A04 { .. }
            | Anomaly::A06
            | Anomaly::A13
            | Anomaly::A14
            | Anomaly::A17 { .. } => Some(Category::Multiple),
            _ => Some(Category::Single),
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Anomaly::Golden => None,
            Anomaly::A03 { .. } | Anomaly::A04 { .. } | Anomaly::A12 | Anomaly::A13 => {
                Some(Stage::Decode)
            }
            Anomaly::A05 | Anomaly::A14 | Anomaly::A16 | Anomaly::A17 { .. } | Anomaly::A18 => {
                Some(Stage::Execute)
            }
            Anomaly::A06 => Some(Stage::Writeback),
            Anomaly::A10 { .. } | Anomaly::A11 | Anomaly::A15 => Some(Stage::BranchUnit),
        }
    }

    /// Parameter names and current values.
    pub fn params(&self) -> Vec<(&'static str, i64)> {
        match *self {
            Anomaly::A03 { from, to } | Anomaly::A04 { from, to } => {
                vec![("from", from as i64), ("to", to as i64)]
            }
            Anomaly::A10 { delta_bytes } => vec![("delta_bytes", delta_bytes as i64)],
            Anomaly::A17 { reg } => vec![("reg", reg as i64)],
            _ => Vec::new(),
        }
    }

    fn default_for(id: &str) -> Option<Anomaly> {
        Some(match id {
            "golden" => Anomaly::Golden,
            "a03" => Anomaly::A03 { from: 7, to: 8 },
            "a04" => Anomaly::A04 { from: 7, to: 8 },
            "a05" => Anomaly::A05,
            "a06" => Anomaly::A06,
            "a10" => Anomaly::A10 { delta_bytes: 4 },
            "a11" => Anomaly::A11,
            "a12" => Anomaly::A12,
            "a13" => Anomaly::A13,
            "a14" => Anomaly::A14,
            "a15" => Anomaly::A15,
            "a16" => Anomaly::A16,
            "a17" => Anomaly::A17 { reg: 17 },
            "a18" => Anomaly::A18,
            _ => return None,
        })
    }
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())?;
        let params = self.params();
        if !params.is_empty() {
            let shown: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", shown.join(","))?;
        }
        Ok(())
    }
}

/// Builds an anomaly from its id and optional parameter overrides.
pub fn inject(id: &str, params: &[(String, i64)]) -> Result<Anomaly, AnomalyError> {
    let id = id.to_ascii_lowercase();
    let mut a = Anomaly::default_for(&id).ok_or_else(|| AnomalyError::Unknown(id.clone()))?;
    for (name, value) in params {
        let bad = || AnomalyError::BadParam {
            id: id.clone(),
            param: name.clone(),
            value: *value,
        };
        let reg = || u8::try_from(*value).ok().filter(|r| *r < 32).ok_or_else(bad);
        match (&mut a, name.as_str()) {
            (Anomaly::A03 { from, .. } | Anomaly::A04 { from, .. }, "from") => *from = reg()?,
            (Anomaly::A03 { to, .. } | Anomaly::A04 { to, .. }, "to") => *to = reg()?,
            (Anomaly::A17 { reg: r }, "reg") => *r = reg()?,
            (Anomaly::A10 { delta_bytes }, "delta_bytes") => {
                *delta_bytes = i32::try_from(*value)
                    .ok()
                    .filter(|d| d % 2 == 0)
                    .ok_or_else(bad)?;
            }
            _ => {
                return Err(AnomalyError::UnknownParam {
                    id: id.clone(),
                    param: name.clone(),
                })
            }
        }
    }
    Ok(a)
}

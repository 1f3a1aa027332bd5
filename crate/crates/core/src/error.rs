use std::fmt;

use serde::Serialize;

use crate::charge::RegistryViolation;
use crate::fock::SectorIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("unknown charge component `{0}`")]
    UnknownComponent(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("superselection violation: {0}")]
    Superselection(SuperselectionViolation),
    #[error("basis builder failed at vector {index}: {reason}")]
    Builder { index: usize, reason: String },
    #[error("invalid registry: {}", display_violations(.0))]
    InvalidRegistry(Vec<RegistryViolation>),
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

fn display_violations(v: &[RegistryViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A state whose terms spread over more than one gauged-charge sector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperselectionViolation {
    /// Every occupied sector with its weight (squared norm of the part).
    pub sectors: Vec<(SectorIndex, f64)>,
}

impl fmt::Display for SuperselectionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state spans {} sectors:", self.sectors.len())?;
        for (q, w) in &self.sectors {
            write!(f, " Q={q} (weight {w})")?;
        }
        Ok(())
    }
}

//! Witness files: a JSON encoding of an interpretation together with the
//! count it claims and a digest of the system it belongs to, for bit-exact
//! verification and cross-run diffing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ir::{DomainSizes, System};
use crate::semantics::{FuncTable, Interpretation, SemanticsError};

/// Serialised form of one function table: row-major values plus an explicit
/// arity header.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct WitnessTable {
    pub arity: usize,
    pub values: Vec<usize>,
}

/// Witness file schema.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct WitnessFile {
    pub sizes: BTreeMap<String, usize>,
    pub tables: BTreeMap<String, WitnessTable>,
    pub count: u64,
    pub system_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("witness was produced for a different system (digest mismatch)")]
    DigestMismatch,
    #[error("table {0} disagrees with the declared arity or domain sizes")]
    TableMismatch(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Hex digest of a system's canonical rendering.
pub fn system_digest(sys: &System) -> String {
    let text = crate::dsl::render(sys);
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Packages an interpretation and its verified count for `sys`.
pub fn to_witness(sys: &System, interp: &Interpretation, count: u64) -> WitnessFile {
    WitnessFile {
        sizes: interp.sizes.0.clone(),
        tables: interp
            .tables
            .iter()
            .map(|(name, t)| {
                (
                    name.clone(),
                    WitnessTable {
                        arity: t.arity(),
                        values: t.values.clone(),
                    },
                )
            })
            .collect(),
        count,
        system_digest: system_digest(sys),
    }
}

/// Rebuilds the interpretation a witness file describes, checking shapes
/// against the system. The digest must match unless `ignore_digest`.
pub fn from_witness(
    sys: &System,
    witness: &WitnessFile,
    ignore_digest: bool,
) -> Result<Interpretation, WitnessError> {
    if !ignore_digest && witness.system_digest != system_digest(sys) {
        return Err(WitnessError::DigestMismatch);
    }
    let sizes = DomainSizes(witness.sizes.clone());
    let mut interp = Interpretation::zeros(sys, &sizes).map_err(WitnessError::Semantics)?;
    for (name, wt) in &witness.tables {
        let expected = interp
            .tables
            .get(name)
            .ok_or_else(|| WitnessError::TableMismatch(name.clone()))?;
        if expected.arity() != wt.arity || expected.values.len() != wt.values.len() {
            return Err(WitnessError::TableMismatch(name.clone()));
        }
        interp
            .set_values(name, wt.values.clone())
            .map_err(|_| WitnessError::TableMismatch(name.clone()))?;
    }
    Ok(interp)
}

/// Convenience constructor used by tests: build a table directly.
pub fn table(dims: Vec<usize>, result_size: usize, values: Vec<usize>) -> FuncTable {
    let mut t = FuncTable::zeros(dims, result_size);
    assert_eq!(t.values.len(), values.len());
    t.values = values;
    t
}

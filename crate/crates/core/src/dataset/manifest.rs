use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Imputation, Schema};
use crate::error::Result;
use crate::partition::PartitionRecord;

pub const MANIFEST_VERSION: u32 = 1;

/// Sidecar describing how a dataset was ingested (and, once partitioned,
/// how to put it back together).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub name: String,
    pub source: Option<String>,
    pub source_sha256: String,
    pub rows: usize,
    pub header: bool,
    pub schema: Schema,
    pub imputations: Vec<Imputation>,
    #[serde(default)]
    pub partition: Option<PartitionRecord>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

//! The design file: the contract between the optimiser and code
//! construction.

use super::pipeline::{BackoffGap, Ceilings, DesignOutcome};
use super::{DesignSpec, OpennessReport, TwoLevelDesign};
use crate::channel::{PowerSplit, RelayChannelParams, SnrTriple};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Format tag written into every design file.
pub const DESIGN_FORMAT: &str = "relay-ldpc-design/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub format: String,
    pub toolkit_version: String,
    pub params: RelayChannelParams,
    pub alpha: f64,
    pub snrs: SnrTriple,
    pub capacity: f64,
    pub ceilings: Ceilings,
    pub spec: DesignSpec,
    pub design: TwoLevelDesign,
    pub optimum_r: f64,
    pub optimum_r0: f64,
    pub backoff: f64,
    pub backoff_gap: Option<BackoffGap>,
    pub downward_closure: Vec<(f64, bool)>,
    pub verification: OpennessReport,
    /// Excluded from the content hash.
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub created_unix: u64,
}

impl Metadata {
    pub fn now() -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self { created_unix }
    }
}

/// SHA-256 of the compact JSON of `value` with the top-level `metadata` key
/// removed. Object keys serialise in sorted order, so the hash is canonical.
pub(crate) fn content_hash<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("metadata");
    }
    Ok(hex::encode(Sha256::digest(serde_json::to_string(&v)?.as_bytes())))
}

impl DesignFile {
    pub fn from_outcome(params: &RelayChannelParams, outcome: &DesignOutcome, backoff: f64) -> Self {
        Self {
            format: DESIGN_FORMAT.to_string(),
            toolkit_version: crate::VERSION.to_string(),
            params: *params,
            alpha: outcome.split.split.alpha(),
            snrs: outcome.split.snrs,
            capacity: outcome.split.rates.capacity,
            ceilings: outcome.ceilings,
            spec: outcome.spec.clone(),
            design: outcome.design.clone(),
            optimum_r: outcome.optimum_r,
            optimum_r0: outcome.optimum_r0,
            backoff,
            backoff_gap: outcome.backoff_gap,
            downward_closure: outcome.downward_closure.clone(),
            verification: outcome.verification,
            metadata: Metadata::now(),
        }
    }

    /// The power split the design was made for.
    pub fn split(&self) -> Result<PowerSplit> {
        PowerSplit::new(self.alpha)
    }

    pub fn hash(&self) -> Result<String> {
        content_hash(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.format != DESIGN_FORMAT {
            return Err(Error::ConfigMismatch(format!(
                "design format {:?}, expected {DESIGN_FORMAT:?}",
                file.format
            )));
        }
        Ok(file)
    }
}

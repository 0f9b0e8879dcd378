//! Aggregate analysis result and its renderings.

mod dot;
mod markdown;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::finding::Finding;
use crate::human::{AnalysisContext, RiskMatrix};
use crate::mapping::ConstraintTrace;
use crate::process::{
    CollaborationReport, InfrastructureHints, ParticipantReport, SecurityConstraint,
};
use crate::threat::{AttackSurfaceReport, Threat};

pub use dot::render_dot;
pub use markdown::render_markdown;

/// Analysis steps in execution order.
pub const STEPS: [&str; 4] = [
    "business_process_analysis",
    "function_mapping",
    "technical_analysis",
    "human_factor_analysis",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    /// Input name to lowercase hex SHA-256 of the bytes read.
    pub input_digests: BTreeMap<String, String>,
    /// Not part of the canonical form.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metadata: Metadata,
    pub steps: Vec<String>,
    pub participants: ParticipantReport,
    pub constraints: Vec<SecurityConstraint>,
    pub infrastructure: InfrastructureHints,
    pub collaboration: CollaborationReport,
    pub warnings: Vec<Finding>,
    pub mapping_coverage: Vec<Finding>,
    pub constraint_traces: Vec<ConstraintTrace>,
    pub threats: Vec<Threat>,
    pub attack_surface: AttackSurfaceReport,
    pub human_factor_context: AnalysisContext,
    pub relevant_roles: Vec<String>,
    pub risk_matrix: RiskMatrix,
    pub assumptions: Vec<String>,
}

impl AnalysisReport {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::json("analysis report", e))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn canonical_digest(&self) -> String {
        hex(&Sha256::digest(canonical_json(self)))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Pretty JSON with object keys sorted and a trailing newline.
pub fn render_json(report: &AnalysisReport) -> Vec<u8> {
    // Going through `Value` sorts every object's keys.
    let value = serde_json::to_value(report).expect("report is always representable as JSON");
    let mut out = serde_json::to_vec_pretty(&value).expect("JSON value serializes");
    out.push(b'\n');
    out
}

/// [`render_json`] with the timestamp cleared: byte-stable for identical inputs.
pub fn canonical_json(report: &AnalysisReport) -> Vec<u8> {
    let mut stable = report.clone();
    stable.metadata.timestamp = None;
    render_json(&stable)
}

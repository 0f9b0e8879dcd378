use serde::{Deserialize, Serialize};

use crate::layer::LayerSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Vulnerability,
    Threat,
    /// Modelling issue that does not stop the analysis.
    Warning,
}

/// A single analysis result with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub kind: FindingKind,
    pub layers: LayerSet,
    /// Rule id or name of the operation that produced the finding.
    pub source: String,
    pub subjects: Vec<String>,
    pub message: String,
}

impl Finding {
    pub fn warning(
        source: &str,
        subject: &str,
        layers: LayerSet,
        message: impl Into<String>,
    ) -> Self {
        Finding {
            id: format!("{source}:{subject}"),
            kind: FindingKind::Warning,
            layers,
            source: source.to_string(),
            subjects: vec![subject.to_string()],
            message: message.into(),
        }
    }
}

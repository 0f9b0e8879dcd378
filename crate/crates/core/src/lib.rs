//! Cross-layer security analysis for process-aware information systems.
//!
//! The analysis walks four layers in a fixed order:
//!
//! 1. business process analysis ([`process`]): participants, security
//!    constraints, infrastructure hints and collaborations from a BPMN model;
//! 2. function mapping ([`mapping`]): binding tasks and constraints to the
//!    components of a data-flow diagram ([`dfd`]) and tracing whether each
//!    constraint still holds where the data finally lands;
//! 3. technical analysis ([`threat`]): STRIDE-per-element threats over the
//!    data-flow diagram and its trust boundaries;
//! 4. human factor analysis ([`human`]): a role-based risk matrix evaluated
//!    from an editable knowledge base.
//!
//! [`pipeline::run_pipeline`] chains the steps and [`report`] renders the
//! result as canonical JSON, Markdown or Graphviz DOT.

pub mod dfd;
pub mod error;
pub mod finding;
pub mod human;
pub mod layer;
pub mod mapping;
pub mod pipeline;
pub mod process;
pub mod report;
pub mod rules;
pub mod threat;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use dfd::{DfdElement, DfdModel, ElementKind, IdentityMode, TrustBoundary, Zone};
pub use error::{Error, Result};
pub use finding::{Finding, FindingKind};
pub use human::{RiskMatrix, RiskRule, Role, RoleCatalog};
pub use layer::{Layer, LayerSet};
pub use mapping::{ConstraintTrace, FunctionMapping, TraceStatus};
pub use pipeline::{run_pipeline, FailThreshold, PipelineOutcome, RunConfig, TaskSelection};
pub use process::{ConstraintKind, ProcessModel, SecurityConstraint};
pub use report::AnalysisReport;
pub use threat::{Threat, ThreatCategory, ThreatRule};

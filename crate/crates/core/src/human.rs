//! Human factor analysis: which roles matter for the analyzed tasks, and
//! which vulnerabilities they may introduce or threats they may pose.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::dfd::{DfdModel, ElementKind};
use crate::error::{Error, Result};
use crate::layer::LayerSet;
use crate::mapping::FunctionMapping;
use crate::process::{ProcessModel, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleCategory {
    /// Responsible for the BPM programme as a whole.
    Governance,
    DesignTime,
    Runtime,
    Passive,
    Partner,
    Outsider,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Role {
    pub id: String,
    pub name: String,
    pub category: RoleCategory,
    /// Finer-grained labels, e.g. the attacker types an aggregate role covers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleCatalog {
    pub roles: Vec<Role>,
}

impl RoleCatalog {
    pub fn load(document: &[u8]) -> Result<Self> {
        let catalog: RoleCatalog =
            serde_json::from_slice(document).map_err(|e| Error::json("role catalog", e))?;
        let mut ids = HashSet::new();
        for r in &catalog.roles {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::duplicate(&r.id, "role catalog"));
            }
        }
        Ok(catalog)
    }

    pub fn role(&self, id: &str) -> Option<&Role> {
        self.roles.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    Vulnerability,
    Threat,
}

/// Condition under which a risk rule applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requires {
    #[default]
    Always,
    HasDatastore,
    HasCollaboration,
    HasBoundaryCrossing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskRule {
    pub id: String,
    pub role_id: String,
    pub layer_flags: LayerSet,
    pub kind: RiskKind,
    pub risk_text: String,
    pub solution_text: String,
    #[serde(default)]
    pub requires: Requires,
}

impl RiskRule {
    /// Parses a JSON list of risk rules.
    pub fn load_all(document: &[u8]) -> Result<Vec<RiskRule>> {
        let rules: Vec<RiskRule> =
            serde_json::from_slice(document).map_err(|e| Error::json("risk rules", e))?;
        let mut ids = HashSet::new();
        for r in &rules {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::duplicate(&r.id, "risk rules"));
            }
            if r.layer_flags.is_empty() {
                return Err(Error::invalid(
                    "risk rule",
                    &r.id,
                    "layer_flags must not be empty",
                ));
            }
        }
        Ok(rules)
    }
}

/// Facts about the analyzed tasks gathered from the earlier steps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisContext {
    pub task_ids: Vec<String>,
    /// A selected manual task deals with a passive subject.
    pub subject_interaction: bool,
    pub collaboration: bool,
    /// A selected task exchanges messages with another pool.
    pub partner_interaction: bool,
    /// A datastore is bound to a selected task.
    pub has_datastore: bool,
    /// A flow touching a component of a selected task crosses a trust boundary.
    pub has_boundary_crossing: bool,
}

impl AnalysisContext {
    pub fn build(
        process: &ProcessModel,
        mapping: &FunctionMapping,
        dfd: &DfdModel,
        collaboration: bool,
        selected: &[String],
    ) -> Self {
        let mut task_ids = selected.to_vec();
        task_ids.sort();
        task_ids.dedup();

        let subject_interaction = task_ids.iter().any(|id| {
            process.task(id).is_some_and(|t| t.kind == TaskKind::Manual)
                && process.subject_interactions.contains(id)
        });

        let partner_interaction = task_ids.iter().any(|id| {
            let own = process.pool_of_task(id).map(|p| p.id.as_str());
            process.message_flows.iter().any(|f| {
                let other = if &f.source == id {
                    &f.target
                } else if &f.target == id {
                    &f.source
                } else {
                    return false;
                };
                process.pool_of(other).map(|p| p.id.as_str()) != own
            })
        });

        let bound: BTreeSet<&str> = task_ids
            .iter()
            .flat_map(|t| mapping.bound_elements(t))
            .map(String::as_str)
            .collect();
        let has_datastore = bound.iter().any(|id| {
            dfd.element(id)
                .is_some_and(|e| e.kind == ElementKind::Datastore)
        });
        let has_boundary_crossing = dfd.flows_crossing_boundaries().iter().any(|c| {
            bound.contains(c.flow.source.as_str()) || bound.contains(c.flow.target.as_str())
        });

        AnalysisContext {
            task_ids,
            subject_interaction,
            collaboration,
            partner_interaction: collaboration && partner_interaction,
            has_datastore,
            has_boundary_crossing,
        }
    }

    fn satisfies(&self, requires: Requires) -> bool {
        match requires {
            Requires::Always => true,
            Requires::HasDatastore => self.has_datastore,
            Requires::HasCollaboration => self.collaboration,
            Requires::HasBoundaryCrossing => self.has_boundary_crossing,
        }
    }
}

/// Roles that take part in the analyzed tasks, sorted by id.
///
/// Governance roles are never involved in a task-level analysis. Design-time,
/// runtime and outsider roles always are. Passive subjects and partners only
/// when the context shows an interaction with them.
pub fn relevant_roles(context: &AnalysisContext, catalog: &RoleCatalog) -> Vec<Role> {
    let mut out: Vec<Role> = catalog
        .roles
        .iter()
        .filter(|r| match r.category {
            RoleCategory::Governance => false,
            RoleCategory::DesignTime | RoleCategory::Runtime | RoleCategory::Outsider => true,
            RoleCategory::Passive => context.subject_interaction,
            RoleCategory::Partner => context.collaboration && context.partner_interaction,
        })
        .cloned()
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskRow {
    pub rule_id: String,
    pub role_id: String,
    pub role_name: String,
    pub layer_flags: LayerSet,
    pub kind: RiskKind,
    pub risk_text: String,
    pub solution_text: String,
    pub context_refs: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskMatrix {
    pub rows: Vec<RiskRow>,
}

impl RiskMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Evaluates the knowledge base for the given roles.
///
/// Every rule must reference a role of the catalog, even if that role is not
/// among `roles`. Rows are sorted by role id, then rule id.
pub fn evaluate_risk_rules(
    catalog: &RoleCatalog,
    roles: &[Role],
    context: &AnalysisContext,
    rules: &[RiskRule],
) -> Result<RiskMatrix> {
    for r in rules {
        if catalog.role(&r.role_id).is_none() {
            return Err(Error::UnknownRole {
                rule: r.id.clone(),
                role: r.role_id.clone(),
            });
        }
    }
    let selected: HashSet<&str> = roles.iter().map(|r| r.id.as_str()).collect();
    let mut rows: Vec<RiskRow> = rules
        .iter()
        .filter(|r| selected.contains(r.role_id.as_str()) && context.satisfies(r.requires))
        .map(|r| RiskRow {
            rule_id: r.id.clone(),
            role_id: r.role_id.clone(),
            role_name: catalog
                .role(&r.role_id)
                .map(|c| c.name.clone())
                .unwrap_or_default(),
            layer_flags: r.layer_flags.clone(),
            kind: r.kind,
            risk_text: r.risk_text.clone(),
            solution_text: r.solution_text.clone(),
            context_refs: context.task_ids.clone(),
        })
        .collect();
    rows.sort_by(|a, b| (&a.role_id, &a.rule_id).cmp(&(&b.role_id, &b.rule_id)));
    Ok(RiskMatrix { rows })
}

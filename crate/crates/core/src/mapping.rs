//! Function mapping: which system components realize each task, where each
//! business constraint is enforced, and whether the end-user identity the
//! constraint depends on survives along the data path.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dfd::{DfdModel, ElementKind, IdentityMode};
use crate::error::{Error, Result};
use crate::finding::{Finding, FindingKind};
use crate::layer::Layer;
use crate::process::{ConstraintKind, ProcessModel, SecurityConstraint};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnforcementPoint {
    pub element: String,
    pub layer: Layer,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionMapping {
    /// Task id to the DFD elements that realize it.
    #[serde(default)]
    pub task_bindings: BTreeMap<String, Vec<String>>,
    /// Constraint id to the places that enforce it.
    #[serde(default)]
    pub enforcement_points: BTreeMap<String, Vec<EnforcementPoint>>,
}

impl FunctionMapping {
    /// Parses a mapping and resolves it against both models.
    pub fn load(document: &[u8], process: &ProcessModel, dfd: &DfdModel) -> Result<Self> {
        let mut mapping: FunctionMapping =
            serde_json::from_slice(document).map_err(|e| Error::json("function mapping", e))?;
        for elements in mapping.task_bindings.values_mut() {
            elements.sort();
            elements.dedup();
        }
        for points in mapping.enforcement_points.values_mut() {
            points.sort();
            points.dedup();
        }
        mapping.validate(process, dfd)?;
        Ok(mapping)
    }

    pub fn validate(&self, process: &ProcessModel, dfd: &DfdModel) -> Result<()> {
        for (task, elements) in &self.task_bindings {
            if process.task(task).is_none() {
                return Err(Error::dangling(task, "task_bindings"));
            }
            for e in elements {
                if dfd.element(e).is_none() {
                    return Err(Error::dangling(e, format!("binding of task `{task}`")));
                }
            }
        }
        for (constraint, points) in &self.enforcement_points {
            if process.constraint(constraint).is_none() {
                return Err(Error::dangling(constraint, "enforcement_points"));
            }
            for p in points {
                if dfd.element(&p.element).is_none() {
                    return Err(Error::dangling(
                        &p.element,
                        format!("enforcement of constraint `{constraint}`"),
                    ));
                }
                if p.layer == Layer::Business {
                    return Err(Error::invalid(
                        "enforcement point",
                        &p.element,
                        format!(
                            "constraint `{constraint}` is declared at the business layer and must be enforced at design or implementation"
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn bound_elements(&self, task: &str) -> &[String] {
        self.task_bindings.get(task).map_or(&[], Vec::as_slice)
    }

    /// Constraint ids enforced by the given element.
    pub fn constraints_enforced_by(&self, element: &str) -> Vec<String> {
        self.enforcement_points
            .iter()
            .filter(|(_, points)| points.iter().any(|p| p.element == element))
            .map(|(id, _)| id.clone())
            .collect()
    }
}

pub fn load_mapping(
    document: &[u8],
    process: &ProcessModel,
    dfd: &DfdModel,
) -> Result<FunctionMapping> {
    FunctionMapping::load(document, process, dfd)
}

/// One vulnerability per security-critical task that no component realizes.
pub fn check_mapping_coverage(process: &ProcessModel, mapping: &FunctionMapping) -> Vec<Finding> {
    let mut out: Vec<Finding> = process
        .security_critical_tasks()
        .filter(|t| mapping.bound_elements(&t.id).is_empty())
        .map(|t| Finding {
            id: format!("unmapped_task:{}", t.id),
            kind: FindingKind::Vulnerability,
            layers: [Layer::Design].into(),
            source: "check_mapping_coverage".into(),
            subjects: vec![t.id.clone()],
            message: format!(
                "security-critical task `{}` is not bound to any system component",
                t.name
            ),
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus {
    FullyTraced,
    AttributionGap,
    Unenforced,
}

impl std::fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TraceStatus::FullyTraced => "fully_traced",
            TraceStatus::AttributionGap => "attribution_gap",
            TraceStatus::Unenforced => "unenforced",
        })
    }
}

impl TraceStatus {
    pub fn classify(enforcing: &[String], gaps: &[String]) -> Self {
        if enforcing.is_empty() {
            TraceStatus::Unenforced
        } else if gaps.is_empty() {
            TraceStatus::FullyTraced
        } else {
            TraceStatus::AttributionGap
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTrace {
    pub constraint_id: String,
    pub constraint_kind: ConstraintKind,
    pub task_ids: Vec<String>,
    pub declared_layer: Layer,
    pub enforcing_elements: Vec<String>,
    /// Elements downstream of enforcement that only see a technical or no identity.
    pub downstream_gap_elements: Vec<String>,
    pub status: TraceStatus,
}

/// Follows a business constraint from its enforcement points along the data
/// flows and collects the elements where the end-user identity is lost.
///
/// An element is a gap when it is reachable from an enforcing element, is a
/// process or datastore, acts under a system or anonymous identity, and is
/// bound to one of the constraint's tasks. Enforcing elements are never gaps.
pub fn trace_constraint_enforcement(
    constraint: &SecurityConstraint,
    mapping: &FunctionMapping,
    dfd: &DfdModel,
) -> ConstraintTrace {
    let enforcing: BTreeSet<&str> = mapping
        .enforcement_points
        .get(&constraint.id)
        .into_iter()
        .flatten()
        .map(|p| p.element.as_str())
        .collect();

    let bound: HashSet<&str> = constraint
        .task_ids
        .iter()
        .flat_map(|t| mapping.bound_elements(t))
        .map(String::as_str)
        .collect();

    let gaps: BTreeSet<&str> = reachable_from(dfd, &enforcing)
        .into_iter()
        .filter(|id| !enforcing.contains(id) && bound.contains(id))
        .filter(|id| {
            dfd.element(id).is_some_and(|e| {
                matches!(e.kind, ElementKind::Process | ElementKind::Datastore)
                    && matches!(
                        e.identity_mode,
                        IdentityMode::System | IdentityMode::Anonymous
                    )
            })
        })
        .collect();

    let enforcing_elements: Vec<String> = enforcing.iter().map(|s| s.to_string()).collect();
    let downstream_gap_elements: Vec<String> = gaps.iter().map(|s| s.to_string()).collect();
    ConstraintTrace {
        constraint_id: constraint.id.clone(),
        constraint_kind: constraint.kind,
        task_ids: constraint.task_ids.clone(),
        declared_layer: constraint.declared_layer,
        status: TraceStatus::classify(&enforcing_elements, &downstream_gap_elements),
        enforcing_elements,
        downstream_gap_elements,
    }
}

/// Elements reachable in one or more forward flow steps from any start.
fn reachable_from<'a>(dfd: &'a DfdModel, starts: &BTreeSet<&str>) -> BTreeSet<&'a str> {
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for f in &dfd.flows {
        adjacency
            .entry(f.source.as_str())
            .or_default()
            .push(f.target.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&str> = starts
        .iter()
        .filter_map(|s| adjacency.get_key_value(s).map(|(k, _)| *k))
        .collect();
    while let Some(node) = queue.pop_front() {
        for &next in adjacency.get(node).into_iter().flatten() {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Traces every constraint of the model, sorted by constraint id.
pub fn trace_all(
    process: &ProcessModel,
    mapping: &FunctionMapping,
    dfd: &DfdModel,
) -> Vec<ConstraintTrace> {
    let mut out: Vec<_> = process
        .constraints
        .iter()
        .map(|c| trace_constraint_enforcement(c, mapping, dfd))
        .collect();
    out.sort_by(|a, b| a.constraint_id.cmp(&b.constraint_id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_follows_definition() {
        let some = vec!["x".to_string()];
        assert_eq!(TraceStatus::classify(&[], &[]), TraceStatus::Unenforced);
        assert_eq!(TraceStatus::classify(&some, &[]), TraceStatus::FullyTraced);
        assert_eq!(
            TraceStatus::classify(&some, &some),
            TraceStatus::AttributionGap
        );
    }

    #[test]
    fn reachability_skips_start_unless_cycled() {
        let dfd = DfdModel::parse(
            br#"{"elements":[{"id":"a","name":"A","kind":"process"},
                            {"id":"b","name":"B","kind":"process"},
                            {"id":"c","name":"C","kind":"process"}],
                "flows":[{"id":"f1","source":"a","target":"b"},
                         {"id":"f2","source":"b","target":"a"},
                         {"id":"f3","source":"c","target":"a"}]}"#,
        )
        .unwrap();
        let starts: BTreeSet<&str> = ["a"].into();
        assert_eq!(reachable_from(&dfd, &starts), ["a", "b"].into());
        let starts: BTreeSet<&str> = ["b"].into();
        assert_eq!(reachable_from(&dfd, &starts), ["a", "b"].into());
    }
}

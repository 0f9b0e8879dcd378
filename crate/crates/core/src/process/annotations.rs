use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;

use super::{check_constraint_shape, ConstraintKind, SecurityConstraint};
use crate::error::{Error, Result};
use crate::layer::Layer;

/// Constraint sidecar file accompanying a BPMN document.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    #[serde(default)]
    pub constraints: Vec<SidecarConstraint>,
    #[serde(default)]
    pub security_critical: Vec<String>,
    #[serde(default)]
    pub subject_interaction: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarConstraint {
    pub id: String,
    pub kind: ConstraintKind,
    pub tasks: Vec<String>,
    #[serde(default)]
    pub role: Option<String>,
}

impl Sidecar {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Ok(Sidecar::default());
        }
        serde_json::from_slice(bytes).map_err(|e| Error::json("constraint annotations", e))
    }

    pub fn constraints(&self) -> Result<Vec<SecurityConstraint>> {
        self.constraints
            .iter()
            .map(|c| {
                let constraint = SecurityConstraint {
                    id: c.id.clone(),
                    kind: c.kind,
                    task_ids: c.tasks.clone(),
                    role_name: c.role.clone(),
                    declared_layer: Layer::Business,
                };
                check_constraint_shape(&constraint)?;
                Ok(constraint)
            })
            .collect()
    }
}

fn grammar() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(SoD|BoD|Role)\s*\(\s*([^,()]*?)\s*,\s*([^,()]*?)\s*\)")
            .expect("constraint grammar")
    })
}

/// Extracts `SoD(a, b)`, `BoD(a, b)` and `Role(task, role)` terms from the
/// text of a BPMN annotation. Text that does not match is ignored.
///
/// A single term keeps the annotation id; several terms get `-1`, `-2`, ...
pub fn parse_constraint_text(annotation_id: &str, text: &str) -> Vec<SecurityConstraint> {
    let terms: Vec<_> = grammar()
        .captures_iter(text)
        .filter(|c| !c[2].is_empty() && !c[3].is_empty())
        .collect();
    let single = terms.len() == 1;
    terms
        .iter()
        .enumerate()
        .map(|(i, caps)| {
            let id = if single {
                annotation_id.to_string()
            } else {
                format!("{annotation_id}-{}", i + 1)
            };
            let first = caps[2].to_string();
            let second = caps[3].to_string();
            let (kind, task_ids, role_name) = match &caps[1] {
                "SoD" => (ConstraintKind::SoD, vec![first, second], None),
                "BoD" => (ConstraintKind::BoD, vec![first, second], None),
                _ => (ConstraintKind::RoleAssignment, vec![first], Some(second)),
            };
            SecurityConstraint {
                id,
                kind,
                task_ids,
                role_name,
                declared_layer: Layer::Business,
            }
        })
        .collect()
}

/// Merges sidecar constraints with those found in BPMN text annotations.
///
/// Entries are deduplicated by kind and unordered task set; the sidecar entry
/// wins on id. A role assignment naming two different roles for the same task
/// set, or SoD and BoD over the same pair, is a contradiction.
pub fn merge_constraints(
    sidecar: Vec<SecurityConstraint>,
    annotations: Vec<SecurityConstraint>,
) -> Result<Vec<SecurityConstraint>> {
    let mut by_key: BTreeMap<(ConstraintKind, Vec<String>), SecurityConstraint> = BTreeMap::new();
    for c in sidecar.into_iter().chain(annotations) {
        let mut tasks = c.task_ids.clone();
        tasks.sort();
        match by_key.get(&(c.kind, tasks.clone())) {
            Some(existing) if existing.role_name != c.role_name => {
                return Err(Error::Contradiction {
                    first: existing.id.clone(),
                    second: c.id,
                    task_a: tasks[0].clone(),
                    task_b: tasks.get(1).cloned().unwrap_or_default(),
                });
            }
            Some(_) => {}
            None => {
                by_key.insert((c.kind, tasks), c);
            }
        }
    }

    let mut pairs: BTreeMap<&[String], &SecurityConstraint> = BTreeMap::new();
    for ((kind, tasks), c) in &by_key {
        if *kind == ConstraintKind::RoleAssignment {
            continue;
        }
        if let Some(other) = pairs.insert(tasks.as_slice(), c) {
            return Err(Error::Contradiction {
                first: other.id.clone(),
                second: c.id.clone(),
                task_a: tasks[0].clone(),
                task_b: tasks[1].clone(),
            });
        }
    }

    let mut out: Vec<_> = by_key.into_values().collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in out.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(Error::duplicate(&pair[0].id, "constraints"));
        }
    }
    Ok(out)
}

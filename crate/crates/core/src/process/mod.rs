//! Business-process layer: a BPMN subset plus security constraints.

mod annotations;
mod bpmn;
mod extract;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finding::Finding;
use crate::layer::Layer;

pub use annotations::{merge_constraints, parse_constraint_text, Sidecar};
pub use extract::{
    default_own_organization, detect_collaborations, extract_constraints, extract_infrastructure,
    extract_participants, CollaborationReport, InfrastructureHints, Participant, ParticipantReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub id: String,
    pub pools: Vec<Pool>,
    pub message_flows: Vec<MessageFlow>,
    pub data_stores: Vec<DataStoreRef>,
    pub constraints: Vec<SecurityConstraint>,
    /// Tasks in which a human performer deals directly with a passive subject.
    #[serde(default)]
    pub subject_interactions: Vec<String>,
}

/// A participant (organization or partner) and the process it owns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub id: String,
    pub name: String,
    pub lanes: Vec<Lane>,
    pub tasks: Vec<TaskNode>,
    /// Events, gateways and opaque activities. Parsed for reference checks only.
    pub nodes: Vec<FlowNode>,
    pub sequence_flows: Vec<SequenceFlow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub role_name: String,
    pub task_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Manual,
    Automated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskNode {
    pub id: String,
    pub name: String,
    pub kind: TaskKind,
    pub lane_id: Option<String>,
    pub security_critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Event,
    ExclusiveGateway,
    Gateway,
    Activity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
}

/// Message exchange between two pools. Endpoints are nodes or pools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageFlow {
    pub id: String,
    pub name: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataStoreRef {
    pub id: String,
    pub name: String,
    pub pool_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Separation of duty: two different performers.
    SoD,
    /// Binding of duty: the same performer.
    BoD,
    #[serde(rename = "Role", alias = "RoleAssignment")]
    RoleAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityConstraint {
    pub id: String,
    pub kind: ConstraintKind,
    pub task_ids: Vec<String>,
    pub role_name: Option<String>,
    pub declared_layer: Layer,
}

impl SecurityConstraint {
    /// Identity of a constraint for deduplication: kind and unordered task set.
    pub fn key(&self) -> (ConstraintKind, BTreeSet<&str>) {
        (
            self.kind,
            self.task_ids.iter().map(String::as_str).collect(),
        )
    }
}

impl ProcessModel {
    /// Parses a BPMN document and an optional constraint sidecar.
    pub fn parse(document: &[u8], annotations: Option<&[u8]>) -> Result<Self> {
        let parsed = bpmn::parse(document)?;
        let sidecar = match annotations {
            Some(bytes) => Sidecar::parse(bytes)?,
            None => Sidecar::default(),
        };
        let mut model = parsed.model;
        model.constraints =
            merge_constraints(sidecar.constraints()?, parsed.annotation_constraints)?;
        for id in &sidecar.security_critical {
            match model.task_mut(id) {
                Some(task) => task.security_critical = true,
                None => return Err(Error::dangling(id, "security_critical list")),
            }
        }
        model.subject_interactions = sidecar.subject_interaction.clone();
        model.subject_interactions.sort();
        model.subject_interactions.dedup();
        model.validate()?;
        Ok(model)
    }

    /// Reads a model previously serialized with serde and checks its invariants.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let model: ProcessModel =
            serde_json::from_slice(bytes).map_err(|e| Error::json("process model", e))?;
        model.validate()?;
        Ok(model)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskNode> {
        self.pools.iter().flat_map(|p| p.tasks.iter())
    }

    pub fn task(&self, id: &str) -> Option<&TaskNode> {
        self.tasks().find(|t| t.id == id)
    }

    fn task_mut(&mut self, id: &str) -> Option<&mut TaskNode> {
        self.pools
            .iter_mut()
            .flat_map(|p| p.tasks.iter_mut())
            .find(|t| t.id == id)
    }

    pub fn pool_of_task(&self, id: &str) -> Option<&Pool> {
        self.pools
            .iter()
            .find(|p| p.tasks.iter().any(|t| t.id == id))
    }

    /// Pool that owns a node, task or is itself the given id.
    pub fn pool_of(&self, id: &str) -> Option<&Pool> {
        self.pools.iter().find(|p| {
            p.id == id || p.tasks.iter().any(|t| t.id == id) || p.nodes.iter().any(|n| n.id == id)
        })
    }

    pub fn security_critical_tasks(&self) -> impl Iterator<Item = &TaskNode> {
        self.tasks().filter(|t| t.security_critical)
    }

    pub fn constraint(&self, id: &str) -> Option<&SecurityConstraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut claim = |id: &str, context: &str| -> Result<()> {
            if id.is_empty() {
                return Err(Error::invalid(
                    "identifier",
                    id,
                    format!("empty id in {context}"),
                ));
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::duplicate(id, context));
            }
            Ok(())
        };
        for pool in &self.pools {
            claim(&pool.id, "pools")?;
            for lane in &pool.lanes {
                claim(&lane.id, "lanes")?;
            }
            for task in &pool.tasks {
                claim(&task.id, "tasks")?;
            }
            for node in &pool.nodes {
                claim(&node.id, "flow nodes")?;
            }
            for flow in &pool.sequence_flows {
                claim(&flow.id, "sequence flows")?;
            }
        }
        for flow in &self.message_flows {
            claim(&flow.id, "message flows")?;
        }
        for store in &self.data_stores {
            claim(&store.id, "data stores")?;
        }

        for pool in &self.pools {
            validate_pool(pool)?;
        }

        for flow in &self.message_flows {
            let source = self.pool_of(&flow.source).ok_or_else(|| {
                Error::dangling(&flow.source, format!("message flow `{}`", flow.id))
            })?;
            let target = self.pool_of(&flow.target).ok_or_else(|| {
                Error::dangling(&flow.target, format!("message flow `{}`", flow.id))
            })?;
            if source.id == target.id {
                return Err(Error::invalid(
                    "message flow",
                    &flow.id,
                    format!("both endpoints lie in pool `{}`", source.id),
                ));
            }
        }

        for store in &self.data_stores {
            if let Some(pool) = &store.pool_id {
                if !self.pools.iter().any(|p| &p.id == pool) {
                    return Err(Error::dangling(pool, format!("data store `{}`", store.id)));
                }
            }
        }

        validate_constraints(self)?;

        for id in &self.subject_interactions {
            if self.task(id).is_none() {
                return Err(Error::dangling(id, "subject_interaction list"));
            }
        }
        Ok(())
    }

    /// Non-fatal modelling issues, such as tasks outside every lane.
    pub fn warnings(&self) -> Vec<Finding> {
        let mut out: Vec<Finding> = self
            .tasks()
            .filter(|t| t.lane_id.is_none())
            .map(|t| {
                Finding::warning(
                    "role_unassigned",
                    &t.id,
                    [Layer::Business].into(),
                    format!(
                        "task `{}` is not assigned to any lane, so no role performs it",
                        t.name
                    ),
                )
            })
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

fn validate_pool(pool: &Pool) -> Result<()> {
    let tasks: HashMap<&str, &TaskNode> = pool.tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    let lanes: HashMap<&str, &Lane> = pool.lanes.iter().map(|l| (l.id.as_str(), l)).collect();
    for lane in &pool.lanes {
        for id in &lane.task_ids {
            if !tasks.contains_key(id.as_str()) {
                return Err(Error::dangling(
                    id,
                    format!("lane `{}` of pool `{}`", lane.id, pool.id),
                ));
            }
        }
    }
    for task in &pool.tasks {
        if let Some(lane_id) = &task.lane_id {
            let lane = lanes
                .get(lane_id.as_str())
                .ok_or_else(|| Error::dangling(lane_id, format!("task `{}`", task.id)))?;
            if !lane.task_ids.contains(&task.id) {
                return Err(Error::invalid(
                    "task",
                    &task.id,
                    format!("lane `{lane_id}` does not list the task"),
                ));
            }
        }
    }
    let nodes: HashSet<&str> = pool
        .tasks
        .iter()
        .map(|t| t.id.as_str())
        .chain(pool.nodes.iter().map(|n| n.id.as_str()))
        .collect();
    for flow in &pool.sequence_flows {
        for end in [&flow.source, &flow.target] {
            if !nodes.contains(end.as_str()) {
                return Err(Error::dangling(end, format!("sequence flow `{}`", flow.id)));
            }
        }
    }
    Ok(())
}

fn validate_constraints(model: &ProcessModel) -> Result<()> {
    let mut ids = HashSet::new();
    let mut pairs: BTreeMap<BTreeSet<&str>, (ConstraintKind, &str)> = BTreeMap::new();
    for c in &model.constraints {
        if !ids.insert(c.id.as_str()) {
            return Err(Error::duplicate(&c.id, "constraints"));
        }
        if c.declared_layer != Layer::Business {
            return Err(Error::invalid(
                "constraint",
                &c.id,
                format!("declared at {} layer, expected business", c.declared_layer),
            ));
        }
        check_constraint_shape(c)?;
        for task in &c.task_ids {
            if model.task(task).is_none() {
                return Err(Error::dangling(task, format!("constraint `{}`", c.id)));
            }
        }
        if matches!(c.kind, ConstraintKind::SoD | ConstraintKind::BoD) {
            let (_, set) = c.key();
            if let Some((kind, other)) = pairs.get(&set) {
                if *kind != c.kind {
                    return Err(Error::Contradiction {
                        first: other.to_string(),
                        second: c.id.clone(),
                        task_a: c.task_ids[0].clone(),
                        task_b: c.task_ids[1].clone(),
                    });
                }
            }
            pairs.insert(set, (c.kind, c.id.as_str()));
        }
    }
    Ok(())
}

pub(crate) fn check_constraint_shape(c: &SecurityConstraint) -> Result<()> {
    match c.kind {
        ConstraintKind::SoD | ConstraintKind::BoD => {
            if c.task_ids.len() != 2 {
                return Err(Error::invalid(
                    "constraint",
                    &c.id,
                    format!(
                        "{:?} needs exactly two tasks, got {}",
                        c.kind,
                        c.task_ids.len()
                    ),
                ));
            }
            if c.task_ids[0] == c.task_ids[1] {
                return Err(Error::invalid(
                    "constraint",
                    &c.id,
                    format!("{:?} over a single task `{}`", c.kind, c.task_ids[0]),
                ));
            }
            if c.role_name.is_some() {
                return Err(Error::invalid(
                    "constraint",
                    &c.id,
                    "only Role constraints carry a role",
                ));
            }
        }
        ConstraintKind::RoleAssignment => {
            if c.task_ids.is_empty() {
                return Err(Error::invalid(
                    "constraint",
                    &c.id,
                    "Role needs at least one task",
                ));
            }
            if c.role_name.as_deref().map_or(true, |r| r.trim().is_empty()) {
                return Err(Error::invalid(
                    "constraint",
                    &c.id,
                    "Role needs a non-empty role name",
                ));
            }
        }
    }
    Ok(())
}

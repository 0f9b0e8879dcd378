//! The four business-process analysis steps.

use serde::{Deserialize, Serialize};

use super::{DataStoreRef, Pool, ProcessModel, SecurityConstraint, TaskKind, TaskNode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub pool_id: String,
    pub name: String,
    /// Lane role names, ordered by lane id.
    pub roles: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantReport {
    pub participants: Vec<Participant>,
}

impl ParticipantReport {
    pub fn participant(&self, name: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.name == name)
    }
}

pub fn extract_participants(model: &ProcessModel) -> ParticipantReport {
    let mut participants: Vec<Participant> = model
        .pools
        .iter()
        .map(|pool| {
            let mut lanes: Vec<_> = pool.lanes.iter().collect();
            lanes.sort_by(|a, b| a.id.cmp(&b.id));
            Participant {
                pool_id: pool.id.clone(),
                name: pool.name.clone(),
                roles: lanes.iter().map(|l| l.role_name.clone()).collect(),
            }
        })
        .collect();
    participants.sort_by(|a, b| a.pool_id.cmp(&b.pool_id));
    ParticipantReport { participants }
}

/// All constraints, sorted by id. Every one is declared at the business layer.
pub fn extract_constraints(model: &ProcessModel) -> Vec<SecurityConstraint> {
    let mut out = model.constraints.clone();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfrastructureHints {
    pub data_stores: Vec<DataStoreRef>,
    pub automated_tasks: Vec<TaskNode>,
}

pub fn extract_infrastructure(model: &ProcessModel) -> InfrastructureHints {
    let mut data_stores = model.data_stores.clone();
    data_stores.sort_by(|a, b| a.id.cmp(&b.id));
    let mut automated_tasks: Vec<TaskNode> = model
        .tasks()
        .filter(|t| t.kind == TaskKind::Automated)
        .cloned()
        .collect();
    automated_tasks.sort_by(|a, b| a.id.cmp(&b.id));
    InfrastructureHints {
        data_stores,
        automated_tasks,
    }
}

pub const COLLABORATION_ADVISORY: &str = "messages exchanged with other organizations cross an \
     organizational boundary; consider protecting them, for example with encryption or digital \
     signatures";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollaborationReport {
    pub collaboration: bool,
    pub own_organization: Option<String>,
    pub partners: Vec<String>,
    pub advisory: Option<String>,
}

/// Pool assumed to be the analyzing organization when none is named: the
/// one owning the most tasks, ties broken by name.
pub fn default_own_organization(model: &ProcessModel) -> Option<&Pool> {
    model
        .pools
        .iter()
        .max_by(|a, b| a.tasks.len().cmp(&b.tasks.len()).then(b.name.cmp(&a.name)))
}

/// Flags multi-pool processes and lists the partner organizations.
///
/// `own_org` matches a pool by name or id.
pub fn detect_collaborations(
    model: &ProcessModel,
    own_org: Option<&str>,
) -> Result<CollaborationReport> {
    let own = match own_org {
        Some(name) => Some(
            model
                .pools
                .iter()
                .find(|p| p.name == name || p.id == name)
                .ok_or_else(|| Error::UnknownPool(name.to_string()))?,
        ),
        None => default_own_organization(model),
    };
    let collaboration = model.pools.len() >= 2;
    let mut partners: Vec<String> = model
        .pools
        .iter()
        .filter(|p| own.map_or(true, |o| o.id != p.id))
        .map(|p| p.name.clone())
        .collect();
    partners.sort();
    Ok(CollaborationReport {
        collaboration,
        own_organization: own.map(|p| p.name.clone()),
        partners,
        advisory: collaboration.then(|| COLLABORATION_ADVISORY.to_string()),
    })
}

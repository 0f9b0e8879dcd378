//! System-design and implementation layer: a data-flow diagram with trust
//! boundaries.
//!
//! Elements outside every boundary sit in the implicit `external` zone, which
//! has trust level 0. Named boundaries default to level 1.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finding::Finding;
use crate::layer::Layer;

pub const EXTERNAL_ZONE: &str = "external";
pub const EXTERNAL_TRUST_LEVEL: i64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Process,
    Datastore,
    ExternalEntity,
}

/// Whose identity an element acts under and records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityMode {
    /// Acts as, and records, the human end user.
    EndUser,
    /// Acts under a fixed technical identity.
    System,
    Anonymous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfdElement {
    pub id: String,
    pub name: String,
    pub kind: ElementKind,
    pub identity_mode: IdentityMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acting_identity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFlow {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustBoundary {
    pub id: String,
    pub name: String,
    pub trust_level: i64,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfdModel {
    pub elements: Vec<DfdElement>,
    pub flows: Vec<DataFlow>,
    pub boundaries: Vec<TrustBoundary>,
}

/// A trust zone: a named boundary or the ambient external zone.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Zone {
    External,
    Boundary(String),
}

impl From<String> for Zone {
    fn from(s: String) -> Self {
        if s == EXTERNAL_ZONE {
            Zone::External
        } else {
            Zone::Boundary(s)
        }
    }
}

impl From<Zone> for String {
    fn from(z: Zone) -> Self {
        z.to_string()
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Zone::External => f.write_str(EXTERNAL_ZONE),
            Zone::Boundary(id) => f.write_str(id),
        }
    }
}

/// A data flow whose endpoints lie in different zones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub flow: DataFlow,
    pub source_zone: Zone,
    pub target_zone: Zone,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    id: String,
    name: String,
    kind: ElementKind,
    #[serde(default)]
    identity_mode: Option<IdentityMode>,
    #[serde(default)]
    acting_identity: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    id: String,
    name: String,
    #[serde(default = "default_trust_level")]
    trust_level: i64,
    #[serde(default)]
    members: Vec<String>,
}

fn default_trust_level() -> i64 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDfd {
    #[serde(default)]
    elements: Vec<RawElement>,
    #[serde(default)]
    flows: Vec<DataFlow>,
    #[serde(default)]
    boundaries: Vec<RawBoundary>,
}

impl DfdModel {
    /// Parses the JSON diagram format. A missing `identity_mode` defaults to
    /// `anonymous` for external entities and `system` otherwise.
    pub fn parse(document: &[u8]) -> Result<Self> {
        let raw: RawDfd =
            serde_json::from_slice(document).map_err(|e| Error::json("data-flow diagram", e))?;
        let model = DfdModel {
            elements: raw
                .elements
                .into_iter()
                .map(|e| DfdElement {
                    identity_mode: e.identity_mode.unwrap_or(match e.kind {
                        ElementKind::ExternalEntity => IdentityMode::Anonymous,
                        _ => IdentityMode::System,
                    }),
                    id: e.id,
                    name: e.name,
                    kind: e.kind,
                    acting_identity: e.acting_identity,
                })
                .collect(),
            flows: raw.flows,
            boundaries: raw
                .boundaries
                .into_iter()
                .map(|b| TrustBoundary {
                    id: b.id,
                    name: b.name,
                    trust_level: b.trust_level,
                    members: b.members,
                })
                .collect(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for (id, context) in self
            .elements
            .iter()
            .map(|e| (&e.id, "elements"))
            .chain(self.flows.iter().map(|f| (&f.id, "flows")))
            .chain(self.boundaries.iter().map(|b| (&b.id, "boundaries")))
        {
            if id.is_empty() {
                return Err(Error::invalid(
                    "identifier",
                    id,
                    format!("empty id in {context}"),
                ));
            }
            if !ids.insert(id.as_str()) {
                return Err(Error::duplicate(id, context));
            }
        }
        let elements: HashMap<&str, &DfdElement> =
            self.elements.iter().map(|e| (e.id.as_str(), e)).collect();
        for e in &self.elements {
            if e.kind == ElementKind::ExternalEntity && e.identity_mode != IdentityMode::Anonymous {
                return Err(Error::invalid(
                    "element",
                    &e.id,
                    "external entities must have identity_mode anonymous",
                ));
            }
        }
        for f in &self.flows {
            for end in [&f.source, &f.target] {
                if !elements.contains_key(end.as_str()) {
                    return Err(Error::dangling(end, format!("flow `{}`", f.id)));
                }
            }
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for b in &self.boundaries {
            if b.id == EXTERNAL_ZONE {
                return Err(Error::invalid(
                    "boundary",
                    &b.id,
                    "the external zone id is reserved",
                ));
            }
            for m in &b.members {
                if !elements.contains_key(m.as_str()) {
                    return Err(Error::dangling(m, format!("boundary `{}`", b.id)));
                }
                match owner.insert(m.as_str(), b.id.as_str()) {
                    Some(prev) if prev != b.id => {
                        return Err(Error::OverlappingBoundaries {
                            element: m.clone(),
                            first: prev.to_string(),
                            second: b.id.clone(),
                        });
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn element(&self, id: &str) -> Option<&DfdElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn boundary(&self, id: &str) -> Option<&TrustBoundary> {
        self.boundaries.iter().find(|b| b.id == id)
    }

    pub fn zone_of(&self, element_id: &str) -> Zone {
        self.boundaries
            .iter()
            .find(|b| b.members.iter().any(|m| m == element_id))
            .map_or(Zone::External, |b| Zone::Boundary(b.id.clone()))
    }

    pub fn trust_level(&self, zone: &Zone) -> i64 {
        match zone {
            Zone::External => EXTERNAL_TRUST_LEVEL,
            Zone::Boundary(id) => self
                .boundary(id)
                .map_or(EXTERNAL_TRUST_LEVEL, |b| b.trust_level),
        }
    }

    pub fn zone_name(&self, zone: &Zone) -> String {
        match zone {
            Zone::External => EXTERNAL_ZONE.to_string(),
            Zone::Boundary(id) => self
                .boundary(id)
                .map_or_else(|| id.clone(), |b| b.name.clone()),
        }
    }

    /// Every zone that exists in the model: `external` first, then boundaries by id.
    pub fn zones(&self) -> Vec<Zone> {
        let mut ids: Vec<&str> = self.boundaries.iter().map(|b| b.id.as_str()).collect();
        ids.sort();
        std::iter::once(Zone::External)
            .chain(ids.into_iter().map(|id| Zone::Boundary(id.to_string())))
            .collect()
    }

    fn zone_index(&self) -> HashMap<&str, Zone> {
        let mut index: HashMap<&str, Zone> = self
            .elements
            .iter()
            .map(|e| (e.id.as_str(), Zone::External))
            .collect();
        for b in &self.boundaries {
            for m in &b.members {
                index.insert(m.as_str(), Zone::Boundary(b.id.clone()));
            }
        }
        index
    }

    /// Flows whose endpoints lie in different zones, sorted by flow id.
    pub fn flows_crossing_boundaries(&self) -> Vec<Crossing> {
        let zones = self.zone_index();
        let zone = |id: &str| zones.get(id).cloned().unwrap_or(Zone::External);
        let mut out: Vec<Crossing> = self
            .flows
            .iter()
            .filter_map(|f| {
                let source_zone = zone(&f.source);
                let target_zone = zone(&f.target);
                (source_zone != target_zone).then(|| Crossing {
                    flow: f.clone(),
                    source_zone,
                    target_zone,
                })
            })
            .collect();
        out.sort_by(|a, b| a.flow.id.cmp(&b.flow.id));
        out
    }

    /// Elements receiving a crossing flow from a strictly less trusted zone,
    /// sorted by id.
    pub fn find_entry_points(&self) -> Vec<DfdElement> {
        let targets: BTreeSet<&str> = self
            .flows_crossing_boundaries()
            .iter()
            .filter(|c| self.trust_level(&c.source_zone) < self.trust_level(&c.target_zone))
            .filter_map(|c| self.element(&c.flow.target).map(|e| e.id.as_str()))
            .collect();
        targets
            .into_iter()
            .filter_map(|id| self.element(id).cloned())
            .collect()
    }

    /// Self-loop flows; allowed, but worth a look.
    pub fn warnings(&self) -> Vec<Finding> {
        let mut out: Vec<Finding> = self
            .flows
            .iter()
            .filter(|f| f.source == f.target)
            .map(|f| {
                Finding::warning(
                    "self_loop",
                    &f.id,
                    [Layer::Design].into(),
                    format!("flow `{}` starts and ends at `{}`", f.id, f.source),
                )
            })
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

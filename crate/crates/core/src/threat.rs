//! Technical threat enumeration over a data-flow diagram (STRIDE per element).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dfd::{DfdModel, ElementKind, Zone};
use crate::error::{Error, Result};
use crate::finding::FindingKind;
use crate::layer::Layer;
use crate::mapping::FunctionMapping;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatCategory {
    Spoofing,
    Tampering,
    Repudiation,
    InformationDisclosure,
    DenialOfService,
    ElevationOfPrivilege,
}

impl ThreatCategory {
    pub const ALL: [ThreatCategory; 6] = [
        ThreatCategory::Spoofing,
        ThreatCategory::Tampering,
        ThreatCategory::Repudiation,
        ThreatCategory::InformationDisclosure,
        ThreatCategory::DenialOfService,
        ThreatCategory::ElevationOfPrivilege,
    ];
}

impl fmt::Display for ThreatCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThreatCategory::Spoofing => "spoofing",
            ThreatCategory::Tampering => "tampering",
            ThreatCategory::Repudiation => "repudiation",
            ThreatCategory::InformationDisclosure => "information_disclosure",
            ThreatCategory::DenialOfService => "denial_of_service",
            ThreatCategory::ElevationOfPrivilege => "elevation_of_privilege",
        })
    }
}

/// What a threat rule applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Process,
    Datastore,
    ExternalEntity,
    DataFlow,
    BoundaryCrossing,
}

impl From<ElementKind> for SubjectKind {
    fn from(kind: ElementKind) -> Self {
        match kind {
            ElementKind::Process => SubjectKind::Process,
            ElementKind::Datastore => SubjectKind::Datastore,
            ElementKind::ExternalEntity => SubjectKind::ExternalEntity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreatRule {
    pub id: String,
    pub applies_to: SubjectKind,
    pub category: ThreatCategory,
    /// May use `{subject}` (display name) and `{subject_id}`.
    pub description_template: String,
}

impl ThreatRule {
    /// Parses a JSON list of rules. Rule ids must be unique and non-empty.
    pub fn load_all(document: &[u8]) -> Result<Vec<ThreatRule>> {
        let rules: Vec<ThreatRule> =
            serde_json::from_slice(document).map_err(|e| Error::json("threat rules", e))?;
        let mut ids = HashSet::new();
        for r in &rules {
            if r.id.is_empty() {
                return Err(Error::invalid("threat rule", &r.id, "empty id"));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(Error::duplicate(&r.id, "threat rules"));
            }
        }
        Ok(rules)
    }

    fn describe(&self, subject_id: &str, subject: &str) -> String {
        self.description_template
            .replace("{subject_id}", subject_id)
            .replace("{subject}", subject)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threat {
    pub id: String,
    pub rule_id: String,
    pub subject_id: String,
    pub subject_kind: SubjectKind,
    pub category: ThreatCategory,
    pub layer: Layer,
    pub kind: FindingKind,
    pub description: String,
    /// Constraints enforced by the subject that a successful attack could subvert.
    #[serde(default)]
    pub subverts: Vec<String>,
}

/// One threat per (subject, matching rule), sorted by subject id then rule id.
///
/// Subjects are the elements, the flows, and additionally each flow that
/// crosses a trust boundary.
pub fn enumerate_threats(dfd: &DfdModel, rules: &[ThreatRule]) -> Vec<Threat> {
    let mut by_kind: HashMap<SubjectKind, Vec<&ThreatRule>> = HashMap::new();
    for r in rules {
        by_kind.entry(r.applies_to).or_default().push(r);
    }
    let mut subjects: Vec<(SubjectKind, &str, String)> = Vec::new();
    for e in &dfd.elements {
        subjects.push((e.kind.into(), &e.id, e.name.clone()));
    }
    for f in &dfd.flows {
        let name = if f.label.is_empty() {
            f.id.clone()
        } else {
            f.label.clone()
        };
        subjects.push((SubjectKind::DataFlow, &f.id, name));
    }
    let crossings = dfd.flows_crossing_boundaries();
    for c in &crossings {
        let name = format!("{} -> {}", c.source_zone, c.target_zone);
        subjects.push((SubjectKind::BoundaryCrossing, &c.flow.id, name));
    }

    let mut out: Vec<Threat> = subjects
        .iter()
        .flat_map(|(kind, id, name)| {
            by_kind
                .get(kind)
                .into_iter()
                .flatten()
                .map(move |rule| Threat {
                    id: format!("{id}:{}", rule.id),
                    rule_id: rule.id.clone(),
                    subject_id: id.to_string(),
                    subject_kind: *kind,
                    category: rule.category,
                    layer: Layer::Implementation,
                    kind: FindingKind::Threat,
                    description: rule.describe(id, name),
                    subverts: Vec::new(),
                })
        })
        .collect();
    out.sort_by(|a, b| (&a.subject_id, &a.rule_id).cmp(&(&b.subject_id, &b.rule_id)));
    out
}

/// Marks threats against enforcing elements with the constraints they endanger.
pub fn annotate_subversions(threats: &mut [Threat], mapping: &FunctionMapping) {
    for t in threats.iter_mut() {
        if matches!(
            t.subject_kind,
            SubjectKind::DataFlow | SubjectKind::BoundaryCrossing
        ) {
            continue;
        }
        t.subverts = mapping.constraints_enforced_by(&t.subject_id);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneGroup {
    pub zone: Zone,
    pub name: String,
    pub trust_level: i64,
    pub threat_ids: Vec<String>,
    pub categories: BTreeMap<ThreatCategory, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryPointSummary {
    pub element_id: String,
    pub name: String,
    pub zone: Zone,
    pub inbound_flows: Vec<String>,
    pub inbound_categories: Vec<ThreatCategory>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSurfaceReport {
    pub zones: Vec<ZoneGroup>,
    pub entry_points: Vec<EntryPointSummary>,
}

/// Groups threats by trust zone and lists entry points with the threat
/// categories arriving over their inbound crossing flows.
///
/// Element threats belong to the element's zone; flow threats to the zone
/// the flow delivers into. Zones without threats are omitted.
pub fn summarize_attack_surface(dfd: &DfdModel, threats: &[Threat]) -> AttackSurfaceReport {
    let flow_targets: HashMap<&str, &str> = dfd
        .flows
        .iter()
        .map(|f| (f.id.as_str(), f.target.as_str()))
        .collect();
    let mut grouped: BTreeMap<Zone, Vec<&Threat>> = BTreeMap::new();
    for t in threats {
        let element = flow_targets
            .get(t.subject_id.as_str())
            .copied()
            .unwrap_or(t.subject_id.as_str());
        grouped.entry(dfd.zone_of(element)).or_default().push(t);
    }
    let zones = grouped
        .into_iter()
        .map(|(zone, ts)| {
            let mut categories = BTreeMap::new();
            for t in &ts {
                *categories.entry(t.category).or_insert(0) += 1;
            }
            let mut threat_ids: Vec<String> = ts.iter().map(|t| t.id.clone()).collect();
            threat_ids.sort();
            ZoneGroup {
                name: dfd.zone_name(&zone),
                trust_level: dfd.trust_level(&zone),
                zone,
                threat_ids,
                categories,
            }
        })
        .collect();

    let crossings = dfd.flows_crossing_boundaries();
    let entry_points = dfd
        .find_entry_points()
        .into_iter()
        .map(|e| {
            let inbound_flows: Vec<String> = crossings
                .iter()
                .filter(|c| {
                    c.flow.target == e.id
                        && dfd.trust_level(&c.source_zone) < dfd.trust_level(&c.target_zone)
                })
                .map(|c| c.flow.id.clone())
                .collect();
            let inbound_categories: BTreeSet<ThreatCategory> = threats
                .iter()
                .filter(|t| inbound_flows.contains(&t.subject_id))
                .map(|t| t.category)
                .collect();
            EntryPointSummary {
                zone: dfd.zone_of(&e.id),
                element_id: e.id,
                name: e.name,
                inbound_flows,
                inbound_categories: inbound_categories.into_iter().collect(),
            }
        })
        .collect();

    AttackSurfaceReport {
        zones,
        entry_points,
    }
}

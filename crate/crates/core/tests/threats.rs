use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::sample::subsequence;
use xlayer_core::dfd::{DataFlow, DfdElement, ElementKind, IdentityMode};
use xlayer_core::rules::DEFAULT_THREAT_RULES;
use xlayer_core::testkit::{arb_dfd, collapse_to_single_boundary, fixture};
use xlayer_core::threat::{enumerate_threats, summarize_attack_surface, SubjectKind};
use xlayer_core::{DfdModel, FindingKind, Layer, ThreatCategory, ThreatRule};

fn default_rules() -> Vec<ThreatRule> {
    ThreatRule::load_all(DEFAULT_THREAT_RULES.as_bytes()).unwrap()
}

fn credit_card_dfd() -> DfdModel {
    DfdModel::parse(&fixture("credit_card/dfd.json")).unwrap()
}

/// Independent subjects × rules loop. Zones are recomputed here from the raw
/// boundary membership rather than through the model's helpers.
fn oracle(dfd: &DfdModel, rules: &[ThreatRule]) -> Vec<(String, String, ThreatCategory)> {
    let mut zone: BTreeMap<&str, &str> = BTreeMap::new();
    for b in &dfd.boundaries {
        for m in &b.members {
            zone.insert(m, &b.id);
        }
    }
    let zone_of = |id: &str| zone.get(id).copied().unwrap_or("<outside>");

    let mut subjects: Vec<(&str, &str)> = Vec::new();
    for e in &dfd.elements {
        let kind = match e.kind {
            ElementKind::Process => "process",
            ElementKind::Datastore => "datastore",
            ElementKind::ExternalEntity => "external_entity",
        };
        subjects.push((e.id.as_str(), kind));
    }
    for f in &dfd.flows {
        subjects.push((f.id.as_str(), "data_flow"));
        if zone_of(&f.source) != zone_of(&f.target) {
            subjects.push((f.id.as_str(), "boundary_crossing"));
        }
    }

    let mut out = Vec::new();
    for (subject, kind) in &subjects {
        for rule in rules {
            let applies = serde_json::to_value(rule.applies_to).unwrap();
            if applies == *kind {
                out.push((subject.to_string(), rule.id.clone(), rule.category));
            }
        }
    }
    out.sort();
    out
}

fn as_triples(dfd: &DfdModel, rules: &[ThreatRule]) -> Vec<(String, String, ThreatCategory)> {
    enumerate_threats(dfd, rules)
        .into_iter()
        .map(|t| (t.subject_id, t.rule_id, t.category))
        .collect()
}

#[test]
fn default_table_shape() {
    use ThreatCategory::*;
    let mut table: BTreeMap<SubjectKind, BTreeSet<ThreatCategory>> = BTreeMap::new();
    for r in default_rules() {
        assert!(table.entry(r.applies_to).or_default().insert(r.category));
    }
    assert_eq!(
        table[&SubjectKind::ExternalEntity],
        [Spoofing, Repudiation].into()
    );
    assert_eq!(table[&SubjectKind::Process], ThreatCategory::ALL.into());
    assert_eq!(
        table[&SubjectKind::Datastore],
        [
            Tampering,
            Repudiation,
            InformationDisclosure,
            DenialOfService
        ]
        .into()
    );
    assert_eq!(
        table[&SubjectKind::DataFlow],
        [Tampering, InformationDisclosure, DenialOfService].into()
    );
    assert_eq!(
        table[&SubjectKind::BoundaryCrossing],
        [Spoofing, Tampering, InformationDisclosure].into()
    );
}

#[test]
fn duplicate_rule_ids_rejected() {
    let doc = br#"[
        {"id":"x","applies_to":"process","category":"spoofing","description_template":"a"},
        {"id":"x","applies_to":"datastore","category":"tampering","description_template":"b"}
    ]"#;
    assert!(ThreatRule::load_all(doc).is_err());
}

#[test]
fn empty_dfd_has_no_threats() {
    assert!(enumerate_threats(&DfdModel::default(), &default_rules()).is_empty());
}

#[test]
fn card_database_threats() {
    use ThreatCategory::*;
    let threats = enumerate_threats(&credit_card_dfd(), &default_rules());
    let categories: BTreeSet<ThreatCategory> = threats
        .iter()
        .filter(|t| t.subject_id == "CardDatabase")
        .map(|t| t.category)
        .collect();
    assert_eq!(
        categories,
        [
            Tampering,
            Repudiation,
            InformationDisclosure,
            DenialOfService
        ]
        .into()
    );
}

#[test]
fn credit_card_total_matches_hand_count() {
    // 1 external entity × 2 + 5 processes × 6 + 3 datastores × 4
    // + 9 flows × 3 + 3 crossing flows × 3
    let threats = enumerate_threats(&credit_card_dfd(), &default_rules());
    assert_eq!(threats.len(), 2 + 30 + 12 + 27 + 9);
}

#[test]
fn fixtures_match_oracle() {
    let rules = default_rules();
    for path in ["credit_card/dfd.json", "small/three_zone_chain.json"] {
        let dfd = DfdModel::parse(&fixture(path)).unwrap();
        assert_eq!(as_triples(&dfd, &rules), oracle(&dfd, &rules), "{path}");
    }
}

#[test]
fn output_is_sorted_by_subject_then_rule() {
    let threats = enumerate_threats(&credit_card_dfd(), &default_rules());
    let keys: Vec<_> = threats
        .iter()
        .map(|t| (&t.subject_id, &t.rule_id))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn descriptions_are_filled_in() {
    let threats = enumerate_threats(&credit_card_dfd(), &default_rules());
    assert!(threats.iter().all(|t| !t.description.contains('{')));
    let spoof = threats
        .iter()
        .find(|t| t.id == "Browser:stride-ee-s")
        .unwrap();
    assert!(spoof.description.contains("Browser"));
}

#[test]
fn single_boundary_surface() {
    let dfd = collapse_to_single_boundary(&credit_card_dfd());
    let report = summarize_attack_surface(&dfd, &enumerate_threats(&dfd, &default_rules()));
    assert_eq!(report.zones.len(), 1);
    assert!(report.entry_points.is_empty());
}

#[test]
fn web_server_is_an_entry_point() {
    use ThreatCategory::*;
    let dfd = credit_card_dfd();
    let report = summarize_attack_surface(&dfd, &enumerate_threats(&dfd, &default_rules()));
    let web = report
        .entry_points
        .iter()
        .find(|e| e.element_id == "WebServer")
        .unwrap();
    assert_eq!(web.inbound_flows, ["F01"]);
    assert_eq!(
        web.inbound_categories,
        [Spoofing, Tampering, InformationDisclosure, DenialOfService]
    );
    // every zone of the fixture has threats
    assert_eq!(report.zones.len(), 3);
}

#[test]
fn no_threats_no_groups() {
    let report = summarize_attack_surface(&credit_card_dfd(), &[]);
    assert!(report.zones.is_empty());
}

fn arb_rules() -> impl Strategy<Value = Vec<ThreatRule>> {
    subsequence(default_rules(), 0..=18)
}

fn extra_element() -> impl Strategy<Value = (ElementKind, Option<usize>, bool)> {
    (
        prop_oneof![
            Just(ElementKind::Process),
            Just(ElementKind::Datastore),
            Just(ElementKind::ExternalEntity)
        ],
        proptest::option::of(0usize..4),
        any::<bool>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_dfds_match_oracle(dfd in arb_dfd(20), rules in arb_rules()) {
        prop_assert_eq!(as_triples(&dfd, &rules), oracle(&dfd, &rules));
    }

    #[test]
    fn every_threat_is_an_implementation_threat(dfd in arb_dfd(20)) {
        for t in enumerate_threats(&dfd, &default_rules()) {
            prop_assert_eq!(t.layer, Layer::Implementation);
            prop_assert_eq!(t.kind, FindingKind::Threat);
            prop_assert!(dfd.element(&t.subject_id).is_some() || dfd.flows.iter().any(|f| f.id == t.subject_id));
        }
    }

    #[test]
    fn adding_an_element_keeps_existing_threats(
        dfd in arb_dfd(19),
        (kind, boundary, link) in extra_element(),
    ) {
        let rules = default_rules();
        let before = enumerate_threats(&dfd, &rules);
        let mut grown = dfd.clone();
        let mode = if kind == ElementKind::ExternalEntity { IdentityMode::Anonymous } else { IdentityMode::System };
        grown.elements.push(DfdElement {
            id: "added".into(),
            name: "added".into(),
            kind,
            identity_mode: mode,
            acting_identity: None,
        });
        if kind != ElementKind::ExternalEntity {
            if let Some(b) = boundary.and_then(|i| grown.boundaries.get_mut(i)) {
                b.members.push("added".into());
            }
        }
        if link {
            if let Some(first) = dfd.elements.first() {
                grown.flows.push(DataFlow {
                    id: "added-flow".into(),
                    source: first.id.clone(),
                    target: "added".into(),
                    label: String::new(),
                });
            }
        }
        prop_assert!(grown.validate().is_ok());
        let after = enumerate_threats(&grown, &rules);
        for t in &before {
            prop_assert!(after.contains(t), "lost {}", t.id);
        }
    }
}

use proptest::prelude::*;
use xlayer_core::dfd::{DataFlow, DfdElement, ElementKind, IdentityMode};
use xlayer_core::mapping::{
    check_mapping_coverage, load_mapping, trace_constraint_enforcement, EnforcementPoint,
};
use xlayer_core::process::ConstraintKind;
use xlayer_core::testkit::{arb_dfd, fixture};
use xlayer_core::{
    DfdModel, Error, FindingKind, FunctionMapping, Layer, ProcessModel, SecurityConstraint,
    TraceStatus,
};

struct Scenario {
    process: ProcessModel,
    dfd: DfdModel,
    mapping: FunctionMapping,
}

fn scenario() -> Scenario {
    let process = ProcessModel::parse(
        &fixture("credit_card/process.bpmn"),
        Some(&fixture("credit_card/annotations.json")),
    )
    .unwrap();
    let dfd = DfdModel::parse(&fixture("credit_card/dfd.json")).unwrap();
    let mapping = load_mapping(&fixture("credit_card/mapping.json"), &process, &dfd).unwrap();
    Scenario {
        process,
        dfd,
        mapping,
    }
}

#[test]
fn block_task_binds_four_components() {
    let s = scenario();
    assert_eq!(
        s.mapping.bound_elements("BlockPreviousCreditCard"),
        [
            "AuthenticationServer",
            "BPMServer",
            "CardDatabase",
            "WebServer"
        ]
    );
}

#[test]
fn empty_mapping_over_empty_models() {
    let process = ProcessModel::parse(&fixture("small/empty_process.bpmn"), None).unwrap();
    let dfd = DfdModel::default();
    let mapping = load_mapping(b"{}", &process, &dfd).unwrap();
    assert_eq!(mapping, FunctionMapping::default());
}

#[test]
fn ghost_task_is_named() {
    let s = scenario();
    let err = load_mapping(
        &fixture("invalid/ghost_task_mapping.json"),
        &s.process,
        &s.dfd,
    )
    .unwrap_err();
    assert!(
        matches!(err, Error::DanglingReference { ref id, .. } if id == "GhostTask"),
        "{err}"
    );
}

#[test]
fn unknown_element_and_business_enforcement_are_rejected() {
    let s = scenario();
    let err = load_mapping(
        br#"{"task_bindings":{"VerifyRequestA":["Mainframe"]}}"#,
        &s.process,
        &s.dfd,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DanglingReference { ref id, .. } if id == "Mainframe"));

    let err = load_mapping(
        br#"{"enforcement_points":{"C1":[{"element":"BPMServer","layer":"business"}]}}"#,
        &s.process,
        &s.dfd,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Invalid { .. }), "{err}");

    let err = load_mapping(
        br#"{"enforcement_points":{"C7":[{"element":"BPMServer","layer":"design"}]}}"#,
        &s.process,
        &s.dfd,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DanglingReference { ref id, .. } if id == "C7"));
}

#[test]
fn coverage_is_clean_when_critical_tasks_are_bound() {
    let s = scenario();
    assert!(check_mapping_coverage(&s.process, &s.mapping).is_empty());
}

#[test]
fn unbound_critical_task_is_a_design_vulnerability() {
    let mut s = scenario();
    s.mapping.task_bindings.remove("BlockPreviousCreditCard");
    let findings = check_mapping_coverage(&s.process, &s.mapping);
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0].kind, FindingKind::Vulnerability);
    assert_eq!(findings[0].layers, [Layer::Design].into());
    assert_eq!(findings[0].subjects, ["BlockPreviousCreditCard"]);
}

#[test]
fn one_of_three_critical_tasks_unbound() {
    let mut sidecar: serde_json::Value =
        serde_json::from_slice(&fixture("credit_card/annotations.json")).unwrap();
    sidecar["security_critical"] = serde_json::json!([
        "BlockPreviousCreditCard",
        "VerifyRequestA",
        "CheckCreditCardStatus"
    ]);
    let annotations = serde_json::to_vec(&sidecar).unwrap();
    let process =
        ProcessModel::parse(&fixture("credit_card/process.bpmn"), Some(&annotations)).unwrap();
    let dfd = DfdModel::parse(&fixture("credit_card/dfd.json")).unwrap();
    let mut mapping = load_mapping(&fixture("credit_card/mapping.json"), &process, &dfd).unwrap();
    mapping
        .task_bindings
        .insert("VerifyRequestA".into(), vec![]);
    let findings = check_mapping_coverage(&process, &mapping);
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0].subjects, ["VerifyRequestA"]);
}

#[test]
fn bod_loses_identity_at_card_database() {
    let s = scenario();
    let c2 = s.process.constraint("C2").unwrap();
    let trace = trace_constraint_enforcement(c2, &s.mapping, &s.dfd);
    assert_eq!(trace.enforcing_elements, ["BPMServer"]);
    assert_eq!(trace.downstream_gap_elements, ["CardDatabase"]);
    assert_eq!(trace.status, TraceStatus::AttributionGap);
    let db = s.dfd.element("CardDatabase").unwrap();
    assert_eq!(db.acting_identity.as_deref(), Some("WorkflowSystem"));
}

#[test]
fn end_user_database_is_fully_traced() {
    let mut s = scenario();
    for e in &mut s.dfd.elements {
        if e.id == "CardDatabase" {
            e.identity_mode = IdentityMode::EndUser;
        }
    }
    let trace =
        trace_constraint_enforcement(s.process.constraint("C2").unwrap(), &s.mapping, &s.dfd);
    assert_eq!(trace.status, TraceStatus::FullyTraced);
    assert!(trace.downstream_gap_elements.is_empty());
}

#[test]
fn constraint_without_enforcement_is_unenforced() {
    let mut s = scenario();
    s.mapping.enforcement_points.clear();
    let trace =
        trace_constraint_enforcement(s.process.constraint("C1").unwrap(), &s.mapping, &s.dfd);
    assert_eq!(trace.status, TraceStatus::Unenforced);
    assert!(trace.enforcing_elements.is_empty());
}

#[test]
fn sod_on_verification_is_fully_traced() {
    let s = scenario();
    let trace =
        trace_constraint_enforcement(s.process.constraint("C3").unwrap(), &s.mapping, &s.dfd);
    assert_eq!(trace.status, TraceStatus::FullyTraced);
}

fn element(id: &str, kind: ElementKind, mode: IdentityMode) -> DfdElement {
    DfdElement {
        id: id.into(),
        name: id.into(),
        kind,
        identity_mode: mode,
        acting_identity: None,
    }
}

fn flow(id: &str, source: &str, target: &str) -> DataFlow {
    DataFlow {
        id: id.into(),
        source: source.into(),
        target: target.into(),
        label: String::new(),
    }
}

fn bod(tasks: [&str; 2]) -> SecurityConstraint {
    SecurityConstraint {
        id: "K".into(),
        kind: ConstraintKind::BoD,
        task_ids: tasks.iter().map(|t| t.to_string()).collect(),
        role_name: None,
        declared_layer: Layer::Business,
    }
}

#[test]
fn chain_gap_is_only_the_system_identity_hop() {
    // enforcer -> middle (system process) -> store (end-user datastore)
    let dfd = DfdModel {
        elements: vec![
            element("enforcer", ElementKind::Process, IdentityMode::EndUser),
            element("middle", ElementKind::Process, IdentityMode::System),
            element("store", ElementKind::Datastore, IdentityMode::EndUser),
        ],
        flows: vec![
            flow("f1", "enforcer", "middle"),
            flow("f2", "middle", "store"),
        ],
        boundaries: vec![],
    };
    let mut mapping = FunctionMapping::default();
    mapping.task_bindings.insert(
        "t1".into(),
        vec!["enforcer".into(), "middle".into(), "store".into()],
    );
    mapping.enforcement_points.insert(
        "K".into(),
        vec![EnforcementPoint {
            element: "enforcer".into(),
            layer: Layer::Implementation,
        }],
    );
    let trace = trace_constraint_enforcement(&bod(["t1", "t2"]), &mapping, &dfd);
    assert_eq!(trace.downstream_gap_elements, ["middle"]);
    assert_eq!(trace.status, TraceStatus::AttributionGap);
}

#[test]
fn unbound_or_upstream_elements_are_not_gaps() {
    let dfd = DfdModel {
        elements: vec![
            element("source", ElementKind::Process, IdentityMode::System),
            element("enforcer", ElementKind::Process, IdentityMode::EndUser),
            element("unbound", ElementKind::Datastore, IdentityMode::System),
            element("user", ElementKind::ExternalEntity, IdentityMode::Anonymous),
        ],
        flows: vec![
            flow("f0", "source", "enforcer"),
            flow("f1", "enforcer", "unbound"),
            flow("f2", "enforcer", "user"),
        ],
        boundaries: vec![],
    };
    let mut mapping = FunctionMapping::default();
    mapping.task_bindings.insert(
        "t1".into(),
        vec!["source".into(), "enforcer".into(), "user".into()],
    );
    mapping.enforcement_points.insert(
        "K".into(),
        vec![EnforcementPoint {
            element: "enforcer".into(),
            layer: Layer::Design,
        }],
    );
    let trace = trace_constraint_enforcement(&bod(["t1", "t2"]), &mapping, &dfd);
    assert_eq!(trace.status, TraceStatus::FullyTraced);
}

/// Mapping that binds every element to task `t` and enforces `K` at the
/// elements selected by `mask`.
fn everything_bound(dfd: &DfdModel, mask: &[bool]) -> FunctionMapping {
    let mut mapping = FunctionMapping::default();
    mapping.task_bindings.insert(
        "t".into(),
        dfd.elements.iter().map(|e| e.id.clone()).collect(),
    );
    let points = dfd
        .elements
        .iter()
        .zip(mask.iter().cycle())
        .filter(|(_, &m)| m)
        .map(|(e, _)| EnforcementPoint {
            element: e.id.clone(),
            layer: Layer::Implementation,
        })
        .collect();
    mapping.enforcement_points.insert("K".into(), points);
    mapping
}

proptest! {
    #[test]
    fn status_matches_sets(dfd in arb_dfd(12), mask in proptest::collection::vec(any::<bool>(), 1..12)) {
        let mapping = everything_bound(&dfd, &mask);
        let trace = trace_constraint_enforcement(&bod(["t", "u"]), &mapping, &dfd);
        prop_assert_eq!(
            trace.status,
            TraceStatus::classify(&trace.enforcing_elements, &trace.downstream_gap_elements)
        );
        prop_assert_eq!(trace.status == TraceStatus::Unenforced, trace.enforcing_elements.is_empty());
        for gap in &trace.downstream_gap_elements {
            prop_assert!(!trace.enforcing_elements.contains(gap));
        }
    }

    #[test]
    fn more_enforcement_never_unenforces(dfd in arb_dfd(12), mask in proptest::collection::vec(any::<bool>(), 1..12), extra in any::<usize>()) {
        prop_assume!(!dfd.elements.is_empty());
        let mut mapping = everything_bound(&dfd, &mask);
        let before = trace_constraint_enforcement(&bod(["t", "u"]), &mapping, &dfd).status;
        let added = &dfd.elements[extra % dfd.elements.len()].id;
        mapping.enforcement_points.get_mut("K").unwrap().push(EnforcementPoint {
            element: added.clone(),
            layer: Layer::Design,
        });
        let after = trace_constraint_enforcement(&bod(["t", "u"]), &mapping, &dfd).status;
        prop_assert!(!(before == TraceStatus::FullyTraced && after == TraceStatus::Unenforced));
        prop_assert_ne!(after, TraceStatus::Unenforced);
    }

    #[test]
    fn no_flows_no_gaps(mut dfd in arb_dfd(12), mask in proptest::collection::vec(any::<bool>(), 1..12)) {
        dfd.flows.clear();
        let mapping = everything_bound(&dfd, &mask);
        let trace = trace_constraint_enforcement(&bod(["t", "u"]), &mapping, &dfd);
        prop_assert!(trace.downstream_gap_elements.is_empty());
    }
}

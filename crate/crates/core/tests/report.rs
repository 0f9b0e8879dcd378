use graphviz_rust::dot_structures::{Graph, Id, Stmt, Subgraph};
use xlayer_core::pipeline::{analyze, AnalysisOptions, InputDocuments, OutputFormat};
use xlayer_core::report::{canonical_json, render_dot, render_json, render_markdown};
use xlayer_core::testkit::fixture;
use xlayer_core::{AnalysisReport, DfdModel, PipelineOutcome};

fn credit_card() -> PipelineOutcome {
    let bpmn = fixture("credit_card/process.bpmn");
    let annotations = fixture("credit_card/annotations.json");
    let dfd = fixture("credit_card/dfd.json");
    let mapping = fixture("credit_card/mapping.json");
    let docs = InputDocuments::new(&bpmn, Some(&annotations), &dfd, &mapping);
    analyze(&docs, &AnalysisOptions::default()).unwrap()
}

fn subgraphs(graph: &Graph) -> Vec<String> {
    let stmts = match graph {
        Graph::DiGraph { stmts, .. } | Graph::Graph { stmts, .. } => stmts,
    };
    stmts
        .iter()
        .filter_map(|s| match s {
            Stmt::Subgraph(Subgraph { id, .. }) => Some(match id {
                Id::Plain(s) | Id::Escaped(s) | Id::Html(s) => s.trim_matches('"').to_string(),
                Id::Anonymous(s) => s.clone(),
            }),
            _ => None,
        })
        .collect()
}

fn parse_dot(bytes: &[u8]) -> Graph {
    let text = std::str::from_utf8(bytes).unwrap();
    graphviz_rust::parse(text).unwrap_or_else(|e| panic!("invalid DOT: {e}\n{text}"))
}

#[test]
fn json_round_trip() {
    let out = credit_card();
    let json = render_json(&out.report);
    assert_eq!(AnalysisReport::from_json(&json).unwrap(), out.report);
    let empty = render_json(&AnalysisReport::default());
    assert_eq!(
        AnalysisReport::from_json(&empty).unwrap(),
        AnalysisReport::default()
    );
}

#[test]
fn canonical_json_is_stable_across_runs() {
    let mut a = credit_card().report;
    let mut b = credit_card().report;
    a.metadata.timestamp = Some("2024-01-01T00:00:00Z".into());
    b.metadata.timestamp = Some("2025-06-30T12:00:00Z".into());
    assert_eq!(canonical_json(&a), canonical_json(&b));
    assert_eq!(a.canonical_digest(), b.canonical_digest());
    assert_ne!(render_json(&a), render_json(&b));
}

#[test]
fn risk_matrix_has_nineteen_json_rows() {
    let json = render_json(&credit_card().report);
    let value: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(value["risk_matrix"]["rows"].as_array().unwrap().len(), 19);
}

#[test]
fn markdown_has_one_body_row_per_risk() {
    let md = String::from_utf8(render_markdown(&credit_card().report)).unwrap();
    let header = "| Role | B | S | I | V | T | Security risk | Solution |";
    let table: Vec<&str> = md
        .lines()
        .skip_while(|l| *l != header)
        .take_while(|l| l.starts_with('|'))
        .collect();
    // header + separator + body
    assert_eq!(table.len(), 2 + 19);
    assert!(table[2..].iter().all(|row| row.matches('|').count() == 9));
}

#[test]
fn empty_matrix_renders_header_only() {
    let md = String::from_utf8(render_markdown(&AnalysisReport::default())).unwrap();
    let header = "| Role | B | S | I | V | T | Security risk | Solution |";
    let table: Vec<&str> = md
        .lines()
        .skip_while(|l| *l != header)
        .take_while(|l| l.starts_with('|'))
        .collect();
    assert_eq!(table.len(), 2);
}

#[test]
fn dot_has_three_zone_clusters() {
    let out = credit_card();
    let graph = parse_dot(&out.render(OutputFormat::Dot));
    let mut clusters = subgraphs(&graph);
    clusters.sort();
    assert_eq!(
        clusters,
        [
            "cluster_ControlledZone",
            "cluster_InternalTrustBoundary",
            "cluster_external"
        ]
    );
}

#[test]
fn dot_marks_gap_and_entry_points() {
    let out = credit_card();
    let dot = String::from_utf8(out.render(OutputFormat::Dot)).unwrap();
    let line = |id: &str| {
        dot.lines()
            .find(|l| l.trim_start().starts_with(&format!("\"{id}\" [")))
            .unwrap_or_else(|| panic!("no node {id}"))
            .to_string()
    };
    assert!(line("CardDatabase").contains("attribution gap"));
    assert!(!line("BPMRepository").contains("attribution gap"));
    assert!(line("WebServer").contains("peripheries=2"));
    assert!(!line("Browser").contains("peripheries=2"));
}

#[test]
fn empty_dfd_is_a_valid_digraph() {
    let graph = parse_dot(&render_dot(&DfdModel::default(), &[], &[]));
    assert!(matches!(graph, Graph::DiGraph { .. }));
}

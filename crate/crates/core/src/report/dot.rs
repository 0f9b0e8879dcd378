use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::dfd::{DfdModel, ElementKind, Zone};
use crate::mapping::{ConstraintTrace, TraceStatus};
use crate::threat::Threat;

fn quote(s: &str) -> String {
    format!(
        "\"{}\"",
        s.replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', "\\n")
    )
}

/// Graphviz rendering of the data-flow diagram.
///
/// Trust zones become clusters, boundary-crossing flows are drawn bold,
/// entry points get a double outline and attribution-gap elements are filled
/// red and labelled with the constraints they lose.
pub fn render_dot(dfd: &DfdModel, traces: &[ConstraintTrace], threats: &[Threat]) -> Vec<u8> {
    let mut out = String::new();
    // Writing into a String cannot fail.
    let _ = write_dot(&mut out, dfd, traces, threats);
    out.into_bytes()
}

fn write_dot(
    out: &mut String,
    dfd: &DfdModel,
    traces: &[ConstraintTrace],
    threats: &[Threat],
) -> std::fmt::Result {
    let mut gaps: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for t in traces
        .iter()
        .filter(|t| t.status == TraceStatus::AttributionGap)
    {
        for e in &t.downstream_gap_elements {
            gaps.entry(e.as_str())
                .or_default()
                .push(t.constraint_id.as_str());
        }
    }
    let entry_points: BTreeSet<String> =
        dfd.find_entry_points().into_iter().map(|e| e.id).collect();
    let crossing: BTreeSet<String> = dfd
        .flows_crossing_boundaries()
        .into_iter()
        .map(|c| c.flow.id)
        .collect();
    let mut threat_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in threats {
        *threat_counts.entry(t.subject_id.as_str()).or_default() += 1;
    }

    let mut members: BTreeMap<Zone, Vec<_>> = BTreeMap::new();
    let mut elements: Vec<_> = dfd.elements.iter().collect();
    elements.sort_by(|a, b| a.id.cmp(&b.id));
    for e in elements {
        members.entry(dfd.zone_of(&e.id)).or_default().push(e);
    }

    writeln!(out, "digraph dfd {{")?;
    writeln!(out, "  rankdir=LR;")?;
    writeln!(out, "  node [fontname=\"Helvetica\"];")?;
    writeln!(out, "  edge [fontname=\"Helvetica\", fontsize=10];")?;
    for (zone, elements) in &members {
        let (cluster, style) = match zone {
            Zone::External => ("cluster_external".to_string(), "dashed"),
            Zone::Boundary(id) => (format!("cluster_{id}"), "rounded"),
        };
        writeln!(out, "  subgraph {} {{", quote(&cluster))?;
        let label = format!("{} (trust {})", dfd.zone_name(zone), dfd.trust_level(zone));
        writeln!(out, "    label={};", quote(&label))?;
        writeln!(out, "    style={style};")?;
        for e in elements {
            let shape = match e.kind {
                ElementKind::Process => "ellipse",
                ElementKind::Datastore => "cylinder",
                ElementKind::ExternalEntity => "box",
            };
            let mut attrs = vec![
                format!("label={}", quote(&e.name)),
                format!("shape={shape}"),
            ];
            if let Some(n) = threat_counts.get(e.id.as_str()) {
                attrs.push(format!("tooltip={}", quote(&format!("{n} threats"))));
            }
            if entry_points.contains(&e.id) {
                attrs.push("peripheries=2".into());
                attrs.push("color=\"#e69138\"".into());
            }
            if let Some(constraints) = gaps.get(e.id.as_str()) {
                attrs.push("style=\"filled,bold\"".into());
                attrs.push("fillcolor=\"#f4cccc\"".into());
                attrs.push("color=\"#cc0000\"".into());
                let note = format!("attribution gap: {}", constraints.join(", "));
                attrs.push(format!("xlabel={}", quote(&note)));
            }
            writeln!(out, "    {} [{}];", quote(&e.id), attrs.join(", "))?;
        }
        writeln!(out, "  }}")?;
    }

    let mut flows: Vec<_> = dfd.flows.iter().collect();
    flows.sort_by(|a, b| a.id.cmp(&b.id));
    for f in flows {
        let mut attrs = vec![format!("label={}", quote(&f.label))];
        if crossing.contains(&f.id) {
            attrs.push("style=bold".into());
            attrs.push("color=\"#cc0000\"".into());
        }
        writeln!(
            out,
            "  {} -> {} [{}];",
            quote(&f.source),
            quote(&f.target),
            attrs.join(", ")
        )?;
    }
    writeln!(out, "}}")
}

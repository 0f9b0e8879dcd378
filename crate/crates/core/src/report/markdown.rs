use std::fmt::Write;

use super::AnalysisReport;
use crate::human::RiskKind;
use crate::layer::{Layer, LayerSet};

const CHECK: &str = "✓";

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn mark(flag: bool) -> &'static str {
    if flag {
        CHECK
    } else {
        ""
    }
}

fn layers(set: &LayerSet) -> String {
    set.iter()
        .map(Layer::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items
            .iter()
            .map(|s| format!("`{s}`"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// GitHub-flavoured Markdown, one section per analysis step.
pub fn render_markdown(report: &AnalysisReport) -> Vec<u8> {
    let mut out = String::new();
    // Writing into a String cannot fail.
    let _ = write_report(&mut out, report);
    out.into_bytes()
}

fn write_report(out: &mut String, r: &AnalysisReport) -> std::fmt::Result {
    writeln!(out, "# Cross-layer security analysis\n")?;
    if !r.metadata.tool_version.is_empty() {
        writeln!(out, "Generated by xlayer {}.\n", r.metadata.tool_version)?;
    }

    writeln!(out, "## 1. Business process analysis\n")?;
    writeln!(out, "### Participants\n")?;
    writeln!(out, "| Pool | Participant | Roles |")?;
    writeln!(out, "|---|---|---|")?;
    for p in &r.participants.participants {
        writeln!(
            out,
            "| `{}` | {} | {} |",
            p.pool_id,
            cell(&p.name),
            cell(&p.roles.join(", "))
        )?;
    }
    writeln!(out, "\n### Security constraints\n")?;
    writeln!(out, "| Id | Kind | Tasks | Role |")?;
    writeln!(out, "|---|---|---|---|")?;
    for c in &r.constraints {
        writeln!(
            out,
            "| `{}` | {:?} | {} | {} |",
            c.id,
            c.kind,
            list(&c.task_ids),
            cell(c.role_name.as_deref().unwrap_or("-"))
        )?;
    }
    writeln!(out, "\n### Infrastructure\n")?;
    let stores: Vec<String> = r
        .infrastructure
        .data_stores
        .iter()
        .map(|s| s.name.clone())
        .collect();
    let automated: Vec<String> = r
        .infrastructure
        .automated_tasks
        .iter()
        .map(|t| t.name.clone())
        .collect();
    writeln!(out, "- Data stores: {}", cell(&or_none(&stores)))?;
    writeln!(out, "- Automated tasks: {}", cell(&or_none(&automated)))?;
    writeln!(out, "\n### Collaboration\n")?;
    let c = &r.collaboration;
    writeln!(
        out,
        "- Collaboration: {}",
        if c.collaboration { "yes" } else { "no" }
    )?;
    if let Some(own) = &c.own_organization {
        writeln!(out, "- Own organization: {}", cell(own))?;
    }
    writeln!(out, "- Partners: {}", cell(&or_none(&c.partners)))?;
    if let Some(advisory) = &c.advisory {
        writeln!(out, "- Advisory: {advisory}")?;
    }

    writeln!(out, "\n## 2. Function mapping\n")?;
    writeln!(out, "### Mapping coverage\n")?;
    if r.mapping_coverage.is_empty() {
        writeln!(
            out,
            "All security-critical tasks are bound to system components."
        )?;
    }
    for f in &r.mapping_coverage {
        writeln!(
            out,
            "- **{:?}** ({}): {}",
            f.kind,
            layers(&f.layers),
            f.message
        )?;
    }
    writeln!(out, "\n### Constraint traces\n")?;
    writeln!(
        out,
        "| Constraint | Kind | Tasks | Enforced at | Identity gaps | Status |"
    )?;
    writeln!(out, "|---|---|---|---|---|---|")?;
    for t in &r.constraint_traces {
        writeln!(
            out,
            "| `{}` | {:?} | {} | {} | {} | {} |",
            t.constraint_id,
            t.constraint_kind,
            list(&t.task_ids),
            list(&t.enforcing_elements),
            list(&t.downstream_gap_elements),
            t.status
        )?;
    }

    writeln!(out, "\n## 3. Technical analysis\n")?;
    writeln!(out, "### Attack surface\n")?;
    writeln!(out, "| Zone | Trust level | Threats |")?;
    writeln!(out, "|---|---|---|")?;
    for z in &r.attack_surface.zones {
        writeln!(
            out,
            "| {} | {} | {} |",
            cell(&z.name),
            z.trust_level,
            z.threat_ids.len()
        )?;
    }
    writeln!(
        out,
        "\n| Entry point | Zone | Inbound flows | Inbound threat categories |"
    )?;
    writeln!(out, "|---|---|---|---|")?;
    for e in &r.attack_surface.entry_points {
        let cats: Vec<String> = e.inbound_categories.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "| {} | `{}` | {} | {} |",
            cell(&e.name),
            e.zone,
            list(&e.inbound_flows),
            cats.join(", ")
        )?;
    }
    writeln!(out, "\n### Threats\n")?;
    writeln!(
        out,
        "| Subject | Rule | Category | Description | Subverts |"
    )?;
    writeln!(out, "|---|---|---|---|---|")?;
    for t in &r.threats {
        writeln!(
            out,
            "| `{}` | `{}` | {} | {} | {} |",
            t.subject_id,
            t.rule_id,
            t.category,
            cell(&t.description),
            list(&t.subverts)
        )?;
    }

    writeln!(out, "\n## 4. Human factor analysis\n")?;
    writeln!(
        out,
        "Analyzed tasks: {}\n",
        list(&r.human_factor_context.task_ids)
    )?;
    writeln!(out, "Relevant roles: {}\n", list(&r.relevant_roles))?;
    writeln!(out, "### Risk matrix\n")?;
    write_risk_table(out, r)?;

    if !r.warnings.is_empty() {
        writeln!(out, "\n## Warnings\n")?;
        for w in &r.warnings {
            writeln!(out, "- {}", w.message)?;
        }
    }
    if !r.assumptions.is_empty() {
        writeln!(out, "\n## Assumptions\n")?;
        for a in &r.assumptions {
            writeln!(out, "- {a}")?;
        }
    }
    Ok(())
}

fn or_none(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

fn write_risk_table(out: &mut String, r: &AnalysisReport) -> std::fmt::Result {
    writeln!(
        out,
        "| Role | B | S | I | V | T | Security risk | Solution |"
    )?;
    writeln!(out, "|---|:-:|:-:|:-:|:-:|:-:|---|---|")?;
    for row in &r.risk_matrix.rows {
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            cell(&row.role_name),
            mark(row.layer_flags.contains(&Layer::Business)),
            mark(row.layer_flags.contains(&Layer::Design)),
            mark(row.layer_flags.contains(&Layer::Implementation)),
            mark(row.kind == RiskKind::Vulnerability),
            mark(row.kind == RiskKind::Threat),
            cell(&row.risk_text),
            cell(&row.solution_text),
        )?;
    }
    Ok(())
}

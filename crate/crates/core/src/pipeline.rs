//! End-to-end orchestration of the four analysis steps.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dfd::DfdModel;
use crate::error::{Error, Result};
use crate::human::{self, AnalysisContext, RiskRule, RoleCatalog};
use crate::mapping::{self, FunctionMapping, TraceStatus};
use crate::process::{self, ProcessModel};
use crate::report::{self, sha256_hex, AnalysisReport, Metadata, STEPS};
use crate::rules;
use crate::threat::{self, ThreatRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_THRESHOLD_MET: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSelection {
    #[default]
    AllCritical,
    Tasks(Vec<String>),
}

impl FromStr for TaskSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "all-critical" {
            return Ok(TaskSelection::AllCritical);
        }
        let ids: Vec<String> = s
            .split(',')
            .map(str::trim)
            .filter(|id| !id.is_empty())
            .map(str::to_string)
            .collect();
        if ids.is_empty() {
            return Err("expected `all-critical` or a comma-separated list of task ids".into());
        }
        Ok(TaskSelection::Tasks(ids))
    }
}

/// When the analysis should end with a non-zero exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailThreshold {
    #[default]
    Never,
    /// Any constraint with an attribution gap or without enforcement.
    AnyGap,
    /// Any constraint without enforcement.
    AnyUnenforced,
}

impl FailThreshold {
    pub fn is_met(self, report: &AnalysisReport) -> bool {
        let statuses = report.constraint_traces.iter().map(|t| t.status);
        match self {
            FailThreshold::Never => false,
            FailThreshold::AnyGap => statuses
                .into_iter()
                .any(|s| matches!(s, TraceStatus::AttributionGap | TraceStatus::Unenforced)),
            FailThreshold::AnyUnenforced => {
                statuses.into_iter().any(|s| s == TraceStatus::Unenforced)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Markdown,
    Dot,
}

#[derive(Debug, Clone, Default)]
pub struct InputPaths {
    pub bpmn: PathBuf,
    pub annotations: Option<PathBuf>,
    pub dfd: PathBuf,
    pub mapping: PathBuf,
    pub roles: Option<PathBuf>,
    pub risk_rules: Option<PathBuf>,
    pub threat_rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    /// Pool name or id of the analyzing organization.
    pub own_org: Option<String>,
    pub task_selection: TaskSelection,
    pub fail_threshold: FailThreshold,
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub paths: InputPaths,
    /// Directory searched for rule files not given explicitly.
    pub rules_dir: Option<PathBuf>,
    pub options: AnalysisOptions,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Raw input documents. Knowledge bases fall back to the bundled defaults.
#[derive(Debug, Clone)]
pub struct InputDocuments<'a> {
    pub bpmn: Cow<'a, [u8]>,
    pub annotations: Option<Cow<'a, [u8]>>,
    pub dfd: Cow<'a, [u8]>,
    pub mapping: Cow<'a, [u8]>,
    pub roles: Cow<'a, [u8]>,
    pub risk_rules: Cow<'a, [u8]>,
    pub threat_rules: Cow<'a, [u8]>,
}

impl<'a> InputDocuments<'a> {
    pub fn new(
        bpmn: &'a [u8],
        annotations: Option<&'a [u8]>,
        dfd: &'a [u8],
        mapping: &'a [u8],
    ) -> Self {
        InputDocuments {
            bpmn: Cow::Borrowed(bpmn),
            annotations: annotations.map(Cow::Borrowed),
            dfd: Cow::Borrowed(dfd),
            mapping: Cow::Borrowed(mapping),
            roles: Cow::Borrowed(rules::DEFAULT_ROLES.as_bytes()),
            risk_rules: Cow::Borrowed(rules::DEFAULT_RISK_RULES.as_bytes()),
            threat_rules: Cow::Borrowed(rules::DEFAULT_THREAT_RULES.as_bytes()),
        }
    }

    fn digests(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut add = |name: &str, bytes: &[u8]| {
            out.insert(name.to_string(), sha256_hex(bytes));
        };
        add("bpmn", &self.bpmn);
        if let Some(a) = &self.annotations {
            add("annotations", a);
        }
        add("dfd", &self.dfd);
        add("mapping", &self.mapping);
        add("roles", &self.roles);
        add("risk_rules", &self.risk_rules);
        add("threat_rules", &self.threat_rules);
        out
    }
}

/// Everything an analysis produced, including the parsed models needed by
/// renderers.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: AnalysisReport,
    pub process: ProcessModel,
    pub dfd: DfdModel,
    pub mapping: FunctionMapping,
    pub exit_code: i32,
}

impl PipelineOutcome {
    pub fn render(&self, format: OutputFormat) -> Vec<u8> {
        match format {
            OutputFormat::Json => report::render_json(&self.report),
            OutputFormat::Markdown => report::render_markdown(&self.report),
            OutputFormat::Dot => report::render_dot(
                &self.dfd,
                &self.report.constraint_traces,
                &self.report.threats,
            ),
        }
    }
}

const ROLE_TRACE_ASSUMPTION: &str = "role assignments are traced with the same identity-gap rule \
     as separation and binding of duty constraints";
const PROPAGATION_ASSUMPTION: &str = "cross-layer propagation is reported qualitatively: threats \
     against an enforcing element list the constraints a successful attack could subvert";

/// Runs the four steps in order on in-memory documents.
///
/// Technical and human factor analysis only depend on the first two steps
/// and run concurrently.
pub fn analyze(docs: &InputDocuments<'_>, options: &AnalysisOptions) -> Result<PipelineOutcome> {
    let mut assumptions = vec![
        ROLE_TRACE_ASSUMPTION.to_string(),
        PROPAGATION_ASSUMPTION.to_string(),
    ];

    // 1. business process analysis
    let process = ProcessModel::parse(&docs.bpmn, docs.annotations.as_deref())?;
    let participants = process::extract_participants(&process);
    let constraints = process::extract_constraints(&process);
    let infrastructure = process::extract_infrastructure(&process);
    let collaboration = process::detect_collaborations(&process, options.own_org.as_deref())?;
    if options.own_org.is_none() {
        if let Some(own) = &collaboration.own_organization {
            assumptions.push(format!(
                "own organization not given; assumed `{own}`, the pool with the most tasks"
            ));
        }
    }

    // 2. function mapping
    let dfd = DfdModel::parse(&docs.dfd)?;
    let mapping = FunctionMapping::load(&docs.mapping, &process, &dfd)?;
    let mapping_coverage = mapping::check_mapping_coverage(&process, &mapping);
    let constraint_traces = mapping::trace_all(&process, &mapping, &dfd);

    let threat_rules = ThreatRule::load_all(&docs.threat_rules)?;
    let catalog = RoleCatalog::load(&docs.roles)?;
    let risk_rules = RiskRule::load_all(&docs.risk_rules)?;
    let selected: Vec<String> = match &options.task_selection {
        TaskSelection::AllCritical => process
            .security_critical_tasks()
            .map(|t| t.id.clone())
            .collect(),
        TaskSelection::Tasks(ids) => {
            for id in ids {
                if process.task(id).is_none() {
                    return Err(Error::dangling(id, "task selection"));
                }
            }
            ids.clone()
        }
    };

    // 3. technical analysis and 4. human factor analysis
    let (technical, human) = std::thread::scope(|s| {
        let technical = s.spawn(|| {
            let mut threats = threat::enumerate_threats(&dfd, &threat_rules);
            threat::annotate_subversions(&mut threats, &mapping);
            let surface = threat::summarize_attack_surface(&dfd, &threats);
            (threats, surface)
        });
        let human = s.spawn(|| -> Result<_> {
            let context = AnalysisContext::build(
                &process,
                &mapping,
                &dfd,
                collaboration.collaboration,
                &selected,
            );
            let roles = human::relevant_roles(&context, &catalog);
            let matrix = human::evaluate_risk_rules(&catalog, &roles, &context, &risk_rules)?;
            Ok((context, roles, matrix))
        });
        (
            technical.join().expect("technical analysis panicked"),
            human.join().expect("human factor analysis panicked"),
        )
    });
    let (threats, attack_surface) = technical;
    let (human_factor_context, roles, risk_matrix) = human?;

    let mut warnings = process.warnings();
    warnings.extend(dfd.warnings());

    let mut report = AnalysisReport {
        metadata: Metadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests: docs.digests(),
            timestamp: None,
        },
        steps: STEPS.iter().map(|s| s.to_string()).collect(),
        participants,
        constraints,
        infrastructure,
        collaboration,
        warnings,
        mapping_coverage,
        constraint_traces,
        threats,
        attack_surface,
        human_factor_context,
        relevant_roles: roles.into_iter().map(|r| r.id).collect(),
        risk_matrix,
        assumptions: Vec::new(),
    };
    report.assumptions = assumptions;
    let exit_code = if options.fail_threshold.is_met(&report) {
        EXIT_THRESHOLD_MET
    } else {
        EXIT_OK
    };
    Ok(PipelineOutcome {
        report,
        process,
        dfd,
        mapping,
        exit_code,
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn knowledge_base(
    explicit: Option<&Path>,
    rules_dir: Option<&Path>,
    file: &str,
    bundled: &'static str,
) -> Result<Cow<'static, [u8]>> {
    if let Some(path) = explicit {
        return read(path).map(Cow::Owned);
    }
    if let Some(dir) = rules_dir {
        let candidate = dir.join(file);
        if candidate.is_file() {
            return read(&candidate).map(Cow::Owned);
        }
    }
    Ok(Cow::Borrowed(bundled.as_bytes()))
}

/// Reads every input named by the configuration and runs [`analyze`].
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    let p = &config.paths;
    let dir = config.rules_dir.as_deref();
    let docs = InputDocuments {
        bpmn: Cow::Owned(read(&p.bpmn)?),
        annotations: p
            .annotations
            .as_deref()
            .map(read)
            .transpose()?
            .map(Cow::Owned),
        dfd: Cow::Owned(read(&p.dfd)?),
        mapping: Cow::Owned(read(&p.mapping)?),
        roles: knowledge_base(
            p.roles.as_deref(),
            dir,
            rules::ROLES_FILE,
            rules::DEFAULT_ROLES,
        )?,
        risk_rules: knowledge_base(
            p.risk_rules.as_deref(),
            dir,
            rules::RISK_RULES_FILE,
            rules::DEFAULT_RISK_RULES,
        )?,
        threat_rules: knowledge_base(
            p.threat_rules.as_deref(),
            dir,
            rules::THREAT_RULES_FILE,
            rules::DEFAULT_THREAT_RULES,
        )?,
    };
    analyze(&docs, &config.options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_selection_parsing() {
        assert_eq!(
            "all-critical".parse::<TaskSelection>().unwrap(),
            TaskSelection::AllCritical
        );
        assert_eq!(
            "a, b".parse::<TaskSelection>().unwrap(),
            TaskSelection::Tasks(vec!["a".into(), "b".into()])
        );
        assert!(" , ".parse::<TaskSelection>().is_err());
    }

    #[test]
    fn thresholds() {
        use crate::mapping::ConstraintTrace;
        use crate::process::ConstraintKind;
        use crate::Layer;
        let trace = |status| ConstraintTrace {
            constraint_id: "c".into(),
            constraint_kind: ConstraintKind::SoD,
            task_ids: vec![],
            declared_layer: Layer::Business,
            enforcing_elements: vec![],
            downstream_gap_elements: vec![],
            status,
        };
        let mut report = AnalysisReport {
            constraint_traces: vec![trace(TraceStatus::AttributionGap)],
            ..Default::default()
        };
        assert!(!FailThreshold::Never.is_met(&report));
        assert!(FailThreshold::AnyGap.is_met(&report));
        assert!(!FailThreshold::AnyUnenforced.is_met(&report));
        report
            .constraint_traces
            .push(trace(TraceStatus::Unenforced));
        assert!(FailThreshold::AnyUnenforced.is_met(&report));
    }

    #[test]
    fn missing_file_is_io_error() {
        let config = RunConfig {
            paths: InputPaths {
                bpmn: "/nonexistent/x.bpmn".into(),
                ..InputPaths::default()
            },
            ..RunConfig::default()
        };
        assert!(matches!(run_pipeline(&config), Err(Error::Io { .. })));
    }
}

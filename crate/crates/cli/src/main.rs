//! `xlayer` command line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use xlayer_core::pipeline::{InputPaths, OutputFormat, EXIT_INPUT_ERROR};
use xlayer_core::{run_pipeline, FailThreshold, RunConfig, TaskSelection};

#[derive(Debug, Parser)]
#[command(
    name = "xlayer",
    version,
    about = "Cross-layer security analysis of process-aware systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run business process, mapping, technical and human factor analysis.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// BPMN 2.0 process model.
    #[arg(long)]
    bpmn: PathBuf,
    /// Constraint sidecar (JSON).
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Data-flow diagram (JSON).
    #[arg(long)]
    dfd: PathBuf,
    /// Task and constraint bindings to DFD elements (JSON).
    #[arg(long)]
    mapping: PathBuf,
    #[arg(long)]
    roles: Option<PathBuf>,
    #[arg(long)]
    risk_rules: Option<PathBuf>,
    #[arg(long)]
    threat_rules: Option<PathBuf>,
    /// Pool name or id of the analyzing organization.
    #[arg(long)]
    own_org: Option<String>,
    /// Comma-separated task ids, or `all-critical`.
    #[arg(long, default_value = "all-critical")]
    tasks: TaskSelection,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FailOn::Never)]
    fail_on: FailOn,
    /// Directory holding replacement rule files.
    #[arg(long, env = "XLAYER_RULES_DIR", hide_env_values = true)]
    rules_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Md,
    Dot,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Md => OutputFormat::Markdown,
            Format::Dot => OutputFormat::Dot,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FailOn {
    Never,
    AnyGap,
    AnyUnenforced,
}

impl From<FailOn> for FailThreshold {
    fn from(f: FailOn) -> Self {
        match f {
            FailOn::Never => FailThreshold::Never,
            FailOn::AnyGap => FailThreshold::AnyGap,
            FailOn::AnyUnenforced => FailThreshold::AnyUnenforced,
        }
    }
}

impl AnalyzeArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            paths: InputPaths {
                bpmn: self.bpmn,
                annotations: self.annotations,
                dfd: self.dfd,
                mapping: self.mapping,
                roles: self.roles,
                risk_rules: self.risk_rules,
                threat_rules: self.threat_rules,
            },
            rules_dir: self.rules_dir,
            options: xlayer_core::pipeline::AnalysisOptions {
                own_org: self.own_org,
                task_selection: self.tasks,
                fail_threshold: self.fail_on.into(),
            },
            format: self.format.into(),
            out: self.out,
        }
    }
}

fn analyze(config: RunConfig) -> Result<i32, String> {
    let mut outcome = run_pipeline(&config).map_err(|e| e.to_string())?;
    outcome.report.metadata.timestamp = Some(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true));
    let bytes = outcome.render(config.format);
    match &config.out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| format!("cannot write report: {e}"))?,
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching input errors below.
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Analyze(args) => analyze(args.into_config()).unwrap_or_else(|message| {
            eprintln!("error: {message}");
            EXIT_INPUT_ERROR
        }),
    };
    ExitCode::from(code as u8)
}

//! Command implementations behind the `bgate` binary.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bgate_core::action_parser::RecognizerExtensions;
use bgate_core::audit_trace::{verify_file, TraceError, Verification};
use bgate_core::corpus::{load_dir, run_scenario, ScenarioResult};
use bgate_core::plan_model::{load_plan, validate_profile, BoundaryProfile, Decision};
use bgate_core::{AnnotatedPlan, Engine, PolicyTable};
use std::net::SocketAddr;
use std::sync::Arc;

use bgate_gateway::{ConfigError, Gateway, GatewayConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

pub mod exit {
    pub const ALLOW: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const ELEVATE: i32 = 3;
    pub const DENY: i32 = 4;
    pub const TRACE_FAILED: i32 = 5;
    pub const CORPUS_FAILED: i32 = 6;
}

#[derive(Debug, Parser)]
#[command(name = "bgate", version, about = "Boundary gate for host-acting agent plans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, classify and judge a plan file offline.
    Check(CheckArgs),
    /// Run the scenario corpus and report pass/fail per scenario.
    Corpus(CorpusArgs),
    /// Run the HTTP gateway.
    Serve(ServeArgs),
    /// Audit trace tools.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
    /// Risk rule catalog.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum RulesCommand {
    /// Print the rule catalog as JSON.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Recognizer extension rules (JSON).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Policy table override (JSON rows).
    #[arg(long = "policy-table")]
    pub policy_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub plan: PathBuf,
    /// Boundary profile document (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub profile: Option<PathBuf>,
    /// Named preset: Permissive, Standard or Strict.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory of scenario files.
    #[arg(default_value = "corpus")]
    pub dir: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Config file; defaults to $BGATE_CONFIG when set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub listen: Option<String>,
    /// Permit a non-loopback listen address.
    #[arg(long = "allow-public-listen")]
    pub allow_public_listen: bool,
    #[arg(long = "data-dir")]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub strictness: Option<String>,
    #[arg(long = "rules-path", alias = "rules")]
    pub rules_path: Option<PathBuf>,
    #[arg(long = "policy-table-path", alias = "policy-table")]
    pub policy_table_path: Option<PathBuf>,
    #[arg(long = "host-fixture-path", alias = "host-fixture")]
    pub host_fixture_path: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TraceCommand {
    /// Check the hash chain of a trace file.
    Verify { path: PathBuf },
}

/// A failure that ends the command with a message and exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { code: exit::USAGE, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.to_string())
    }
}

/// Output and exit code of a finished command.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

fn read(path: &Path, what: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn read_json(path: &Path, what: &str) -> Result<Value, Failure> {
    serde_json::from_str(&read(path, what)?)
        .map_err(|e| Failure::usage(format!("{what} {} is not JSON: {e}", path.display())))
}

pub fn build_engine(args: &EngineArgs) -> Result<Engine, Failure> {
    let mut engine = Engine::default();
    if let Some(path) = &args.rules {
        let ext = RecognizerExtensions::from_json(&read(path, "rules file")?)
            .map_err(|e| Failure::usage(format!("rules file {}: {e}", path.display())))?;
        engine = engine.with_extensions(ext);
    }
    if let Some(path) = &args.policy_table {
        let table = PolicyTable::from_json(&read(path, "policy table")?)
            .map_err(|e| Failure::usage(format!("policy table {}: {e}", path.display())))?;
        engine = engine.with_policy(table);
    }
    Ok(engine)
}

pub fn resolve_profile(profile: Option<&Path>, preset: Option<&str>) -> Result<BoundaryProfile, Failure> {
    match (profile, preset) {
        (Some(path), None) => validate_profile(&read_json(path, "profile")?).map_err(|e| Failure::usage(e.to_string())),
        (None, Some(name)) => {
            BoundaryProfile::preset_by_name(name).ok_or_else(|| Failure::usage(format!("unknown preset {name:?}")))
        }
        (None, None) => Err(Failure::usage("no profile given; pass --profile FILE or --preset NAME")),
        (Some(_), Some(_)) => Err(Failure::usage("--profile and --preset are exclusive")),
    }
}

pub fn decision_exit(decision: Decision) -> i32 {
    match decision {
        Decision::Allow => exit::ALLOW,
        Decision::Elevate => exit::ELEVATE,
        Decision::Deny => exit::DENY,
    }
}

/// The offline annotation; same engine call the gateway makes.
pub fn check_plan(engine: &Engine, plan_doc: &Value, profile: &BoundaryProfile) -> Result<AnnotatedPlan, Failure> {
    let plan = load_plan(plan_doc).map_err(|e| Failure::usage(e.to_string()))?;
    engine.annotate(&plan, profile).map_err(|e| Failure::usage(e.to_string()))
}

pub fn render_plan(plan: &AnnotatedPlan) -> String {
    let mut out = String::new();
    for s in &plan.steps {
        let step = &s.step;
        let decision = step.verdict.as_ref().map(|v| format!("{:?}", v.decision)).unwrap_or_default();
        let classes: BTreeSet<String> = step.findings.iter().map(|f| f.risk_class.to_string()).collect();
        let classes: Vec<String> = classes.into_iter().collect();
        let rules: Vec<&str> = step.findings.iter().map(|f| f.rule_id.as_str()).collect();
        let _ = writeln!(
            out,
            "{:>3}  {:<7}  {:<60}  {}",
            step.index,
            decision,
            if classes.is_empty() { "-".to_string() } else { classes.join(",") },
            if rules.is_empty() { "-".to_string() } else { rules.join(",") },
        );
        for d in &step.diagnostics {
            let _ = writeln!(out, "     note: {}", d.message);
        }
    }
    let v = &plan.plan_verdict;
    let _ = write!(out, "plan {}: {:?}", plan.plan_id, v.decision);
    if !v.blocking_steps.is_empty() {
        let steps: Vec<String> = v.blocking_steps.iter().map(|i| i.to_string()).collect();
        let _ = write!(out, " (steps {})", steps.join(", "));
    }
    out.push('\n');
    out
}

pub fn cmd_check(args: &CheckArgs) -> Result<Outcome, Failure> {
    let engine = build_engine(&args.engine)?;
    let profile = resolve_profile(args.profile.as_deref(), args.preset.as_deref())?;
    let plan = check_plan(&engine, &read_json(&args.plan, "plan")?, &profile)?;
    let stdout = match args.format {
        Format::Json => serde_json::to_string_pretty(&plan).expect("plan serializes") + "\n",
        Format::Text => render_plan(&plan),
    };
    Ok(Outcome { code: decision_exit(plan.plan_verdict.decision), stdout })
}

pub fn run_corpus(engine: &Engine, dir: &Path) -> Result<Vec<ScenarioResult>, Failure> {
    let scenarios = load_dir(dir).map_err(|e| Failure::usage(e.to_string()))?;
    scenarios.iter().map(|s| run_scenario(engine, s).map_err(|e| Failure::usage(format!("{}: {e}", s.name)))).collect()
}

pub fn cmd_corpus(args: &CorpusArgs) -> Result<Outcome, Failure> {
    let engine = build_engine(&args.engine)?;
    let results = run_corpus(&engine, &args.dir)?;
    let passed = results.iter().all(|r| r.passed);
    let stdout = match args.format {
        Format::Json => {
            let rows: Vec<Value> = results
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "name": r.name, "passed": r.passed, "risky_classes": r.risky_classes,
                        "expected_classes": r.expected_classes, "conservative_verdict": r.conservative_verdict,
                        "conservative_max_verdict": r.conservative_max_verdict, "failure": r.failure(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
        }
        Format::Text => {
            let mut out = String::new();
            for r in &results {
                let classes: Vec<String> = r.risky_classes.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(
                    out,
                    "{}  {:<20} risky={} conservative={:?}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    classes.join(","),
                    r.conservative_verdict
                );
                if let Some(why) = r.failure() {
                    let _ = writeln!(out, "      {why}");
                }
            }
            let n = results.iter().filter(|r| r.passed).count();
            let _ = writeln!(out, "{n}/{} scenarios passed", results.len());
            out
        }
    };
    Ok(Outcome { code: if passed { exit::ALLOW } else { exit::CORPUS_FAILED }, stdout })
}

pub fn cmd_trace_verify(path: &Path) -> Result<Outcome, Failure> {
    match verify_file(path) {
        Ok(Verification::Ok(records)) => {
            let head = records.last().map(|r| r.hash.as_str()).unwrap_or(bgate_core::audit_trace::GENESIS_HASH);
            Ok(Outcome { code: exit::ALLOW, stdout: format!("ok: {} records, head {head}\n", records.len()) })
        }
        Ok(Verification::FirstBadIndex(i)) => {
            Ok(Outcome { code: exit::TRACE_FAILED, stdout: format!("tampered: first bad record {i}\n") })
        }
        Err(TraceError::UnreadableTrace(e)) => Err(Failure::usage(format!("cannot read {}: {e}", path.display()))),
        Err(e) => Err(Failure::usage(e.to_string())),
    }
}

pub fn cmd_rules_list() -> Outcome {
    let rules: Vec<Value> = bgate_core::risk_classifier::CATALOG
        .iter()
        .map(|r| {
            serde_json::json!({
                "rule_id": r.rule_id,
                "risk_class": r.class.as_str(),
                "severity": r.severities,
                "description": r.description,
            })
        })
        .collect();
    Outcome { code: exit::ALLOW, stdout: serde_json::to_string_pretty(&rules).expect("rules serialize") + "\n" }
}

/// Config from `--config`, else `$BGATE_CONFIG`, else defaults; flags
/// override file values.
pub fn serve_config(args: &ServeArgs, env_config: Option<PathBuf>) -> Result<GatewayConfig, Failure> {
    let mut config = match args.config.clone().or(env_config) {
        Some(path) => GatewayConfig::load(&path)?,
        None => GatewayConfig::default(),
    };
    if let Some(l) = &args.listen {
        config.listen = l.clone();
    }
    if let Some(d) = &args.data_dir {
        config.data_dir = d.clone();
    }
    if let Some(s) = &args.strictness {
        config.strictness =
            bgate_core::Strictness::parse(s).ok_or_else(|| Failure::usage(format!("unknown strictness {s:?}")))?;
    }
    if let Some(p) = &args.rules_path {
        config.rules_path = Some(p.clone());
    }
    if let Some(p) = &args.policy_table_path {
        config.policy_table_path = Some(p.clone());
    }
    if let Some(p) = &args.host_fixture_path {
        config.host_fixture_path = Some(p.clone());
    }
    Ok(config)
}

/// Validates everything `serve` needs before binding: the listen address,
/// the rules, the policy table and the host fixture.
pub fn prepare_serve(args: &ServeArgs, env_config: Option<PathBuf>) -> Result<(Gateway, SocketAddr), Failure> {
    let config = serve_config(args, env_config)?;
    let addr = config.listen_addr(args.allow_public_listen)?;
    let gateway = Gateway::from_config(&config)?;
    Ok((gateway, addr))
}

pub fn cmd_serve(args: &ServeArgs) -> Result<Outcome, Failure> {
    let env_config = std::env::var_os(bgate_gateway::config::CONFIG_ENV).map(PathBuf::from);
    let (gateway, addr) = prepare_serve(args, env_config)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::usage(format!("runtime: {e}")))?;
    runtime
        .block_on(bgate_gateway::serve(Arc::new(gateway), addr))
        .map_err(|e| Failure { code: 1, message: format!("serve on {addr}: {e}") })?;
    Ok(Outcome { code: 0, stdout: String::new() })
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Corpus(a) => cmd_corpus(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Trace { command: TraceCommand::Verify { path } } => cmd_trace_verify(path),
        Command::Rules { command: RulesCommand::List } => Ok(cmd_rules_list()),
    }
}

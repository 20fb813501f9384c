//! The `adi` command line.
//!
//! Every command reads the store named by `--store` and, when it changes
//! anything, writes it back under an exclusive lock. Time-dependent
//! commands use `--now` instead of the wall clock when given.

mod render;
mod store;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use adi_core::drr::{ratify, verify_chain_bytes, ValidityWindow};
use adi_core::fsm::{ActorId, ActorKind, PromotionRequest};
use adi_core::gamma::OperatorKind;
use adi_core::graph::{Evidence, KnowledgeGraph, PropagationMode, Timestamp};
use adi_core::harness::{run_suite_with, Selection, SuiteOptions};
use adi_core::model::{Config, EpistemicLayer, EvidenceRole, FormalityLevel, VerificationMethod};
use adi_core::scope::Scope;
use adi_core::{Error, ReliabilityScore, Result};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use serde_json::json;

pub use store::Store;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "adi",
    version,
    about = "Track claims, evidence and reliability in an epistemic graph"
)]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, default_value = ".adi")]
    store: PathBuf,
    /// Evaluation time (RFC 3339); defaults to the wall clock.
    #[arg(long, global = true, value_parser = parse_time)]
    now: Option<Timestamp>,
    /// Machine-readable output; errors go to stderr as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Configuration file; defaults to the store's config.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create an empty store.
    Init {
        /// Replace an existing graph and audit log.
        #[arg(long)]
        force: bool,
    },
    /// Propose a claim at L0.
    AddClaim {
        statement: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value = "*")]
        scope: Scope,
        #[arg(long, default_value = "F0")]
        formality: FormalityLevel,
        /// Proposing actor.
        #[arg(long)]
        actor: String,
        #[arg(long, default_value = "generator")]
        actor_kind: ActorKind,
        /// Premise this claim rests on; repeatable.
        #[arg(long = "depends-on")]
        depends_on: Vec<String>,
        /// Evidence to cite; repeatable.
        #[arg(long)]
        evidence: Vec<String>,
    },
    /// Record an evidence item.
    AddEvidence {
        #[arg(long)]
        id: Option<String>,
        /// Raw score in [0, 1].
        #[arg(long, allow_hyphen_values = true)]
        score: f64,
        #[arg(long, default_value = "F0")]
        formality: FormalityLevel,
        #[arg(long, default_value = "*")]
        scope: Scope,
        #[arg(long, default_value = "self_reported")]
        method: VerificationMethod,
        #[arg(long, default_value = "other")]
        role: EvidenceRole,
        /// Provenance tags; `llm-generated` marks model output.
        #[arg(long, default_value = "")]
        provenance: String,
        #[arg(long, value_parser = parse_time)]
        collected_at: Option<Timestamp>,
        /// Defaults to the formality-dependent validity period.
        #[arg(long, value_parser = parse_time)]
        valid_until: Option<Timestamp>,
        /// Claim that cites the evidence; repeatable.
        #[arg(long)]
        attach: Vec<String>,
    },
    /// Rest a claim on a premise.
    Link { claim: String, premise: String },
    /// Declare two claims mutually contradictory.
    Contradict { a: String, b: String },
    /// Raise a claim by one layer.
    Promote {
        claim: String,
        /// Target layer; defaults to the next one.
        #[arg(long)]
        to: Option<EpistemicLayer>,
        #[arg(long)]
        actor: String,
        #[arg(long, default_value = "verifier")]
        actor_kind: ActorKind,
        /// Evidence supporting the step; repeatable.
        #[arg(long)]
        evidence: Vec<String>,
    },
    /// Ratify a corroborated claim and append its decision record.
    Ratify {
        claim: String,
        #[arg(long)]
        actor: String,
        #[arg(long, default_value = "human")]
        actor_kind: ActorKind,
        /// Start of the decision's validity window; defaults to now.
        #[arg(long, value_parser = parse_time)]
        from: Option<Timestamp>,
        /// End of the window; defaults to the claim's formality validity.
        #[arg(long, value_parser = parse_time)]
        until: Option<Timestamp>,
    },
    /// Put a ratified decision into operation.
    Deploy { claim: String },
    /// Effective reliability with every term of the formula.
    Score {
        claim: String,
        /// Outer aggregation; anything but min is for comparison only.
        #[arg(long)]
        operator: Option<OperatorKind>,
    },
    /// Everything a claim rests on, breadth first.
    Inspect { claim: String },
    /// Flag claims whose evidence has expired.
    Sweep,
    /// Every claim with its layer, phase, status and score, and the state
    /// of the audit chain.
    Report,
    /// Validate a configuration file.
    CheckConfig { file: Option<PathBuf> },
    /// Run the verification suite: `all`, a category, or one property.
    Proptest {
        suite: String,
        /// Cases per property; defaults to the configured count.
        #[arg(long)]
        cases: Option<u32>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "min")]
        operator: OperatorKind,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn parse_time(s: &str) -> std::result::Result<Timestamp, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("expected an RFC 3339 timestamp: {e}"))
}

/// What a command produced: text for people, JSON for scripts, and an
/// exit code.
struct Output {
    text: String,
    json: serde_json::Value,
    code: i32,
}

impl Output {
    fn ok(text: impl Into<String>, json: serde_json::Value) -> Self {
        Output {
            text: text.into(),
            json,
            code: EXIT_OK,
        }
    }
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let wants_json = args.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else if wants_json {
                let _ = writeln!(
                    err,
                    "{}",
                    json!({"error": {"code": "UsageError", "message": e.to_string().trim_end()}})
                );
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let json_mode = cli.json;
    match execute(cli) {
        Ok(o) => {
            if json_mode {
                let _ = writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&o.json).expect("serializable")
                );
            } else if !o.text.is_empty() {
                let _ = writeln!(out, "{}", o.text.trim_end());
            }
            o.code
        }
        Err(e) => {
            if json_mode {
                let _ = writeln!(
                    err,
                    "{}",
                    json!({"error": {"code": e.code(), "message": e.to_string()}})
                );
            } else {
                let _ = writeln!(err, "error[{}]: {e}", e.code());
            }
            if matches!(e, Error::Parse { .. }) {
                EXIT_USAGE
            } else {
                EXIT_DOMAIN
            }
        }
    }
}

fn actor(id: &str, kind: ActorKind) -> Result<ActorId> {
    ActorId::new(id, kind)
}

/// Loads the graph, applies `f`, brings scores up to date and saves, all
/// under the writer lock. Nothing is written if `f` fails.
fn mutate<T>(
    store: &Store,
    cfg: &Config,
    now: Timestamp,
    f: impl FnOnce(&mut KnowledgeGraph) -> Result<T>,
) -> Result<T> {
    let _lock = store.lock()?;
    let mut g = store.load_graph()?;
    let out = f(&mut g)?;
    g.propagate(cfg, now, PropagationMode::Incremental)?;
    store.save_graph(&g)?;
    Ok(out)
}

fn execute(cli: Cli) -> Result<Output> {
    let store = Store::new(&cli.store);
    let now = cli.now.unwrap_or_else(Utc::now);
    let explicit = cli.config.as_deref();
    match cli.command {
        Command::Init { force } => {
            if store.is_initialized() && !force {
                return Err(Error::Invalid(format!(
                    "store {} already exists; pass --force to replace it",
                    cli.store.display()
                )));
            }
            let cfg = store.config(explicit)?;
            store.init(&cfg)?;
            Ok(Output::ok(
                format!("initialized {}", cli.store.display()),
                json!({"store": cli.store}),
            ))
        }
        Command::AddClaim {
            statement,
            id,
            scope,
            formality,
            actor: a,
            actor_kind,
            depends_on,
            evidence,
        } => {
            let cfg = store.config(explicit)?;
            let proposer = actor(&a, actor_kind)?;
            let id = mutate(&store, &cfg, now, |g| {
                let id = match id {
                    Some(id) => {
                        g.propose_with_id(id, statement, scope, formality, proposer, now)?
                    }
                    None => g.propose(statement, scope, formality, proposer, now)?,
                };
                for p in &depends_on {
                    g.link_dependency(&id, p)?;
                }
                for e in &evidence {
                    g.attach_evidence(&id, e)?;
                }
                Ok(id)
            })?;
            Ok(Output::ok(id.clone(), json!({"id": id})))
        }
        Command::AddEvidence {
            id,
            score,
            formality,
            scope,
            method,
            role,
            provenance,
            collected_at,
            valid_until,
            attach,
        } => {
            let cfg = store.config(explicit)?;
            let raw = ReliabilityScore::new(score)?;
            let collected = collected_at.unwrap_or(now);
            let id = mutate(&store, &cfg, now, |g| {
                let id = id.unwrap_or_else(|| g.fresh_id("e"));
                let mut e = Evidence::new(
                    id.clone(),
                    raw,
                    formality,
                    scope,
                    method,
                    role,
                    collected,
                    &cfg,
                )
                .with_provenance(provenance);
                if let Some(until) = valid_until {
                    if until < collected {
                        return Err(Error::Invalid("valid-until precedes collected-at".into()));
                    }
                    e = e.with_valid_until(until);
                }
                g.add_evidence(e)?;
                for c in &attach {
                    g.attach_evidence(c, &id)?;
                }
                Ok(id)
            })?;
            Ok(Output::ok(id.clone(), json!({"id": id})))
        }
        Command::Link { claim, premise } => {
            let cfg = store.config(explicit)?;
            mutate(&store, &cfg, now, |g| g.link_dependency(&claim, &premise))?;
            Ok(Output::ok(
                format!("{claim} rests on {premise}"),
                json!({"claim": claim, "premise": premise}),
            ))
        }
        Command::Contradict { a, b } => {
            let cfg = store.config(explicit)?;
            mutate(&store, &cfg, now, |g| g.declare_contradiction(&a, &b))?;
            Ok(Output::ok(
                format!("{a} contradicts {b}"),
                json!({"a": a, "b": b}),
            ))
        }
        Command::Promote {
            claim,
            to,
            actor: a,
            actor_kind,
            evidence,
        } => {
            let cfg = store.config(explicit)?;
            let by = actor(&a, actor_kind)?;
            let node = mutate(&store, &cfg, now, |g| {
                let current = g.claim(&claim)?.layer;
                let target = match to.or_else(|| current.next()) {
                    Some(t) => t,
                    None => {
                        return Err(Error::LayerSkip {
                            claim: claim.clone(),
                            from: current.to_string(),
                            to: "beyond L2".into(),
                        })
                    }
                };
                let req = PromotionRequest {
                    claim: claim.clone(),
                    target,
                    evidence,
                    actor: by,
                };
                Ok(g.promote(&req, &cfg, now)?.clone())
            })?;
            Ok(Output::ok(
                format!("{} promoted to {} ({})", node.id, node.layer, node.phase),
                json!({"id": node.id, "layer": node.layer, "phase": node.phase}),
            ))
        }
        Command::Ratify {
            claim,
            actor: a,
            actor_kind,
            from,
            until,
        } => {
            let cfg = store.config(explicit)?;
            let by = actor(&a, actor_kind)?;
            let _lock = store.lock()?;
            let mut g = store.load_graph()?;
            let mut drr = store.load_drr()?;
            let from = from.unwrap_or(now);
            let until = match until {
                Some(u) => u,
                None => from + cfg.validity(g.claim(&claim)?.formality),
            };
            let record = ratify(
                &mut g,
                &mut drr,
                &claim,
                &by,
                ValidityWindow { from, until },
                &cfg,
            )?;
            g.propagate(&cfg, now, PropagationMode::Incremental)?;
            store.append_drr(&record)?;
            store.save_graph(&g)?;
            Ok(Output::ok(
                format!(
                    "{} ratified as {} (R_eff {})",
                    record.claim, record.drr_id, record.final_r_eff
                ),
                serde_json::to_value(&record).expect("serializable"),
            ))
        }
        Command::Deploy { claim } => {
            let cfg = store.config(explicit)?;
            mutate(&store, &cfg, now, |g| g.deploy(&claim))?;
            Ok(Output::ok(
                format!("{claim} in operation"),
                json!({"id": claim, "phase": "operation"}),
            ))
        }
        Command::Score { claim, operator } => {
            let cfg = store.config(explicit)?;
            let mut g = store.load_graph()?;
            if let Some(op) = operator {
                g = g.with_aggregator(op);
            }
            let b = g.breakdown(&claim, &cfg, now)?;
            Ok(Output::ok(
                render::breakdown(&b, &g),
                serde_json::to_value(&b).expect("serializable"),
            ))
        }
        Command::Inspect { claim } => {
            let cfg = store.config(explicit)?;
            let mut g = store.load_graph()?;
            g.propagate(&cfg, now, PropagationMode::Full)?;
            let r = g.inspect_dependencies(&claim)?;
            Ok(Output::ok(
                render::inspect(&r),
                serde_json::to_value(&r).expect("serializable"),
            ))
        }
        Command::Sweep => {
            let cfg = store.config(explicit)?;
            let flagged = mutate(&store, &cfg, now, |g| g.sweep_stale(&cfg, now))?;
            let text = if flagged.is_empty() {
                "nothing stale".to_string()
            } else {
                format!("stale: {}", flagged.join(" "))
            };
            Ok(Output::ok(text, json!({"flagged": flagged})))
        }
        Command::Report => {
            let cfg = store.config(explicit)?;
            let mut g = store.load_graph()?;
            g.propagate(&cfg, now, PropagationMode::Full)?;
            let verdict = verify_chain_bytes(&store.drr_bytes()?);
            let mut o = Output::ok(
                render::report(&g, &verdict),
                render::report_json(&g, &verdict),
            );
            if !verdict.is_ok() {
                o.code = EXIT_DOMAIN;
            }
            Ok(o)
        }
        Command::CheckConfig { file } => {
            let path = file.as_deref().or(explicit);
            let cfg = store.config(path)?;
            Ok(Output::ok(
                "config ok",
                json!({"ok": true, "config": cfg.to_json()}),
            ))
        }
        Command::Proptest {
            suite,
            cases,
            seed,
            operator,
            threads,
        } => {
            let selection: Selection = suite.parse()?;
            let cfg = store.config(explicit)?;
            let cases = match cases {
                Some(n) => n,
                None => {
                    let key = match &selection {
                        Selection::Category(c) => c.name().to_string(),
                        _ => suite.clone(),
                    };
                    u32::try_from(cfg.cases_for(&key)).unwrap_or(u32::MAX)
                }
            };
            let report = run_suite_with(&SuiteOptions {
                operator,
                threads,
                ..SuiteOptions::new(selection, cases, seed)
            });
            let json = serde_json::to_value(&report).expect("serializable");
            let code = if report.passed() {
                EXIT_OK
            } else {
                EXIT_DOMAIN
            };
            Ok(Output {
                text: report.to_json(),
                json,
                code,
            })
        }
    }
}

mod settings;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use frictionbench_core::booking::{
    self, judge_success_rates, policy_scripts, BookingCaps, BookingEpisode, EntityDb, EpisodeBackends, SlipRates,
};
use frictionbench_core::corpus::{keyed_rng, load_corpus, Dialogue};
use frictionbench_core::detection::{crosstab, detect_corpus, write_results, Detector};
use frictionbench_core::embodied::{
    self, agent_script, generate_world, run_episode as run_embodied, EmbodiedEpisode, UserOracle, WorldFile,
    DEFAULT_ROOMS, DEFAULT_STEP_LIMIT,
};
use frictionbench_core::llm::{BackendConfig, BackendKind, ChatBackend, LlmError, ScriptedBackend};
use frictionbench_core::report::{write_outcome_table, OutcomeRow};
use frictionbench_core::satisfaction::{friction_effect_analysis, pooled_report, write_reports};
use frictionbench_core::taxonomy::FrictionCategory;
use frictionbench_service::{BackendFactory, Server, ServiceConfig, SessionMode};

use settings::Settings;

#[derive(Parser)]
#[command(name = "frictionbench", version, about = "Friction detection, analysis and simulation experiments")]
struct Cli {
    /// Flat `key = value` TOML file supplying defaults for any option.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rule,
    Llm,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMethod {
    Oracle,
    Judge,
}

#[derive(Subcommand)]
enum Command {
    /// Label every turn of a corpus with a friction category.
    Detect {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// `remote` or `scripted:<path>`; used by the llm method.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dialogue act by friction category counts over a per-act sample.
    Crosstab {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        per_act: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predicted vs reported satisfaction, grouped by friction category.
    Satisfaction {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Repeat for several raters; a pooled report is added when more
        /// than one is given.
        #[arg(long)]
        backend: Vec<String>,
        #[arg(long, value_enum)]
        detector: Option<Method>,
        /// Backend for the llm detector.
        #[arg(long)]
        detector_backend: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Booking environment episodes.
    Booking {
        #[command(subcommand)]
        command: BookingCommand,
    },
    /// Embodied text-world episodes.
    Embodied {
        #[command(subcommand)]
        command: EmbodiedCommand,
    },
    /// HTTP service for annotation tasks and live chat sessions.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        host: Option<String>,
        /// Repeat to serve several corpora.
        #[arg(long)]
        corpus: Vec<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        db_seed: Option<u64>,
        /// `remote` or `scripted:<path>`; each session opens a fresh one.
        #[arg(long)]
        backend: Option<String>,
    },
    /// Success / friction share / turns table from episode files.
    Report {
        #[arg(long)]
        booking: Vec<PathBuf>,
        #[arg(long)]
        embodied: Vec<PathBuf>,
        /// Seed of the entity database the booking episodes ran against.
        #[arg(long)]
        db_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BookingCommand {
    Run {
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated categories, e.g. `probing,overspecification`.
        #[arg(long)]
        friction: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        db_seed: Option<u64>,
        /// `policy`, `remote` or `scripted:<path>` for the assistant.
        #[arg(long)]
        backend: Option<String>,
        /// Same choices for the user simulator; defaults to `--backend`.
        #[arg(long)]
        user_backend: Option<String>,
        #[arg(long)]
        max_turns: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Eval {
        #[arg(long)]
        episodes: PathBuf,
        #[arg(long, value_enum, default_value = "oracle")]
        method: EvalMethod,
        #[arg(long)]
        runs: Option<usize>,
        /// Judge backend.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        db_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EmbodiedCommand {
    Run {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        friction: Option<String>,
        #[arg(long)]
        step_limit: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rooms: Option<usize>,
        /// Run on these world files instead of generating worlds.
        #[arg(long)]
        worlds: Option<PathBuf>,
        /// `policy`, `remote` or `scripted:<path>`.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write seeded world files as JSON Lines.
    Generate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rooms: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum BackendSpec {
    Policy,
    Llm(BackendConfig),
}

fn backend_spec(s: &Settings, spec: &str) -> Result<BackendSpec> {
    if spec == "policy" {
        return Ok(BackendSpec::Policy);
    }
    let mut config = BackendConfig::from_spec(spec)?;
    if matches!(config.kind, BackendKind::Remote) {
        config.model_id = s.or("model", None, config.model_id)?;
        config.base_url = s.or("base-url", None, config.base_url)?;
        config.temperature = s.or("temperature", None, config.temperature)?;
        config.max_retries = s.or("max-retries", None, config.max_retries)?;
        config.timeout = Duration::from_secs(s.or("timeout-secs", None, config.timeout.as_secs())?);
    }
    Ok(BackendSpec::Llm(config))
}

fn llm_config(s: &Settings, spec: &str) -> Result<BackendConfig> {
    match backend_spec(s, spec)? {
        BackendSpec::Llm(c) => Ok(c),
        BackendSpec::Policy => bail!("the policy backend only drives booking and embodied episodes"),
    }
}

fn parse_friction(list: &str) -> Result<Vec<FrictionCategory>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|n| !n.is_empty() && *n != "none") {
        let c: FrictionCategory = name.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        out.push(c);
    }
    Ok(out)
}

fn condition_name(friction: &[FrictionCategory]) -> String {
    if friction.is_empty() {
        "none".into()
    } else {
        friction.iter().map(|c| c.canonical_name()).collect::<Vec<_>>().join("+")
    }
}

/// Stdout when `path` is None. The file is only created once output is
/// ready, so a failed run leaves no partial file behind.
fn write_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    match path {
        None => io::stdout().lock().write_all(&buf)?,
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            w.write_all(&buf)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn corpus(s: &Settings, flag: Option<PathBuf>) -> Result<Vec<Dialogue>> {
    let path: PathBuf = s.require("corpus", flag)?;
    load_corpus(&path, None).with_context(|| format!("loading corpus {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Detect {
            corpus: c,
            method,
            backend,
            out,
        } => {
            let dialogues = corpus(&s, c)?;
            let results = match s.or("method", method, Method::Rule)? {
                Method::Rule => detect_corpus(&dialogues, Detector::Rule)?,
                Method::Llm => {
                    let b = llm_config(&s, &s.or("backend", backend, "remote".to_string())?)?.connect()?;
                    detect_corpus(&dialogues, Detector::Llm(b.as_ref()))?
                }
            };
            write_output(out.as_deref(), |w| Ok(write_results(w, &results)?))
        }
        Command::Crosstab {
            corpus: c,
            per_act,
            seed,
            method,
            backend,
            out,
        } => {
            let dialogues = corpus(&s, c)?;
            let per_act = s.or("per-act", per_act, 50)?;
            let seed = s.or("seed", seed, 0)?;
            let table = match s.or("method", method, Method::Rule)? {
                Method::Rule => crosstab(&dialogues, Detector::Rule, per_act, seed)?,
                Method::Llm => {
                    let b = llm_config(&s, &s.or("backend", backend, "remote".to_string())?)?.connect()?;
                    crosstab(&dialogues, Detector::Llm(b.as_ref()), per_act, seed)?
                }
            };
            write_output(out.as_deref(), |w| Ok(table.write_csv(w)?))
        }
        Command::Satisfaction {
            corpus: c,
            backend,
            detector,
            detector_backend,
            seed,
            out,
        } => {
            let dialogues = corpus(&s, c)?;
            let seed = s.or("seed", seed, 0)?;
            let specs = if backend.is_empty() {
                vec![s.or("backend", None, "remote".to_string())?]
            } else {
                backend
            };
            let det_backend = match s.or("detector", detector, Method::Rule)? {
                Method::Rule => None,
                Method::Llm => Some(
                    llm_config(&s, &s.or("detector-backend", detector_backend, "remote".to_string())?)?.connect()?,
                ),
            };
            let det = match &det_backend {
                None => Detector::Rule,
                Some(b) => Detector::Llm(b.as_ref()),
            };
            let mut reports = Vec::new();
            for spec in &specs {
                let b = llm_config(&s, spec)?.connect()?;
                let mut r = friction_effect_analysis(&dialogues, b.as_ref(), det, seed)?;
                if specs.len() > 1 {
                    r.label = format!("{}#{}", r.label, reports.len());
                }
                reports.push(r);
            }
            if reports.len() > 1 {
                let pooled = pooled_report(&reports)?;
                reports.push(pooled);
            }
            write_output(out.as_deref(), |w| Ok(write_reports(w, &reports)?))
        }
        Command::Booking { command } => booking_cmd(&s, command),
        Command::Embodied { command } => embodied_cmd(&s, command),
        Command::Serve {
            port,
            host,
            corpus: corpora,
            store,
            db_seed,
            backend,
        } => serve(&s, port, host, corpora, store, db_seed, backend),
        Command::Report {
            booking,
            embodied,
            db_seed,
            out,
        } => report(&s, booking, embodied, db_seed, out),
    }
}

fn booking_cmd(s: &Settings, command: BookingCommand) -> Result<()> {
    match command {
        BookingCommand::Run {
            n,
            friction,
            seed,
            db_seed,
            backend,
            user_backend,
            max_turns,
            out,
        } => {
            let n = s.or("n", n, 100)?;
            let friction = parse_friction(&s.or("friction", friction, String::new())?)?;
            let seed = s.or("seed", seed, 0)?;
            let db = EntityDb::fixture(s.or("db-seed", db_seed, 0)?);
            let assistant_spec = s.or("backend", backend, "policy".to_string())?;
            let user_spec = s.or("user-backend", user_backend, assistant_spec.clone())?;
            let caps = BookingCaps {
                max_turns: s.or("max-turns", max_turns, BookingCaps::default().max_turns)?,
                ..BookingCaps::default()
            };
            let assistant = backend_spec(s, &assistant_spec)?;
            let user = backend_spec(s, &user_spec)?;
            let episodes = booking::run_batch(&db, n, seed, &friction, &caps, |i, goal| {
                let mut policy = None;
                let mut scripts = || {
                    policy
                        .get_or_insert_with(|| {
                            let mut rng = keyed_rng(seed, &format!("booking/policy/{i}"));
                            policy_scripts(&db, goal, &friction, &SlipRates::default(), &mut rng)
                        })
                        .clone()
                };
                let assistant: Box<dyn ChatBackend> = match &assistant {
                    BackendSpec::Policy => Box::new(ScriptedBackend::new(scripts().assistant)),
                    BackendSpec::Llm(c) => c.connect()?,
                };
                let user: Box<dyn ChatBackend> = match &user {
                    BackendSpec::Policy => Box::new(ScriptedBackend::new(scripts().user)),
                    BackendSpec::Llm(c) => c.connect()?,
                };
                Ok(EpisodeBackends { assistant, user })
            })?;
            write_output(out.as_deref(), |w| Ok(booking::write_episodes(w, &episodes)?))
        }
        BookingCommand::Eval {
            episodes,
            method,
            runs,
            backend,
            db_seed,
            out,
        } => {
            let eps: Vec<BookingEpisode> = read_lines(&episodes)?;
            if eps.is_empty() {
                bail!("{} holds no episodes", episodes.display());
            }
            let db = EntityDb::fixture(s.or("db-seed", db_seed, 0)?);
            let rows = match method {
                EvalMethod::Oracle => booking_rows(&eps, &db),
                EvalMethod::Judge => {
                    let config = llm_config(s, &s.or("backend", backend, "remote".to_string())?)?;
                    let runs = s.or("runs", runs, 3)?;
                    let mut rows = Vec::new();
                    for (cond, group) in group_by_condition(&eps, |e| &e.friction_config) {
                        let rates = judge_success_rates(&group, runs, || Ok(config.connect()?))?;
                        rows.push(booking::outcome_row(cond, &group, &rates));
                    }
                    rows
                }
            };
            write_output(out.as_deref(), |w| Ok(write_outcome_table(w, &rows)?))
        }
    }
}

fn group_by_condition<T: Clone>(items: &[T], key: impl Fn(&T) -> &Vec<FrictionCategory>) -> Vec<(String, Vec<T>)> {
    let mut groups: BTreeMap<Vec<FrictionCategory>, Vec<T>> = BTreeMap::new();
    for item in items {
        let mut k = key(item).clone();
        k.sort();
        groups.entry(k).or_default().push(item.clone());
    }
    groups.into_iter().map(|(k, v)| (condition_name(&k), v)).collect()
}

/// Rows scored by the deterministic oracle, re-run against `db`.
fn booking_rows(eps: &[BookingEpisode], db: &EntityDb) -> Vec<OutcomeRow> {
    group_by_condition(eps, |e| &e.friction_config)
        .into_iter()
        .map(|(cond, group)| {
            let success: Vec<f64> = group
                .iter()
                .map(|e| {
                    let ok = booking::success_oracle(&e.turns, &e.tool_calls, db, &e.goal).success;
                    if ok {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            booking::outcome_row(cond, &group, &success)
        })
        .collect()
}

fn embodied_cmd(s: &Settings, command: EmbodiedCommand) -> Result<()> {
    match command {
        EmbodiedCommand::Generate { n, seed, rooms, out } => {
            let n = s.or("n", n, 134)?;
            let seed = s.or("seed", seed, 0)?;
            let rooms = s.or("rooms", rooms, DEFAULT_ROOMS)?;
            let worlds: Vec<WorldFile> = (0..n).map(|i| generate_world(seed, i, rooms)).collect();
            write_output(out.as_deref(), |w| Ok(embodied::write_jsonl(w, &worlds)?))
        }
        EmbodiedCommand::Run {
            n,
            friction,
            step_limit,
            seed,
            rooms,
            worlds,
            backend,
            out,
        } => {
            let friction = parse_friction(&s.or("friction", friction, String::new())?)?;
            let step_limit = s.or("step-limit", step_limit, DEFAULT_STEP_LIMIT)?;
            let spec = backend_spec(s, &s.or("backend", backend, "policy".to_string())?)?;
            let agent = |wf: &WorldFile| -> Result<Box<dyn ChatBackend>> {
                Ok(match &spec {
                    BackendSpec::Policy => Box::new(ScriptedBackend::new(agent_script(wf, &friction))),
                    BackendSpec::Llm(c) => c.connect()?,
                })
            };
            let worlds: Vec<WorldFile> = match s.get::<PathBuf>("worlds", worlds)? {
                Some(path) => read_lines(&path)?,
                None => {
                    let n = s.or("n", n, 134)?;
                    let seed = s.or("seed", seed, 0)?;
                    let rooms = s.or("rooms", rooms, DEFAULT_ROOMS)?;
                    (0..n).map(|i| generate_world(seed, i, rooms)).collect()
                }
            };
            let mut episodes: Vec<EmbodiedEpisode> = Vec::new();
            for (i, wf) in worlds.iter().enumerate() {
                let b = agent(wf)?;
                episodes.push(run_embodied(
                    format!("episode-{i:04}"),
                    b.as_ref(),
                    UserOracle::Rule,
                    wf,
                    &friction,
                    step_limit,
                )?);
            }
            write_output(out.as_deref(), |w| Ok(embodied::write_jsonl(w, &episodes)?))
        }
    }
}

fn report(
    s: &Settings,
    booking_files: Vec<PathBuf>,
    embodied_files: Vec<PathBuf>,
    db_seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    if booking_files.is_empty() && embodied_files.is_empty() {
        bail!("give at least one --booking or --embodied episode file");
    }
    let mut rows = Vec::new();
    if !booking_files.is_empty() {
        let db = EntityDb::fixture(s.or("db-seed", db_seed, 0)?);
        let mut eps: Vec<BookingEpisode> = Vec::new();
        for f in &booking_files {
            eps.extend(read_lines::<BookingEpisode>(f)?);
        }
        rows.extend(booking_rows(&eps, &db).into_iter().map(|mut r| {
            r.condition = format!("booking/{}", r.condition);
            r
        }));
    }
    let mut eps: Vec<EmbodiedEpisode> = Vec::new();
    for f in &embodied_files {
        eps.extend(read_lines::<EmbodiedEpisode>(f)?);
    }
    for (cond, group) in group_by_condition(&eps, |e| &e.friction_config) {
        rows.push(embodied::outcome_row(format!("embodied/{cond}"), &group)?);
    }
    write_output(out.as_deref(), |w| Ok(write_outcome_table(w, &rows)?))
}

fn serve(
    s: &Settings,
    port: Option<u16>,
    host: Option<String>,
    corpora: Vec<PathBuf>,
    store: Option<PathBuf>,
    db_seed: Option<u64>,
    backend: Option<String>,
) -> Result<()> {
    let port = s.or("port", port, 8080u16)?;
    let host = s.or("host", host, "127.0.0.1".to_string())?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("bad listen address {host}:{port}"))?;
    let corpora = if corpora.is_empty() {
        s.raw("corpus").map(|c| c.split(',').map(PathBuf::from).collect()).unwrap_or_default()
    } else {
        corpora
    };
    let mut dialogues = Vec::new();
    for path in &corpora {
        dialogues.extend(load_corpus(path, None).with_context(|| format!("loading corpus {}", path.display()))?);
    }
    let store = s.or("store", store, PathBuf::from("annotations.jsonl"))?;
    let config = llm_config(s, &s.or("backend", backend, "remote".to_string())?)?;
    let factory: Arc<dyn BackendFactory> =
        Arc::new(move |_mode: SessionMode| -> Result<Box<dyn ChatBackend>, LlmError> { config.connect() });
    let config = ServiceConfig {
        addr,
        dialogues,
        store_path: store,
        db_seed: s.or("db-seed", db_seed, 0)?,
        backends: factory,
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let server = Server::bind(config).await?;
        let local = server.local_addr()?;
        println!("listening on http://{local}");
        io::stdout().flush()?;
        server
            .run(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

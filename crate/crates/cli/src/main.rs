use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pitchleague::analysis::{
    crossplay_from_outcomes, decompose, detect_events, radar_csv, read_replay, style_radar, write_replay, Replay, StyleMetrics,
};
use pitchleague::game::pitch::PitchConfig;
use pitchleague::game::Team;
use pitchleague::learner::{play_episode, Actor, EpisodeSettings};
use pitchleague::metagame::MatchOutcome;
use pitchleague::orchestrator::run::{pitch_preset, resolve_policy, run_pipeline, write_run_dir, PipelineConfig, PipelineKind};
use pitchleague::orchestrator::{evaluate, Mode, OrchestratorError};
use pitchleague::rewards::RewardConfig;
use pitchleague_ranking::{RankingService, ServiceConfig};
use serde_json::json;

const LOG_ENV: &str = "PITCHLEAGUE_LOG";

#[derive(Parser)]
#[command(name = "pitchleague", version, about = "Population-based self-play on MiniPitch and matrix games")]
#[command(after_help = "Exit codes: 0 ok, 2 usage, 3 config, 4 runtime. Log level from PITCHLEAGUE_LOG (error|warn|info|debug|trace).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training pipeline and write a run directory.
    Train {
        #[arg(value_enum)]
        pipeline: PipelineArg,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Play two policies against each other with side swaps.
    Evaluate {
        /// Policy name (builtin, builtin:D, idle, random, shooter) or file.
        a: String,
        b: String,
        #[arg(long, default_value = "minipitch:1v1")]
        env: String,
        #[arg(long, default_value_t = 100)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Event counts and decomposition of a replay, or style metrics of a run.
    Analyze {
        /// Replay file or run directory.
        input: PathBuf,
        /// Write CSV and JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Normalised style radar over the run's policies.
        #[arg(long)]
        radar: bool,
        /// Cross-play win and draw matrices from the run's replays.
        #[arg(long)]
        crossplay: bool,
    },
    /// Start the ranking service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        data: PathBuf,
    },
    /// Record one MiniPitch episode as a replay file.
    ReplayDump {
        #[arg(long, default_value = "minipitch:1v1")]
        env: String,
        #[arg(long, default_value = "builtin")]
        left: String,
        #[arg(long, default_value = "builtin")]
        right: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Psro,
    League,
    Br,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Serial,
    Sync,
    Async,
}

#[derive(Args)]
struct TrainOpts {
    /// Pipeline TOML; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// rps, matrix:FILE or minipitch[:CFG].
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    workers: Option<usize>,
    /// Environment steps per best response.
    #[arg(long)]
    budget: Option<u64>,
    /// Simulated episodes per payoff entry.
    #[arg(long)]
    episodes: Option<u64>,
    /// Injected latency per environment step, in milliseconds.
    #[arg(long)]
    latency_ms: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn report(&self) {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Config(m) => ("config", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        eprintln!("{}", json!({ "error": kind, "code": self.code(), "message": msg }));
    }
}

impl From<OrchestratorError> for CliError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::Config(m) => CliError::Config(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn train(pipeline: PipelineArg, o: TrainOpts) -> Result<(), CliError> {
    let mut config = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            PipelineConfig::from_toml(&text)?
        }
        None => {
            if o.env.is_none() {
                return Err(CliError::Usage("--env is required unless --config is given".into()));
            }
            PipelineConfig::default()
        }
    };
    config.kind = match pipeline {
        PipelineArg::Psro => PipelineKind::Psro,
        PipelineArg::League => PipelineKind::League,
        PipelineArg::Br => PipelineKind::Br,
    };
    if let Some(env) = o.env {
        config.env = env;
    }
    if let Some(g) = o.generations {
        config.generations = g;
    }
    if let Some(s) = o.seed {
        config.seed = s;
        config.learner.seed = s;
    }
    if let Some(m) = o.mode {
        config.dist.mode = match m {
            ModeArg::Serial => Mode::Serial,
            ModeArg::Sync => Mode::Sync,
            ModeArg::Async => Mode::Async,
        };
    }
    if let Some(w) = o.workers {
        config.dist.workers = w;
    }
    if let Some(b) = o.budget {
        config.learner.step_budget = b;
    }
    if let Some(k) = o.episodes {
        config.episodes_per_pair = k;
    }
    if let Some(l) = o.latency_ms {
        config.dist.step_latency_ms = l;
    }
    config.validate()?;
    let summary = run_pipeline(&config)?;
    write_run_dir(&o.out, &config, &summary)?;
    let elo = summary.population.elo(config.seed);
    say(
        &json!({
            "out": o.out,
            "members": summary.population.ids(),
            "elo": elo.ratings(),
            "game_exploitability": summary.game_exploitability,
            "wall_clock_secs": summary.wall_clock_secs,
        })
        .to_string(),
    );
    Ok(())
}

/// Prints a line; a closed stdout (`| head`) ends the process quietly.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}").and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        log::warn!("stdout: {e}");
    }
}

fn pitch_from_env(env: &str) -> Result<PitchConfig, CliError> {
    let config = PipelineConfig { env: env.to_string(), ..PipelineConfig::default() };
    let name = env.strip_prefix("minipitch").ok_or_else(|| CliError::Config(format!("{env:?} is not a MiniPitch env")))?;
    let name = name.strip_prefix(':').unwrap_or("1v1");
    match pitch_preset(name) {
        Some(p) => Ok(p),
        None => Ok(config.pitch_config()?.expect("minipitch env")),
    }
}

fn cmd_evaluate(a: &str, b: &str, env: &str, episodes: u64, seed: u64) -> Result<(), CliError> {
    let config = pitch_from_env(env)?;
    let pa = Arc::new(resolve_policy(a, None)?);
    let pb = Arc::new(resolve_policy(b, None)?);
    let r = evaluate(&pa, &pb, episodes, &config, seed)?;
    say(
        &json!({
            "a": a, "b": b, "episodes": episodes,
            "win_rate": r.win_rate, "draw_rate": r.draw_rate, "loss_rate": r.loss_rate,
            "mean_goal_diff": r.mean_goal_diff,
        })
        .to_string(),
    );
    Ok(())
}

fn load_replay(path: &Path) -> Result<Replay, CliError> {
    let f = fs::File::open(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    read_replay(BufReader::new(f)).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(runtime)?;
            fs::write(dir.join(name), text).map_err(runtime)
        }
        None => {
            say(&format!("# {name}\n{text}"));
            Ok(())
        }
    }
}

fn stats_csv(rows: &[(String, pitchleague::analysis::EventCounts)]) -> String {
    let mut out = String::from("replay,team,passes,intercepts,assists,shots,goals,possession_steps\n");
    for (name, c) in rows {
        for t in [Team::Left, Team::Right] {
            let i = t.index();
            out.push_str(&format!(
                "{name},{t:?},{},{},{},{},{},{}\n",
                c.passes[i], c.intercepts[i], c.assists[i], c.shots[i], c.goals[i], c.possession_steps[i]
            ));
        }
    }
    out
}

fn cmd_analyze(input: &Path, out: Option<&Path>, radar: bool, crossplay: bool) -> Result<(), CliError> {
    if input.is_file() {
        let replay = load_replay(input)?;
        let d = decompose(&replay).map_err(runtime)?;
        let name = input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        emit(out, "stats.csv", &stats_csv(&[(name, detect_events(&d))]))?;
        emit(out, "decomposition.json", &serde_json::to_string_pretty(&d).map_err(runtime)?)?;
        return Ok(());
    }
    let dir = if input.join("replays").is_dir() { input.join("replays") } else { input.to_path_buf() };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| runtime(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    let mut per_policy: BTreeMap<String, Vec<(Team, pitchleague::analysis::MatchDecomposition)>> = BTreeMap::new();
    let mut outcomes = Vec::new();
    for f in &files {
        let replay = load_replay(f)?;
        let d = decompose(&replay).map_err(runtime)?;
        let counts = detect_events(&d);
        rows.push((f.file_name().unwrap().to_string_lossy().into_owned(), counts));
        let [left, right] = replay.header.policies.clone();
        let gd = i64::from(counts.goals[0]) - i64::from(counts.goals[1]);
        outcomes.push((left.clone(), right.clone(), gd));
        per_policy.entry(left).or_default().push((Team::Left, d.clone()));
        per_policy.entry(right).or_default().push((Team::Right, d));
    }
    emit(out, "stats.csv", &stats_csv(&rows))?;
    let metrics: Vec<(String, StyleMetrics)> =
        per_policy.iter().map(|(id, ms)| (id.clone(), StyleMetrics::from_matches(ms.iter().map(|(t, d)| (*t, d))))).collect();
    let mut style = String::from("policy,win_rate,goals,passes,assists,intercepts,possession,chain_length\n");
    for (id, m) in &metrics {
        let v = m.to_array();
        style.push_str(&format!("{id},{}\n", v.map(|x| x.to_string()).join(",")));
    }
    emit(out, "style.csv", &style)?;
    if radar {
        emit(out, "radar.csv", &radar_csv(&style_radar(&metrics)))?;
    }
    if crossplay {
        let ids: Vec<String> = per_policy.keys().cloned().collect();
        let index = |id: &str| ids.iter().position(|x| x == id).expect("known id");
        let results: Vec<_> = outcomes
            .iter()
            .map(|(a, b, gd)| {
                let o = MatchOutcome::<f64> {
                    wins: u64::from(*gd > 0),
                    draws: u64::from(*gd == 0),
                    losses: u64::from(*gd < 0),
                    goal_diff: *gd as f64,
                };
                (index(a), index(b), o)
            })
            .collect();
        emit(out, "crossplay.csv", &crossplay_from_outcomes(&ids, &results).to_csv())?;
    }
    Ok(())
}

fn cmd_replay_dump(env: &str, left: &str, right: &str, seed: u64, out: &Path) -> Result<(), CliError> {
    let mut config = pitch_from_env(env)?;
    config.seed = seed;
    let l = Arc::new(resolve_policy(left, None)?);
    let r = Arc::new(resolve_policy(right, None)?);
    let mut a = Actor::new(l, &config, 0.0, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let mut b = Actor::new(r, &config, 0.0, seed ^ 1).map_err(|e| CliError::Config(e.to_string()))?;
    let settings = EpisodeSettings { config: config.clone(), learner_team: Team::Left, seed, reward: RewardConfig::sparse(), step_latency: None };
    let (_, replay) = play_episode(&mut a, &mut b, &settings).map_err(runtime)?;
    let mut f = std::io::BufWriter::new(fs::File::create(out).map_err(|e| runtime(format!("{}: {e}", out.display())))?);
    write_replay(&replay, &mut f).map_err(runtime)?;
    f.flush().map_err(runtime)?;
    say(&json!({ "out": out, "steps": replay.steps.len() }).to_string());
    Ok(())
}

fn cmd_serve(host: &str, port: u16, data: PathBuf) -> Result<(), CliError> {
    let service = RankingService::open(ServiceConfig::new(&data)).map_err(|e| CliError::Config(format!("{}: {e}", data.display())))?;
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(|e| runtime(format!("bind {host}:{port}: {e}")))?;
        log::info!("ranking service listening on {host}:{port}");
        pitchleague_ranking::http::serve(Arc::new(service), listener).await.map_err(runtime)
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { pipeline, opts } => train(pipeline, opts),
        Command::Evaluate { a, b, env, episodes, seed } => cmd_evaluate(&a, &b, &env, episodes, seed),
        Command::Analyze { input, out, radar, crossplay } => cmd_analyze(&input, out.as_deref(), radar, crossplay),
        Command::Serve { port, host, data } => cmd_serve(&host, port, data),
        Command::ReplayDump { env, left, right, seed, out } => cmd_replay_dump(&env, &left, &right, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.code())
        }
    }
}

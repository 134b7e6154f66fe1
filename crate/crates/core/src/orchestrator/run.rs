//! Pipeline config files and run directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::oracle::{Arena, BestResponseOracle, ExactOracle, MatrixArena, OracleReport, PitchArena, TabularOracle};
use super::pipeline::{run_league, run_psro, LeagueConfig, PsroConfig};
use super::{DistConfig, MemberRole, OrchestratorError, Population};
use crate::analysis::write_replay;
use crate::game::pitch::PitchConfig;
use crate::learner::{LearnerConfig, Policy, PolicyKind, ScriptedKind};
use crate::metagame::{exploitability, MixedStrategy, NashConfig, PayoffMetric, PfspWeighting};
use crate::rewards::RewardConfig;
use crate::MatrixGameF64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    #[default]
    Psro,
    League,
    Br,
}

/// `rps`, `matrix:FILE`, `minipitch` or `minipitch:CFG` where CFG is a
/// preset (`1v1`, `3v3`, `5v5`, `academy`) or a TOML file.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Rps,
    Matrix(PathBuf),
    MiniPitch(String),
}

impl FromStr for EnvSpec {
    type Err = OrchestratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "rps" => Ok(Self::Rps),
            None if s == "minipitch" => Ok(Self::MiniPitch("1v1".into())),
            Some(("matrix", f)) if !f.is_empty() => Ok(Self::Matrix(f.into())),
            Some(("minipitch", c)) if !c.is_empty() => Ok(Self::MiniPitch(c.into())),
            _ => Err(OrchestratorError::Config(format!("unknown env {s:?}; expected rps, matrix:FILE or minipitch[:CFG]"))),
        }
    }
}

pub fn pitch_preset(name: &str) -> Option<PitchConfig> {
    Some(match name {
        "1v1" => PitchConfig::one_v_one(100),
        "3v3" => PitchConfig::default(),
        "5v5" => PitchConfig { n_per_team: 5, ..PitchConfig::default() },
        "academy" => PitchConfig { academy_mode: true, max_steps: 100, ..PitchConfig::default() },
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub kind: PipelineKind,
    pub env: String,
    pub generations: usize,
    pub seed: u64,
    pub episodes_per_pair: u64,
    pub metric: PayoffMetric,
    pub pfsp: PfspWeighting,
    /// Initial population. MiniPitch: `builtin`, `builtin:D`, `idle`,
    /// `random`, `shooter` or a policy file; matrix games: `pure:I`.
    /// Empty picks `builtin` or `pure:0`.
    pub initial: Vec<String>,
    /// League starting main agent; defaults to the first initial policy.
    pub main: Option<String>,
    /// Replays kept per simulated pair.
    pub keep_replays: usize,
    /// Overrides the env preset.
    pub pitch: Option<PitchConfig>,
    pub learner: LearnerConfig,
    pub reward: RewardConfig,
    pub dist: DistConfig,
    pub nash: NashConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kind: PipelineKind::Psro,
            env: "rps".into(),
            generations: 3,
            seed: 0,
            episodes_per_pair: 50,
            metric: PayoffMetric::GoalDifference,
            pfsp: PfspWeighting::Hard,
            initial: Vec::new(),
            main: None,
            keep_replays: 1,
            pitch: None,
            learner: LearnerConfig::default(),
            reward: RewardConfig::dense(),
            dist: DistConfig::default(),
            nash: NashConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, OrchestratorError> {
        toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config serialises")
    }

    pub fn env_spec(&self) -> Result<EnvSpec, OrchestratorError> {
        self.env.parse()
    }

    pub fn pitch_config(&self) -> Result<Option<PitchConfig>, OrchestratorError> {
        let EnvSpec::MiniPitch(name) = self.env_spec()? else {
            return Ok(None);
        };
        let mut config = match (&self.pitch, pitch_preset(&name)) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => p,
            (None, None) => {
                let text = fs::read_to_string(&name).map_err(|e| OrchestratorError::Config(format!("{name}: {e}")))?;
                toml::from_str(&text).map_err(|e| OrchestratorError::Config(format!("{name}: {e}")))?
            }
        };
        config.seed = self.seed;
        config.validate().map_err(|e| OrchestratorError::Config(e.to_string()))?;
        Ok(Some(config))
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        self.env_spec()?;
        if self.episodes_per_pair == 0 {
            return Err(OrchestratorError::Config("episodes_per_pair must be positive".into()));
        }
        self.learner.validate()?;
        self.reward.validate().map_err(|e| OrchestratorError::Config(e.to_string()))?;
        self.dist.validate()
    }
}

fn load_matrix(spec: &EnvSpec) -> Result<Option<MatrixGameF64>, OrchestratorError> {
    let game = match spec {
        EnvSpec::Rps => MatrixGameF64::rock_paper_scissors(),
        EnvSpec::Matrix(path) => {
            let text = fs::read_to_string(path).map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))?;
            MatrixGameF64::parse(&text).map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))?
        }
        EnvSpec::MiniPitch(_) => return Ok(None),
    };
    if !game.is_square() {
        return Err(OrchestratorError::Config("self-play needs a square payoff matrix".into()));
    }
    if game.is_antisymmetric() {
        Ok(Some(game))
    } else {
        Ok(Some(game.symmetrized().map_err(|e| OrchestratorError::Config(e.to_string()))?))
    }
}

/// Resolves an initial-population entry to a policy.
pub fn resolve_policy(name: &str, game: Option<&MatrixGameF64>) -> Result<Policy, OrchestratorError> {
    let bad = || OrchestratorError::Config(format!("unknown policy {name:?}"));
    if let Some(g) = game {
        let i: usize = name.strip_prefix("pure:").and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if i >= g.rows() {
            return Err(OrchestratorError::Config(format!("{name}: game has {} strategies", g.rows())));
        }
        return Ok(Policy::pure(name, g.rows(), i));
    }
    let kind = match name.split_once(':') {
        None if name == "builtin" => ScriptedKind::BuiltIn { difficulty: 1 },
        None if name == "idle" => ScriptedKind::Idle,
        None if name == "random" => ScriptedKind::Random,
        None if name == "shooter" => ScriptedKind::Shooter,
        Some(("builtin", d)) => ScriptedKind::BuiltIn { difficulty: d.parse().ok().filter(|d| *d <= 2).ok_or_else(bad)? },
        _ => {
            let text = fs::read_to_string(name).map_err(|_| bad())?;
            return Ok(Policy::from_artifact(&text)?);
        }
    };
    Ok(Policy::scripted(name, kind))
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub population: Population,
    pub report: serde_json::Value,
    /// Exploitability in the underlying matrix game of the final Nash
    /// mixture over the population; matrix envs only.
    pub game_exploitability: Option<f64>,
    pub wall_clock_secs: f64,
}

/// The population's Nash mixture mapped back to a strategy of the game.
pub fn population_strategy(pop: &Population, nash: &[(String, f64)], n: usize) -> Result<MixedStrategy<f64>, OrchestratorError> {
    let mut mix = vec![0.0; n];
    for (id, w) in nash {
        let member = pop.get(id).ok_or_else(|| OrchestratorError::Population(format!("unknown {id}")))?;
        let PolicyKind::MatrixMixed(p) = &member.policy.kind else {
            return Err(OrchestratorError::Population(format!("{id} is not a matrix strategy")));
        };
        for (acc, x) in mix.iter_mut().zip(p) {
            *acc += w * x;
        }
    }
    Ok(MixedStrategy::from_weights(&mix)?)
}

struct Plumbing {
    oracle: Box<dyn BestResponseOracle>,
    arena: Box<dyn Arena>,
    game: Option<MatrixGameF64>,
}

fn plumbing(config: &PipelineConfig) -> Result<Plumbing, OrchestratorError> {
    let spec = config.env_spec()?;
    if let Some(game) = load_matrix(&spec)? {
        return Ok(Plumbing {
            oracle: Box::new(ExactOracle { game: game.clone() }),
            arena: Box::new(MatrixArena { game: game.clone() }),
            game: Some(game),
        });
    }
    let pitch = config.pitch_config()?.expect("minipitch env");
    Ok(Plumbing {
        oracle: Box::new(TabularOracle {
            config: pitch.clone(),
            learner: config.learner.clone(),
            reward: config.reward.clone(),
            dist: config.dist.clone(),
        }),
        arena: Box::new(PitchArena { config: pitch, keep_replays: config.keep_replays }),
        game: None,
    })
}

/// Runs the configured pipeline and returns the grown population.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary, OrchestratorError> {
    config.validate()?;
    let start = Instant::now();
    let Plumbing { mut oracle, mut arena, game } = plumbing(config)?;
    let initial = if config.initial.is_empty() {
        vec![if game.is_some() { "pure:0".to_string() } else { "builtin".to_string() }]
    } else {
        config.initial.clone()
    };
    let mut pop = Population::new();
    for name in &initial {
        pop.add(resolve_policy(name, game.as_ref())?, MemberRole::BuiltIn)?;
    }
    let mut game_exploitability = None;
    let report = match config.kind {
        PipelineKind::Psro => {
            let pc = PsroConfig {
                generations: config.generations,
                episodes_per_pair: config.episodes_per_pair,
                metric: config.metric,
                nash: config.nash,
                warm_start: true,
                seed: config.seed,
            };
            let r = run_psro(&mut pop, oracle.as_mut(), arena.as_mut(), &pc)?;
            if let Some(g) = &game {
                let s = population_strategy(&pop, &r.final_nash, g.rows())?;
                game_exploitability = Some(exploitability(g.payoff(), &s, &s)?);
            }
            serde_json::to_value(r).expect("report serialises")
        }
        PipelineKind::League => {
            let main = match &config.main {
                Some(m) => resolve_policy(m, game.as_ref())?,
                None => {
                    let mut p = (*pop.members[0].policy).clone();
                    p.id = format!("{}-start", p.id);
                    p
                }
            };
            let lc = LeagueConfig {
                generations: config.generations,
                episodes_per_pair: config.episodes_per_pair,
                pfsp: config.pfsp,
                seed: config.seed,
            };
            serde_json::to_value(run_league(&mut pop, main, oracle.as_mut(), arena.as_mut(), &lc)?).expect("report serialises")
        }
        PipelineKind::Br => {
            pop.fill_payoff(arena.as_mut(), config.episodes_per_pair, config.seed)?;
            let n = pop.len() as f64;
            let opponents: Vec<(Arc<Policy>, f64)> = pop.members.iter().map(|m| (m.policy.clone(), 1.0 / n)).collect();
            let (policy, r): (Policy, OracleReport) = oracle.best_response(&opponents, None, "br-1", config.seed)?;
            pop.add(policy, MemberRole::BestResponse)?;
            pop.simulate_against_all(arena.as_mut(), "br-1", config.episodes_per_pair, config.seed)?;
            serde_json::to_value(r).expect("report serialises")
        }
    };
    Ok(RunSummary { population: pop, report, game_exploitability, wall_clock_secs: start.elapsed().as_secs_f64() })
}

fn safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn metrics_csv(report: &serde_json::Value) -> String {
    let mut out = String::from("policy,env_steps,win_rate,seconds\n");
    let mut emit = |id: &str, r: &serde_json::Value| {
        let Ok(r) = serde_json::from_value::<OracleReport>(r.clone()) else { return };
        for (steps, wr, secs) in r.metrics {
            writeln!(out, "{id},{steps},{wr},{secs}").unwrap();
        }
    };
    if let Some(gens) = report.get("generations").and_then(|g| g.as_array()) {
        for g in gens {
            if let Some(id) = g.get("new_id").and_then(|v| v.as_str()) {
                emit(id, &g["oracle"]);
            }
            if let Some(id) = g.get("main_id").and_then(|v| v.as_str()) {
                emit(id, &g["main"]);
            }
            if let Some(id) = g.get("exploiter_id").and_then(|v| v.as_str()) {
                emit(id, &g["exploiter"]);
            }
        }
    } else {
        emit("br-1", report);
    }
    out
}

fn nash_csv(report: &serde_json::Value) -> Option<String> {
    let gens = report.get("generations")?.as_array()?;
    let mut out = String::from("generation,policy,probability\n");
    for g in gens {
        let n = g.get("generation")?.as_u64()?;
        for pair in g.get("nash")?.as_array()? {
            writeln!(out, "{n},{},{}", pair[0].as_str()?, pair[1]).unwrap();
        }
    }
    for pair in report.get("final_nash")?.as_array()? {
        writeln!(out, "final,{},{}", pair[0].as_str()?, pair[1]).unwrap();
    }
    Some(out)
}

fn opponents_csv(report: &serde_json::Value) -> Option<String> {
    let gens = report.get("generations")?.as_array()?;
    let mut out = String::from("learner,opponent,episodes\n");
    for g in gens {
        for (id_key, rep_key) in [("main_id", "main"), ("exploiter_id", "exploiter")] {
            let id = g.get(id_key)?.as_str()?;
            for (opp, n) in g.get(rep_key)?.get("opponents")?.as_object()? {
                writeln!(out, "{id},{opp},{n}").unwrap();
            }
        }
    }
    Some(out)
}

/// Writes the run directory: `config.toml`, `manifest.json`,
/// `policies/`, payoff, Elo, Nash and metrics CSVs and `replays/`.
pub fn write_run_dir(dir: &Path, config: &PipelineConfig, summary: &RunSummary) -> Result<(), OrchestratorError> {
    let pop = &summary.population;
    fs::create_dir_all(dir.join("policies"))?;
    fs::create_dir_all(dir.join("replays"))?;
    fs::write(dir.join("config.toml"), config.to_toml())?;
    let mut artifacts = vec!["config.toml", "payoff_goal_diff.csv", "payoff_win_rate.csv", "elo.csv", "elo_history.csv", "metrics.csv"];
    for m in &pop.members {
        fs::write(dir.join("policies").join(format!("{}.policy", safe(&m.id))), m.policy.to_artifact())?;
    }
    fs::write(dir.join("payoff_goal_diff.csv"), pop.payoff.to_csv(PayoffMetric::GoalDifference))?;
    fs::write(dir.join("payoff_win_rate.csv"), pop.payoff.to_csv(PayoffMetric::WinRate))?;
    let elo = pop.elo(config.seed);
    fs::write(dir.join("elo.csv"), elo.ratings_csv())?;
    fs::write(dir.join("elo_history.csv"), elo.history_csv())?;
    fs::write(dir.join("metrics.csv"), metrics_csv(&summary.report))?;
    if let Some(csv) = nash_csv(&summary.report) {
        fs::write(dir.join("nash.csv"), csv)?;
        artifacts.push("nash.csv");
    }
    if let Some(csv) = opponents_csv(&summary.report) {
        fs::write(dir.join("opponents.csv"), csv)?;
        artifacts.push("opponents.csv");
    }
    for (k, (a, b, replay)) in pop.replays.iter().enumerate() {
        let mut f = std::io::BufWriter::new(fs::File::create(dir.join("replays").join(format!("{k:04}_{}_vs_{}.jsonl", safe(a), safe(b))))?);
        write_replay(replay, &mut f)?;
    }
    let manifest = serde_json::json!({
        "run_id": format!("{:?}-{}-{:016x}", config.kind, safe(&config.env), crate::rng::mix(&[config.seed, pop.len() as u64])).to_lowercase(),
        "kind": config.kind,
        "env": config.env,
        "seed": config.seed,
        "members": pop.manifest(),
        "artifacts": artifacts,
        "game_exploitability": summary.game_exploitability,
        "wall_clock_secs": summary.wall_clock_secs,
        "report": summary.report,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("manifest serialises"))?;
    Ok(())
}

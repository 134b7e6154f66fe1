use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use pitchleague::analysis::{decompose, detect_events, read_replay, write_replay, EventCounts};
use pitchleague::game::pitch::PitchConfig;
use pitchleague::learner::Policy;
use pitchleague::orchestrator::evaluate_with_replays;
use pitchleague::rng::mix;
use serde::{Deserialize, Serialize};

use crate::state::{Event, MatchRecord, Pairing, RankEntry, RoundResult, State, Submission, SubmissionStatus};
use crate::swiss::swiss_pairings;
use crate::RankingError;

/// A named environment configuration submissions are ranked in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub key: String,
    pub config: PitchConfig,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub scenarios: Vec<Scenario>,
    /// Episodes per placement match.
    pub placement_episodes: u64,
    /// Events between snapshots.
    pub snapshot_every: u64,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            scenarios: vec![
                Scenario { key: "1v1".into(), config: PitchConfig::one_v_one(100) },
                Scenario { key: "3v3".into(), config: PitchConfig { max_steps: 200, ..PitchConfig::default() } },
            ],
            placement_episodes: 10,
            snapshot_every: 50,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    state: State,
}

struct Inner {
    state: State,
    log: File,
    since_snapshot: u64,
}

/// Submissions, Swiss rounds and rankings backed by an append-only event
/// log (`log.jsonl`) and a snapshot (`snapshot.json`) in the data
/// directory. Artifacts and replays live next to them.
pub struct RankingService {
    config: ServiceConfig,
    inner: Mutex<Inner>,
}

const LOG: &str = "log.jsonl";
const SNAPSHOT: &str = "snapshot.json";

/// Reads every event of a log file.
pub fn read_log(path: &Path) -> Result<Vec<Event>, RankingError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut events = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|e| RankingError::Corrupt(format!("{}:{}: {e}", path.display(), n + 1)))?);
    }
    Ok(events)
}

/// Folds the whole log of a data directory, ignoring any snapshot.
pub fn rebuild_from_log(data_dir: &Path) -> Result<State, RankingError> {
    Ok(State::from_events(&read_log(&data_dir.join(LOG))?))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl RankingService {
    /// Opens or creates the data directory, restoring state from the
    /// snapshot plus the log entries written after it.
    pub fn open(config: ServiceConfig) -> Result<Self, RankingError> {
        let dir = &config.data_dir;
        for sub in ["artifacts", "replays"] {
            fs::create_dir_all(dir.join(sub))?;
        }
        let events = read_log(&dir.join(LOG))?;
        let mut state = match fs::read_to_string(dir.join(SNAPSHOT)) {
            Ok(text) => {
                let snap: Snapshot = serde_json::from_str(&text).map_err(|e| RankingError::Corrupt(format!("snapshot: {e}")))?;
                if snap.state.events > events.len() as u64 {
                    return Err(RankingError::Corrupt("snapshot is ahead of the log".into()));
                }
                snap.state
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => State::default(),
            Err(e) => return Err(e.into()),
        };
        for e in &events[state.events as usize..] {
            state.apply(e);
        }
        let log = OpenOptions::new().create(true).append(true).open(dir.join(LOG))?;
        log::info!("ranking state restored: {} events", state.events);
        Ok(Self { config, inner: Mutex::new(Inner { state, log, since_snapshot: 0 }) })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn state(&self) -> State {
        self.lock().state.clone()
    }

    fn scenario(&self, key: &str) -> Result<&Scenario, RankingError> {
        self.config.scenarios.iter().find(|s| s.key == key).ok_or_else(|| RankingError::UnknownScenario(key.to_string()))
    }

    fn append(&self, inner: &mut Inner, event: Event) -> Result<(), RankingError> {
        let mut line = serde_json::to_string(&event).expect("event serialises");
        line.push('\n');
        inner.log.write_all(line.as_bytes())?;
        inner.log.sync_data()?;
        inner.state.apply(&event);
        inner.since_snapshot += 1;
        if inner.since_snapshot >= self.config.snapshot_every {
            self.write_snapshot(inner)?;
        }
        Ok(())
    }

    fn write_snapshot(&self, inner: &mut Inner) -> Result<(), RankingError> {
        let tmp = self.config.data_dir.join("snapshot.json.tmp");
        let snap = Snapshot { state: inner.state.clone() };
        fs::write(&tmp, serde_json::to_vec(&snap).expect("snapshot serialises"))?;
        fs::rename(&tmp, self.config.data_dir.join(SNAPSHOT))?;
        inner.since_snapshot = 0;
        Ok(())
    }

    pub fn snapshot(&self) -> Result<(), RankingError> {
        let mut inner = self.lock();
        self.write_snapshot(&mut inner)
    }

    /// Validates and stores an artifact; placement runs later through
    /// [`RankingService::place`].
    pub fn submit(&self, user: &str, scenario: &str, artifact: &str) -> Result<Submission, RankingError> {
        let sc = self.scenario(scenario)?;
        let policy = Policy::from_artifact(artifact).map_err(|e| RankingError::Artifact(e.to_string()))?;
        if let Some(fp) = &policy.env_fingerprint {
            let want = sc.config.fingerprint();
            if *fp != want {
                return Err(RankingError::Fingerprint { scenario: scenario.to_string(), expected: want, got: fp.clone() });
            }
        }
        if matches!(policy.kind, pitchleague::learner::PolicyKind::MatrixMixed(_)) {
            return Err(RankingError::Artifact("matrix-game strategies cannot play MiniPitch".into()));
        }
        let mut inner = self.lock();
        let id = inner.state.next_submission_id();
        fs::write(self.config.data_dir.join("artifacts").join(format!("{id}.policy")), artifact)?;
        let sub = Submission {
            id,
            user: user.to_string(),
            scenario: scenario.to_string(),
            policy_id: policy.id,
            received_ms: now_ms(),
            status: SubmissionStatus::Pending,
        };
        self.append(&mut inner, Event::Submitted(sub.clone()))?;
        Ok(sub)
    }

    fn load_policy(&self, id: &str) -> Result<Arc<Policy>, RankingError> {
        let text = fs::read_to_string(self.config.data_dir.join("artifacts").join(format!("{id}.policy")))?;
        let mut p = Policy::from_artifact(&text).map_err(|e| RankingError::Artifact(e.to_string()))?;
        p.id = id.to_string();
        Ok(Arc::new(p))
    }

    fn play(&self, inner: &mut Inner, scenario: &Scenario, a: &str, b: &str, episodes: u64, round: Option<u32>) -> Result<MatchRecord, RankingError> {
        let id = inner.state.next_match_id();
        let words: Vec<u64> = scenario.key.bytes().map(u64::from).chain([inner.state.matches.len() as u64]).collect();
        let seed = mix(&words);
        let (pa, pb) = (self.load_policy(a)?, self.load_policy(b)?);
        let (r, replays) = evaluate_with_replays(&pa, &pb, episodes, &scenario.config, seed, 1).map_err(|e| RankingError::Simulation(e.to_string()))?;
        let mut f = std::io::BufWriter::new(File::create(self.replay_path(&id))?);
        write_replay(&replays[0], &mut f)?;
        f.flush()?;
        let record = MatchRecord {
            id,
            scenario: scenario.key.clone(),
            round,
            a: a.to_string(),
            b: b.to_string(),
            episodes,
            wins: r.outcome.wins,
            draws: r.outcome.draws,
            losses: r.outcome.losses,
            goal_diff: r.goal_diffs.iter().sum(),
            seed,
        };
        self.append(inner, Event::Match(record.clone()))?;
        Ok(record)
    }

    /// Placement matches against the current top three of the scenario;
    /// they move Elo but not the round score. No-op unless pending.
    pub fn place(&self, id: &str) -> Result<Vec<MatchRecord>, RankingError> {
        let mut inner = self.lock();
        self.place_locked(&mut inner, id)
    }

    fn place_locked(&self, inner: &mut Inner, id: &str) -> Result<Vec<MatchRecord>, RankingError> {
        let sub = inner.state.submissions.get(id).cloned().ok_or_else(|| RankingError::NotFound(format!("submission {id}")))?;
        if sub.status != SubmissionStatus::Pending {
            return Ok(Vec::new());
        }
        let scenario = self.scenario(&sub.scenario)?.clone();
        let top: Vec<String> = inner
            .state
            .ranking(&sub.scenario)
            .into_iter()
            .filter(|e| e.status == SubmissionStatus::Active && e.id != id)
            .take(3)
            .map(|e| e.id)
            .collect();
        let mut out = Vec::new();
        for other in top {
            out.push(self.play(inner, &scenario, id, &other, self.config.placement_episodes, None)?);
        }
        self.append(inner, Event::Placed { id: id.to_string() })?;
        Ok(out)
    }

    /// Places pending submissions, pairs the scenario Swiss-style and plays
    /// `episodes` side-swapped episodes per pairing.
    pub fn run_round(&self, scenario: &str, episodes: u64, weight: f64) -> Result<RoundResult, RankingError> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(RankingError::BadRequest("round weight must be positive".into()));
        }
        if episodes == 0 {
            return Err(RankingError::BadRequest("episodes per pairing must be positive".into()));
        }
        let sc = self.scenario(scenario)?.clone();
        let mut inner = self.lock();
        let ranking = inner.state.ranking(scenario);
        if ranking.len() < 2 {
            return Err(RankingError::TooFew(ranking.len()));
        }
        for e in &ranking {
            self.place_locked(&mut inner, &e.id)?;
        }
        let order: Vec<String> = inner.state.ranking(scenario).into_iter().map(|e| e.id).collect();
        let table = &inner.state.standings[scenario];
        let met = table.iter().map(|(k, s)| (k.clone(), s.opponents.clone())).collect();
        let byes: BTreeMap<String, u32> = table.iter().map(|(k, s)| (k.clone(), s.byes)).collect();
        let (pairs, bye) = swiss_pairings(&order, &met, &byes);
        let round = inner.state.next_round(scenario);
        let mut pairings = Vec::new();
        let mut round_scores = BTreeMap::new();
        for (a, b) in pairs {
            let m = self.play(&mut inner, &sc, &a, &b, episodes, Some(round))?;
            round_scores.insert(a.clone(), m.score_a());
            round_scores.insert(b.clone(), 1.0 - m.score_a());
            pairings.push(Pairing { a, b, match_id: m.id });
        }
        if let Some(b) = &bye {
            round_scores.insert(b.clone(), 0.5);
        }
        let result = RoundResult { scenario: scenario.to_string(), round, weight, pairings, bye, round_scores };
        self.append(&mut inner, Event::Round(result.clone()))?;
        Ok(result)
    }

    pub fn ranking(&self, scenario: &str) -> Result<Vec<RankEntry>, RankingError> {
        self.scenario(scenario)?;
        Ok(self.lock().state.ranking(scenario))
    }

    pub fn submission(&self, id: &str) -> Result<Submission, RankingError> {
        self.lock().state.submissions.get(id).cloned().ok_or_else(|| RankingError::NotFound(format!("submission {id}")))
    }

    fn replay_path(&self, match_id: &str) -> PathBuf {
        self.config.data_dir.join("replays").join(format!("{match_id}.jsonl"))
    }

    pub fn match_record(&self, match_id: &str) -> Result<MatchRecord, RankingError> {
        self.lock().state.matches.get(match_id).cloned().ok_or_else(|| RankingError::NotFound(format!("match {match_id}")))
    }

    /// Stored replay bytes of the match's first episode.
    pub fn replay(&self, match_id: &str) -> Result<Vec<u8>, RankingError> {
        self.match_record(match_id)?;
        Ok(fs::read(self.replay_path(match_id))?)
    }

    pub fn stats(&self, match_id: &str) -> Result<MatchStats, RankingError> {
        let record = self.match_record(match_id)?;
        let replay = read_replay(BufReader::new(File::open(self.replay_path(match_id))?)).map_err(|e| RankingError::Corrupt(e.to_string()))?;
        let events = detect_events(&decompose(&replay).map_err(|e| RankingError::Corrupt(e.to_string()))?);
        let score = replay.steps.len().checked_sub(1).map_or((0, 0), |k| replay.score_after(k));
        Ok(MatchStats { record, replay_score: score, replay_events: events })
    }
}

/// The match record plus analytics of its stored replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchStats {
    pub record: MatchRecord,
    /// Final (left, right) score of the replayed episode.
    pub replay_score: (u32, u32),
    pub replay_events: EventCounts,
}

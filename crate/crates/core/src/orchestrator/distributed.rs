use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{BufferConfig, BufferStats, EpisodeBuffer, PolicyServer};
use super::OrchestratorError;
use crate::game::pitch::PitchConfig;
use crate::learner::{
    initial_table, play_episode, random_side, Actor, EpisodeSettings, LearnerConfig, Policy, PolicyKind, QLearner,
    TabularPolicy, TrainReport,
};
use crate::rewards::RewardConfig;
use crate::rng::{mix, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Single thread, no buffer.
    #[default]
    Serial,
    /// Workers and trainer alternate in lockstep rounds.
    Sync,
    /// Workers never wait; the trainer reuses buffered episodes.
    Async,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistConfig {
    pub mode: Mode,
    pub workers: usize,
    pub buffer: BufferConfig,
    /// Injected delay per environment step, in milliseconds.
    pub step_latency_ms: f64,
    /// Stop after this many samples (agent transitions) were trained on.
    pub sample_target: Option<u64>,
    pub starvation_timeout_secs: f64,
    /// Async: episodes consumed between publications.
    pub publish_every: usize,
}

impl Default for DistConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Serial,
            workers: 4,
            buffer: BufferConfig::default(),
            step_latency_ms: 0.0,
            sample_target: None,
            starvation_timeout_secs: 60.0,
            publish_every: 8,
        }
    }
}

impl DistConfig {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: &str| Err(OrchestratorError::Config(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.buffer.capacity == 0 || self.buffer.reuse == 0 {
            return bad("buffer capacity and reuse must be positive");
        }
        if !(self.step_latency_ms >= 0.0 && self.step_latency_ms.is_finite()) {
            return bad("step latency must be a non-negative number");
        }
        if self.publish_every == 0 {
            return bad("publish_every must be positive");
        }
        if self.mode == Mode::Sync && self.buffer.capacity < self.workers {
            return bad("sync mode needs buffer capacity for one episode per worker");
        }
        Ok(())
    }

    fn latency(&self) -> Option<Duration> {
        (self.step_latency_ms > 0.0).then(|| Duration::from_secs_f64(self.step_latency_ms / 1000.0))
    }
}

/// What rollout workers play.
#[derive(Debug, Clone)]
pub struct RolloutTask {
    pub config: PitchConfig,
    /// Opponent distribution; weights need not be normalised.
    pub opponents: Vec<(Arc<Policy>, f64)>,
    /// Episodes per worker; `None` runs until the buffer closes.
    pub episode_quota: Option<u64>,
    pub seed: u64,
    pub reward: RewardConfig,
    pub step_latency: Option<Duration>,
    /// Wait for a newer policy after every episode.
    pub lockstep: bool,
}

pub fn sample_opponent(opponents: &[(Arc<Policy>, f64)], rng: &mut impl Rng) -> Arc<Policy> {
    let total: f64 = opponents.iter().map(|(_, w)| w.max(0.0)).sum();
    let mut u = rng.random::<f64>() * total;
    for (p, w) in opponents {
        let w = w.max(0.0);
        if u < w {
            return p.clone();
        }
        u -= w;
    }
    opponents.iter().rev().find(|(_, w)| *w > 0.0).unwrap_or(&opponents[0]).0.clone()
}

/// Plays episodes with the latest published policy and pushes them to the
/// buffer. Every episode depends only on (task seed, worker, ordinal) and
/// the policy it was played with. Returns the number pushed.
pub fn run_rollout_worker(
    task: &RolloutTask,
    worker: usize,
    server: &PolicyServer,
    buffer: &EpisodeBuffer,
    stop: &AtomicBool,
) -> Result<u64, OrchestratorError> {
    if task.opponents.is_empty() {
        return Err(OrchestratorError::Config("empty opponent distribution".into()));
    }
    let mut ordinal = 0u64;
    while task.episode_quota.is_none_or(|q| ordinal < q) && !stop.load(Ordering::Relaxed) {
        let mut rng = seeded(&[task.seed, worker as u64, ordinal]);
        let opponent = sample_opponent(&task.opponents, &mut rng);
        let published = server.latest();
        let seed = mix(&[task.seed, worker as u64, ordinal]);
        let settings = EpisodeSettings {
            config: task.config.clone(),
            learner_team: random_side(&mut rng),
            seed,
            reward: task.reward.clone(),
            step_latency: task.step_latency,
        };
        let mut me = Actor::new(published.policy.clone(), &task.config, published.epsilon, seed)?;
        let mut them = Actor::new(opponent, &task.config, 0.0, seed ^ 1)?;
        let (mut episode, _) = play_episode(&mut me, &mut them, &settings)?;
        episode.policy_version = published.version;
        if !buffer.push(episode) {
            break;
        }
        ordinal += 1;
        if task.lockstep && !server.wait_newer(published.version) {
            break;
        }
    }
    Ok(ordinal)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistReport {
    pub train: TrainReport,
    /// Agent transitions trained on, counting reuse.
    pub samples_consumed: u64,
    pub episodes_consumed: u64,
    pub publications: u64,
    pub buffer: BufferStats,
    pub wall_clock_secs: f64,
}

/// Best-response training with parallel rollout workers feeding a trainer
/// through the episode buffer. Serial mode falls back to the single-thread
/// trainer.
#[allow(clippy::too_many_arguments)]
pub fn train_distributed(
    config: &PitchConfig,
    opponents: &[(Arc<Policy>, f64)],
    lc: &LearnerConfig,
    reward: &RewardConfig,
    prior: Option<&Policy>,
    id: &str,
    dist: &DistConfig,
) -> Result<(Policy, DistReport), OrchestratorError> {
    lc.validate()?;
    dist.validate()?;
    let start = Instant::now();
    if dist.mode == Mode::Serial {
        let mut sample = |rng: &mut rand_chacha::ChaCha8Rng| sample_opponent(opponents, rng);
        let (p, train) = crate::learner::train_best_response(config, &mut sample, lc, reward, prior, id)?;
        let samples = train.env_steps * config.controlled().len() as u64;
        let report = DistReport {
            samples_consumed: samples,
            episodes_consumed: train.episodes,
            train,
            wall_clock_secs: start.elapsed().as_secs_f64(),
            ..DistReport::default()
        };
        return Ok((p, report));
    }
    if lc.step_budget == 0 && dist.sample_target.is_none_or(|t| t == 0) {
        return match prior {
            Some(p) => Ok((p.clone(), DistReport::default())),
            None => Err(OrchestratorError::Config("nothing to train: zero budget and no prior".into())),
        };
    }
    let agents = config.controlled().len();
    let mut table = initial_table(prior, lc, agents)?;
    let version = prior.map_or(1, |p| p.version + 1);
    let snapshot = |t: &TabularPolicy| {
        Arc::new(Policy {
            id: id.to_string(),
            version,
            kind: PolicyKind::Tabular(t.clone()),
            env_fingerprint: Some(config.fingerprint()),
        })
    };
    let server = PolicyServer::new(snapshot(&table), lc.epsilon(0));
    let buffer = EpisodeBuffer::new(dist.buffer);
    let stop = AtomicBool::new(false);
    let task = RolloutTask {
        config: config.clone(),
        opponents: opponents.to_vec(),
        episode_quota: None,
        seed: lc.seed,
        reward: reward.clone(),
        step_latency: dist.latency(),
        lockstep: dist.mode == Mode::Sync,
    };
    let timeout = Duration::from_secs_f64(dist.starvation_timeout_secs);
    let mut report = DistReport::default();
    let mut learner = QLearner::new(lc.learning_rate, lc.gamma);
    let mut recent = std::collections::VecDeque::new();
    let mut seen = HashSet::new();

    let outcome = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..dist.workers)
            .map(|w| {
                let (task, server, buffer, stop) = (&task, &server, &buffer, &stop);
                scope.spawn(move || run_rollout_worker(task, w, server, buffer, stop))
            })
            .collect();
        let result = (|| -> Result<(), OrchestratorError> {
            let mut since_publish = 0;
            loop {
                let current = server.version();
                let batch = match dist.mode {
                    Mode::Sync => buffer.take_batch(dist.workers, current, timeout).map(|mut b| {
                        b.sort_by_key(|e| e.seed);
                        b
                    }),
                    _ => buffer.take(current, timeout).map(|e| vec![e]),
                }
                .ok_or(OrchestratorError::Starvation(timeout))?;
                let mut done = false;
                for ep in batch {
                    learner.update_episode(&mut table, &ep);
                    report.samples_consumed += ep.samples() as u64;
                    report.episodes_consumed += 1;
                    if seen.insert(ep.seed) {
                        report.train.env_steps += ep.steps as u64;
                        report.train.episodes += 1;
                        *report.train.opponents.entry(ep.opponent_id.clone()).or_default() += 1;
                        recent.push_back(ep.won());
                        if recent.len() > lc.window {
                            recent.pop_front();
                        }
                        report.train.win_rate = recent.iter().filter(|&&w| w).count() as f64 / recent.len() as f64;
                        report.train.metrics.push((report.train.env_steps, report.train.win_rate, start.elapsed().as_secs_f64()));
                    }
                    let budget_hit = lc.step_budget > 0 && report.train.env_steps >= lc.step_budget;
                    let samples_hit = dist.sample_target.is_some_and(|t| report.samples_consumed >= t);
                    let win_hit = recent.len() == lc.window && report.train.win_rate >= lc.target_win_rate;
                    if budget_hit || samples_hit || win_hit {
                        report.train.stopped_early = win_hit && !budget_hit && !samples_hit;
                        done = true;
                        break;
                    }
                }
                if done {
                    return Ok(());
                }
                since_publish += 1;
                if dist.mode == Mode::Sync || since_publish >= dist.publish_every {
                    since_publish = 0;
                    server.publish(snapshot(&table), lc.epsilon(report.train.env_steps));
                    report.publications += 1;
                }
            }
        })();
        stop.store(true, Ordering::Relaxed);
        buffer.close();
        server.close();
        let mut worker_error = None;
        for h in handles {
            match h.join() {
                Ok(Ok(_)) => {}
                Ok(Err(e)) => worker_error = Some(e),
                Err(_) => worker_error = Some(OrchestratorError::Config("rollout worker panicked".into())),
            }
        }
        result.and(worker_error.map_or(Ok(()), Err))
    });
    outcome?;
    report.train.updates = learner.updates;
    report.buffer = buffer.stats();
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok((Arc::unwrap_or_clone(snapshot(&table)), report))
}

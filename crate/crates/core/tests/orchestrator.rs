use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use pitchleague::game::pitch::PitchConfig;
use pitchleague::learner::{LearnerConfig, Policy, ScriptedKind};
use pitchleague::orchestrator::{
    evaluate, run_rollout_worker, train_distributed, BufferConfig, DistConfig, EpisodeBuffer, Mode, PolicyServer,
    RolloutTask,
};
use pitchleague::rewards::RewardConfig;

fn scripted(id: &str, kind: ScriptedKind) -> Arc<Policy> {
    Arc::new(Policy::scripted(id, kind))
}

fn task(opponents: Vec<(Arc<Policy>, f64)>, quota: u64) -> RolloutTask {
    RolloutTask {
        config: PitchConfig::one_v_one(30),
        opponents,
        episode_quota: Some(quota),
        seed: 9,
        reward: RewardConfig::dense(),
        step_latency: None,
        lockstep: false,
    }
}

fn drain(buffer: &EpisodeBuffer) -> Vec<Arc<pitchleague::learner::Episode>> {
    let mut out = Vec::new();
    while let Some(e) = buffer.take(0, Duration::from_millis(10)) {
        out.push(e);
    }
    out
}

#[test]
fn worker_quota_and_degenerate_distribution() {
    let t = task(vec![(scripted("builtin", ScriptedKind::BuiltIn { difficulty: 1 }), 1.0), (scripted("idle", ScriptedKind::Idle), 0.0)], 10);
    let server = PolicyServer::new(scripted("me", ScriptedKind::Random), 0.0);
    let buffer = EpisodeBuffer::new(BufferConfig { capacity: 64, reuse: 1, staleness: 4 });
    let n = run_rollout_worker(&t, 0, &server, &buffer, &AtomicBool::new(false)).unwrap();
    assert_eq!(n, 10);
    let eps = drain(&buffer);
    assert_eq!(eps.len(), 10);
    assert!(eps.iter().all(|e| e.opponent_id == "builtin"));
}

#[test]
fn workers_are_deterministic() {
    let t = task(vec![(scripted("a", ScriptedKind::Random), 1.0), (scripted("b", ScriptedKind::Shooter), 1.0)], 4);
    let run = || {
        let server = PolicyServer::new(scripted("me", ScriptedKind::Random), 0.0);
        let buffer = EpisodeBuffer::new(BufferConfig { capacity: 64, reuse: 1, staleness: 4 });
        run_rollout_worker(&t, 3, &server, &buffer, &AtomicBool::new(false)).unwrap();
        drain(&buffer).into_iter().map(|e| (*e).clone()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

fn learner(budget: u64) -> LearnerConfig {
    LearnerConfig { step_budget: budget, seed: 4, ..LearnerConfig::default() }
}

#[test]
fn sync_updates_once_per_episode() {
    let config = PitchConfig::one_v_one(40);
    let opp = vec![(scripted("idle", ScriptedKind::Idle), 1.0)];
    let dist = DistConfig { mode: Mode::Sync, workers: 3, ..DistConfig::default() };
    let (p, r) = train_distributed(&config, &opp, &learner(2_000), &RewardConfig::dense(), None, "br", &dist).unwrap();
    assert_eq!(p.version, 1);
    assert!(r.buffer.uses_per_episode.iter().all(|&u| u <= 1));
    assert_eq!(r.episodes_consumed, r.train.episodes);
    // One lockstep batch per publication, the final batch unpublished.
    assert_eq!(r.publications + 1, r.episodes_consumed.div_ceil(3));
}

#[test]
fn async_respects_reuse_cap() {
    let config = PitchConfig::one_v_one(40);
    let opp = vec![(scripted("idle", ScriptedKind::Idle), 1.0)];
    let dist = DistConfig {
        mode: Mode::Async,
        workers: 4,
        step_latency_ms: 0.2,
        buffer: BufferConfig { capacity: 64, reuse: 2, staleness: 4 },
        ..DistConfig::default()
    };
    let (_, r) = train_distributed(&config, &opp, &learner(4_000), &RewardConfig::dense(), None, "br", &dist).unwrap();
    assert!(r.buffer.uses_per_episode.iter().all(|&u| u <= 2));
    assert_eq!(r.buffer.uses, r.episodes_consumed);
    assert!(r.episodes_consumed > r.train.episodes);
}

#[test]
fn zero_budget_returns_prior() {
    let config = PitchConfig::one_v_one(40);
    let opp = vec![(scripted("idle", ScriptedKind::Idle), 1.0)];
    let prior = Policy::scripted("p", ScriptedKind::Shooter);
    for mode in [Mode::Serial, Mode::Sync, Mode::Async] {
        let dist = DistConfig { mode, ..DistConfig::default() };
        let (p, _) = train_distributed(&config, &opp, &learner(0), &RewardConfig::dense(), Some(&prior), "x", &dist).unwrap();
        assert_eq!(p, prior);
    }
}

#[test]
fn evaluation_contract() {
    let config = PitchConfig::one_v_one(60);
    let shooter = scripted("shooter", ScriptedKind::Shooter);
    let idle = scripted("idle", ScriptedKind::Idle);
    let r = evaluate(&shooter, &idle, 10, &config, 1).unwrap();
    assert_eq!(r.win_rate, 1.0);
    let b = scripted("b", ScriptedKind::BuiltIn { difficulty: 2 });
    let r = evaluate(&b, &b, 20, &config, 2).unwrap();
    assert_eq!(r.mean_goal_diff, 0.0);
    assert!((r.win_rate + r.draw_rate + r.loss_rate - 1.0).abs() < 1e-12);
    assert!(evaluate(&b, &b, 0, &config, 2).is_err());
}

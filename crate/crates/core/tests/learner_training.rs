use std::sync::Arc;

use pitchleague::game::pitch::PitchConfig;
use pitchleague::game::Team;
use pitchleague::learner::{play_episode, train_best_response, Actor, EpisodeSettings, LearnerConfig, Policy, ScriptedKind};
use pitchleague::rewards::RewardConfig;
use rand_chacha::ChaCha8Rng;

fn greedy_win_rate(config: &PitchConfig, a: &Policy, b: &Policy, episodes: u64) -> f64 {
    let mut wins = 0;
    for e in 0..episodes {
        let team = if e % 2 == 0 { Team::Left } else { Team::Right };
        let mut x = Actor::new(Arc::new(a.clone()), config, 0.0, e).unwrap();
        let mut y = Actor::new(Arc::new(b.clone()), config, 0.0, e + 1).unwrap();
        let s = EpisodeSettings { config: config.clone(), learner_team: team, seed: 10_000 + e, reward: RewardConfig::sparse(), step_latency: None };
        let (ep, _) = play_episode(&mut x, &mut y, &s).unwrap();
        wins += u64::from(ep.won());
    }
    wins as f64 / episodes as f64
}

#[test]
fn tabular_learner_beats_idle_one_v_one() {
    let config = PitchConfig::one_v_one(100);
    let idle = Policy::scripted("idle", ScriptedKind::Idle);
    let lc = LearnerConfig { step_budget: 200_000, seed: 1, ..LearnerConfig::default() };
    let mut opponents = |_: &mut ChaCha8Rng| Arc::new(idle.clone());
    let start = std::time::Instant::now();
    let (policy, report) = train_best_response(&config, &mut opponents, &lc, &RewardConfig::dense(), None, "br").unwrap();
    let rate = greedy_win_rate(&config, &policy, &idle, 200);
    eprintln!("steps {} episodes {} early {} train-rate {} eval {rate} in {:?}", report.env_steps, report.episodes, report.stopped_early, report.win_rate, start.elapsed());
    assert!(rate >= 0.9, "win rate {rate}");
    assert_eq!(policy.version, 1);
}

use pitchleague::analysis::{read_replay, record_random_episode};
use pitchleague::features::{compute_action_mask, Encoder};
use pitchleague::game::pitch::{Action, PitchConfig};
use pitchleague::game::Team;
use pitchleague::metagame::{elo_update, exploitability, solve_nash, NashConfig};
use proptest::prelude::*;

fn config(n: usize, academy: bool) -> PitchConfig {
    PitchConfig { n_per_team: n, keepers: n > 1, academy_mode: academy, max_steps: 60, ..PitchConfig::default() }
}

const BALL: [Action; 5] = [Action::LongPass, Action::HighPass, Action::ShortPass, Action::Shot, Action::Dribble];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn masks_follow_possession(n in 1usize..=5, academy in any::<bool>(), seed in any::<u64>()) {
        let config = config(n, academy);
        let replay = record_random_episode(&config, seed);
        for state in replay.steps.iter().map(|r| &r.state) {
            for team in Team::BOTH {
                let view = state.view_for(team);
                for agent in config.controlled() {
                    let mask = compute_action_mask(&view, agent, &config).unwrap();
                    prop_assert!(mask.allows(Action::Idle));
                    match view.ball.owned_team {
                        Some(Team::Right) => prop_assert!(BALL.iter().all(|&a| !mask.allows(a))),
                        Some(Team::Left) => prop_assert!(!mask.allows(Action::Slide)),
                        None => {}
                    }
                }
            }
        }
    }

    #[test]
    fn encodings_are_finite_with_stable_layout(n in 1usize..=5, seed in any::<u64>()) {
        let config = config(n, false);
        let encoder = Encoder::new(&config);
        let replay = record_random_episode(&config, seed);
        for state in replay.steps.iter().map(|r| &r.state).step_by(7) {
            for team in Team::BOTH {
                let view = state.view_for(team);
                for agent in 0..n {
                    let s = encoder.encode_simple(&view, agent).unwrap();
                    let c = encoder.encode_complex(&view, agent).unwrap();
                    prop_assert!(std::sync::Arc::ptr_eq(&s.layout, encoder.simple_layout()));
                    prop_assert!(std::sync::Arc::ptr_eq(&c.layout, encoder.complex_layout()));
                    prop_assert!(s.values.iter().chain(&c.values).all(|v| v.is_finite() && v.abs() <= 1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn replays_round_trip(n in 1usize..=3, seed in any::<u64>()) {
        let replay = record_random_episode(&config(n, false), seed);
        let bytes = replay.to_bytes();
        prop_assert_eq!(read_replay(bytes.as_slice()).unwrap().to_bytes(), bytes);
    }

    #[test]
    fn elo_update_conserves_integer_ratings(ra in 0u32..4000, rb in 0u32..4000, outcome in 0usize..3) {
        let s = [0.0, 0.5, 1.0][outcome];
        let (a, b) = elo_update(f64::from(ra), f64::from(rb), s, 32.0);
        prop_assert_eq!(a + b, f64::from(ra) + f64::from(rb));
        prop_assert!((a - f64::from(ra)).abs() <= 32.0);
    }

    #[test]
    fn nash_meets_tolerance(m in 1usize..=6, n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = pitchleague::rng::seeded(&[seed]);
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect()).collect();
        let s = solve_nash(&a, &NashConfig::default()).unwrap();
        prop_assert!(exploitability(&a, &s.row, &s.col).unwrap() <= 1e-3);
    }
}

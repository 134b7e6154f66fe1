use std::io::BufReader;

use pitchleague::analysis::read_replay;
use pitchleague::game::pitch::PitchConfig;
use pitchleague::learner::{Policy, PolicyKind, ScriptedKind, TabularPolicy};
use pitchleague_ranking::{rebuild_from_log, RankingError, RankingService, ServiceConfig, SubmissionStatus};

fn artifact(id: &str, kind: ScriptedKind) -> String {
    Policy::scripted(id, kind).to_artifact()
}

fn bots() -> Vec<String> {
    vec![
        artifact("builtin2", ScriptedKind::BuiltIn { difficulty: 2 }),
        artifact("shooter", ScriptedKind::Shooter),
        artifact("random", ScriptedKind::Random),
        artifact("idle", ScriptedKind::Idle),
        artifact("builtin0", ScriptedKind::BuiltIn { difficulty: 0 }),
    ]
}

fn open(dir: &std::path::Path) -> RankingService {
    RankingService::open(ServiceConfig { placement_episodes: 2, snapshot_every: 7, ..ServiceConfig::new(dir) }).unwrap()
}

#[test]
fn submissions_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    let a = s.submit("ana", "1v1", &bots()[0]).unwrap();
    assert_eq!(a.status, SubmissionStatus::Pending);
    let b = s.submit("ana", "1v1", &bots()[0]).unwrap();
    assert_ne!(a.id, b.id);

    let mut wrong = Policy {
        id: "t".into(),
        version: 1,
        kind: PolicyKind::Tabular(TabularPolicy::new(true, 1)),
        env_fingerprint: Some(PitchConfig::default().fingerprint()),
    };
    let err = s.submit("ana", "1v1", &wrong.to_artifact()).unwrap_err();
    assert!(matches!(err, RankingError::Fingerprint { .. }));
    assert!(err.to_string().contains("1v1"));
    wrong.env_fingerprint = Some(PitchConfig::one_v_one(100).fingerprint());
    assert!(s.submit("ana", "1v1", &wrong.to_artifact()).is_ok());
    assert!(matches!(s.submit("ana", "1v1", "not an artifact"), Err(RankingError::Artifact(_))));
    assert!(matches!(s.submit("ana", "9v9", &bots()[0]), Err(RankingError::UnknownScenario(_))));
}

#[test]
fn swiss_rounds_and_byes() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    s.submit("u", "1v1", &bots()[0]).unwrap();
    assert!(matches!(s.run_round("1v1", 2, 1.0), Err(RankingError::TooFew(1))));
    for b in &bots()[1..4] {
        s.submit("u", "1v1", b).unwrap();
    }
    let r = s.run_round("1v1", 2, 1.0).unwrap();
    assert_eq!(r.pairings.len(), 2);
    assert_eq!(r.round_scores.len(), 4);
    assert!(r.bye.is_none());
    s.submit("u", "1v1", &bots()[4]).unwrap();
    let r = s.run_round("1v1", 2, 2.0).unwrap();
    assert_eq!(r.pairings.len(), 2);
    let bye = r.bye.clone().unwrap();
    assert_eq!(r.round_scores[&bye], 0.5);
    // No rematches while fresh pairings exist.
    let state = s.state();
    let first = &state.rounds["1v1"][0];
    for p in &r.pairings {
        assert!(!first.pairings.iter().any(|q| (q.a == p.a && q.b == p.b) || (q.a == p.b && q.b == p.a)));
    }
    // Accumulated score is the weighted sum of round scores.
    for row in s.ranking("1v1").unwrap() {
        let expected: f64 = state.rounds["1v1"].iter().map(|r| r.weight * r.round_scores.get(&row.id).copied().unwrap_or(0.0)).sum();
        assert_eq!(row.score, expected);
    }
}

#[test]
fn replays_match_records() {
    let dir = tempfile::tempdir().unwrap();
    let s = open(dir.path());
    for b in &bots()[..2] {
        s.submit("u", "1v1", b).unwrap();
    }
    let r = s.run_round("1v1", 2, 1.0).unwrap();
    let m = &r.pairings[0];
    let bytes = s.replay(&m.match_id).unwrap();
    let replay = read_replay(BufReader::new(&bytes[..])).unwrap();
    assert_eq!(replay.header.policies, [m.a.clone(), m.b.clone()]);
    let stats = s.stats(&m.match_id).unwrap();
    assert_eq!(stats.record.id, m.match_id);
    assert!(matches!(s.replay("m999999"), Err(RankingError::NotFound(_))));
}

#[test]
fn state_rebuilds_from_log() {
    let dir = tempfile::tempdir().unwrap();
    let live = {
        let s = open(dir.path());
        for b in bots() {
            let sub = s.submit("u", "1v1", &b).unwrap();
            s.place(&sub.id).unwrap();
        }
        for w in [1.0, 1.0, 2.0] {
            s.run_round("1v1", 2, w).unwrap();
        }
        s.state()
    };
    let rebuilt = rebuild_from_log(dir.path()).unwrap();
    assert_eq!(serde_json::to_vec(&rebuilt).unwrap(), serde_json::to_vec(&live).unwrap());
    // Restart: snapshot plus log tail.
    let again = open(dir.path());
    assert_eq!(serde_json::to_vec(&again.state()).unwrap(), serde_json::to_vec(&live).unwrap());
    assert_eq!(again.ranking("1v1").unwrap(), live.ranking("1v1"));
}

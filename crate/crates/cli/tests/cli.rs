use std::path::Path;
use std::process::{Command, Output};

use pitchleague::analysis::read_replay;

fn pitchleague(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pitchleague")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr_error(o: &Output) -> serde_json::Value {
    let line = String::from_utf8_lossy(&o.stderr).lines().last().unwrap_or_default().to_string();
    serde_json::from_str(&line).unwrap_or_else(|_| panic!("stderr is not a JSON line: {line}"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    assert_eq!(code(&pitchleague(&["--version"])), 0);
    assert_eq!(code(&pitchleague(&["train"])), 2);
    assert_eq!(code(&pitchleague(&["train", "psro", "--out", out])), 2);
    assert_eq!(code(&pitchleague(&["train", "psro", "--env", "rps", "--generations", "many", "--out", out])), 2);

    let o = pitchleague(&["train", "psro", "--env", "chess", "--out", out]);
    assert_eq!(code(&o), 3);
    assert!(stderr_error(&o)["message"].as_str().unwrap().contains("chess"));
    let o = pitchleague(&["evaluate", "builtin", "no-such-policy.policy"]);
    assert_eq!(code(&o), 3);

    let bad = dir.path().join("bad.jsonl");
    let good = dir.path().join("good.jsonl");
    assert_eq!(code(&pitchleague(&["replay-dump", "--seed", "4", "--out", good.to_str().unwrap()])), 0);
    let text = std::fs::read_to_string(&good).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "{not json";
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let o = pitchleague(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(stderr_error(&o)["message"].as_str().unwrap().contains("line 4"), "{:?}", stderr_error(&o));
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn psro_run_directory_and_replay_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("rps");
    let o = pitchleague(&["train", "psro", "--env", "rps", "--generations", "4", "--seed", "2", "--out", run.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.toml", "manifest.json", "payoff_goal_diff.csv", "payoff_win_rate.csv", "elo.csv", "nash.csv", "metrics.csv"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    assert_eq!(std::fs::read_dir(run.join("policies")).unwrap().count(), 5);

    let again = dir.path().join("again");
    let config = run.join("config.toml");
    let o = pitchleague(&["train", "psro", "--config", config.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&run, "payoff_goal_diff.csv"), read(&again, "payoff_goal_diff.csv"));
    assert_eq!(read(&run, "nash.csv"), read(&again, "nash.csv"));
}

#[test]
fn minipitch_br_run_and_analysis_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("br");
    let args = ["train", "br", "--env", "minipitch:1v1", "--budget", "20000", "--episodes", "4", "--seed", "5"];
    let o = pitchleague(&[&args[..], &["--out", run.to_str().unwrap()]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let replays: Vec<_> = std::fs::read_dir(run.join("replays")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!replays.is_empty());
    for r in &replays {
        let bytes = std::fs::read(r).unwrap();
        assert_eq!(read_replay(bytes.as_slice()).unwrap().to_bytes(), bytes);
    }

    let first = dir.path().join("a1");
    let second = dir.path().join("a2");
    for out in [&first, &second] {
        let o = pitchleague(&["analyze", run.to_str().unwrap(), "--radar", "--crossplay", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["stats.csv", "style.csv", "radar.csv", "crossplay.csv"] {
        assert_eq!(read(&first, f), read(&second, f), "{f}");
    }
}

#[test]
fn evaluate_reports_rates() {
    let o = pitchleague(&["evaluate", "shooter", "idle", "--episodes", "10"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["win_rate"], 1.0);
    let total = v["win_rate"].as_f64().unwrap() + v["draw_rate"].as_f64().unwrap() + v["loss_rate"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-12);
}

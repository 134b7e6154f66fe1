use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::game::pitch::{Event, PitchConfig, RawObservation};

pub const REPLAY_FORMAT: &str = "pitchleague-replay/1";

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("header rejected: {0}")]
    Header(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayHeader {
    pub format: String,
    pub env_fingerprint: String,
    pub config_hash: String,
    pub config: PitchConfig,
    /// Policy ids of the Left and Right teams.
    pub policies: [String; 2],
    pub seed: u64,
}

impl ReplayHeader {
    pub fn new(config: &PitchConfig, left: &str, right: &str, seed: u64) -> Self {
        Self {
            format: REPLAY_FORMAT.to_string(),
            env_fingerprint: config.fingerprint(),
            config_hash: config.config_hash(),
            config: config.clone(),
            policies: [left.to_string(), right.to_string()],
            seed,
        }
    }

    fn check(&self) -> Result<(), ReplayError> {
        if self.format != REPLAY_FORMAT {
            return Err(ReplayError::Header(format!("unknown format {:?}", self.format)));
        }
        if self.config.config_hash() != self.config_hash {
            return Err(ReplayError::Header("config hash does not match the embedded config".into()));
        }
        if self.config.fingerprint() != self.env_fingerprint {
            return Err(ReplayError::Header("env fingerprint does not match the embedded config".into()));
        }
        Ok(())
    }
}

/// One environment step: the state the agents acted on, their actions
/// (own-frame indices of controlled players, Left then Right), the rewards
/// and the events the step produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub step: u32,
    pub state: RawObservation,
    pub actions: [Vec<usize>; 2],
    pub rewards: [f64; 2],
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FinalRecord {
    final_state: RawObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub header: ReplayHeader,
    pub steps: Vec<StepRecord>,
    /// State after the last step, when the episode was closed.
    pub final_state: Option<RawObservation>,
}

impl Replay {
    pub fn new(header: ReplayHeader) -> Self {
        Self { header, steps: Vec::new(), final_state: None }
    }

    /// State before step `k`; `k == len` gives the final state.
    pub fn state_before(&self, k: usize) -> Option<&RawObservation> {
        match self.steps.get(k) {
            Some(r) => Some(&r.state),
            None if k == self.steps.len() => self.final_state.as_ref(),
            None => None,
        }
    }

    /// Score after step `k`.
    pub fn score_after(&self, k: usize) -> (u32, u32) {
        let goals = self.steps[k].events.iter().filter_map(|e| match e {
            Event::Goal { team, .. } => Some(*team),
            _ => None,
        });
        let (mut l, mut r) = self.steps[k].state.score;
        for t in goals {
            match t {
                crate::game::Team::Left => l += 1,
                crate::game::Team::Right => r += 1,
            }
        }
        self.state_before(k + 1).map_or((l, r), |s| s.score)
    }

    pub fn push(&mut self, record: StepRecord) {
        self.steps.push(record);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_replay(self, &mut out).expect("writing to memory");
        out
    }
}

fn line_of<T: Serialize>(value: &T, out: &mut impl Write) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

/// Writes one JSON object per line: header, steps, then the final state.
pub fn write_replay(replay: &Replay, out: &mut impl Write) -> std::io::Result<()> {
    line_of(&replay.header, out)?;
    for s in &replay.steps {
        line_of(s, out)?;
    }
    if let Some(f) = &replay.final_state {
        line_of(&FinalRecord { final_state: f.clone() }, out)?;
    }
    Ok(())
}

pub fn read_replay(input: impl BufRead) -> Result<Replay, ReplayError> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, e: &dyn std::fmt::Display| ReplayError::Parse { line, message: e.to_string() };
    let header: ReplayHeader = match lines.next() {
        Some((_, text)) => serde_json::from_str(&text?).map_err(|e| parse_err(1, &e))?,
        None => return Err(ReplayError::Parse { line: 1, message: "missing header".into() }),
    };
    header.check()?;
    let mut replay = Replay::new(header);
    for (i, text) in lines {
        let text = text?;
        let line = i + 1;
        if replay.final_state.is_some() {
            return Err(ReplayError::Parse { line, message: "data after the final state".into() });
        }
        if text.starts_with("{\"final_state\"") {
            let f: FinalRecord = serde_json::from_str(&text).map_err(|e| parse_err(line, &e))?;
            replay.final_state = Some(f.final_state);
            continue;
        }
        let rec: StepRecord = serde_json::from_str(&text).map_err(|e| parse_err(line, &e))?;
        let expected = replay.steps.len() as u32;
        if rec.step != expected {
            return Err(ReplayError::Parse { line, message: format!("step {} where {expected} was expected", rec.step) });
        }
        replay.steps.push(rec);
    }
    Ok(replay)
}

/// Reads a replay and refuses it unless it was produced by `config`.
pub fn read_replay_for(input: impl BufRead, config: &PitchConfig) -> Result<Replay, ReplayError> {
    let r = read_replay(input)?;
    if r.header.env_fingerprint != config.fingerprint() {
        return Err(ReplayError::Header(format!(
            "replay env {} differs from {}",
            r.header.env_fingerprint,
            config.fingerprint()
        )));
    }
    Ok(r)
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{detect_events, MatchDecomposition};
use crate::game::Team;
use crate::metagame::MatchOutcome;

pub const STYLE_METRICS: [&str; 7] = [
    "win_rate",
    "goals",
    "passes",
    "assists",
    "intercepts",
    "possession",
    "chain_length",
];

/// Raw per-match averages for one policy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StyleMetrics {
    pub win_rate: f64,
    pub goals: f64,
    pub passes: f64,
    pub assists: f64,
    pub intercepts: f64,
    /// Share of owned steps held by this policy's team.
    pub possession: f64,
    /// Mean nodes per chain.
    pub chain_length: f64,
}

impl StyleMetrics {
    /// Averages over matches, each given with the side the policy played.
    pub fn from_matches<'a>(matches: impl IntoIterator<Item = (Team, &'a MatchDecomposition)>) -> Self {
        let mut m = StyleMetrics::default();
        let (mut games, mut chains, mut nodes, mut own, mut all) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (team, d) in matches {
            let (t, o) = (team.index(), team.other().index());
            let n = detect_events(d);
            games += 1.0;
            if n.goals[t] > n.goals[o] {
                m.win_rate += 1.0;
            }
            m.goals += f64::from(n.goals[t]);
            m.passes += f64::from(n.passes[t]);
            m.assists += f64::from(n.assists[t]);
            m.intercepts += f64::from(n.intercepts[t]);
            own += f64::from(n.possession_steps[t]);
            all += f64::from(n.possession_steps[t] + n.possession_steps[o]);
            for c in d.subgames.iter().flat_map(|s| &s.chains).filter(|c| c.team == team) {
                chains += 1.0;
                nodes += c.nodes.len() as f64;
            }
        }
        if games > 0.0 {
            for v in [&mut m.win_rate, &mut m.goals, &mut m.passes, &mut m.assists, &mut m.intercepts] {
                *v /= games;
            }
        }
        m.possession = if all > 0.0 { own / all } else { 0.5 };
        m.chain_length = if chains > 0.0 { nodes / chains } else { 0.0 };
        m
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.win_rate,
            self.goals,
            self.passes,
            self.assists,
            self.intercepts,
            self.possession,
            self.chain_length,
        ]
    }
}

/// Min-max normalises each metric across the population; a metric that is
/// constant across the population maps to 0.5.
pub fn style_radar(population: &[(String, StyleMetrics)]) -> Vec<(String, [f64; 7])> {
    let raw: Vec<[f64; 7]> = population.iter().map(|(_, m)| m.to_array()).collect();
    let mut out: Vec<(String, [f64; 7])> = population.iter().map(|(id, _)| (id.clone(), [0.5; 7])).collect();
    for k in 0..7 {
        let lo = raw.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
        let hi = raw.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            for (o, r) in out.iter_mut().zip(&raw) {
                o.1[k] = ((r[k] - lo) / (hi - lo)).clamp(0.0, 1.0);
            }
        }
    }
    out
}

pub fn radar_csv(radar: &[(String, [f64; 7])]) -> String {
    let mut out = format!("policy,{}\n", STYLE_METRICS.join(","));
    for (id, v) in radar {
        out.push_str(id);
        for x in v {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Win and draw rates between policies: `win[i][j]` is the share of games
/// `i` won against `j`, so `win + winᵀ + draw` is all ones wherever games
/// were played.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPlay {
    pub ids: Vec<String>,
    pub win: Vec<Vec<f64>>,
    pub draw: Vec<Vec<f64>>,
}

impl CrossPlay {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,win,draw\n");
        for (i, a) in self.ids.iter().enumerate() {
            for (j, b) in self.ids.iter().enumerate() {
                writeln!(out, "{a},{b},{},{}", self.win[i][j], self.draw[i][j]).unwrap();
            }
        }
        out
    }
}

/// Builds the matrices from `(i, j, outcome of i against j)` batches. On
/// the diagonal wins and losses of the two seats are pooled.
pub fn crossplay_from_outcomes(ids: &[String], results: &[(usize, usize, MatchOutcome<f64>)]) -> CrossPlay {
    let n = ids.len();
    let mut acc = vec![vec![MatchOutcome::<f64>::default(); n]; n];
    for (i, j, o) in results {
        acc[*i][*j].merge(o);
        if i != j {
            acc[*j][*i].merge(&o.flipped());
        }
    }
    let mut win = vec![vec![0.0; n]; n];
    let mut draw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let o = &acc[i][j];
            let g = o.games() as f64;
            if g == 0.0 {
                continue;
            }
            draw[i][j] = o.draws as f64 / g;
            win[i][j] = if i == j { (o.wins + o.losses) as f64 / (2.0 * g) } else { o.wins as f64 / g };
        }
    }
    CrossPlay { ids: ids.to_vec(), win, draw }
}

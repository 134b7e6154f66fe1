use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::oracle::{Arena, BestResponseOracle, OracleReport};
use super::{MemberRole, OrchestratorError, Population};
use crate::learner::Policy;
use crate::metagame::{pfsp_distribution, solve_nash, NashConfig, PayoffMetric, PfspWeighting};
use crate::rng::mix;

fn default_episodes() -> u64 {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsroConfig {
    pub generations: usize,
    /// Simulated episodes per payoff entry.
    #[serde(default = "default_episodes")]
    pub episodes_per_pair: u64,
    pub metric: PayoffMetric,
    pub nash: NashConfig,
    /// Initialise each best response from the previous one.
    pub warm_start: bool,
    pub seed: u64,
}

impl Default for PsroConfig {
    fn default() -> Self {
        Self {
            generations: 3,
            episodes_per_pair: default_episodes(),
            metric: PayoffMetric::GoalDifference,
            nash: NashConfig::default(),
            warm_start: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsroGeneration {
    pub generation: usize,
    pub new_id: String,
    /// Nash mixture the new member was trained against.
    pub nash: Vec<(String, f64)>,
    pub metagame_exploitability: f64,
    pub oracle: OracleReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PsroReport {
    pub generations: Vec<PsroGeneration>,
    /// Nash mixture over the final population.
    pub final_nash: Vec<(String, f64)>,
    pub final_exploitability: f64,
}

fn population_nash(pop: &Population, metric: PayoffMetric, config: &NashConfig) -> Result<(Vec<(String, f64)>, f64), OrchestratorError> {
    let m = pop.payoff.matrix(metric);
    let sol = solve_nash(&m, config)?;
    let mix = pop.ids().into_iter().zip(sol.row.probs().iter().copied()).collect();
    Ok((mix, sol.exploitability))
}

fn weighted(pop: &Population, mix: &[(String, f64)]) -> Vec<(Arc<Policy>, f64)> {
    mix.iter()
        .filter(|(_, w)| *w > 0.0)
        .filter_map(|(id, w)| pop.get(id).map(|m| (m.policy.clone(), *w)))
        .collect()
}

/// Policy-space response oracles: repeatedly solve the metagame, train a
/// best response to the Nash mixture and extend the payoff table with the
/// new member's row.
pub fn run_psro(
    pop: &mut Population,
    oracle: &mut dyn BestResponseOracle,
    arena: &mut dyn Arena,
    config: &PsroConfig,
) -> Result<PsroReport, OrchestratorError> {
    if pop.is_empty() {
        return Err(OrchestratorError::Population("PSRO needs at least one initial policy".into()));
    }
    if config.episodes_per_pair == 0 {
        return Err(OrchestratorError::Config("episodes_per_pair must be positive".into()));
    }
    pop.fill_payoff(arena, config.episodes_per_pair, mix(&[config.seed, 0xf111]))?;
    let mut report = PsroReport::default();
    for _ in 0..config.generations {
        let generation = pop.next_generation(MemberRole::BestResponse);
        let (nash, expl) = population_nash(pop, config.metric, &config.nash)?;
        let opponents = weighted(pop, &nash);
        let prior = if config.warm_start {
            pop.members.iter().rev().find(|m| m.role == MemberRole::BestResponse).map(|m| m.policy.clone())
        } else {
            None
        };
        let id = format!("br-{generation}");
        let seed = mix(&[config.seed, generation as u64, 0xb7]);
        log::info!("psro generation {generation}: training {id} against {} members", opponents.len());
        let (policy, oracle_report) = oracle.best_response(&opponents, prior.as_deref(), &id, seed)?;
        pop.add(policy, MemberRole::BestResponse)?;
        pop.simulate_against_all(arena, &id, config.episodes_per_pair, mix(&[config.seed, generation as u64, 0x51]))?;
        report.generations.push(PsroGeneration {
            generation,
            new_id: id,
            nash,
            metagame_exploitability: expl,
            oracle: oracle_report,
        });
    }
    let (nash, expl) = population_nash(pop, config.metric, &config.nash)?;
    report.final_nash = nash;
    report.final_exploitability = expl;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeagueConfig {
    pub generations: usize,
    #[serde(default = "default_episodes")]
    pub episodes_per_pair: u64,
    pub pfsp: PfspWeighting,
    pub seed: u64,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self { generations: 2, episodes_per_pair: default_episodes(), pfsp: PfspWeighting::Hard, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeagueGeneration {
    pub generation: usize,
    pub main_id: String,
    pub exploiter_id: String,
    /// PFSP distribution the main agent trained against.
    pub main_opponents: Vec<(String, f64)>,
    pub exploiter_opponents: Vec<(String, f64)>,
    pub main: OracleReport,
    pub exploiter: OracleReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeagueReport {
    pub generations: Vec<LeagueGeneration>,
}

/// League training: each generation the main agent, warm-started from its
/// previous version, trains against a PFSP mixture over the population;
/// then a fresh exploiter trains against that frozen main agent.
pub fn run_league(
    pop: &mut Population,
    initial_main: Policy,
    oracle: &mut dyn BestResponseOracle,
    arena: &mut dyn Arena,
    config: &LeagueConfig,
) -> Result<LeagueReport, OrchestratorError> {
    if pop.is_empty() {
        return Err(OrchestratorError::Population("league needs at least one initial policy".into()));
    }
    if config.episodes_per_pair == 0 {
        return Err(OrchestratorError::Config("episodes_per_pair must be positive".into()));
    }
    pop.fill_payoff(arena, config.episodes_per_pair, mix(&[config.seed, 0xf111]))?;
    let mut main = Arc::new(initial_main);
    let mut report = LeagueReport::default();
    for _ in 0..config.generations {
        let generation = pop.next_generation(MemberRole::MainAgent);
        let ids = pop.ids();
        let mut rates = Vec::with_capacity(ids.len());
        for (k, id) in ids.iter().enumerate() {
            let rate = if pop.get(&main.id).is_some() {
                pop.payoff.score_rate(&main.id, id)?
            } else {
                let other = pop.get(id).expect("listed id").policy.clone();
                let seed = mix(&[config.seed, generation as u64, k as u64, 0x7a7e]);
                arena.play(&main, &other, config.episodes_per_pair, seed)?.outcome.score_rate()
            };
            rates.push(rate);
        }
        let dist = pfsp_distribution(&rates, config.pfsp)?;
        let main_opponents: Vec<(String, f64)> = ids.into_iter().zip(dist.probs().iter().copied()).collect();

        let main_id = format!("main-{generation}");
        log::info!("league generation {generation}: training {main_id}");
        let seed = mix(&[config.seed, generation as u64, 0x3a1]);
        let (policy, main_report) = oracle.best_response(&weighted(pop, &main_opponents), Some(&main), &main_id, seed)?;
        pop.add(policy, MemberRole::MainAgent)?;
        pop.simulate_against_all(arena, &main_id, config.episodes_per_pair, mix(&[config.seed, generation as u64, 0x51]))?;
        main = pop.get(&main_id).expect("just added").policy.clone();

        let exploiter_id = format!("exploiter-{generation}");
        log::info!("league generation {generation}: training {exploiter_id} against {main_id}");
        let exploiter_opponents = vec![(main_id.clone(), 1.0)];
        let seed = mix(&[config.seed, generation as u64, 0xe4]);
        let (policy, exploiter_report) = oracle.best_response(&[(main.clone(), 1.0)], None, &exploiter_id, seed)?;
        pop.add(policy, MemberRole::Exploiter)?;
        pop.simulate_against_all(arena, &exploiter_id, config.episodes_per_pair, mix(&[config.seed, generation as u64, 0x52]))?;

        report.generations.push(LeagueGeneration {
            generation,
            main_id,
            exploiter_id,
            main_opponents,
            exploiter_opponents,
            main: main_report,
            exploiter: exploiter_report,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::Policy;
    use crate::orchestrator::{ExactOracle, MatrixArena};
    use crate::MatrixGameF64;

    fn rps_population(seeds: &[usize]) -> Population {
        let mut pop = Population::new();
        for &s in seeds {
            pop.add(Policy::pure(&format!("pure-{s}"), 3, s), MemberRole::BuiltIn).unwrap();
        }
        pop
    }

    #[test]
    fn zero_generations_leave_population_unchanged() {
        let game = MatrixGameF64::rock_paper_scissors();
        let mut pop = rps_population(&[0]);
        let cfg = PsroConfig { generations: 0, ..PsroConfig::default() };
        run_psro(&mut pop, &mut ExactOracle { game: game.clone() }, &mut MatrixArena { game }, &cfg).unwrap();
        assert_eq!(pop.len(), 1);
    }

    #[test]
    fn psro_payoff_stays_antisymmetric() {
        let game = MatrixGameF64::rock_paper_scissors();
        let mut pop = rps_population(&[0, 1]);
        let cfg = PsroConfig { generations: 4, ..PsroConfig::default() };
        let r = run_psro(&mut pop, &mut ExactOracle { game: game.clone() }, &mut MatrixArena { game }, &cfg).unwrap();
        assert_eq!(r.generations.len(), 4);
        let m = pop.payoff.matrix(PayoffMetric::GoalDifference);
        for i in 0..m.len() {
            for j in 0..m.len() {
                assert_eq!(m[i][j], -m[j][i]);
            }
        }
        assert_eq!(pop.next_generation(MemberRole::BestResponse), 5);
    }

    #[test]
    fn league_structure() {
        let game = MatrixGameF64::rock_paper_scissors();
        let mut pop = rps_population(&[0]);
        let cfg = LeagueConfig { generations: 1, ..LeagueConfig::default() };
        let r = run_league(
            &mut pop,
            Policy::pure("start", 3, 2),
            &mut ExactOracle { game: game.clone() },
            &mut MatrixArena { game },
            &cfg,
        )
        .unwrap();
        assert_eq!(pop.len(), 3);
        let g = &r.generations[0];
        assert_eq!(g.exploiter_opponents, vec![(g.main_id.clone(), 1.0)]);
        assert_eq!(g.exploiter.opponents.keys().collect::<Vec<_>>(), vec![&g.main_id]);
    }
}

//! Outcome-distribution harness: runs an agent over a block of seeds and
//! tallies how episodes ended.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use twobridge_core::{Env, EnvConfig, EnvError, Outcome};

use crate::agents::Agent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: u32,
    pub total_reward: f64,
}

/// Plays one full episode of `config` (with its seed) and returns how it ended.
pub fn run_episode(config: &EnvConfig, agent: &mut dyn Agent) -> Result<EpisodeSummary, EnvError> {
    let mut env = Env::new(config.clone())?;
    agent.reset(config.seed);
    let mut last = env.reset(None);
    let mut total = 0.0;
    while !last.done {
        let action = agent.act(&env, &last);
        last = env.step(&action)?;
        total += last.reward.total;
    }
    Ok(EpisodeSummary {
        seed: config.seed,
        outcome: last.outcome.expect("done implies an outcome"),
        steps: last.info.step,
        total_reward: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub variant: String,
    pub profile: String,
    pub agent: String,
    pub seeds: u64,
    /// Indexed by [`Outcome::index`].
    pub counts: [u64; 5],
    pub mean_steps: f64,
    pub mean_reward: f64,
}

impl OutcomeDistribution {
    pub fn count(&self, outcome: Outcome) -> u64 {
        self.counts[outcome.index()]
    }

    pub fn rate(&self, outcome: Outcome) -> f64 {
        if self.seeds == 0 {
            0.0
        } else {
            self.count(outcome) as f64 / self.seeds as f64
        }
    }
}

impl fmt::Display for OutcomeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12} {:<9} {:<14} {:>6}", self.variant, self.profile, self.agent, self.seeds)?;
        for c in self.counts {
            write!(f, " {c:>8}")?;
        }
        write!(f, " {:>9.1} {:>10.3}", self.mean_steps, self.mean_reward)
    }
}

pub fn table_header() -> String {
    let mut s = format!("{:<12} {:<9} {:<14} {:>6}", "variant", "profile", "agent", "seeds");
    for o in ["nav_win", "cmb_win", "cmb_loss", "tie", "timeout"] {
        s.push_str(&format!(" {o:>8}"));
    }
    s.push_str(&format!(" {:>9} {:>10}", "mean_len", "mean_rew"));
    s
}

/// Runs seeds `seed0 .. seed0 + n` of `base` (its seed field is ignored).
pub fn run_episodes(
    base: &EnvConfig,
    agent: &mut dyn Agent,
    seed0: u64,
    n: u64,
) -> Result<OutcomeDistribution, EnvError> {
    let mut counts = [0u64; 5];
    let (mut steps, mut reward) = (0u64, 0.0);
    for seed in seed0..seed0 + n {
        let config = EnvConfig { seed, ..base.clone() };
        let ep = run_episode(&config, agent)?;
        counts[ep.outcome.index()] += 1;
        steps += ep.steps as u64;
        reward += ep.total_reward;
    }
    let denom = n.max(1) as f64;
    Ok(OutcomeDistribution {
        variant: base.variant.clone(),
        profile: base.profile.to_string(),
        agent: agent.name().to_string(),
        seeds: n,
        counts,
        mean_steps: steps as f64 / denom,
        mean_reward: reward / denom,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    variant: &'a str,
    profile: &'a str,
    agent: &'a str,
    seeds: u64,
    navigation_victory: u64,
    combat_victory: u64,
    combat_loss: u64,
    tie: u64,
    timeout_loss: u64,
    mean_steps: f64,
    mean_reward: f64,
}

/// Writes one CSV row per distribution, with a header line.
pub fn write_csv<W: Write>(out: W, rows: &[OutcomeDistribution]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in rows {
        w.serialize(CsvRow {
            variant: &d.variant,
            profile: &d.profile,
            agent: &d.agent,
            seeds: d.seeds,
            navigation_victory: d.count(Outcome::NavigationVictory),
            combat_victory: d.count(Outcome::CombatVictory),
            combat_loss: d.count(Outcome::CombatLoss),
            tie: d.count(Outcome::Tie),
            timeout_loss: d.count(Outcome::TimeoutLoss),
            mean_steps: d.mean_steps,
            mean_reward: d.mean_reward,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub instances: usize,
    pub agent_steps: u64,
    pub seconds: f64,
}

impl Throughput {
    pub fn steps_per_second(&self) -> f64 {
        self.agent_steps as f64 / self.seconds
    }
}

/// Steps `instances` independent environments (one thread each) with the
/// random masked agent until each has taken `steps_per_instance` agent
/// steps, resetting on episode end.
pub fn bench_throughput(base: &EnvConfig, instances: usize, steps_per_instance: u64) -> Result<Throughput, EnvError> {
    let run = |i: usize| -> Result<u64, EnvError> {
        let mut env = Env::new(EnvConfig { seed: base.seed + i as u64, ..base.clone() })?;
        let mut agent = crate::agents::RandomMaskedAgent::new(base.seed ^ i as u64);
        let mut last = env.reset(None);
        let mut episode = 0;
        for _ in 0..steps_per_instance {
            if last.done {
                episode += 1;
                last = env.reset(Some(base.seed + (episode * instances + i) as u64));
            }
            let action = agent.act(&env, &last);
            last = env.step(&action)?;
        }
        Ok(steps_per_instance)
    };
    use crate::agents::Agent as _;
    let start = Instant::now();
    let total = if instances <= 1 {
        run(0)?
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..instances).map(|i| s.spawn(move || run(i))).collect();
            handles.into_iter().map(|h| h.join().expect("bench thread panicked")).sum::<Result<u64, _>>()
        })?
    };
    Ok(Throughput { instances: instances.max(1), agent_steps: total, seconds: start.elapsed().as_secs_f64() })
}

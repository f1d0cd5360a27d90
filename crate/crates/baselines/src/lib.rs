//! Scripted agents and evaluation tooling for the two-bridge suite.

pub mod agents;
pub mod harness;

pub use agents::{
    make_agent, Agent, BeaconGreedyAgent, FocusFireAgent, IdleAgent, RandomMaskedAgent, AGENT_NAMES,
};
pub use harness::{bench_throughput, run_episode, run_episodes, write_csv, OutcomeDistribution, Throughput};

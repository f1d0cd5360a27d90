//! Deterministic simulator for the two-bridge micro-RTS map suite: terrain
//! and pathing, spawn randomization, the tick engine, masked action spaces,
//! observations, rewards, and the reset/step environment.

pub mod actions;
pub mod engine;
pub mod env;
pub mod obs;
pub mod replay;
pub mod reward;
pub mod spawn;
pub mod world;

pub use actions::{ActionError, ActionMask, StructuredAction, Verb};
pub use engine::{CombatParams, Order, Outcome, UnitId, WorldState};
pub use env::{state_hash, Action, Env, EnvConfig, EnvError, MaskView, Profile, StepResult};
pub use reward::{terminal_reward, RewardBreakdown, RewardParams};
pub use spawn::{find_variant, variant_catalog, Layout, VariantConfig};
pub use world::{two_bridge_map, Direction, Position};

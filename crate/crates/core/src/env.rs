//! Reset/step lifecycle over the engine, one profile per experiment setup.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::actions::{
    branch_mask, decode_flat, decode_structured, verb_level_mask, verb_mask, ActionError, ActionMask,
    StructuredAction, Verb,
};
use crate::engine::{CombatParams, EngineError, Order, Outcome, WorldState, DEFAULT_TICK_LIMIT};
use crate::obs::{build_vector, render_spatial, update_camera, CameraMode, CameraState, SpatialFeatures, VectorFeatures};
use crate::reward::{pilot_reward, shaped_reward, RewardBreakdown, RewardParams};
use crate::spawn::{find_variant, roll_spawns, SpawnAssignment, VariantConfig};
use crate::world::two_bridge_map;

pub const DEFAULT_TICKS_PER_AGENT_STEP: u32 = 8;
/// Minimum spacing between units of one spawn group, in world units.
pub const DEFAULT_MIN_SEPARATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    #[serde(rename = "pilot-nsf")]
    PilotNsf,
    #[serde(rename = "pilot-sf")]
    PilotSf,
    #[serde(rename = "exp2")]
    Exp2,
    #[serde(rename = "exp3")]
    Exp3,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::PilotNsf, Profile::PilotSf, Profile::Exp2, Profile::Exp3];

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::PilotNsf => "pilot-nsf",
            Profile::PilotSf => "pilot-sf",
            Profile::Exp2 => "exp2",
            Profile::Exp3 => "exp3",
        }
    }

    pub fn camera_mode(self) -> CameraMode {
        match self {
            Profile::Exp3 => CameraMode::Locked,
            _ => CameraMode::Free,
        }
    }

    pub fn has_spatial(self) -> bool {
        self != Profile::PilotNsf
    }

    /// Pilot profiles take per-unit flat codes, the others structured actions.
    pub fn is_pilot(self) -> bool {
        matches!(self, Profile::PilotNsf | Profile::PilotSf)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown profile {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub variant: String,
    pub profile: Profile,
    pub seed: u64,
    pub ticks_per_agent_step: u32,
    pub tick_limit: u32,
    /// Skip spatial planes even for profiles that define them.
    pub render_spatial: bool,
    pub min_separation: f64,
    pub combat: CombatParams,
    pub reward: RewardParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            variant: "V2_Base".into(),
            profile: Profile::Exp3,
            seed: 0,
            ticks_per_agent_step: DEFAULT_TICKS_PER_AGENT_STEP,
            tick_limit: DEFAULT_TICK_LIMIT,
            render_spatial: true,
            min_separation: DEFAULT_MIN_SEPARATION,
            combat: CombatParams::default(),
            reward: RewardParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn new(variant: &str, profile: Profile, seed: u64) -> Self {
        Self { variant: variant.into(), profile, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<VariantConfig, EnvError> {
        let variant = find_variant(&self.variant)
            .ok_or_else(|| EnvError::Config(format!("unknown variant id {:?}", self.variant)))?;
        if self.ticks_per_agent_step == 0 {
            return Err(EnvError::Config("ticks_per_agent_step must be at least 1".into()));
        }
        if self.tick_limit == 0 {
            return Err(EnvError::Config("tick_limit must be at least 1".into()));
        }
        if !(self.min_separation.is_finite() && self.min_separation >= 0.0) {
            return Err(EnvError::Config("min_separation must be non-negative".into()));
        }
        self.combat.validate().map_err(EnvError::Config)?;
        self.reward.validate().map_err(EnvError::Config)?;
        Ok(variant)
    }

    /// Upper bound on agent steps per episode.
    pub fn max_agent_steps(&self) -> u32 {
        self.tick_limit.div_ceil(self.ticks_per_agent_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Action {
    Structured(StructuredAction),
    /// One code per friendly slot.
    Flat(Vec<u32>),
}

impl From<StructuredAction> for Action {
    fn from(a: StructuredAction) -> Self {
        Action::Structured(a)
    }
}

/// Action mask as exposed to the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskView {
    /// Pilot profiles are unmasked.
    None,
    Verb { verb: [bool; 3] },
    Branch(ActionMask),
}

impl MaskView {
    /// Full mask the structured decoder checks against, if any.
    pub fn to_action_mask(&self, enemy_count: usize) -> Option<ActionMask> {
        match self {
            MaskView::None => None,
            MaskView::Verb { verb } => Some(ActionMask {
                verb: *verb,
                who: [true; crate::spawn::FRIENDLY_COUNT],
                direction: [true; 8],
                enemy: vec![true; enemy_count + 1],
            }),
            MaskView::Branch(m) => Some(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub vector: VectorFeatures,
    pub spatial: Option<SpatialFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: u32,
    pub tick: u32,
    pub friendly_alive: usize,
    pub enemy_alive: usize,
    pub camera: CameraState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Observation,
    pub mask: MaskView,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub outcome: Option<Outcome>,
    pub info: StepInfo,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid action: {0}")]
    Action(#[from] ActionError),
    #[error("profile {profile} expects {expected} actions")]
    ActionKind { profile: Profile, expected: &'static str },
    #[error("episode is over; call reset")]
    Lifecycle,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// 64-bit digest of the canonical world encoding: the first eight bytes of
/// its SHA-256.
pub fn state_hash(world: &WorldState) -> u64 {
    let digest = Sha256::digest(world.canonical_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

pub fn state_hash_hex(world: &WorldState) -> String {
    hex::encode(state_hash(world).to_be_bytes())
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    variant: VariantConfig,
    spawn: SpawnAssignment,
    world: WorldState,
    camera: CameraState,
    step: u32,
    done: bool,
}

impl Env {
    /// Builds an environment and resets it to `config.seed`.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        let variant = config.validate()?;
        let (spawn, world, camera) = Self::spawn(&config, &variant);
        Ok(Self { config, variant, spawn, world, camera, step: 0, done: false })
    }

    fn spawn(config: &EnvConfig, variant: &VariantConfig) -> (SpawnAssignment, WorldState, CameraState) {
        let map = two_bridge_map();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let spawn = roll_spawns(variant, &map.regions, config.min_separation, &mut rng);
        let world = WorldState::from_spawn(map.grid.clone(), &spawn, config.combat, config.tick_limit);
        let camera = update_camera(&CameraState::new(config.profile.camera_mode(), spawn.camera_initial), &world);
        (spawn, world, camera)
    }

    /// Starts a new episode, optionally with a different seed.
    pub fn reset(&mut self, seed: Option<u64>) -> StepResult {
        if let Some(s) = seed {
            self.config.seed = s;
        }
        let (spawn, world, camera) = Self::spawn(&self.config, &self.variant);
        self.spawn = spawn;
        self.world = world;
        self.camera = camera;
        self.step = 0;
        self.done = false;
        self.result(RewardBreakdown::zero())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn variant(&self) -> &VariantConfig {
        &self.variant
    }

    pub fn spawn_assignment(&self) -> &SpawnAssignment {
        &self.spawn
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn camera(&self) -> &CameraState {
        &self.camera
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn mask(&self) -> MaskView {
        match self.config.profile {
            Profile::PilotNsf | Profile::PilotSf => MaskView::None,
            Profile::Exp2 => MaskView::Verb { verb: verb_mask(&self.world) },
            Profile::Exp3 => MaskView::Branch(branch_mask(&self.world)),
        }
    }

    pub fn observe(&self) -> Observation {
        let spatial = (self.config.profile.has_spatial() && self.config.render_spatial)
            .then(|| render_spatial(&self.world, &self.camera));
        Observation { vector: build_vector(&self.world), spatial }
    }

    /// Orders plus the new selection; `None` keeps the previous selection.
    fn decode(&self, action: &Action) -> Result<(Vec<Order>, Option<Vec<bool>>), EnvError> {
        let profile = self.config.profile;
        let orders = match (profile.is_pilot(), action) {
            (true, Action::Flat(codes)) => decode_flat(codes, &self.world)?,
            (true, _) => return Err(EnvError::ActionKind { profile, expected: "flat" }),
            (false, Action::Structured(a)) => {
                let mask = match profile {
                    Profile::Exp2 => verb_level_mask(&self.world),
                    _ => branch_mask(&self.world),
                };
                let orders = decode_structured(a, &mask, &self.world)?;
                let selection = (a.verb != Verb::NoOp)
                    .then(|| (0..orders.len()).map(|s| a.selects(s)).collect());
                return Ok((orders, selection));
            }
            (false, _) => return Err(EnvError::ActionKind { profile, expected: "structured" }),
        };
        let selection = orders.iter().map(|o| *o != Order::NoOp).collect();
        Ok((orders, Some(selection)))
    }

    /// Applies one agent action for up to K ticks.
    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::Lifecycle);
        }
        let (orders, selection) = self.decode(action)?;
        let prev = self.world.clone();
        if let Some(selection) = selection {
            self.world.set_selection(&selection);
        }
        for _ in 0..self.config.ticks_per_agent_step {
            self.world.tick(&orders)?;
            if self.world.is_terminated() {
                break;
            }
        }
        self.step += 1;
        self.done = self.world.is_terminated();
        self.camera = update_camera(&self.camera, &self.world);
        let outcome = self.world.outcome;
        let reward = if self.config.profile.is_pilot() {
            pilot_reward(&prev, &self.world, outcome)
        } else {
            shaped_reward(&prev, &self.world, outcome, &self.config.reward)
        };
        Ok(self.result(reward))
    }

    fn result(&self, reward: RewardBreakdown) -> StepResult {
        StepResult {
            observation: self.observe(),
            mask: self.mask(),
            reward,
            done: self.done,
            outcome: self.world.outcome,
            info: StepInfo {
                step: self.step,
                tick: self.world.tick,
                friendly_alive: self.world.friendly_alive(),
                enemy_alive: self.world.enemy_alive(),
                camera: self.camera,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Direction, Position};

    fn env(variant: &str, profile: Profile, seed: u64) -> Env {
        Env::new(EnvConfig::new(variant, profile, seed)).unwrap()
    }

    fn noop(profile: Profile) -> Action {
        if profile.is_pilot() {
            Action::Flat(vec![0; 5])
        } else {
            Action::Structured(StructuredAction::NOOP)
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = env("V2_Base", Profile::Exp2, 7);
        let mut b = env("V2_Base", Profile::Exp2, 7);
        assert_eq!(a.reset(None), b.reset(None));
        assert_eq!(state_hash(a.world()), state_hash(b.world()));
        let r = a.reset(Some(8));
        assert_ne!(state_hash(a.world()), state_hash(b.world()));
        assert_eq!(r.reward, RewardBreakdown::zero());
        assert!(!r.done && r.outcome.is_none());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            Env::new(EnvConfig::new("V9_Base", Profile::Exp2, 0)),
            Err(EnvError::Config(_))
        ));
        let cfg = EnvConfig { ticks_per_agent_step: 0, ..EnvConfig::default() };
        assert!(matches!(Env::new(cfg), Err(EnvError::Config(_))));
    }

    #[test]
    fn profiles_shape_results() {
        let mut e = env("V1_Combat", Profile::PilotNsf, 1);
        let r = e.reset(None);
        assert!(r.observation.spatial.is_none());
        assert_eq!(r.mask, MaskView::None);
        assert_eq!(r.observation.vector.len(), 25 + 12 + 4);

        let r = env("V1_Combat", Profile::PilotSf, 1).reset(None);
        assert!(r.observation.spatial.is_some());
        assert!(matches!(env("V1_Combat", Profile::Exp2, 1).reset(None).mask, MaskView::Verb { .. }));
        let r = env("V1_Combat", Profile::Exp3, 1).reset(None);
        assert!(matches!(r.mask, MaskView::Branch(_)));
        assert_eq!(r.info.camera.mode, CameraMode::Locked);

        let mut cfg = EnvConfig::new("V1_Combat", Profile::Exp2, 1);
        cfg.render_spatial = false;
        assert!(Env::new(cfg).unwrap().reset(None).observation.spatial.is_none());
    }

    #[test]
    fn wrong_action_kind_is_rejected() {
        let mut e = env("V1_Base", Profile::PilotSf, 0);
        assert!(matches!(e.step(&noop(Profile::Exp2)), Err(EnvError::ActionKind { .. })));
        let mut e = env("V1_Base", Profile::Exp3, 0);
        assert!(matches!(e.step(&noop(Profile::PilotSf)), Err(EnvError::ActionKind { .. })));
    }

    #[test]
    fn idle_runs_to_timeout_in_600_steps() {
        for profile in Profile::ALL {
            let mut cfg = EnvConfig::new("V2_Base", profile, 3);
            cfg.render_spatial = false;
            let mut e = Env::new(cfg).unwrap();
            let mut last = None;
            let mut steps = 0;
            while !e.is_done() {
                last = Some(e.step(&noop(profile)).unwrap());
                steps += 1;
            }
            let last = last.unwrap();
            assert_eq!(steps, 600);
            assert_eq!(last.outcome, Some(Outcome::TimeoutLoss));
            assert_eq!(last.info.tick, 4800);
            let expected = if profile.is_pilot() { -10.0 } else { -15.0 };
            assert_eq!(last.reward.terminal, expected);
            assert!(matches!(e.step(&noop(profile)), Err(EnvError::Lifecycle)));
        }
    }

    #[test]
    fn move_next_to_beacon_wins_mid_window() {
        let mut e = env("V2_Navigate", Profile::Exp3, 5);
        // put the whole group just outside the capture radius, south of the beacon
        let b = e.world.beacon;
        for u in e.world.units.iter_mut().take(5) {
            u.pos = Position::new(b.x, b.y + 2.2);
        }
        let r = e.step(&StructuredAction::move_dir(0b11111, Direction::N).into()).unwrap();
        assert!(r.done);
        assert_eq!(r.outcome, Some(Outcome::NavigationVictory));
        assert_eq!(r.reward.terminal, 25.0);
        assert!(r.info.tick < 8, "step should end early, tick {}", r.info.tick);
    }

    #[test]
    fn masked_action_errors_in_exp3() {
        let mut e = env("V1_Base", Profile::Exp3, 2);
        e.world.units[0].alive = false;
        e.world.units[0].hp = 0;
        let a = StructuredAction { verb: Verb::Move, who: 0b00001, direction: Some(Direction::S), enemy_idx: None };
        assert!(matches!(e.step(&a.into()), Err(EnvError::Action(_))));
        // exp2 only restricts the verb
        let mut e = env("V1_Base", Profile::Exp2, 2);
        e.world.units[0].alive = false;
        e.world.units[0].hp = 0;
        assert!(e.step(&a.into()).is_ok());
    }

    #[test]
    fn hash_tracks_tick() {
        let mut e = env("V3_Combat", Profile::Exp2, 0);
        let copy = e.world().clone();
        assert_eq!(state_hash(&copy), state_hash(e.world()));
        e.step(&noop(Profile::Exp2)).unwrap();
        assert_ne!(state_hash(&copy), state_hash(e.world()));
        assert_eq!(state_hash_hex(e.world()).len(), 16);
    }
}

//! Scripted reference agents. Each one decides in structured terms and is
//! converted to per-unit codes under the pilot profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twobridge_core::actions::{branch_mask, flat_action_count, structured_to_flat};
use twobridge_core::engine::{apply_move, WorldState};
use twobridge_core::spawn::FRIENDLY_COUNT;
use twobridge_core::world::{find_path, Position};
use twobridge_core::{Action, ActionMask, Direction, Env, MaskView, StepResult, StructuredAction, Verb};

pub trait Agent {
    fn name(&self) -> &'static str;

    /// Called at the start of every episode.
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, env: &Env, last: &StepResult) -> Action;
}

/// Wraps a structured decision in the action form `env` expects.
pub fn convert(env: &Env, action: StructuredAction) -> Action {
    if env.config().profile.is_pilot() {
        Action::Flat(structured_to_flat(&action, env.world().friendly_count()))
    } else {
        Action::Structured(action)
    }
}

fn alive_bits(world: &WorldState) -> u8 {
    world
        .friendlies()
        .iter()
        .enumerate()
        .filter(|(_, u)| u.alive)
        .fold(0, |acc, (i, _)| acc | (1 << i))
}

/// Always no-op.
#[derive(Debug, Default, Clone)]
pub struct IdleAgent;

impl Agent for IdleAgent {
    fn name(&self) -> &'static str {
        "idle"
    }

    fn act(&mut self, env: &Env, _last: &StepResult) -> Action {
        convert(env, StructuredAction::NOOP)
    }
}

/// Uniform over the legal joint actions: no-op, every (selection, direction)
/// move, and every (selection, target) attack the mask permits. Pilot
/// profiles draw every unit's code uniformly from the full flat range.
#[derive(Debug, Clone)]
pub struct RandomMaskedAgent {
    rng: ChaCha8Rng,
}

impl RandomMaskedAgent {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Draws a structured action permitted by `mask`.
    pub fn sample<R: Rng + ?Sized>(mask: &ActionMask, rng: &mut R) -> StructuredAction {
        let slots: Vec<usize> = (0..FRIENDLY_COUNT).filter(|i| mask.who[*i]).collect();
        let selections = (1u64 << slots.len()) - 1;
        let dirs: Vec<Direction> = if mask.verb[Verb::Move.index()] {
            Direction::ALL.into_iter().filter(|d| mask.direction[d.index()]).collect()
        } else {
            Vec::new()
        };
        let null = mask.enemy.len() - 1;
        let targets: Vec<Option<usize>> = if mask.verb[Verb::Attack.index()] {
            (0..=null).filter(|j| mask.enemy[*j]).map(|j| (j < null).then_some(j)).collect()
        } else {
            Vec::new()
        };
        let moves = selections * dirs.len() as u64;
        let attacks = selections * targets.len() as u64;
        let mut k = rng.gen_range(0..1 + moves + attacks);
        if k == 0 {
            return StructuredAction::NOOP;
        }
        k -= 1;
        let (options, verb) = if k < moves { (dirs.len() as u64, Verb::Move) } else {
            k -= moves;
            (targets.len() as u64, Verb::Attack)
        };
        let (subset, choice) = (k / options + 1, (k % options) as usize);
        let who = slots
            .iter()
            .enumerate()
            .filter(|(bit, _)| subset & (1 << bit) != 0)
            .fold(0u8, |acc, (_, slot)| acc | (1 << slot));
        match verb {
            Verb::Move => StructuredAction::move_dir(who, dirs[choice]),
            _ => StructuredAction::attack(who, targets[choice]),
        }
    }
}

impl Agent for RandomMaskedAgent {
    fn name(&self) -> &'static str {
        "random"
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a6e7);
    }

    fn act(&mut self, env: &Env, last: &StepResult) -> Action {
        let world = env.world();
        match last.mask.to_action_mask(world.enemy_count()) {
            Some(mask) => Action::Structured(Self::sample(&mask, &mut self.rng)),
            None => {
                let limit = flat_action_count(world.enemy_count()) as u32;
                Action::Flat((0..world.friendly_count()).map(|_| self.rng.gen_range(0..limit)).collect())
            }
        }
    }
}

/// Walks the whole group toward the beacon along the grid path of the
/// friendly unit closest to it.
#[derive(Debug, Default, Clone)]
pub struct BeaconGreedyAgent;

/// How far along the path the steering waypoint may sit.
const LOOKAHEAD_CELLS: usize = 6;

impl BeaconGreedyAgent {
    pub fn decide(world: &WorldState) -> StructuredAction {
        let who = alive_bits(world);
        let Some(lead) = world
            .friendlies()
            .iter()
            .filter(|u| u.alive)
            .min_by(|a, b| {
                a.pos.distance(&world.beacon).total_cmp(&b.pos.distance(&world.beacon))
            })
        else {
            return StructuredAction::NOOP;
        };
        let grid = &world.grid;
        let waypoint = match find_path(grid, lead.pos, world.beacon) {
            Ok(Some(path)) => path
                .iter()
                .take(LOOKAHEAD_CELLS + 1)
                .rev()
                .find(|p| grid.segment_clear(lead.pos, **p))
                .copied()
                .unwrap_or(world.beacon),
            _ => world.beacon,
        };
        let dir = steer(world, lead.pos, waypoint);
        StructuredAction::move_dir(who, dir)
    }
}

/// Best-aligned direction toward `target` that actually moves a unit at
/// `from`; falls back through the compass by angular distance.
fn steer(world: &WorldState, from: Position, target: Position) -> Direction {
    let (dx, dy) = (target.x - from.x, target.y - from.y);
    let mut dirs = Direction::ALL;
    dirs.sort_by(|a, b| {
        let (ax, ay) = a.unit_vector();
        let (bx, by) = b.unit_vector();
        (bx * dx + by * dy).total_cmp(&(ax * dx + ay * dy))
    });
    let speed = world.params.move_speed;
    dirs.into_iter()
        .find(|d| apply_move(from, *d, &world.grid, speed) != from)
        .unwrap_or_else(|| Direction::best_aligned(dx, dy))
}

impl Agent for BeaconGreedyAgent {
    fn name(&self) -> &'static str {
        "beacon-greedy"
    }

    fn act(&mut self, env: &Env, _last: &StepResult) -> Action {
        convert(env, Self::decide(env.world()))
    }
}

/// Every living friendly attacks the weakest living enemy (lowest id on ties).
#[derive(Debug, Default, Clone)]
pub struct FocusFireAgent;

impl FocusFireAgent {
    pub fn decide(world: &WorldState) -> StructuredAction {
        let target = world
            .enemies()
            .iter()
            .filter(|u| u.alive)
            .min_by_key(|u| (u.hp, u.id))
            .map(|u| u.slot);
        let who = alive_bits(world);
        match target {
            Some(slot) if who != 0 => StructuredAction::attack(who, Some(slot)),
            _ => StructuredAction::NOOP,
        }
    }
}

impl Agent for FocusFireAgent {
    fn name(&self) -> &'static str {
        "focus-fire"
    }

    fn act(&mut self, env: &Env, _last: &StepResult) -> Action {
        convert(env, Self::decide(env.world()))
    }
}

pub const AGENT_NAMES: [&str; 4] = ["random", "beacon-greedy", "focus-fire", "idle"];

pub fn make_agent(name: &str, seed: u64) -> Option<Box<dyn Agent + Send>> {
    Some(match name {
        "random" => Box::new(RandomMaskedAgent::new(seed)),
        "beacon-greedy" => Box::new(BeaconGreedyAgent),
        "focus-fire" => Box::new(FocusFireAgent),
        "idle" => Box::new(IdleAgent),
        _ => return None,
    })
}

/// Branch mask of the current world, whatever the profile exposes.
pub fn full_mask(env: &Env) -> ActionMask {
    match env.mask() {
        MaskView::Branch(m) => m,
        _ => branch_mask(env.world()),
    }
}

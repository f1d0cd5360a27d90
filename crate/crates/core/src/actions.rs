//! Structured and flat action spaces with their legality masks.
//!
//! A structured action is `(verb, who, direction, enemy_idx)`: one decision
//! broadcast to every selected friendly unit. The flat space gives each
//! friendly unit its own code in `0..9 + N_E`: 0 is no-op, 1–8 the compass
//! moves starting at north, and `9 + j` attacks enemy slot `j`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{apply_move, Order, WorldState};
use crate::spawn::FRIENDLY_COUNT;
use crate::world::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    NoOp,
    Move,
    Attack,
}

impl Verb {
    pub const ALL: [Verb; 3] = [Verb::NoOp, Verb::Move, Verb::Attack];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Bit `i` of `who` selects friendly slot `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructuredAction {
    pub verb: Verb,
    pub who: u8,
    pub direction: Option<Direction>,
    /// `None` is the null target.
    pub enemy_idx: Option<usize>,
}

impl StructuredAction {
    pub const NOOP: StructuredAction =
        StructuredAction { verb: Verb::NoOp, who: 0, direction: None, enemy_idx: None };

    pub fn move_dir(who: u8, direction: Direction) -> Self {
        Self { verb: Verb::Move, who, direction: Some(direction), enemy_idx: None }
    }

    pub fn attack(who: u8, enemy_idx: Option<usize>) -> Self {
        Self { verb: Verb::Attack, who, direction: None, enemy_idx }
    }

    pub fn selects(&self, slot: usize) -> bool {
        slot < 8 && self.who & (1 << slot) != 0
    }
}

/// Per-branch availability. `enemy` has one entry per enemy slot plus a
/// final entry for the null target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMask {
    pub verb: [bool; 3],
    pub who: [bool; FRIENDLY_COUNT],
    pub direction: [bool; 8],
    pub enemy: Vec<bool>,
}

impl ActionMask {
    /// Bit set of the legal `who` slots.
    pub fn who_bits(&self) -> u8 {
        self.who
            .iter()
            .enumerate()
            .filter(|(_, ok)| **ok)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// Checks `action` against every branch it uses. The error names the
    /// first offending branch.
    pub fn check(&self, action: &StructuredAction) -> Result<(), ActionError> {
        if !self.verb[action.verb.index()] {
            return Err(ActionError::InvalidVerb(action.verb));
        }
        match action.verb {
            Verb::NoOp => Ok(()),
            Verb::Move => {
                self.check_who(action.who)?;
                match action.direction {
                    Some(d) if self.direction[d.index()] => Ok(()),
                    other => Err(ActionError::InvalidDirection(other)),
                }
            }
            Verb::Attack => {
                self.check_who(action.who)?;
                let null = self.enemy.len() - 1;
                let open = match action.enemy_idx {
                    Some(j) => j < null && self.enemy[j],
                    None => self.enemy[null],
                };
                if open {
                    Ok(())
                } else {
                    Err(ActionError::InvalidTarget(action.enemy_idx))
                }
            }
        }
    }

    pub fn permits(&self, action: &StructuredAction) -> bool {
        self.check(action).is_ok()
    }

    fn check_who(&self, who: u8) -> Result<(), ActionError> {
        if who == 0 || who & !self.who_bits() != 0 {
            Err(ActionError::InvalidSelection(who))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("verb {0:?} is not available")]
    InvalidVerb(Verb),
    #[error("enemy target {0:?} is not available")]
    InvalidTarget(Option<usize>),
    #[error("selection {0:#07b} is empty or includes unavailable units")]
    InvalidSelection(u8),
    #[error("direction {0:?} is not available")]
    InvalidDirection(Option<Direction>),
    #[error("flat action code {code} out of range (limit {limit})")]
    InvalidAction { code: u32, limit: u32 },
    #[error("expected {expected} per-unit codes, got {got}")]
    CodeCount { expected: usize, got: usize },
}

/// Size of the per-unit flat action space.
pub fn flat_action_count(enemy_count: usize) -> usize {
    9 + enemy_count
}

/// Move needs a living friendly, attack a living enemy; no-op is always
/// available. A finished episode only offers no-op.
pub fn verb_mask(world: &WorldState) -> [bool; 3] {
    if world.is_terminated() {
        return [true, false, false];
    }
    [true, world.friendly_alive() > 0, world.enemy_alive() > 0]
}

/// Directions along which at least one living friendly would actually move.
pub fn direction_mask(world: &WorldState) -> [bool; 8] {
    let mut mask = [false; 8];
    if world.is_terminated() {
        return mask;
    }
    for u in world.friendlies().iter().filter(|u| u.alive) {
        for dir in Direction::ALL {
            if !mask[dir.index()]
                && apply_move(u.pos, dir, &world.grid, world.params.move_speed) != u.pos
            {
                mask[dir.index()] = true;
            }
        }
    }
    mask
}

/// Branch-level masks over verb, selection, direction and target.
pub fn branch_mask(world: &WorldState) -> ActionMask {
    let live = !world.is_terminated();
    let mut who = [false; FRIENDLY_COUNT];
    for (slot, u) in world.friendlies().iter().enumerate().take(FRIENDLY_COUNT) {
        who[slot] = live && u.alive;
    }
    let direction = direction_mask(world);
    let mut enemy: Vec<bool> = world.enemies().iter().map(|u| live && u.alive).collect();
    enemy.push(true);
    let mut verb = verb_mask(world);
    verb[Verb::Move.index()] &= direction.iter().any(|d| *d);
    ActionMask { verb, who, direction, enemy }
}

/// Mask for the verb-only regime: the verb branch is restricted, every
/// other branch is left open and resolved leniently by the decoder.
pub fn verb_level_mask(world: &WorldState) -> ActionMask {
    ActionMask {
        verb: verb_mask(world),
        who: [true; FRIENDLY_COUNT],
        direction: [true; 8],
        enemy: vec![true; world.enemy_count() + 1],
    }
}

/// Turns a structured action into one order per friendly slot.
///
/// Selected living units receive the verb's order; everyone else gets
/// `NoOp`. An attack on the null target holds position. Under the verb-level
/// mask a selection of only dead units is accepted and commands nobody.
pub fn decode_structured(
    action: &StructuredAction,
    mask: &ActionMask,
    world: &WorldState,
) -> Result<Vec<Order>, ActionError> {
    let n = world.friendly_count();
    mask.check(action)?;

    let order = match action.verb {
        Verb::NoOp => return Ok(vec![Order::NoOp; n]),
        Verb::Move => Order::MoveDir(action.direction.expect("checked by mask")),
        Verb::Attack => match action.enemy_idx {
            Some(j) => Order::AttackTarget(world.enemy_id(j)),
            None => Order::NoOp,
        },
    };
    Ok(world
        .friendlies()
        .iter()
        .enumerate()
        .map(|(slot, u)| if u.alive && action.selects(slot) { order } else { Order::NoOp })
        .collect())
}

/// Maps per-unit flat codes to orders. Codes for dead units and attacks on
/// dead enemies become `NoOp`.
pub fn decode_flat(codes: &[u32], world: &WorldState) -> Result<Vec<Order>, ActionError> {
    let n = world.friendly_count();
    if codes.len() != n {
        return Err(ActionError::CodeCount { expected: n, got: codes.len() });
    }
    let limit = flat_action_count(world.enemy_count()) as u32;
    codes
        .iter()
        .zip(world.friendlies())
        .map(|(&code, unit)| {
            if code >= limit {
                return Err(ActionError::InvalidAction { code, limit });
            }
            if !unit.alive {
                return Ok(Order::NoOp);
            }
            Ok(match code {
                0 => Order::NoOp,
                1..=8 => Order::MoveDir(Direction::ALL[code as usize - 1]),
                _ => {
                    let slot = code as usize - 9;
                    if world.enemy(slot).alive {
                        Order::AttackTarget(world.enemy_id(slot))
                    } else {
                        Order::NoOp
                    }
                }
            })
        })
        .collect()
}

/// Per-unit flat codes equivalent to a structured action.
pub fn structured_to_flat(action: &StructuredAction, friendly_count: usize) -> Vec<u32> {
    let code = match action.verb {
        Verb::NoOp => 0,
        Verb::Move => action.direction.map_or(0, |d| d.index() as u32 + 1),
        Verb::Attack => action.enemy_idx.map_or(0, |j| 9 + j as u32),
    };
    (0..friendly_count)
        .map(|slot| if action.verb != Verb::NoOp && action.selects(slot) { code } else { 0 })
        .collect()
}

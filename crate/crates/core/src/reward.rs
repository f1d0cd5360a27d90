//! Shaped reward stack for exp2/exp3 and the simpler pilot reward.

use serde::{Deserialize, Serialize};

use crate::engine::{Outcome, UnitState, WorldState};
use crate::world::Position;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub nav: f64,
    pub combat_dist: f64,
    pub combat_hp: f64,
    pub combat_events: f64,
    pub terminal: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Builds a breakdown with `total` summed in field order.
    pub fn new(nav: f64, combat_dist: f64, combat_hp: f64, combat_events: f64, terminal: f64) -> Self {
        let total = nav + combat_dist + combat_hp + combat_events + terminal;
        Self { nav, combat_dist, combat_hp, combat_events, terminal, total }
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalTable {
    pub nav_win: f64,
    pub combat_win: f64,
    pub combat_loss: f64,
    pub timeout: f64,
    pub tie: f64,
}

impl TerminalTable {
    pub const SHAPED: TerminalTable =
        TerminalTable { nav_win: 25.0, combat_win: 10.0, combat_loss: -10.0, timeout: -15.0, tie: 0.0 };
    /// Pilot rewards treat every win alike and a timeout as an ordinary loss.
    pub const PILOT: TerminalTable =
        TerminalTable { nav_win: 10.0, combat_win: 10.0, combat_loss: -10.0, timeout: -10.0, tie: 0.0 };

    pub fn lookup(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::NavigationVictory => self.nav_win,
            Outcome::CombatVictory => self.combat_win,
            Outcome::CombatLoss => self.combat_loss,
            Outcome::TimeoutLoss => self.timeout,
            Outcome::Tie => self.tie,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub hp_scale: f64,
    pub kill_bonus: f64,
    pub casualty_penalty: f64,
    pub dist_scale: f64,
    pub terminal_table: TerminalTable,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            hp_scale: 0.01,
            kill_bonus: 2.0,
            casualty_penalty: 2.0,
            dist_scale: 1.0,
            terminal_table: TerminalTable::SHAPED,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = [self.hp_scale, self.kill_bonus, self.casualty_penalty, self.dist_scale]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !ok {
            return Err("reward scales must be positive".into());
        }
        if self.terminal_table != TerminalTable::SHAPED {
            return Err("terminal table is fixed".into());
        }
        Ok(())
    }
}

pub fn terminal_reward(outcome: Outcome) -> f64 {
    TerminalTable::SHAPED.lookup(outcome)
}

fn alive_ids(units: &[UnitState]) -> impl Iterator<Item = u16> + '_ {
    units.iter().filter(|u| u.alive).map(|u| u.id.0)
}

fn same_alive_set(a: &[UnitState], b: &[UnitState]) -> bool {
    alive_ids(a).eq(alive_ids(b))
}

fn avg_dist(units: &[UnitState], target: Position) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for u in units.iter().filter(|u| u.alive) {
        sum += u.pos.distance(&target);
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Mean distance of the living friendlies to the beacon; `None` if none live.
pub fn avg_beacon_dist(world: &WorldState) -> Option<f64> {
    avg_dist(world.friendlies(), world.beacon)
}

/// Decrease in mean friendly distance to the beacon. Zero when the set of
/// living friendlies changed during the step.
pub fn nav_shaping(prev: &WorldState, cur: &WorldState) -> f64 {
    if !same_alive_set(prev.friendlies(), cur.friendlies()) {
        return 0.0;
    }
    match (avg_beacon_dist(prev), avg_beacon_dist(cur)) {
        (Some(a), Some(b)) => a - b,
        _ => 0.0,
    }
}

fn enemy_centroid(world: &WorldState) -> Option<Position> {
    Position::centroid(world.enemies().iter().filter(|u| u.alive).map(|u| u.pos))
}

fn team_hp(units: &[UnitState]) -> f64 {
    units.iter().map(|u| u.hp as f64).sum()
}

/// Returns `(combat_dist, combat_hp, combat_events)`.
pub fn combat_shaping(prev: &WorldState, cur: &WorldState, params: &RewardParams) -> (f64, f64, f64) {
    let sets_stable = same_alive_set(prev.friendlies(), cur.friendlies())
        && same_alive_set(prev.enemies(), cur.enemies());
    let dist = if sets_stable {
        let before = enemy_centroid(prev).and_then(|c| avg_dist(prev.friendlies(), c));
        let after = enemy_centroid(cur).and_then(|c| avg_dist(cur.friendlies(), c));
        match (before, after) {
            (Some(a), Some(b)) => params.dist_scale * (a - b),
            _ => 0.0,
        }
    } else {
        0.0
    };

    let enemy_loss = team_hp(prev.enemies()) - team_hp(cur.enemies());
    let friendly_loss = team_hp(prev.friendlies()) - team_hp(cur.friendlies());
    let hp = params.hp_scale * (enemy_loss - friendly_loss);

    let kills = prev.enemy_alive() - cur.enemy_alive();
    let losses = prev.friendly_alive() - cur.friendly_alive();
    let events = params.kill_bonus * kills as f64 - params.casualty_penalty * losses as f64;
    (dist, hp, events)
}

/// Full exp2/exp3 reward for one agent step.
pub fn shaped_reward(
    prev: &WorldState,
    cur: &WorldState,
    outcome: Option<Outcome>,
    params: &RewardParams,
) -> RewardBreakdown {
    let nav = params.dist_scale * nav_shaping(prev, cur);
    let (dist, hp, events) = combat_shaping(prev, cur, params);
    let terminal = outcome.map_or(0.0, |o| params.terminal_table.lookup(o));
    RewardBreakdown::new(nav, dist, hp, events, terminal)
}

/// Pilot reward. The navigation term follows the leading unit (lowest id
/// alive at the start of the step) and is zero if that unit died during it.
/// The combat term is carried in `combat_events`.
pub fn pilot_reward(prev: &WorldState, cur: &WorldState, outcome: Option<Outcome>) -> RewardBreakdown {
    let nav = prev
        .friendlies()
        .iter()
        .find(|u| u.alive)
        .and_then(|leader| {
            let now = &cur.friendlies()[leader.slot];
            now.alive.then(|| {
                leader.pos.distance(&prev.beacon) - now.pos.distance(&cur.beacon)
            })
        })
        .unwrap_or(0.0);
    let kills = prev.enemy_alive() as f64 - cur.enemy_alive() as f64;
    let losses = prev.friendly_alive() as f64 - cur.friendly_alive() as f64;
    let terminal = outcome.map_or(0.0, |o| TerminalTable::PILOT.lookup(o));
    RewardBreakdown::new(nav, 0.0, 0.0, kills - losses, terminal)
}

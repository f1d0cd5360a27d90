//! Deterministic tick dynamics.
//!
//! One tick runs these phases in order:
//!
//! 1. enemy AI refreshes provocation flags and orders
//! 2. movement, ascending unit id
//! 3. attacks, ascending unit id; damage is accumulated against the hp
//!    every unit had when the phase began and applied together
//! 4. deaths
//! 5. cooldown decrement
//! 6. tick counter advances and termination is checked
//!
//! Units overlap freely; only terrain blocks movement. Attacks ignore
//! terrain and use plain Euclidean range.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spawn::SpawnAssignment;
use crate::world::{Direction, Position, TerrainGrid};

/// Simulation rate in ticks per second of game time.
pub const TICKS_PER_SECOND: u32 = 16;
/// Five minutes of game time.
pub const DEFAULT_TICK_LIMIT: u32 = 5 * 60 * TICKS_PER_SECOND;
/// Marine hit points.
pub const MAX_HP: u32 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u16);

impl UnitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Friendly,
    Enemy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "arg")]
pub enum Order {
    NoOp,
    MoveDir(Direction),
    AttackTarget(UnitId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitState {
    /// Stable ordering key: friendlies take ids `0..F`, enemies `F..F+E`.
    pub id: UnitId,
    pub team: Team,
    /// Index within the unit's own team.
    pub slot: usize,
    pub pos: Position,
    pub hp: u32,
    pub cooldown_remaining: u32,
    pub alive: bool,
    /// Sticky aggro flag; only ever set on enemies.
    pub provoked: bool,
    pub current_order: Order,
    /// Whether the unit was part of the last issued selection.
    pub selected: bool,
}

/// Unit and objective constants. Speeds and durations are per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombatParams {
    pub max_hp: u32,
    pub damage_per_shot: u32,
    pub attack_range: f64,
    pub cooldown_ticks: u32,
    pub move_speed: f64,
    pub acquisition_range: f64,
    pub unit_radius: f64,
    pub capture_radius: f64,
}

impl Default for CombatParams {
    fn default() -> Self {
        Self {
            max_hp: MAX_HP,
            damage_per_shot: 6,
            attack_range: 5.0,
            // 0.86 s at 16 ticks/s
            cooldown_ticks: 14,
            // 3.15 world units per second
            move_speed: 3.15 / TICKS_PER_SECOND as f64,
            acquisition_range: 6.0,
            unit_radius: 0.5,
            capture_radius: 2.0,
        }
    }
}

impl CombatParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.attack_range,
            self.move_speed,
            self.acquisition_range,
            self.unit_radius,
            self.capture_radius,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_hp == 0 || self.damage_per_shot == 0 || self.cooldown_ticks == 0 {
            return Err("combat parameters must all be positive".into());
        }
        if self.acquisition_range < self.attack_range {
            return Err("acquisition_range must be at least attack_range".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    NavigationVictory,
    CombatVictory,
    CombatLoss,
    Tie,
    TimeoutLoss,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::NavigationVictory,
        Outcome::CombatVictory,
        Outcome::CombatLoss,
        Outcome::Tie,
        Outcome::TimeoutLoss,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::NavigationVictory => "navigation_victory",
            Outcome::CombatVictory => "combat_victory",
            Outcome::CombatLoss => "combat_loss",
            Outcome::Tie => "tie",
            Outcome::TimeoutLoss => "timeout_loss",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("world already terminated")]
    Terminated,
    #[error("expected {expected} friendly orders, got {got}")]
    OrderCount { expected: usize, got: usize },
    #[error("unit {0} does not exist")]
    UnknownUnit(UnitId),
    #[error("unit {0} is not a valid attack target")]
    InvalidTarget(UnitId),
}

/// What an attack order does this tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackResolution {
    /// Target is dead; the order collapses to `NoOp`.
    Degrade,
    /// In range with a ready weapon.
    Fire,
    /// In range, weapon cooling down.
    Hold,
    /// Out of range; the unit's next position on its way to the target.
    Advance(Position),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u32,
    pub units: Vec<UnitState>,
    pub beacon: Position,
    pub grid: Arc<TerrainGrid>,
    pub outcome: Option<Outcome>,
    pub params: CombatParams,
    pub tick_limit: u32,
    friendly_count: usize,
}

impl WorldState {
    pub fn new(
        grid: Arc<TerrainGrid>,
        friendly_positions: &[Position],
        enemy_positions: &[Position],
        beacon: Position,
        params: CombatParams,
        tick_limit: u32,
    ) -> Self {
        let unit = |i: usize, team, slot, pos| UnitState {
            id: UnitId(i as u16),
            team,
            slot,
            pos,
            hp: params.max_hp,
            cooldown_remaining: 0,
            alive: true,
            provoked: false,
            current_order: Order::NoOp,
            selected: false,
        };
        let friendly_count = friendly_positions.len();
        let units = friendly_positions
            .iter()
            .enumerate()
            .map(|(s, p)| unit(s, Team::Friendly, s, *p))
            .chain(
                enemy_positions
                    .iter()
                    .enumerate()
                    .map(|(s, p)| unit(friendly_count + s, Team::Enemy, s, *p)),
            )
            .collect();
        Self {
            tick: 0,
            units,
            beacon,
            grid,
            outcome: None,
            params,
            tick_limit,
            friendly_count,
        }
    }

    pub fn from_spawn(
        grid: Arc<TerrainGrid>,
        spawn: &SpawnAssignment,
        params: CombatParams,
        tick_limit: u32,
    ) -> Self {
        Self::new(
            grid,
            &spawn.friendly_positions,
            &spawn.enemy_positions,
            spawn.beacon_position,
            params,
            tick_limit,
        )
    }

    pub fn friendly_count(&self) -> usize {
        self.friendly_count
    }

    pub fn enemy_count(&self) -> usize {
        self.units.len() - self.friendly_count
    }

    pub fn friendlies(&self) -> &[UnitState] {
        &self.units[..self.friendly_count]
    }

    pub fn enemies(&self) -> &[UnitState] {
        &self.units[self.friendly_count..]
    }

    pub fn friendly(&self, slot: usize) -> &UnitState {
        &self.friendlies()[slot]
    }

    pub fn enemy(&self, slot: usize) -> &UnitState {
        &self.enemies()[slot]
    }

    pub fn enemy_id(&self, slot: usize) -> UnitId {
        UnitId((self.friendly_count + slot) as u16)
    }

    pub fn unit(&self, id: UnitId) -> Option<&UnitState> {
        self.units.get(id.index())
    }

    /// F_t
    pub fn friendly_alive(&self) -> usize {
        self.friendlies().iter().filter(|u| u.alive).count()
    }

    /// E_t
    pub fn enemy_alive(&self) -> usize {
        self.enemies().iter().filter(|u| u.alive).count()
    }

    pub fn is_terminated(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.tick as f64 / TICKS_PER_SECOND as f64
    }

    /// Marks which friendly slots belong to the current selection.
    pub fn set_selection(&mut self, selected: &[bool]) {
        let fc = self.friendly_count;
        for (u, s) in self.units[..fc].iter_mut().zip(selected) {
            u.selected = *s && u.alive;
        }
    }

    /// Advances one tick with the given per-slot friendly orders.
    pub fn tick(&mut self, friendly_orders: &[Order]) -> Result<(), EngineError> {
        if self.outcome.is_some() {
            return Err(EngineError::Terminated);
        }
        if friendly_orders.len() != self.friendly_count {
            return Err(EngineError::OrderCount {
                expected: self.friendly_count,
                got: friendly_orders.len(),
            });
        }
        for order in friendly_orders {
            if let Order::AttackTarget(t) = order {
                match self.unit(*t) {
                    None => return Err(EngineError::UnknownUnit(*t)),
                    Some(u) if u.team != Team::Enemy => return Err(EngineError::InvalidTarget(*t)),
                    Some(_) => {}
                }
            }
        }
        for (u, order) in self.units.iter_mut().zip(friendly_orders) {
            u.current_order = if u.alive { *order } else { Order::NoOp };
        }

        // 1. enemy AI
        let enemy_orders = enemy_ai_step(self);
        let fc = self.friendly_count;
        for (u, order) in self.units[fc..].iter_mut().zip(enemy_orders) {
            u.current_order = order;
        }

        // 2. movement
        for i in 0..self.units.len() {
            let unit = &self.units[i];
            if !unit.alive {
                continue;
            }
            match unit.current_order {
                Order::NoOp => {}
                Order::MoveDir(dir) => {
                    let pos = apply_move(unit.pos, dir, &self.grid, self.params.move_speed);
                    self.units[i].pos = pos;
                }
                Order::AttackTarget(target) => match apply_attack_order(self, unit.id, target)? {
                    AttackResolution::Degrade => self.units[i].current_order = Order::NoOp,
                    AttackResolution::Advance(pos) => self.units[i].pos = pos,
                    AttackResolution::Fire | AttackResolution::Hold => {}
                },
            }
        }

        // 3. attacks against pre-phase hp
        let mut damage = vec![0u32; self.units.len()];
        for i in 0..self.units.len() {
            let unit = &self.units[i];
            if !unit.alive {
                continue;
            }
            if let Order::AttackTarget(target) = unit.current_order {
                match apply_attack_order(self, unit.id, target)? {
                    AttackResolution::Fire => {
                        damage[target.index()] += self.params.damage_per_shot;
                        self.units[i].cooldown_remaining = self.params.cooldown_ticks;
                    }
                    AttackResolution::Degrade => self.units[i].current_order = Order::NoOp,
                    AttackResolution::Hold | AttackResolution::Advance(_) => {}
                }
            }
        }
        for (u, dmg) in self.units.iter_mut().zip(&damage) {
            if *dmg > 0 {
                u.hp = u.hp.saturating_sub(*dmg);
                if u.team == Team::Enemy {
                    u.provoked = true;
                }
            }
        }

        // 4. deaths
        for u in self.units.iter_mut().filter(|u| u.alive && u.hp == 0) {
            u.alive = false;
            u.current_order = Order::NoOp;
            u.cooldown_remaining = 0;
            u.selected = false;
        }

        // 5. cooldowns
        for u in self.units.iter_mut().filter(|u| u.alive) {
            u.cooldown_remaining = u.cooldown_remaining.saturating_sub(1);
        }

        // 6. clock and termination
        self.tick += 1;
        self.outcome = check_termination(self, self.tick_limit);
        Ok(())
    }

    /// Fixed-order byte encoding of everything that defines the state.
    /// Coordinates are rounded to micro-units.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        fn fixed(v: f64) -> [u8; 8] {
            ((v * 1e6).round() as i64).to_le_bytes()
        }
        let mut out = Vec::with_capacity(32 + self.units.len() * 48);
        out.extend_from_slice(&self.tick.to_le_bytes());
        out.push(self.outcome.map_or(0, |o| o.index() as u8 + 1));
        out.extend_from_slice(&fixed(self.beacon.x));
        out.extend_from_slice(&fixed(self.beacon.y));
        out.extend_from_slice(&(self.units.len() as u32).to_le_bytes());
        for u in &self.units {
            out.extend_from_slice(&u.id.0.to_le_bytes());
            out.push(u.team as u8);
            out.extend_from_slice(&fixed(u.pos.x));
            out.extend_from_slice(&fixed(u.pos.y));
            out.extend_from_slice(&u.hp.to_le_bytes());
            out.extend_from_slice(&u.cooldown_remaining.to_le_bytes());
            out.extend_from_slice(&[u.alive as u8, u.provoked as u8, u.selected as u8]);
            match u.current_order {
                Order::NoOp => out.extend_from_slice(&[0, 0, 0]),
                Order::MoveDir(d) => out.extend_from_slice(&[1, d.index() as u8, 0]),
                Order::AttackTarget(t) => {
                    out.push(2);
                    out.extend_from_slice(&t.0.to_le_bytes());
                }
            }
        }
        out
    }
}

/// Position after one step of `speed` along `dir`. A destination outside the
/// map or on an impassable cell leaves the unit where it is.
pub fn apply_move(pos: Position, dir: Direction, grid: &TerrainGrid, speed: f64) -> Position {
    let (ux, uy) = dir.unit_vector();
    let next = Position::new(pos.x + ux * speed, pos.y + uy * speed);
    if grid.is_passable_pos(next) {
        next
    } else {
        pos
    }
}

/// Resolves `unit`'s attack order on `target` against the current world
/// without mutating it.
pub fn apply_attack_order(
    world: &WorldState,
    unit: UnitId,
    target: UnitId,
) -> Result<AttackResolution, EngineError> {
    let attacker = world.unit(unit).ok_or(EngineError::UnknownUnit(unit))?;
    let victim = world.unit(target).ok_or(EngineError::UnknownUnit(target))?;
    if !victim.alive {
        return Ok(AttackResolution::Degrade);
    }
    if attacker.pos.distance(&victim.pos) <= world.params.attack_range {
        return Ok(if attacker.cooldown_remaining == 0 {
            AttackResolution::Fire
        } else {
            AttackResolution::Hold
        });
    }
    Ok(AttackResolution::Advance(chase_step(
        &world.grid,
        attacker.pos,
        victim.pos,
        world.params.move_speed,
    )))
}

/// One step of `speed` toward `goal`: straight when the segment is clear of
/// impassable cells, otherwise toward the center of the next cell on a
/// shortest grid path.
pub fn chase_step(grid: &TerrainGrid, from: Position, goal: Position, speed: f64) -> Position {
    let waypoint = if grid.segment_clear(from, goal) {
        goal
    } else {
        let next = match (from.cell(), goal.cell()) {
            (Some(a), Some(b)) => grid.next_cell_toward(a, b),
            _ => None,
        };
        match next {
            Some(c) => c.center(),
            None => return from,
        }
    };
    let next = from.step_toward(waypoint, speed);
    if grid.is_passable_pos(next) {
        next
    } else {
        from
    }
}

/// Built-in enemy behaviour: stand still until a friendly comes within
/// acquisition range or the unit is hit, then chase and shoot the nearest
/// living friendly (lower id on ties). Updates provocation flags and returns
/// one order per enemy slot.
pub fn enemy_ai_step(world: &mut WorldState) -> Vec<Order> {
    let fc = world.friendly_count;
    let acquisition = world.params.acquisition_range;
    let (friendlies, enemies) = world.units.split_at_mut(fc);
    enemies
        .iter_mut()
        .map(|enemy| {
            if !enemy.alive {
                return Order::NoOp;
            }
            let nearest = friendlies
                .iter()
                .filter(|f| f.alive)
                .map(|f| (f.pos.distance(&enemy.pos), f.id))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((d, _)) = nearest {
                if d <= acquisition {
                    enemy.provoked = true;
                }
            }
            match nearest {
                Some((_, id)) if enemy.provoked => Order::AttackTarget(id),
                _ => Order::NoOp,
            }
        })
        .collect()
}

/// Evaluates the terminal conditions in priority order: beacon capture,
/// tie, combat victory, combat loss, timeout.
pub fn check_termination(world: &WorldState, tick_limit: u32) -> Option<Outcome> {
    let captured = world
        .friendlies()
        .iter()
        .any(|u| u.alive && u.pos.distance(&world.beacon) <= world.params.capture_radius);
    let (f, e) = (world.friendly_alive(), world.enemy_alive());
    if captured {
        Some(Outcome::NavigationVictory)
    } else if e == 0 && f == 0 {
        Some(Outcome::Tie)
    } else if e == 0 {
        Some(Outcome::CombatVictory)
    } else if f == 0 {
        Some(Outcome::CombatLoss)
    } else if world.tick >= tick_limit {
        Some(Outcome::TimeoutLoss)
    } else {
        None
    }
}

//! Vector and spatial observations.
//!
//! Vector layout, all coordinates divided by the map size:
//!
//! ```text
//! per friendly slot (5):  x, y, hp/45, cooldown/cooldown_ticks, dist_to_beacon
//! per enemy slot (N_E):   x, y, hp/45, cooldown/cooldown_ticks
//! beacon:                 x, y
//! elapsed game time in seconds
//! enemies remaining (E_t)
//! ```
//!
//! Dead slots are zero-filled, so the length is `25 + 4 * N_E + 4`.
//!
//! Spatial planes are stored channel-first, row-major, one byte per cell
//! (0–255 maps to 0–1). The screen is a 64×64 raster of a square window of
//! `screen_extent` world units around the camera center; the minimap rasters
//! the full map and does not depend on the camera.

use serde::{Deserialize, Serialize};

use crate::engine::{Team, UnitState, WorldState};
use crate::spawn::FRIENDLY_COUNT;
use crate::world::{Cell, Position, MAP_SIZE};

pub const RESOLUTION: usize = 64;
pub const SCREEN_CHANNELS: usize = 17;
pub const MINIMAP_CHANNELS: usize = 7;
pub const DEFAULT_SCREEN_EXTENT: f64 = 24.0;

/// Screen channel indices. Channels 9..17 are reserved and always zero.
pub mod screen {
    pub const PASSABLE: usize = 0;
    pub const FRIENDLY: usize = 1;
    pub const ENEMY: usize = 2;
    pub const FRIENDLY_HP: usize = 3;
    pub const ENEMY_HP: usize = 4;
    pub const BEACON: usize = 5;
    pub const COOLDOWN: usize = 6;
    pub const SELECTED: usize = 7;
    /// Part of the camera window that lies on the map.
    pub const CAMERA_EXTENT: usize = 8;
    pub const NAMES: [&str; 9] = [
        "passable",
        "friendly",
        "enemy",
        "friendly_hp",
        "enemy_hp",
        "beacon",
        "cooldown",
        "selected",
        "camera_extent",
    ];
}

/// Minimap channel indices.
pub mod minimap {
    pub const PASSABLE: usize = 0;
    pub const FRIENDLY: usize = 1;
    pub const ENEMY: usize = 2;
    pub const FRIENDLY_HP: usize = 3;
    pub const ENEMY_HP: usize = 4;
    pub const BEACON: usize = 5;
    pub const SELECTED: usize = 6;
    pub const NAMES: [&str; 7] =
        ["passable", "friendly", "enemy", "friendly_hp", "enemy_hp", "beacon", "selected"];
}

pub fn vector_len(enemy_count: usize) -> usize {
    FRIENDLY_COUNT * 5 + enemy_count * 4 + 4
}

/// Field names of the vector observation, in order.
pub fn vector_field_names(enemy_count: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(vector_len(enemy_count));
    for i in 0..FRIENDLY_COUNT {
        for f in ["x", "y", "hp", "cooldown", "dist_to_beacon"] {
            names.push(format!("friendly{i}.{f}"));
        }
    }
    for j in 0..enemy_count {
        for f in ["x", "y", "hp", "cooldown"] {
            names.push(format!("enemy{j}.{f}"));
        }
    }
    names.extend(["beacon.x", "beacon.y", "elapsed_time", "enemies_remaining"].map(String::from));
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorFeatures(pub Vec<f64>);

impl VectorFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn build_vector(world: &WorldState) -> VectorFeatures {
    let size = MAP_SIZE as f64;
    let hp_norm = world.params.max_hp as f64;
    let cd_norm = world.params.cooldown_ticks as f64;
    let mut v = Vec::with_capacity(vector_len(world.enemy_count()));
    for u in world.friendlies().iter().take(FRIENDLY_COUNT) {
        if u.alive {
            v.extend([
                u.pos.x / size,
                u.pos.y / size,
                u.hp as f64 / hp_norm,
                u.cooldown_remaining as f64 / cd_norm,
                u.pos.distance(&world.beacon) / size,
            ]);
        } else {
            v.extend([0.0; 5]);
        }
    }
    for u in world.enemies() {
        if u.alive {
            v.extend([
                u.pos.x / size,
                u.pos.y / size,
                u.hp as f64 / hp_norm,
                u.cooldown_remaining as f64 / cd_norm,
            ]);
        } else {
            v.extend([0.0; 4]);
        }
    }
    v.extend([
        world.beacon.x / size,
        world.beacon.y / size,
        world.elapsed_seconds(),
        world.enemy_alive() as f64,
    ]);
    VectorFeatures(v)
}

/// Channel-first stack of byte planes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planes {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl Planes {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![0; channels * height * width] }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> u8 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Value scaled back to `[0, 1]`.
    pub fn value(&self, c: usize, y: usize, x: usize) -> f64 {
        self.get(c, y, x) as f64 / 255.0
    }

    pub fn channel(&self, c: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    fn raise(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let byte = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let i = (c * self.height + y) * self.width + x;
        self.data[i] = self.data[i].max(byte);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialFeatures {
    pub screen: Planes,
    pub minimap: Planes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraMode {
    Free,
    Locked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub mode: CameraMode,
    pub center: Position,
    pub screen_extent: f64,
}

impl CameraState {
    pub fn new(mode: CameraMode, center: Position) -> Self {
        Self { mode, center, screen_extent: DEFAULT_SCREEN_EXTENT }
    }

    /// Maps a world point to a screen pixel, if it falls inside the window.
    pub fn to_pixel(&self, p: Position) -> Option<(usize, usize)> {
        let pix = self.screen_extent / RESOLUTION as f64;
        let fx = ((p.x - self.center.x) / pix + RESOLUTION as f64 / 2.0).floor();
        let fy = ((p.y - self.center.y) / pix + RESOLUTION as f64 / 2.0).floor();
        let in_range = |v: f64| v >= 0.0 && v < RESOLUTION as f64;
        (in_range(fx) && in_range(fy)).then_some((fx as usize, fy as usize))
    }

    fn pixel_center(&self, px: usize, py: usize) -> Position {
        let pix = self.screen_extent / RESOLUTION as f64;
        let half = self.screen_extent / 2.0;
        Position::new(
            self.center.x - half + (px as f64 + 0.5) * pix,
            self.center.y - half + (py as f64 + 0.5) * pix,
        )
    }
}

/// Locked cameras follow the centroid of the living friendly group (and hold
/// their last center once the group is gone); free cameras never move.
pub fn update_camera(camera: &CameraState, world: &WorldState) -> CameraState {
    match camera.mode {
        CameraMode::Free => *camera,
        CameraMode::Locked => {
            let alive = world.friendlies().iter().filter(|u| u.alive).map(|u| u.pos);
            CameraState { center: Position::centroid(alive).unwrap_or(camera.center), ..*camera }
        }
    }
}

pub fn render_spatial(world: &WorldState, camera: &CameraState) -> SpatialFeatures {
    SpatialFeatures { screen: render_screen(world, camera), minimap: render_minimap(world) }
}

fn unit_layers(u: &UnitState, world: &WorldState) -> (usize, usize, f64) {
    let hp = u.hp as f64 / world.params.max_hp as f64;
    match u.team {
        Team::Friendly => (0, 1, hp),
        Team::Enemy => (1, 0, hp),
    }
}

fn render_screen(world: &WorldState, camera: &CameraState) -> Planes {
    let mut p = Planes::zeros(SCREEN_CHANNELS, RESOLUTION, RESOLUTION);
    for py in 0..RESOLUTION {
        for px in 0..RESOLUTION {
            let c = camera.pixel_center(px, py);
            if c.cell().is_some() {
                p.raise(screen::CAMERA_EXTENT, py, px, 1.0);
            }
            if world.grid.is_passable_pos(c) {
                p.raise(screen::PASSABLE, py, px, 1.0);
            }
        }
    }
    for u in world.units.iter().filter(|u| u.alive) {
        let Some((x, y)) = camera.to_pixel(u.pos) else {
            continue;
        };
        let (enemy, friendly, hp) = unit_layers(u, world);
        if friendly == 1 {
            p.raise(screen::FRIENDLY, y, x, 1.0);
            p.raise(screen::FRIENDLY_HP, y, x, hp);
        } else {
            debug_assert_eq!(enemy, 1);
            p.raise(screen::ENEMY, y, x, 1.0);
            p.raise(screen::ENEMY_HP, y, x, hp);
        }
        let cd = u.cooldown_remaining as f64 / world.params.cooldown_ticks as f64;
        p.raise(screen::COOLDOWN, y, x, cd);
        if u.selected {
            p.raise(screen::SELECTED, y, x, 1.0);
        }
    }
    if let Some((x, y)) = camera.to_pixel(world.beacon) {
        p.raise(screen::BEACON, y, x, 1.0);
    }
    p
}

fn render_minimap(world: &WorldState) -> Planes {
    debug_assert_eq!(MAP_SIZE, RESOLUTION);
    let mut p = Planes::zeros(MINIMAP_CHANNELS, RESOLUTION, RESOLUTION);
    for y in 0..RESOLUTION {
        for x in 0..RESOLUTION {
            if world.grid.is_passable(Cell::new(x, y)) {
                p.raise(minimap::PASSABLE, y, x, 1.0);
            }
        }
    }
    for u in world.units.iter().filter(|u| u.alive) {
        let Some(c) = u.pos.cell() else { continue };
        let (_, friendly, hp) = unit_layers(u, world);
        if friendly == 1 {
            p.raise(minimap::FRIENDLY, c.y, c.x, 1.0);
            p.raise(minimap::FRIENDLY_HP, c.y, c.x, hp);
        } else {
            p.raise(minimap::ENEMY, c.y, c.x, 1.0);
            p.raise(minimap::ENEMY_HP, c.y, c.x, hp);
        }
        if u.selected {
            p.raise(minimap::SELECTED, c.y, c.x, 1.0);
        }
    }
    if let Some(c) = world.beacon.cell() {
        p.raise(minimap::BEACON, c.y, c.x, 1.0);
    }
    p
}

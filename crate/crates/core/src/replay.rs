//! Line-delimited replay logs: one JSON header line, then one record per
//! agent step.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Outcome, UnitState, WorldState};
use crate::env::{state_hash_hex, Action, Env, EnvConfig, EnvError, StepResult};
use crate::reward::RewardBreakdown;
use crate::spawn::SpawnAssignment;
use crate::world::Position;

pub const REPLAY_FORMAT: &str = "twobridge-replay/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub format: String,
    pub config: EnvConfig,
    pub spawn: SpawnAssignment,
    pub initial_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSnapshot {
    pub id: u16,
    pub pos: Position,
    pub hp: u32,
    pub cooldown: u32,
    pub alive: bool,
}

impl From<&UnitState> for UnitSnapshot {
    fn from(u: &UnitState) -> Self {
        Self { id: u.id.0, pos: u.pos, hp: u.hp, cooldown: u.cooldown_remaining, alive: u.alive }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub step: u32,
    pub action: Action,
    pub reward: RewardBreakdown,
    pub state_hash: String,
    pub outcome: Option<Outcome>,
    pub units: Vec<UnitSnapshot>,
}

impl ReplayRecord {
    pub fn new(action: &Action, result: &StepResult, world: &WorldState) -> Self {
        Self {
            step: result.info.step,
            action: action.clone(),
            reward: result.reward,
            state_hash: state_hash_hex(world),
            outcome: result.outcome,
            units: world.units.iter().map(UnitSnapshot::from).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("replay has no header line")]
    MissingHeader,
    #[error("unsupported replay format {0:?}")]
    Format(String),
    #[error("step {step}: expected hash {expected}, got {got}")]
    Mismatch { step: u32, expected: String, got: String },
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn write_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), ReplayError> {
    serde_json::to_writer(&mut *out, value).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Wraps an environment and logs every reset and step.
pub struct RecordingEnv<W: Write> {
    env: Env,
    out: W,
}

impl<W: Write> RecordingEnv<W> {
    /// Writes the header for the environment's current episode.
    pub fn new(env: Env, mut out: W) -> Result<Self, ReplayError> {
        let header = ReplayHeader {
            format: REPLAY_FORMAT.into(),
            config: env.config().clone(),
            spawn: env.spawn_assignment().clone(),
            initial_hash: state_hash_hex(env.world()),
        };
        write_line(&mut out, &header)?;
        Ok(Self { env, out })
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult, ReplayError> {
        let result = self.env.step(action)?;
        let record = ReplayRecord::new(action, &result, self.env.world());
        write_line(&mut self.out, &record)?;
        Ok(result)
    }

    pub fn finish(mut self) -> Result<W, ReplayError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn read_replay<R: BufRead>(input: R) -> Result<(ReplayHeader, Vec<ReplayRecord>), ReplayError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(s) => !s.trim().is_empty(),
        Err(_) => true,
    });
    let (_, first) = lines.next().ok_or(ReplayError::MissingHeader)?;
    let header: ReplayHeader =
        serde_json::from_str(&first?).map_err(|source| ReplayError::Parse { line: 1, source })?;
    if header.format != REPLAY_FORMAT {
        return Err(ReplayError::Format(header.format));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let record =
            serde_json::from_str(&line?).map_err(|source| ReplayError::Parse { line: i + 1, source })?;
        records.push(record);
    }
    Ok((header, records))
}

/// Re-runs the recorded actions in a fresh environment and compares every
/// state hash.
pub fn verify_replay(header: &ReplayHeader, records: &[ReplayRecord]) -> Result<(), ReplayError> {
    let mut env = Env::new(header.config.clone())?;
    let got = state_hash_hex(env.world());
    if got != header.initial_hash {
        return Err(ReplayError::Mismatch { step: 0, expected: header.initial_hash.clone(), got });
    }
    for r in records {
        env.step(&r.action)?;
        let got = state_hash_hex(env.world());
        if got != r.state_hash {
            return Err(ReplayError::Mismatch { step: r.step, expected: r.state_hash.clone(), got });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::StructuredAction;
    use crate::env::Profile;
    use crate::world::Direction;

    fn recorded() -> Vec<u8> {
        let env = Env::new(EnvConfig::new("V1_Base", Profile::Exp3, 4)).unwrap();
        let mut rec = RecordingEnv::new(env, Vec::new()).unwrap();
        for i in 0..30 {
            let dir = Direction::ALL[i % 8];
            let mask = match rec.env().mask() {
                crate::env::MaskView::Branch(m) => m,
                _ => unreachable!(),
            };
            let a = StructuredAction::move_dir(mask.who_bits(), dir);
            let a = if mask.permits(&a) { a } else { StructuredAction::NOOP };
            rec.step(&a.into()).unwrap();
        }
        rec.finish().unwrap()
    }

    #[test]
    fn round_trip_and_verify() {
        let bytes = recorded();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.lines().count(), 31);
        let (header, records) = read_replay(bytes.as_slice()).unwrap();
        assert_eq!(records.len(), 30);
        assert_eq!(records[29].step, 30);
        verify_replay(&header, &records).unwrap();
    }

    #[test]
    fn tampered_action_is_caught() {
        let (header, mut records) = read_replay(recorded().as_slice()).unwrap();
        records[10].action = StructuredAction::NOOP.into();
        match verify_replay(&header, &records) {
            Err(ReplayError::Mismatch { step, .. }) => assert_eq!(step, 11),
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn garbage_is_a_parse_error() {
        assert!(matches!(read_replay(&b""[..]), Err(ReplayError::MissingHeader)));
        assert!(matches!(read_replay(&b"{nope\n"[..]), Err(ReplayError::Parse { line: 1, .. })));
    }
}

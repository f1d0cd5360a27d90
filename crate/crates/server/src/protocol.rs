//! Wire format. Every message is one JSON object on one line:
//! `{"kind": ..., "id": ..., "payload": {...}}`. See PROTOCOL.md.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use twobridge_core::actions::{flat_action_count, StructuredAction, Verb};
use twobridge_core::env::{Observation, StepInfo, DEFAULT_TICKS_PER_AGENT_STEP};
use twobridge_core::obs::{self, Planes, SpatialFeatures};
use twobridge_core::{
    variant_catalog, Action, Direction, MaskView, Outcome, Profile, RewardBreakdown, StepResult,
};

pub const PROTOCOL_VERSION: &str = "twobridge/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: String,
    /// Echoed back on the response; `null` when a request could not be read.
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub payload: Value,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
    #[error("bad {kind} payload: {source}")]
    Payload { kind: String, source: serde_json::Error },
    #[error("bad spatial plane: {0}")]
    Plane(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Parse(_) => "parse",
            ProtocolError::UnknownKind(_) => "unknown_kind",
            ProtocolError::Payload { .. } => "payload",
            ProtocolError::Plane(_) => "plane",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialEncoding {
    #[default]
    Base64,
    Array,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render_spatial: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_encoding: Option<SpatialEncoding>,
}

/// Structured actions carry `verb`/`who`/`direction`/`enemy`; pilot actions
/// carry one flat `codes` entry per friendly slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum WireAction {
    Flat {
        codes: Vec<u32>,
    },
    Structured {
        verb: Verb,
        #[serde(default)]
        who: u8,
        #[serde(default)]
        direction: Option<Direction>,
        #[serde(default)]
        enemy: Option<usize>,
    },
}

impl From<&Action> for WireAction {
    fn from(a: &Action) -> Self {
        match a {
            Action::Flat(codes) => WireAction::Flat { codes: codes.clone() },
            Action::Structured(s) => {
                WireAction::Structured { verb: s.verb, who: s.who, direction: s.direction, enemy: s.enemy_idx }
            }
        }
    }
}

impl From<WireAction> for Action {
    fn from(a: WireAction) -> Self {
        match a {
            WireAction::Flat { codes } => Action::Flat(codes),
            WireAction::Structured { verb, who, direction, enemy } => {
                Action::Structured(StructuredAction { verb, who, direction, enemy_idx: enemy })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPayload {
    pub action: WireAction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Hello,
    Spec,
    Reset(ResetPayload),
    Step(StepPayload),
    Close,
}

impl Request {
    pub fn kind(&self) -> &'static str {
        match self {
            Request::Hello => "hello",
            Request::Spec => "spec",
            Request::Reset(_) => "reset",
            Request::Step(_) => "step",
            Request::Close => "close",
        }
    }

    pub fn to_envelope(&self, id: u64) -> Envelope {
        let payload = match self {
            Request::Reset(p) => serde_json::to_value(p),
            Request::Step(p) => serde_json::to_value(p),
            _ => Ok(Value::Null),
        }
        .expect("request payloads serialize");
        Envelope { kind: self.kind().into(), id: Some(id), payload }
    }

    pub fn from_envelope(env: &Envelope) -> Result<Self, ProtocolError> {
        let payload = |v: &Value| if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
        let bad = |source| ProtocolError::Payload { kind: env.kind.clone(), source };
        Ok(match env.kind.as_str() {
            "hello" => Request::Hello,
            "spec" => Request::Spec,
            "close" => Request::Close,
            "reset" => Request::Reset(serde_json::from_value(payload(&env.payload)).map_err(bad)?),
            "step" => Request::Step(serde_json::from_value(payload(&env.payload)).map_err(bad)?),
            other => return Err(ProtocolError::UnknownKind(other.into())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Spec(Box<SpecBody>),
    Result(Box<ResultBody>),
    Error(ErrorBody),
    Close,
}

impl Response {
    pub fn kind(&self) -> &'static str {
        match self {
            Response::Spec(_) => "spec",
            Response::Result(_) => "result",
            Response::Error(_) => "error",
            Response::Close => "close",
        }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Response::Error(ErrorBody { code: code.into(), message: message.into() })
    }

    pub fn to_envelope(&self, id: Option<u64>) -> Envelope {
        let payload = match self {
            Response::Spec(b) => serde_json::to_value(b),
            Response::Result(b) => serde_json::to_value(b),
            Response::Error(b) => serde_json::to_value(b),
            Response::Close => Ok(Value::Null),
        }
        .expect("response payloads serialize");
        Envelope { kind: self.kind().into(), id, payload }
    }

    pub fn from_envelope(env: &Envelope) -> Result<Self, ProtocolError> {
        let bad = |source| ProtocolError::Payload { kind: env.kind.clone(), source };
        let body = env.payload.clone();
        Ok(match env.kind.as_str() {
            "spec" => Response::Spec(Box::new(serde_json::from_value(body).map_err(bad)?)),
            "result" => Response::Result(Box::new(serde_json::from_value(body).map_err(bad)?)),
            "error" => Response::Error(serde_json::from_value(body).map_err(bad)?),
            "close" => Response::Close,
            other => return Err(ProtocolError::UnknownKind(other.into())),
        })
    }
}

/// Encodes an envelope as one line, without the trailing newline.
pub fn encode_line(env: &Envelope) -> String {
    serde_json::to_string(env).expect("envelopes serialize")
}

pub fn decode_line(line: &str) -> Result<Envelope, ProtocolError> {
    Ok(serde_json::from_str(line)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePlanes {
    /// `[channels, height, width]`.
    pub shape: [usize; 3],
    pub encoding: SpatialEncoding,
    pub data: Value,
}

impl WirePlanes {
    pub fn encode(planes: &Planes, encoding: SpatialEncoding) -> Self {
        let data = match encoding {
            SpatialEncoding::Base64 => Value::String(STANDARD.encode(&planes.data)),
            SpatialEncoding::Array => Value::from(planes.data.clone()),
        };
        Self { shape: planes.shape(), encoding, data }
    }

    pub fn decode(&self) -> Result<Planes, ProtocolError> {
        let data: Vec<u8> = match (self.encoding, &self.data) {
            (SpatialEncoding::Base64, Value::String(s)) => {
                STANDARD.decode(s).map_err(|e| ProtocolError::Plane(e.to_string()))?
            }
            (SpatialEncoding::Array, v @ Value::Array(_)) => {
                serde_json::from_value(v.clone()).map_err(|e| ProtocolError::Plane(e.to_string()))?
            }
            _ => return Err(ProtocolError::Plane("data does not match encoding".into())),
        };
        let [c, h, w] = self.shape;
        if data.len() != c * h * w {
            return Err(ProtocolError::Plane(format!("{} bytes for shape {:?}", data.len(), self.shape)));
        }
        Ok(Planes { channels: c, height: h, width: w, data })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSpatial {
    pub screen: WirePlanes,
    pub minimap: WirePlanes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireObservation {
    pub vector: Vec<f64>,
    /// Absent for profiles without spatial features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial: Option<WireSpatial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBody {
    pub observation: WireObservation,
    pub mask: MaskView,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub outcome: Option<Outcome>,
    pub info: StepInfo,
}

pub fn encode_step_result(r: &StepResult, encoding: SpatialEncoding) -> ResultBody {
    let spatial = r.observation.spatial.as_ref().map(|s| WireSpatial {
        screen: WirePlanes::encode(&s.screen, encoding),
        minimap: WirePlanes::encode(&s.minimap, encoding),
    });
    ResultBody {
        observation: WireObservation { vector: r.observation.vector.0.clone(), spatial },
        mask: r.mask.clone(),
        reward: r.reward,
        done: r.done,
        outcome: r.outcome,
        info: r.info.clone(),
    }
}

pub fn decode_step_result(b: &ResultBody) -> Result<StepResult, ProtocolError> {
    let spatial = match &b.observation.spatial {
        Some(s) => Some(SpatialFeatures { screen: s.screen.decode()?, minimap: s.minimap.decode()? }),
        None => None,
    };
    Ok(StepResult {
        observation: Observation { vector: obs::VectorFeatures(b.observation.vector.clone()), spatial },
        mask: b.mask.clone(),
        reward: b.reward,
        done: b.done,
        outcome: b.outcome,
        info: b.info.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub id: String,
    pub layout: String,
    pub friendly_count: usize,
    pub enemy_count: usize,
    pub vector_len: usize,
    pub vector_fields: Vec<String>,
    pub flat_actions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub name: Profile,
    pub camera: String,
    pub spatial: bool,
    /// `structured` or `flat`.
    pub action: String,
    /// `none`, `verb` or `branch`.
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpec {
    pub screen_shape: [usize; 3],
    pub minimap_shape: [usize; 3],
    pub screen_channels: Vec<String>,
    pub minimap_channels: Vec<String>,
    pub screen_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub verbs: Vec<Verb>,
    pub directions: Vec<Direction>,
    /// Bits of `who`, one per friendly slot.
    pub who_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecBody {
    pub protocol: String,
    pub variants: Vec<VariantSpec>,
    pub profiles: Vec<ProfileSpec>,
    pub observation: ObservationSpec,
    pub action: ActionSpec,
    pub ticks_per_agent_step: u32,
    pub outcomes: Vec<Outcome>,
}

impl SpecBody {
    pub fn build(ticks_per_agent_step: u32) -> Self {
        let variants = variant_catalog()
            .into_iter()
            .map(|v| VariantSpec {
                layout: v.layout.name().into(),
                friendly_count: v.friendly_count,
                enemy_count: v.enemy_count,
                vector_len: obs::vector_len(v.enemy_count),
                vector_fields: obs::vector_field_names(v.enemy_count),
                flat_actions: flat_action_count(v.enemy_count),
                id: v.id,
            })
            .collect();
        let profiles = Profile::ALL
            .into_iter()
            .map(|p| ProfileSpec {
                name: p,
                camera: match p.camera_mode() {
                    obs::CameraMode::Free => "free".into(),
                    obs::CameraMode::Locked => "locked".into(),
                },
                spatial: p.has_spatial(),
                action: if p.is_pilot() { "flat" } else { "structured" }.into(),
                mask: match p {
                    Profile::PilotNsf | Profile::PilotSf => "none",
                    Profile::Exp2 => "verb",
                    Profile::Exp3 => "branch",
                }
                .into(),
            })
            .collect();
        let mut screen_channels: Vec<String> = obs::screen::NAMES.iter().map(|s| s.to_string()).collect();
        screen_channels.resize_with(obs::SCREEN_CHANNELS, || "reserved".into());
        Self {
            protocol: PROTOCOL_VERSION.into(),
            variants,
            profiles,
            observation: ObservationSpec {
                screen_shape: [obs::SCREEN_CHANNELS, obs::RESOLUTION, obs::RESOLUTION],
                minimap_shape: [obs::MINIMAP_CHANNELS, obs::RESOLUTION, obs::RESOLUTION],
                screen_channels,
                minimap_channels: obs::minimap::NAMES.iter().map(|s| s.to_string()).collect(),
                screen_extent: obs::DEFAULT_SCREEN_EXTENT,
            },
            action: ActionSpec {
                verbs: Verb::ALL.to_vec(),
                directions: Direction::ALL.to_vec(),
                who_bits: twobridge_core::spawn::FRIENDLY_COUNT,
            },
            ticks_per_agent_step,
            outcomes: Outcome::ALL.to_vec(),
        }
    }
}

impl Default for SpecBody {
    fn default() -> Self {
        Self::build(DEFAULT_TICKS_PER_AGENT_STEP)
    }
}

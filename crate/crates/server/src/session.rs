//! One connection's state: its environment and the request handlers.

use log::{debug, warn};

use twobridge_core::{Env, EnvConfig, EnvError, Profile};

use crate::protocol::{
    decode_line, encode_step_result, Request, ResetPayload, Response, SpatialEncoding, SpecBody,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Every reset without an explicit seed reuses the base seed.
    Fixed,
    /// Reset `n` (counting from 0) uses `base + n`.
    #[default]
    Increment,
}

impl std::str::FromStr for SeedPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(SeedPolicy::Fixed),
            "increment" => Ok(SeedPolicy::Increment),
            _ => Err(format!("unknown seed policy {s:?} (expected fixed or increment)")),
        }
    }
}

/// Defaults applied to every connection; reset payloads may override them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServerConfig {
    pub env: EnvConfig,
    pub seed_policy: SeedPolicy,
    pub spatial_encoding: SpatialEncoding,
}

impl ServerConfig {
    pub fn new(variant: &str, profile: Profile, seed: u64) -> Self {
        Self { env: EnvConfig::new(variant, profile, seed), ..Self::default() }
    }
}

pub struct Session {
    config: ServerConfig,
    env: Option<Env>,
    encoding: SpatialEncoding,
    resets: u64,
    closed: bool,
}

impl Session {
    pub fn new(config: ServerConfig) -> Self {
        let encoding = config.spatial_encoding;
        Self { config, env: None, encoding, resets: 0, closed: false }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one raw line and returns the response line (no newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let (id, response) = match decode_line(line) {
            Err(e) => {
                warn!("unreadable request: {e}");
                (None, Response::error(e.code(), e.to_string()))
            }
            Ok(envelope) => {
                let response = match Request::from_envelope(&envelope) {
                    Ok(req) => self.handle(req),
                    Err(e) => Response::error(e.code(), e.to_string()),
                };
                (envelope.id, response)
            }
        };
        crate::protocol::encode_line(&response.to_envelope(id))
    }

    pub fn handle(&mut self, request: Request) -> Response {
        debug!("request {}", request.kind());
        match request {
            Request::Hello | Request::Spec => {
                Response::Spec(Box::new(SpecBody::build(self.config.env.ticks_per_agent_step)))
            }
            Request::Reset(p) => self.reset(p),
            Request::Step(p) => {
                let Some(env) = self.env.as_mut() else {
                    return Response::error("lifecycle", "step before reset");
                };
                match env.step(&p.action.into()) {
                    Ok(r) => Response::Result(Box::new(encode_step_result(&r, self.encoding))),
                    Err(e) => env_error(&e),
                }
            }
            Request::Close => {
                self.closed = true;
                Response::Close
            }
        }
    }

    fn reset(&mut self, p: ResetPayload) -> Response {
        let mut cfg = self.config.env.clone();
        if let Some(v) = p.variant {
            cfg.variant = v;
        }
        if let Some(profile) = p.profile {
            cfg.profile = profile;
        }
        if let Some(r) = p.render_spatial {
            cfg.render_spatial = r;
        }
        cfg.seed = match (p.seed, self.config.seed_policy) {
            (Some(s), _) => s,
            (None, SeedPolicy::Fixed) => self.config.env.seed,
            (None, SeedPolicy::Increment) => self.config.env.seed.wrapping_add(self.resets),
        };
        self.encoding = p.spatial_encoding.unwrap_or(self.config.spatial_encoding);
        match Env::new(cfg) {
            Ok(env) => {
                self.resets += 1;
                let env = self.env.insert(env);
                let first = env.reset(None);
                Response::Result(Box::new(encode_step_result(&first, self.encoding)))
            }
            Err(e) => env_error(&e),
        }
    }
}

fn env_error(e: &EnvError) -> Response {
    let code = match e {
        EnvError::Config(_) => "config",
        EnvError::Action(_) | EnvError::ActionKind { .. } => "action",
        EnvError::Lifecycle => "lifecycle",
        EnvError::Engine(_) => "engine",
    };
    Response::error(code, e.to_string())
}

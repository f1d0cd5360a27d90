use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use proptest::prelude::*;
use serde_json::{json, Value};

use twobridge_core::{Action, Direction, Env, EnvConfig, Outcome, Profile, StructuredAction, Verb};
use twobridge_server::protocol::{
    decode_line, decode_step_result, encode_line, encode_step_result, ResetPayload, StepPayload, WireAction,
};
use twobridge_server::{serve, serve_tcp, Request, Response, SeedPolicy, ServerConfig, SpatialEncoding};

fn exchange(config: &ServerConfig, lines: &[String]) -> Vec<Value> {
    let input = lines.join("\n") + "\n";
    let mut out = Vec::new();
    serve(input.as_bytes(), &mut out, config).unwrap();
    String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn msg(kind: &str, id: u64, payload: Value) -> String {
    json!({"kind": kind, "id": id, "payload": payload}).to_string()
}

fn noop() -> Value {
    json!({"action": {"verb": "no_op"}})
}

#[test]
fn hello_lists_catalog() {
    let replies = exchange(&ServerConfig::default(), &[msg("hello", 1, Value::Null)]);
    let r = &replies[0];
    assert_eq!(r["kind"], "spec");
    assert_eq!(r["id"], 1);
    let body = &r["payload"];
    assert_eq!(body["variants"].as_array().unwrap().len(), 9);
    assert_eq!(body["profiles"].as_array().unwrap().len(), 4);
    assert_eq!(body["observation"]["screen_shape"], json!([17, 64, 64]));
    assert_eq!(body["observation"]["minimap_shape"], json!([7, 64, 64]));
    let v2 = body["variants"].as_array().unwrap().iter().find(|v| v["id"] == "V2_Base").unwrap();
    assert_eq!(v2["vector_len"], 49);
    assert_eq!(v2["flat_actions"], 14);
    assert_eq!(v2["vector_fields"].as_array().unwrap().len(), 49);
}

#[test]
fn noop_episode_times_out() {
    let config = ServerConfig::new("V2_Base", Profile::Exp2, 11);
    let mut lines = vec![msg("reset", 0, json!({"render_spatial": false}))];
    lines.extend((1..=600).map(|i| msg("step", i, noop())));
    lines.push(msg("step", 601, noop()));
    let replies = exchange(&config, &lines);
    assert_eq!(replies.len(), 602);
    let last_step = &replies[600];
    assert_eq!(last_step["payload"]["done"], true);
    assert_eq!(last_step["payload"]["outcome"], "timeout_loss");
    assert_eq!(last_step["payload"]["reward"]["terminal"], -15.0);
    assert!(replies[1..600].iter().all(|r| r["payload"]["done"] == false));
    assert_eq!(replies[601]["kind"], "error");
    assert_eq!(replies[601]["payload"]["code"], "lifecycle");
}

#[test]
fn malformed_input_is_survivable() {
    let lines = vec![
        "{not json".to_string(),
        msg("teleport", 2, Value::Null),
        msg("step", 3, noop()),
        msg("reset", 4, json!({"variant": "V9_Base"})),
        msg("reset", 5, json!({"bogus": 1})),
        msg("reset", 6, json!({"variant": "V1_Base", "profile": "exp3"})),
        msg("step", 7, json!({"action": {"verb": "move", "who": 0, "direction": "N"}})),
        msg("step", 8, json!({"action": {"codes": [0, 0, 0, 0, 0]}})),
        msg("step", 9, json!({"action": {"verb": "move", "who": 31, "direction": "S"}})),
    ];
    let replies = exchange(&ServerConfig::default(), &lines);
    let kinds: Vec<&str> = replies.iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["error", "error", "error", "error", "error", "result", "error", "error", "result"]);
    assert_eq!(replies[0]["id"], Value::Null);
    assert_eq!(replies[0]["payload"]["code"], "parse");
    assert_eq!(replies[1]["payload"]["code"], "unknown_kind");
    assert_eq!(replies[2]["payload"]["code"], "lifecycle");
    assert_eq!(replies[3]["payload"]["code"], "config");
    assert_eq!(replies[4]["payload"]["code"], "payload");
    assert_eq!(replies[6]["payload"]["code"], "action");
    assert_eq!(replies[7]["payload"]["code"], "action");
    assert_eq!(replies[8]["id"], 9);
}

#[test]
fn profile_gating_on_the_wire() {
    let lines = vec![
        msg("reset", 1, json!({"profile": "pilot-nsf"})),
        msg("step", 2, json!({"action": {"codes": [1, 2, 3, 4, 0]}})),
        msg("reset", 3, json!({"profile": "exp3"})),
        msg("reset", 4, json!({"profile": "exp2"})),
        msg("reset", 5, json!({"profile": "pilot-sf", "spatial_encoding": "array"})),
    ];
    let replies = exchange(&ServerConfig::default(), &lines);
    for r in &replies[..2] {
        let obs = r["payload"]["observation"].as_object().unwrap();
        assert!(!obs.contains_key("spatial"));
        assert_eq!(r["payload"]["mask"], json!({"kind": "none"}));
    }
    let mask = replies[2]["payload"]["mask"].as_object().unwrap();
    let mut keys: Vec<&str> = mask.keys().map(String::as_str).filter(|k| *k != "kind").collect();
    keys.sort();
    assert_eq!(keys, ["direction", "enemy", "verb", "who"]);
    assert_eq!(replies[2]["payload"]["observation"]["spatial"]["screen"]["encoding"], "base64");
    assert_eq!(replies[3]["payload"]["mask"]["kind"], "verb");
    let screen = &replies[4]["payload"]["observation"]["spatial"]["screen"];
    assert_eq!(screen["encoding"], "array");
    assert_eq!(screen["data"].as_array().unwrap().len(), 17 * 64 * 64);
}

#[test]
fn pipelined_ids_are_matched_in_order() {
    let ids = [42u64, 7, 7, 1000, 3, 99, 5];
    let lines: Vec<String> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| match i {
            0 => msg("reset", *id, json!({"render_spatial": false})),
            3 => msg("spec", *id, Value::Null),
            _ => msg("step", *id, noop()),
        })
        .collect();
    let replies = exchange(&ServerConfig::default(), &lines);
    let got: Vec<u64> = replies.iter().map(|r| r["id"].as_u64().unwrap()).collect();
    assert_eq!(got, ids);
}

#[test]
fn close_ends_the_stream() {
    let lines = vec![msg("close", 1, Value::Null), msg("hello", 2, Value::Null)];
    let replies = exchange(&ServerConfig::default(), &lines);
    assert_eq!(replies.len(), 1);
    assert_eq!(replies[0]["kind"], "close");
}

#[test]
fn seed_policies() {
    let reset = || msg("reset", 0, json!({"render_spatial": false}));
    let first_vector = |policy| {
        let config = ServerConfig { seed_policy: policy, ..ServerConfig::new("V1_Base", Profile::Exp2, 5) };
        let replies = exchange(&config, &[reset(), reset()]);
        (replies[0]["payload"]["observation"]["vector"].clone(), replies[1]["payload"]["observation"]["vector"].clone())
    };
    let (a, b) = first_vector(SeedPolicy::Fixed);
    assert_eq!(a, b);
    let (c, d) = first_vector(SeedPolicy::Increment);
    assert_eq!(a, c);
    assert_ne!(c, d);

    // explicit seed matches a local environment
    let replies = exchange(&ServerConfig::default(), &[msg("reset", 0, json!({"variant": "V3_Combat", "seed": 77}))]);
    let local = Env::new(EnvConfig::new("V3_Combat", Profile::Exp3, 77)).unwrap().clone().reset(None);
    let body = serde_json::from_value(replies[0]["payload"].clone()).unwrap();
    assert_eq!(decode_step_result(&body).unwrap(), local);
}

#[test]
fn tcp_connections_are_independent() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let config = ServerConfig::new("V1_Navigate", Profile::Exp3, 0);
    let server = std::thread::spawn(move || serve_tcp(listener, &config, Some(2)).unwrap());

    let clients: Vec<_> = (0..2)
        .map(|c| {
            std::thread::spawn(move || {
                let stream = TcpStream::connect(addr).unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut writer = stream;
                let mut ask = |line: String| {
                    writer.write_all(line.as_bytes()).unwrap();
                    writer.write_all(b"\n").unwrap();
                    let mut reply = String::new();
                    reader.read_line(&mut reply).unwrap();
                    serde_json::from_str::<Value>(&reply).unwrap()
                };
                let r = ask(msg("reset", 1, json!({"seed": c, "render_spatial": false})));
                assert_eq!(r["kind"], "result");
                for i in 0..20 {
                    let r = ask(msg("step", 2 + i, noop()));
                    assert_eq!(r["id"], 2 + i);
                    assert_eq!(r["payload"]["info"]["step"], i + 1);
                }
                assert_eq!(ask(msg("close", 99, Value::Null))["kind"], "close");
            })
        })
        .collect();
    for c in clients {
        c.join().unwrap();
    }
    server.join().unwrap();
}

fn direction() -> impl Strategy<Value = Option<Direction>> {
    prop::option::of((0..8usize).prop_map(|i| Direction::ALL[i]))
}

fn request() -> impl Strategy<Value = Request> {
    let reset = (
        prop::option::of((0..9usize).prop_map(|i| twobridge_core::variant_catalog()[i].id.clone())),
        prop::option::of((0..4usize).prop_map(|i| Profile::ALL[i])),
        any::<Option<u64>>(),
        any::<Option<bool>>(),
        prop::option::of(prop_oneof![Just(SpatialEncoding::Base64), Just(SpatialEncoding::Array)]),
    )
        .prop_map(|(variant, profile, seed, render_spatial, spatial_encoding)| {
            Request::Reset(ResetPayload { variant, profile, seed, render_spatial, spatial_encoding })
        });
    let structured = ((0..3usize), any::<u8>(), direction(), prop::option::of(0..9usize)).prop_map(
        |(v, who, direction, enemy)| WireAction::Structured { verb: Verb::ALL[v], who, direction, enemy },
    );
    let flat = prop::collection::vec(0u32..20, 0..7).prop_map(|codes| WireAction::Flat { codes });
    let step = prop_oneof![structured, flat].prop_map(|action| Request::Step(StepPayload { action }));
    prop_oneof![Just(Request::Hello), Just(Request::Spec), Just(Request::Close), reset, step]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn requests_round_trip(req in request(), id: u64) {
        let line = encode_line(&req.to_envelope(id));
        let env = decode_line(&line).unwrap();
        prop_assert_eq!(env.id, Some(id));
        prop_assert_eq!(Request::from_envelope(&env).unwrap(), req);
    }

    #[test]
    fn step_results_round_trip(variant in 0..9usize, profile in 0..4usize, seed: u64, steps in 0usize..30, array: bool) {
        let id = &twobridge_core::variant_catalog()[variant].id;
        let profile = Profile::ALL[profile];
        let mut env = Env::new(EnvConfig::new(id, profile, seed)).unwrap();
        let mut result = env.reset(None);
        for i in 0..steps {
            if result.done {
                break;
            }
            let a = StructuredAction::move_dir(0b11111, Direction::ALL[(seed as usize + i) % 8]);
            let action = if profile.is_pilot() {
                Action::Flat(twobridge_core::actions::structured_to_flat(&a, 5))
            } else {
                let n_e = env.world().enemies().len();
                let legal = env.mask().to_action_mask(n_e).is_none_or(|m| m.permits(&a));
                Action::Structured(if legal { a } else { StructuredAction::NOOP })
            };
            result = env.step(&action).unwrap();
        }
        let encoding = if array { SpatialEncoding::Array } else { SpatialEncoding::Base64 };
        let body = encode_step_result(&result, encoding);
        let response = Response::Result(Box::new(body));
        let line = encode_line(&response.to_envelope(Some(3)));
        let back = Response::from_envelope(&decode_line(&line).unwrap()).unwrap();
        prop_assert_eq!(&back, &response);
        let Response::Result(b) = back else { unreachable!() };
        prop_assert_eq!(decode_step_result(&b).unwrap(), result);
    }
}

#[test]
fn other_responses_round_trip() {
    for r in [
        Response::Spec(Box::default()),
        Response::error("parse", "boom"),
        Response::Close,
    ] {
        let line = encode_line(&r.to_envelope(None));
        assert_eq!(Response::from_envelope(&decode_line(&line).unwrap()).unwrap(), r);
    }
}

#[test]
fn outcome_labels_are_snake_case() {
    let labels: Vec<Value> = Outcome::ALL.iter().map(|o| serde_json::to_value(o).unwrap()).collect();
    assert_eq!(
        labels,
        [json!("navigation_victory"), json!("combat_victory"), json!("combat_loss"), json!("tie"), json!("timeout_loss")]
    );
}

#[test]
fn output_field_order_is_fixed() {
    let input = format!("{}\n", msg("reset", 1, json!({"profile": "pilot-nsf"})));
    let mut out = Vec::new();
    serve(input.as_bytes(), &mut out, &ServerConfig::default()).unwrap();
    let line = String::from_utf8(out).unwrap();
    assert!(line.starts_with(r#"{"kind":"result","id":1,"payload":{"done":false,"info":{"camera":{"center":{"x":"#));
    assert!(line.contains(r#""outcome":null,"reward":{"combat_dist":0.0,"combat_events":0.0,"combat_hp":0.0,"nav":0.0,"terminal":0.0,"total":0.0}}}"#));
}

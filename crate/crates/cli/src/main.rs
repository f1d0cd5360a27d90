use std::fs::File;
use std::net::TcpListener;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use twobridge_baselines::harness::table_header;
use twobridge_baselines::{bench_throughput, make_agent, run_episodes, write_csv, AGENT_NAMES};
use twobridge_core::actions::flat_action_count;
use twobridge_core::{obs, two_bridge_map, variant_catalog, EnvConfig, Profile};
use twobridge_server::{serve_stdio, serve_tcp, SeedPolicy, ServerConfig, SpatialEncoding};

/// Two-bridge cooperative navigation and combat environments.
/// Log verbosity follows RUST_LOG (default: warn).
#[derive(Parser)]
#[command(name = "twobridge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve environments over newline-delimited JSON.
    Serve(ServeArgs),
    /// Run a baseline agent over a range of seeds and tabulate outcomes.
    Run(RunArgs),
    /// Measure aggregate agent steps per second across parallel instances.
    Bench(BenchArgs),
    /// List the nine variants.
    ListVariants,
    /// Print the terrain grid and spawn regions.
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Stdio,
    Tcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Base64,
    Array,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Fixed,
    Increment,
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long, value_enum, default_value = "stdio")]
    transport: Transport,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 7777)]
    port: u16,
    /// Default variant; reset requests may override it.
    #[arg(long, default_value = "V2_Base")]
    variant: String,
    #[arg(long, default_value = "exp2")]
    profile: Profile,
    /// Base seed for resets that don't name one.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "increment")]
    seed_policy: Policy,
    #[arg(long, value_enum, default_value = "base64")]
    spatial_encoding: Encoding,
    /// Exit after this many TCP connections have been served.
    #[arg(long)]
    max_connections: Option<usize>,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Agent name, or "all". Repeatable.
    #[arg(long, default_value = "random")]
    agent: Vec<String>,
    /// Variant id, or "all". Repeatable.
    #[arg(long, default_value = "V2_Base")]
    variant: Vec<String>,
    #[arg(long, default_value = "exp2")]
    profile: Profile,
    /// Episodes per (agent, variant) pair.
    #[arg(short, long, default_value_t = 100)]
    n: u64,
    /// First seed; episodes use seed0, seed0 + 1, ...
    #[arg(long, default_value_t = 0)]
    seed0: u64,
    #[arg(long, default_value = "outcomes.csv")]
    csv: PathBuf,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 8)]
    instances: usize,
    #[arg(long, default_value_t = 2000)]
    steps: u64,
    #[arg(long, default_value = "V2_Combat")]
    variant: String,
    #[arg(long, default_value = "exp3")]
    profile: Profile,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Serve(a) => serve(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::ListVariants => {
            list_variants();
            Ok(())
        }
        Command::Map => {
            let map = two_bridge_map();
            print!("{}", map.grid.dump(&map.regions));
            Ok(())
        }
    }
}

fn env_config(variant: &str, profile: Profile, seed: u64) -> Result<EnvConfig> {
    let config = EnvConfig::new(variant, profile, seed);
    config.validate()?;
    Ok(config)
}

fn serve(a: ServeArgs) -> Result<()> {
    let config = ServerConfig {
        env: env_config(&a.variant, a.profile, a.seed)?,
        seed_policy: match a.seed_policy {
            Policy::Fixed => SeedPolicy::Fixed,
            Policy::Increment => SeedPolicy::Increment,
        },
        spatial_encoding: match a.spatial_encoding {
            Encoding::Base64 => SpatialEncoding::Base64,
            Encoding::Array => SpatialEncoding::Array,
        },
    };
    match a.transport {
        Transport::Stdio => serve_stdio(&config).context("stdio transport"),
        Transport::Tcp => {
            let listener =
                TcpListener::bind((a.host.as_str(), a.port)).with_context(|| format!("binding {}:{}", a.host, a.port))?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve_tcp(listener, &config, a.max_connections).context("tcp transport")
        }
    }
}

fn expand(values: &[String], all: impl Fn() -> Vec<String>) -> Vec<String> {
    if values.iter().any(|v| v == "all") {
        all()
    } else {
        values.to_vec()
    }
}

fn run(a: RunArgs) -> Result<()> {
    let agents = expand(&a.agent, || AGENT_NAMES.iter().map(|s| s.to_string()).collect());
    let variants = expand(&a.variant, || variant_catalog().into_iter().map(|v| v.id).collect());
    for name in &agents {
        if make_agent(name, 0).is_none() {
            bail!("unknown agent {name:?} (expected one of {}, or all)", AGENT_NAMES.join(", "));
        }
    }
    println!("{}", table_header());
    let mut rows = Vec::new();
    for variant in &variants {
        let mut base = env_config(variant, a.profile, a.seed0)?;
        base.render_spatial = false;
        for name in &agents {
            let mut agent = make_agent(name, a.seed0).expect("checked above");
            info!("{name} on {variant}: {} episodes", a.n);
            let d = run_episodes(&base, agent.as_mut(), a.seed0, a.n)?;
            println!("{d}");
            rows.push(d);
        }
    }
    let file = File::create(&a.csv).with_context(|| format!("creating {}", a.csv.display()))?;
    write_csv(file, &rows)?;
    println!("wrote {}", a.csv.display());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    if a.instances == 0 {
        bail!("--instances must be at least 1");
    }
    let base = env_config(&a.variant, a.profile, a.seed)?;
    let t = bench_throughput(&base, a.instances, a.steps)?;
    println!(
        "{} instances x {} steps on {} {}: {} agent steps in {:.2}s = {:.0} steps/s",
        t.instances,
        a.steps,
        a.variant,
        a.profile,
        t.agent_steps,
        t.seconds,
        t.steps_per_second()
    );
    Ok(())
}

fn list_variants() {
    println!("{:<12} {:<9} {:>10} {:>8} {:>10} {:>12}", "id", "layout", "friendlies", "enemies", "vector_len", "flat_actions");
    for v in variant_catalog() {
        println!(
            "{:<12} {:<9} {:>10} {:>8} {:>10} {:>12}",
            v.id,
            v.layout.name(),
            v.friendly_count,
            v.enemy_count,
            obs::vector_len(v.enemy_count),
            flat_action_count(v.enemy_count)
        );
    }
}

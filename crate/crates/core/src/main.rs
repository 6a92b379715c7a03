use clap::{Parser, Subcommand};
use oat_gravimetry::config::{parse_ms_list, EngineKind, SimConfig};
use oat_gravimetry::interferometer::Protocol;
use oat_gravimetry::orchestrator::{self, canonical_hash, commit_run, exit_code, unix_now, RunOutputs};
use oat_gravimetry::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "oatgrav", version, about = "Spin-squeezed BEC gravimetry simulations")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_traj: Option<usize>,
    /// Overrides output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trapped groundstate on the (r, z) grid.
    Groundstate(Common),
    /// Squeezing stage: chi, lambda, Q and xi (closed form and Wigner).
    Squeeze(Common),
    /// Closed-form squeezing table against lambda at perfect overlap.
    Analytic {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        lambda_scan: bool,
        /// Upper end of the scan; defaults to 20 / N.
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Finite-difference sensitivity of one protocol.
    Interferometer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        protocol: Option<String>,
        /// tw or mean_field
        #[arg(long)]
        engine: Option<String>,
    },
    /// Runs the sweep lists of the config (atom number, T_oat, noise).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `all` or a comma-separated list of protocol names.
        #[arg(long)]
        protocol: Option<String>,
        /// T_oat list such as `2.5ms..20ms` or `5,10,15`.
        #[arg(long)]
        t_oat: Option<String>,
    },
    /// Parses and validates a config, printing its hash.
    ValidateConfig { config: PathBuf },
}

fn load(c: &Common) -> Result<(SimConfig, String)> {
    let text = std::fs::read_to_string(&c.config)?;
    let mut cfg = SimConfig::from_toml_str(&text)?;
    if let Some(s) = c.seed {
        cfg.seed_root = s;
    }
    if let Some(n) = c.n_traj {
        cfg.engine.n_traj = n;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.display().to_string();
    }
    cfg.validate()?;
    Ok((cfg, text))
}

fn parse_protocols(s: &str) -> Result<Vec<Protocol>> {
    if s == "all" {
        return Ok(Protocol::ALL.to_vec());
    }
    s.split(',').map(|p| Protocol::parse(p.trim())).collect()
}

fn commit(name: &str, c: &Common, cfg: &SimConfig, out: RunOutputs, started: u64) -> Result<()> {
    let rec = commit_run(
        std::path::Path::new(&cfg.output_dir),
        name,
        cfg,
        &cfg.to_toml(),
        cfg.seed_root,
        std::slice::from_ref(&c.config),
        &out,
        started,
    )?;
    println!("{}", serde_json::to_string_pretty(&out.summary).unwrap_or_default());
    println!("wrote {}", rec.dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let started = unix_now();
    match cli.cmd {
        Cmd::Groundstate(c) => {
            let (cfg, _) = load(&c)?;
            commit("groundstate", &c, &cfg, orchestrator::run_groundstate(&cfg)?, started)
        }
        Cmd::Squeeze(c) => {
            let (cfg, _) = load(&c)?;
            commit("squeeze", &c, &cfg, orchestrator::run_squeeze(&cfg)?, started)
        }
        Cmd::Analytic { n, lambda_scan, lambda_max, points, out } => {
            let points = if lambda_scan { points } else { 2 };
            let lmax = lambda_max.unwrap_or(20.0 / n.max(1.0));
            let res = orchestrator::run_analytic(n, lmax, points)?;
            let key = serde_json::json!({ "command": "analytic", "n": n, "lambda_max": lmax, "points": points });
            let rec = commit_run(&out, "analytic", &key, "", 0, &[], &res, started)?;
            println!("{}", serde_json::to_string_pretty(&res.summary).unwrap_or_default());
            println!("wrote {}", rec.dir.display());
            Ok(())
        }
        Cmd::Interferometer { common, protocol, engine } => {
            let (mut cfg, _) = load(&common)?;
            if let Some(p) = protocol {
                cfg.protocol.name = Protocol::parse(&p)?;
            }
            if let Some(e) = engine {
                cfg.engine.kind = match e.as_str() {
                    "tw" => EngineKind::Tw,
                    "mean_field" | "meanfield" => EngineKind::MeanField,
                    _ => return Err(Error::Config { field: "engine".into(), reason: format!("unknown engine `{e}`") }),
                };
            }
            cfg.validate()?;
            let out = orchestrator::run_interferometer(&cfg)?;
            commit("interferometer", &common, &cfg, out, started)
        }
        Cmd::Sweep { common, protocol, t_oat } => {
            let (mut cfg, _) = load(&common)?;
            if let Some(p) = protocol {
                cfg.sweep.protocols = parse_protocols(&p)?;
            }
            if let Some(t) = t_oat {
                cfg.sweep.t_oat_ms = parse_ms_list(&t)?;
            }
            cfg.validate()?;
            let out = orchestrator::run_sweep(&cfg)?;
            commit("sweep", &common, &cfg, out, started)
        }
        Cmd::ValidateConfig { config } => {
            let cfg = SimConfig::from_file(&config)?;
            println!("ok {}", &canonical_hash(&cfg)[..16]);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(5);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

// Config-driven run: parse and validate a TOML config, run the closed-form table and commit it
// to a content-addressed run directory with a manifest.
use oat_gravimetry::config::SimConfig;
use oat_gravimetry::orchestrator::{canonical_hash, commit_run, read_manifest, run_analytic, unix_now};
use oat_gravimetry::Result;
use std::path::PathBuf;

pub const CONFIG: &str = r#"
atom_number = 2e4
seed_root = 42

[time]
t_oat_ms = 10.0
t_ms = 60.0

[engine]
kind = "mean_field"
"#;

#[derive(Debug)]
pub struct ConfigRunReport {
    pub run_dir: PathBuf,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub xi_min: f64,
}

pub fn run_example() -> Result<ConfigRunReport> {
    let cfg = SimConfig::from_toml_str(CONFIG)?;
    if let Err(e) = SimConfig::from_toml_str("atom_number = -5") {
        println!("rejected: {e}");
    }
    let out_root = std::env::temp_dir().join(format!("oatgrav-example-{}", std::process::id()));
    let started = unix_now();
    let res = run_analytic(cfg.atom_number, 20.0 / cfg.atom_number, 101)?;
    let rec = commit_run(&out_root, "analytic", &cfg, &cfg.to_toml(), cfg.seed_root, &[], &res, started)?;
    let m = read_manifest(&rec.dir)?;
    let report = ConfigRunReport {
        run_dir: rec.dir.clone(),
        config_hash: canonical_hash(&cfg),
        outputs: m.outputs.iter().map(|f| f.path.clone()).collect(),
        xi_min: res.summary["xi_min"].as_f64().unwrap_or(f64::NAN),
    };
    println!("run directory {}", report.run_dir.display());
    println!("config hash {}, outputs {:?}, best xi {:.4}", &report.config_hash[..16], report.outputs, report.xi_min);
    std::fs::remove_dir_all(&out_root)?;
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

//! Config-driven runs behind the CLI subcommands, run directories and manifests.
//!
//! Every run lands in `<output_dir>/<hash16>/run-<k>/`, where `hash16` is the first 16 hex
//! digits of the SHA-256 of the canonical JSON form of the config. Directories are never
//! reused; `k` counts up. Files are written by one thread after the computation finishes,
//! `manifest.json` last.

use crate::config::{GridModel, SimConfig};
use crate::error::{Error, Result};
use crate::figures::{emit_figure_data, FigureData, OutputFile, XiEngine, XiRow};
use crate::gpe::{axial_density, run_squeezing_stage, GroundstateOptions, GroundstateResult, SqueezingStage};
use crate::interferometer::{
    noise_sweep, oat_stage_xi, sensitivity_finite_difference, signal_slope, write_results_csv, Bs2Setting, Engine,
    NoiseSpec, Protocol, PulseSequence, SensitivityResult,
};
use crate::oat::{lambda_scan, write_analytic_csv, xi_min, OatParams};
use crate::scenario::{Model, Scenario};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Process exit status for an error: 3 config/schema, 4 I/O, 5 solver or numerics.
/// Command-line usage errors exit with 2 before any of this runs.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::MalformedSequence(_)
        | Error::LengthMismatch { .. }
        | Error::GridMismatch
        | Error::FrameMismatch => 3,
        Error::Io(_) | Error::Csv(_) | Error::Checkpoint(_) => 4,
        _ => 5,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical (serde_json, declaration-ordered) form of any serializable input.
pub fn canonical_hash<T: Serialize>(value: &T) -> String {
    sha256_hex(serde_json::to_string(value).expect("serializable").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngProvenance {
    pub algorithm: String,
    pub seed_root: u64,
    pub streams: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub code_version: String,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub threads: usize,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub rng: RngProvenance,
}

pub fn rng_provenance(seed_root: u64) -> RngProvenance {
    RngProvenance {
        algorithm: "ChaCha20 (rand_chacha), seed_from_u64(seed_root)".into(),
        seed_root,
        streams: "stream = purpose << 56 | trajectory; purpose 1 vacuum, 2 shot, 3 detection; BS2 tuning trajectories offset by 2^48".into(),
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Files and a JSON summary produced by one operation, not yet on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub files: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

fn next_run_dir(base: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(base)?;
    for k in 0.. {
        let dir = base.join(format!("run-{k}"));
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

fn entry(dir: &Path, path: &Path) -> Result<FileEntry> {
    let bytes = std::fs::read(path)?;
    let shown = path.strip_prefix(dir).unwrap_or(path);
    Ok(FileEntry { path: shown.display().to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}

/// Commits a finished run. `key` is the canonical input the directory is keyed on;
/// `config_text` is stored next to the outputs.
pub fn commit_run<K: Serialize>(
    output_dir: &Path,
    command: &str,
    key: &K,
    config_text: &str,
    seed_root: u64,
    inputs: &[PathBuf],
    outputs: &RunOutputs,
    started_unix_s: u64,
) -> Result<RunRecord> {
    let hash = canonical_hash(key);
    let dir = next_run_dir(&output_dir.join(&hash[..16]))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put("config.toml", config_text.as_bytes())?;
    for f in &outputs.files {
        put(&f.name, &f.bytes)?;
    }
    put("summary.json", serde_json::to_string_pretty(&outputs.summary).expect("json").as_bytes())?;
    let manifest = RunManifest {
        command: command.into(),
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").into(),
        started_unix_s,
        finished_unix_s: unix_now(),
        threads: rayon::current_num_threads(),
        inputs: inputs.iter().map(|p| entry(Path::new(""), p)).collect::<Result<_>>()?,
        outputs: written.iter().map(|p| entry(&dir, p)).collect::<Result<_>>()?,
        rng: rng_provenance(seed_root),
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("json"))?;
    Ok(RunRecord { dir, manifest })
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Config { field: "manifest.json".into(), reason: e.to_string() })
}

// Model construction

pub fn solve_groundstate(cfg: &SimConfig, scenario: &Scenario) -> Result<GroundstateResult> {
    let opts = GroundstateOptions { tolerance: cfg.grid.groundstate_tolerance, ..Default::default() };
    scenario.groundstate(cfg.grid.groundstate_n_r, cfg.grid.groundstate_n_z, &opts)
}

/// Squeezing stage alone: BS1, T_oat, mirror, T_oat.
pub fn stage_sequence(t_oat: f64) -> PulseSequence {
    let full = PulseSequence::quantum_enhanced(t_oat, 1.0, Bs2Setting { theta: 4.0, phi: 0.0 }, 0.0, 0.0);
    PulseSequence { segments: full.segments[..4].to_vec() }
}

/// Sequence used only to size the grid (BS2 angle generic, so both outputs are tracked).
fn sizing_sequence(protocol: Protocol, t_oat: f64, t: f64) -> PulseSequence {
    PulseSequence::for_protocol(protocol, t_oat, t, Bs2Setting { theta: 4.0, phi: 0.0 }, 0.0, 0.0)
}

/// Largest axial grid `prepare_model` will grow to.
pub const MAX_AXIAL_POINTS: usize = 1 << 16;

/// Evolution model on a grid that holds every packet of the given sequences until they end.
/// `grid.n_z` is a floor: it is doubled while the released state would fail the aliasing guard.
pub fn prepare_model(cfg: &SimConfig, scenario: &Scenario, gs: &GroundstateResult, seqs: &[PulseSequence]) -> Result<Model> {
    let total = seqs.iter().map(PulseSequence::total_duration).fold(0.0, f64::max);
    let drift = seqs.iter().map(PulseSequence::max_drift_time).fold(0.0, f64::max);
    let offset = scenario.species.recoil_velocity() * drift;
    let steps = cfg.step_control();
    let mut n_z = cfg.grid.n_z;
    loop {
        let model = match cfg.grid.model {
            GridModel::Effective1d => scenario.effective_1d(gs, scenario.line_grid(n_z, total, offset)?, total, &steps)?,
            GridModel::Cylindrical => {
                scenario.cylindrical(gs, scenario.cylinder_grid(cfg.grid.n_r, n_z, total, offset)?, total, &steps)?
            }
        };
        match model.mean_field.aliasing_guard(&model.initial) {
            Err(Error::Aliasing { .. }) if n_z < MAX_AXIAL_POINTS => n_z *= 2,
            Err(e) => return Err(e),
            Ok(()) => {
                if n_z != cfg.grid.n_z {
                    log::info!("axial grid raised from {} to {n_z} points to resolve the released cloud", cfg.grid.n_z);
                }
                return Ok(model);
            }
        }
    }
}

fn csv_file(name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<OutputFile> {
    let mut bytes = Vec::new();
    f(&mut bytes)?;
    Ok(OutputFile { name: name.into(), bytes })
}

// Operations

pub fn run_groundstate(cfg: &SimConfig) -> Result<RunOutputs> {
    let sc = cfg.scenario()?;
    let gs = solve_groundstate(cfg, &sc)?;
    let axial = axial_density(&gs.state)?;
    let z = gs.state.geometry.axial().z_values();
    let density = csv_file("groundstate_axial.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["z_m", "density_per_m"])?;
        for (zi, n) in z.iter().zip(&axial) {
            w.write_record(&[format!("{zi:e}"), format!("{n:e}")])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let history = csv_file("residual_history.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["iteration", "residual"])?;
        for (i, r) in gs.residual_history.iter().enumerate() {
            w.write_record(&[i.to_string(), format!("{r:e}")])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let tf = sc.thomas_fermi()?;
    let summary = json!({
        "atom_number": gs.state.norm1(),
        "mu_j": gs.mu,
        "mu_over_hbar_rad_s": gs.mu / crate::params::HBAR,
        "energy_per_atom_j": gs.energy,
        "iterations": gs.iterations,
        "residual": gs.residual,
        "thomas_fermi_mu_j": tf.mu,
        "r_perp0_m": tf.r_perp0,
    });
    Ok(RunOutputs { files: vec![density, history], summary })
}

/// Mean-field diagnostics and squeezing at 2 T_oat for the model built from `cfg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSummary {
    pub n_atoms: f64,
    pub t_oat_s: f64,
    pub lambda: f64,
    pub q_abs: f64,
    pub q_phase_rad: f64,
    pub xi_analytic: f64,
    pub theta_sq_rad: f64,
    pub phi_opt_rad: f64,
    pub xi_tw: Option<f64>,
    pub xi_tw_stderr: Option<f64>,
    pub theta_opt_tw_rad: Option<f64>,
    pub phi_opt_tw_rad: Option<f64>,
    pub n_traj: Option<usize>,
}

/// Squeezing for one config; also returns the diagnostics for fig2.
pub fn squeeze_point(cfg: &SimConfig) -> Result<(SqueezeSummary, crate::gpe::SqueezingDiagnostics)> {
    let sc = cfg.scenario()?;
    let gs = solve_groundstate(cfg, &sc)?;
    let t_oat = cfg.t_oat();
    if !(t_oat > 0.0) {
        return Err(Error::Config { field: "time.t_oat_ms".into(), reason: "squeezing needs t_oat_ms > 0".into() });
    }
    let model = prepare_model(cfg, &sc, &gs, &[stage_sequence(t_oat)])?;
    let stage = SqueezingStage { t_oat, policy: model.policy.clone(), sample_stride: 8, store_densities: false };
    let (diag, _) = run_squeezing_stage(&model.mean_field, &model.initial, &stage)?;
    let n = model.atom_number();
    let params = OatParams::new(n, diag.final_lambda(), diag.final_q());
    let pred = xi_min(&params)?;
    let mut s = SqueezeSummary {
        n_atoms: n,
        t_oat_s: t_oat,
        lambda: diag.final_lambda(),
        q_abs: diag.final_q().norm(),
        q_phase_rad: diag.final_q().arg(),
        xi_analytic: pred.xi,
        theta_sq_rad: pred.theta_sq,
        phi_opt_rad: pred.phi_opt,
        xi_tw: None,
        xi_tw_stderr: None,
        theta_opt_tw_rad: None,
        phi_opt_tw_rad: None,
        n_traj: None,
    };
    if let Engine::Tw { n_traj, seed_root } = cfg.engine() {
        let x = oat_stage_xi(&model, t_oat, seed_root, n_traj, cfg.protocol.theta_points)?;
        s.xi_tw = Some(x.xi);
        s.xi_tw_stderr = Some(x.xi_stderr);
        s.theta_opt_tw_rad = Some(x.theta_opt);
        s.phi_opt_tw_rad = Some(x.phi_opt);
        s.n_traj = Some(n_traj);
    }
    Ok((s, diag))
}

pub fn run_squeeze(cfg: &SimConfig) -> Result<RunOutputs> {
    let (s, diag) = squeeze_point(cfg)?;
    let mut files = vec![csv_file("squeezing.csv", |b| diag.write_csv(b))?];
    files.extend(emit_figure_data(&FigureData::Fig2(diag), cfg.species.k0_per_m)?);
    Ok(RunOutputs { files, summary: serde_json::to_value(&s).expect("json") })
}

/// Closed-form table at perfect overlap for lambda in [0, lambda_max].
pub fn run_analytic(n_atoms: f64, lambda_max: f64, points: usize) -> Result<RunOutputs> {
    if !(n_atoms >= 1.0) {
        return Err(Error::Config { field: "n".into(), reason: "must be >= 1".into() });
    }
    if !(lambda_max > 0.0) || points < 2 {
        return Err(Error::Config { field: "lambda_max".into(), reason: "need lambda_max > 0 and points >= 2".into() });
    }
    let lambdas: Vec<f64> = (0..points).map(|i| lambda_max * i as f64 / (points - 1) as f64).collect();
    let rows = lambda_scan(n_atoms, &lambdas)?;
    let best = rows.iter().map(|r| r.xi).fold(f64::INFINITY, f64::min);
    let file = csv_file("analytic.csv", |b| write_analytic_csv(&rows, b))?;
    Ok(RunOutputs { files: vec![file], summary: json!({ "n_atoms": n_atoms, "points": points, "xi_min": best }) })
}

pub fn run_interferometer(cfg: &SimConfig) -> Result<RunOutputs> {
    let sc = cfg.scenario()?;
    let gs = solve_groundstate(cfg, &sc)?;
    let protocol = cfg.protocol.name;
    let pc = cfg.protocol_config(protocol);
    let model = prepare_model(cfg, &sc, &gs, &[sizing_sequence(protocol, pc.t_oat, pc.t)])?;
    let dg = cfg.protocol.delta_g_probe_m_per_s2;
    match cfg.engine() {
        Engine::MeanField => {
            if cfg.noise.to_spec() != NoiseSpec::default() {
                return Err(Error::Config { field: "noise".into(), reason: "noise needs the tw engine".into() });
            }
            let (slope, _) = signal_slope(&model, &pc, &Engine::MeanField, dg)?;
            let run = crate::interferometer::run_protocol(&model, &pc, &Engine::MeanField, &[pc.g0], &NoiseSpec::default())?;
            let summary = json!({
                "protocol": protocol.name(),
                "engine": "mean_field",
                "slope_per_m_s2": slope,
                "jz_out": run.mean_jz(0),
                "bs2": run.bs2,
            });
            Ok(RunOutputs { files: vec![], summary })
        }
        engine => {
            let r = sensitivity_finite_difference(&model, &pc, &engine, dg, &cfg.noise.to_spec())?;
            let file = csv_file("results.csv", |b| write_results_csv(std::slice::from_ref(&r), b))?;
            Ok(RunOutputs { files: vec![file], summary: serde_json::to_value(&r).expect("json") })
        }
    }
}

fn require_tw(cfg: &SimConfig, what: &str) -> Result<Engine> {
    match cfg.engine() {
        Engine::MeanField => Err(Error::Config { field: "engine.kind".into(), reason: format!("{what} needs the tw engine") }),
        e => Ok(e),
    }
}

/// Squeezing against atom number (fig3 table).
pub fn sweep_atom_numbers(cfg: &SimConfig, atom_numbers: &[f64]) -> Result<Vec<XiRow>> {
    let mut rows = Vec::new();
    for &n in atom_numbers {
        let mut c = cfg.clone();
        c.atom_number = n;
        let (s, _) = squeeze_point(&c)?;
        rows.push(XiRow { n_atoms: n, engine: XiEngine::Analytic, xi: s.xi_analytic, xi_stderr: 0.0 });
        if let (Some(x), Some(e)) = (s.xi_tw, s.xi_tw_stderr) {
            rows.push(XiRow { n_atoms: n, engine: XiEngine::Tw, xi: x, xi_stderr: e });
        }
    }
    Ok(rows)
}

/// Sensitivity of each protocol against T_oat, one grid per T_oat.
pub fn sweep_t_oat(cfg: &SimConfig, t_oat_ms: &[f64], protocols: &[Protocol]) -> Result<Vec<SensitivityResult>> {
    let engine = require_tw(cfg, "a T_oat sweep")?;
    let sc = cfg.scenario()?;
    let gs = solve_groundstate(cfg, &sc)?;
    let mut out = Vec::new();
    for &t_ms in t_oat_ms {
        let mut c = cfg.clone();
        c.time.t_oat_ms = t_ms;
        let seqs: Vec<_> = protocols.iter().map(|&p| sizing_sequence(p, c.t_oat(), c.t())).collect();
        let model = prepare_model(&c, &sc, &gs, &seqs)?;
        for &p in protocols {
            out.push(sensitivity_finite_difference(
                &model,
                &c.protocol_config(p),
                &engine,
                c.protocol.delta_g_probe_m_per_s2,
                &NoiseSpec::default(),
            )?);
        }
    }
    Ok(out)
}

/// One noise source at a time, each table with its noiseless row.
pub fn sweep_noise(
    cfg: &SimConfig,
    sigma_theta: &[f64],
    sigma_n_rel: &[f64],
    delta_n: &[f64],
) -> Result<(Vec<SensitivityResult>, Vec<SensitivityResult>, Vec<SensitivityResult>)> {
    let engine = require_tw(cfg, "a noise sweep")?;
    let sc = cfg.scenario()?;
    let gs = solve_groundstate(cfg, &sc)?;
    let protocol = cfg.protocol.name;
    let pc = cfg.protocol_config(protocol);
    let model = prepare_model(cfg, &sc, &gs, &[sizing_sequence(protocol, pc.t_oat, pc.t)])?;
    let zero = NoiseSpec::default();
    let mut specs = vec![zero];
    specs.extend(sigma_theta.iter().filter(|&&v| v > 0.0).map(|&v| NoiseSpec { sigma_theta: v, ..zero }));
    specs.extend(sigma_n_rel.iter().filter(|&&v| v > 0.0).map(|&v| NoiseSpec { sigma_n_rel: v, ..zero }));
    specs.extend(delta_n.iter().filter(|&&v| v > 0.0).map(|&v| NoiseSpec { delta_n: v, ..zero }));
    let all = noise_sweep(&model, &pc, &engine, cfg.protocol.delta_g_probe_m_per_s2, &specs)?;
    let base = all[0].clone();
    let pick = |f: fn(&NoiseSpec) -> f64| -> Vec<SensitivityResult> {
        std::iter::once(base.clone()).chain(all[1..].iter().filter(|r| f(&r.noise) > 0.0).cloned()).collect()
    };
    Ok((pick(|n| n.sigma_theta), pick(|n| n.sigma_n_rel), pick(|n| n.delta_n)))
}

pub fn run_sweep(cfg: &SimConfig) -> Result<RunOutputs> {
    let s = &cfg.sweep;
    let k0 = cfg.species.k0_per_m;
    let mut files = Vec::new();
    let mut results: Vec<SensitivityResult> = Vec::new();
    let mut summary = serde_json::Map::new();
    if !s.atom_numbers.is_empty() {
        let rows = sweep_atom_numbers(cfg, &s.atom_numbers)?;
        summary.insert("fig3_rows".into(), rows.len().into());
        files.extend(emit_figure_data(&FigureData::Fig3(rows), k0)?);
    }
    if !s.t_oat_ms.is_empty() {
        let protocols = if s.protocols.is_empty() { Protocol::ALL.to_vec() } else { s.protocols.clone() };
        let rows = sweep_t_oat(cfg, &s.t_oat_ms, &protocols)?;
        summary.insert("fig4_rows".into(), rows.len().into());
        files.extend(emit_figure_data(&FigureData::Fig4(rows.clone()), k0)?);
        results.extend(rows);
    }
    if !(s.sigma_theta_rad.is_empty() && s.sigma_n_rel.is_empty() && s.delta_n_atoms.is_empty()) {
        let (a, b, c) = sweep_noise(cfg, &s.sigma_theta_rad, &s.sigma_n_rel, &s.delta_n_atoms)?;
        summary.insert("fig5_rows".into(), (a.len() + b.len() + c.len()).into());
        results.extend(a.iter().chain(&b[1..]).chain(&c[1..]).cloned());
        files.extend(emit_figure_data(&FigureData::Fig5 { sigma_theta: a, sigma_n_rel: b, delta_n: c }, k0)?);
    }
    if files.is_empty() {
        return Err(Error::Config { field: "sweep".into(), reason: "nothing to sweep: all sweep lists are empty".into() });
    }
    if !results.is_empty() {
        files.push(csv_file("results.csv", |b| write_results_csv(&results, b))?);
    }
    Ok(RunOutputs { files, summary: serde_json::Value::Object(summary) })
}

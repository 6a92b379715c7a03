//! Run configuration. TOML with unit-suffixed keys; times are given in ms and converted to
//! seconds on the way in. The matching JSON schema ships as `schema/sim_config.schema.json`.

use crate::error::{Error, Result};
use crate::interferometer::{Bs2Choice, Bs2Setting, Engine, NoiseSpec, Protocol, ProtocolConfig};
use crate::params::{SpeciesParams, TrapConfig, BOHR, RB87_MASS};
use crate::scenario::{Scenario, StepControl};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Published schema for `SimConfig` files.
pub const SCHEMA_JSON: &str = include_str!("../schema/sim_config.schema.json");

fn cfg_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub mass_kg: f64,
    pub a11_bohr: f64,
    pub a22_bohr: f64,
    pub a12_bohr: f64,
    pub k0_per_m: f64,
}

impl Default for SpeciesSection {
    fn default() -> Self {
        SpeciesSection { mass_kg: RB87_MASS, a11_bohr: 100.4, a22_bohr: 95.0, a12_bohr: 97.66, k0_per_m: 1.61e7 }
    }
}

impl SpeciesSection {
    pub fn to_params(&self) -> SpeciesParams {
        SpeciesParams {
            mass: self.mass_kg,
            a11: self.a11_bohr * BOHR,
            a22: self.a22_bohr * BOHR,
            a12: self.a12_bohr * BOHR,
            k0: self.k0_per_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub f_radial_hz: f64,
    pub f_axial_hz: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        TrapSection { f_radial_hz: 32.0, f_axial_hz: 160.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridModel {
    #[serde(rename = "effective_1d")]
    Effective1d,
    Cylindrical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub model: GridModel,
    /// Axial points of the evolution grid.
    pub n_z: usize,
    /// Radial nodes of the evolution grid (cylindrical model only).
    pub n_r: usize,
    pub groundstate_n_r: usize,
    pub groundstate_n_z: usize,
    pub groundstate_tolerance: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            model: GridModel::Effective1d,
            n_z: 4096,
            n_r: 64,
            groundstate_n_r: 48,
            groundstate_n_z: 128,
            groundstate_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_oat_ms: f64,
    pub t_ms: f64,
    /// Peak nonlinear phase per step.
    pub max_phase_rad: f64,
    pub dt_max_ms: f64,
    pub dt_min_ms: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { t_oat_ms: 10.0, t_ms: 60.0, max_phase_rad: 0.04, dt_max_ms: 1.0, dt_min_ms: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Tw,
    MeanField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub kind: EngineKind,
    pub n_traj: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection { kind: EngineKind::Tw, n_traj: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bs2Mode {
    Ensemble,
    Hybrid,
    Analytic,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub name: Protocol,
    pub g0_m_per_s2: f64,
    pub delta_g_probe_m_per_s2: f64,
    pub bs2: Bs2Mode,
    /// Used when bs2 = "fixed".
    pub bs2_theta_rad: Option<f64>,
    pub bs2_phi_rad: Option<f64>,
    pub tuning_n_traj: usize,
    pub theta_points: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            name: Protocol::QuantumEnhanced,
            g0_m_per_s2: 0.0,
            delta_g_probe_m_per_s2: 1e-8,
            bs2: Bs2Mode::Hybrid,
            bs2_theta_rad: None,
            bs2_phi_rad: None,
            tuning_n_traj: 1000,
            theta_points: 720,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub sigma_theta_rad: f64,
    pub sigma_n_rel: f64,
    pub delta_n_atoms: f64,
}

impl NoiseSection {
    pub fn to_spec(&self) -> NoiseSpec {
        NoiseSpec { sigma_theta: self.sigma_theta_rad, sigma_n_rel: self.sigma_n_rel, delta_n: self.delta_n_atoms }
    }
}

/// Grids for `sweep`; empty lists are skipped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub atom_numbers: Vec<f64>,
    pub t_oat_ms: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub sigma_theta_rad: Vec<f64>,
    pub sigma_n_rel: Vec<f64>,
    pub delta_n_atoms: Vec<f64>,
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub atom_number: f64,
    #[serde(default = "default_seed")]
    pub seed_root: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
    #[serde(default)]
    pub species: SpeciesSection,
    #[serde(default)]
    pub trap: TrapSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(field, format!("must be >= 0, got {v}")))
    }
}

fn power_of_two(field: &str, v: usize) -> Result<()> {
    if v >= 4 && v.is_power_of_two() {
        Ok(())
    } else {
        Err(cfg_err(field, format!("must be a power of two >= 4, got {v}")))
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s).map_err(|e| {
            let msg = e.message().to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".into());
            cfg_err(&field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atom_number >= 1.0 && self.atom_number.is_finite()) {
            return Err(cfg_err("atom_number", format!("must be >= 1, got {}", self.atom_number)));
        }
        let sp = &self.species;
        positive("species.mass_kg", sp.mass_kg)?;
        positive("species.k0_per_m", sp.k0_per_m)?;
        for (f, v) in [("species.a11_bohr", sp.a11_bohr), ("species.a22_bohr", sp.a22_bohr), ("species.a12_bohr", sp.a12_bohr)] {
            if !v.is_finite() {
                return Err(cfg_err(f, "must be finite"));
            }
        }
        positive("trap.f_radial_hz", self.trap.f_radial_hz)?;
        positive("trap.f_axial_hz", self.trap.f_axial_hz)?;
        let g = &self.grid;
        power_of_two("grid.n_z", g.n_z)?;
        power_of_two("grid.groundstate_n_z", g.groundstate_n_z)?;
        if g.n_r < 2 {
            return Err(cfg_err("grid.n_r", "need at least 2 radial nodes"));
        }
        if g.groundstate_n_r < 2 {
            return Err(cfg_err("grid.groundstate_n_r", "need at least 2 radial nodes"));
        }
        positive("grid.groundstate_tolerance", g.groundstate_tolerance)?;
        let t = &self.time;
        non_negative("time.t_oat_ms", t.t_oat_ms)?;
        positive("time.t_ms", t.t_ms)?;
        positive("time.max_phase_rad", t.max_phase_rad)?;
        positive("time.dt_max_ms", t.dt_max_ms)?;
        positive("time.dt_min_ms", t.dt_min_ms)?;
        if t.dt_min_ms > t.dt_max_ms {
            return Err(cfg_err("time.dt_min_ms", "must not exceed dt_max_ms"));
        }
        if self.engine.kind == EngineKind::Tw && self.engine.n_traj < 2 {
            return Err(cfg_err("engine.n_traj", "the Wigner engine needs at least 2 trajectories"));
        }
        let p = &self.protocol;
        if !p.g0_m_per_s2.is_finite() {
            return Err(cfg_err("protocol.g0_m_per_s2", "must be finite"));
        }
        let dg = p.delta_g_probe_m_per_s2;
        if !(1e-10..=1e-4).contains(&dg.abs()) {
            return Err(cfg_err("protocol.delta_g_probe_m_per_s2", "must lie in [1e-10, 1e-4]"));
        }
        if p.name == Protocol::QuantumEnhanced && !(t.t_oat_ms > 0.0) {
            return Err(cfg_err("time.t_oat_ms", "quantum_enhanced needs t_oat_ms > 0"));
        }
        if p.bs2 == Bs2Mode::Fixed && (p.bs2_theta_rad.is_none() || p.bs2_phi_rad.is_none()) {
            return Err(cfg_err("protocol.bs2_theta_rad", "bs2 = \"fixed\" needs bs2_theta_rad and bs2_phi_rad"));
        }
        if matches!(p.bs2, Bs2Mode::Ensemble | Bs2Mode::Hybrid) && p.tuning_n_traj < 2 {
            return Err(cfg_err("protocol.tuning_n_traj", "needs at least 2 trajectories"));
        }
        if p.theta_points < 8 {
            return Err(cfg_err("protocol.theta_points", "needs at least 8 points"));
        }
        let n = &self.noise;
        non_negative("noise.sigma_theta_rad", n.sigma_theta_rad)?;
        non_negative("noise.sigma_n_rel", n.sigma_n_rel)?;
        non_negative("noise.delta_n_atoms", n.delta_n_atoms)?;
        let s = &self.sweep;
        for &v in &s.atom_numbers {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(cfg_err("sweep.atom_numbers", format!("entries must be >= 1, got {v}")));
            }
        }
        for &v in &s.t_oat_ms {
            positive("sweep.t_oat_ms", v)?;
        }
        for &v in &s.sigma_theta_rad {
            non_negative("sweep.sigma_theta_rad", v)?;
        }
        for &v in &s.sigma_n_rel {
            non_negative("sweep.sigma_n_rel", v)?;
        }
        for &v in &s.delta_n_atoms {
            non_negative("sweep.delta_n_atoms", v)?;
        }
        if self.output_dir.is_empty() {
            return Err(cfg_err("output_dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(
            self.species.to_params(),
            TrapConfig::new(self.trap.f_radial_hz, self.trap.f_axial_hz),
            self.atom_number,
        )
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            max_phase: self.time.max_phase_rad,
            dt_min: self.time.dt_min_ms * 1e-3,
            dt_max: self.time.dt_max_ms * 1e-3,
        }
    }

    pub fn t_oat(&self) -> f64 {
        self.time.t_oat_ms * 1e-3
    }

    pub fn t(&self) -> f64 {
        self.time.t_ms * 1e-3
    }

    pub fn engine(&self) -> Engine {
        match self.engine.kind {
            EngineKind::MeanField => Engine::MeanField,
            EngineKind::Tw => Engine::Tw { n_traj: self.engine.n_traj, seed_root: self.seed_root },
        }
    }

    pub fn bs2_choice(&self) -> Bs2Choice {
        let p = &self.protocol;
        match p.bs2 {
            Bs2Mode::Ensemble => Bs2Choice::Ensemble { n_traj: p.tuning_n_traj, theta_points: p.theta_points },
            Bs2Mode::Hybrid => Bs2Choice::Hybrid { n_traj: p.tuning_n_traj },
            Bs2Mode::Analytic => Bs2Choice::Analytic,
            Bs2Mode::Fixed => Bs2Choice::Fixed(Bs2Setting {
                theta: p.bs2_theta_rad.unwrap_or(0.0),
                phi: p.bs2_phi_rad.unwrap_or(0.0),
            }),
        }
    }

    pub fn protocol_config(&self, protocol: Protocol) -> ProtocolConfig {
        ProtocolConfig { protocol, t_oat: self.t_oat(), t: self.t(), g0: self.protocol.g0_m_per_s2, bs2: self.bs2_choice() }
    }
}

/// Parses a time list in ms: `10ms`, `0.01s`, `5,10,15`, or `2.5ms..20ms` with an optional
/// `:step` (the step defaults to the start value). Bare numbers are ms.
pub fn parse_ms_list(text: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| cfg_err("t_oat", format!("cannot parse `{text}`: {why}"));
    let one = |t: &str| -> Result<f64> {
        let t = t.trim();
        let (num, scale) = if let Some(v) = t.strip_suffix("ms") {
            (v, 1.0)
        } else if let Some(v) = t.strip_suffix('s') {
            (v, 1e3)
        } else {
            (t, 1.0)
        };
        let v: f64 = num.trim().parse().map_err(|_| bad("not a number"))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad("negative"));
        }
        Ok(v * scale)
    };
    if let Some((a, rest)) = text.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, st)) => (one(b)?, Some(one(st)?)),
            None => (one(rest)?, None),
        };
        let a = one(a)?;
        let step = step.unwrap_or(a);
        if !(step > 0.0) || b < a {
            return Err(bad("need a positive step and end >= start"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + step * i as f64).collect());
    }
    text.split(',').map(one).collect()
}

//! Protocol execution on either engine, finite-difference sensitivity and noise sweeps.
//!
//! Result CSV columns: protocol, T_oat_s, T_s, n_atoms, sigma_theta, sigma_n_rel, delta_n,
//! delta_g, delta_g_stderr.

use super::protocol::{run_branches, Bs2Setting, Protocol, PulseSequence, ShotDeviation};
use crate::error::{invalid, Error, Result};
use crate::gpe::{run_squeezing_stage, SqueezingStage};
use crate::oat::{xi_min, OatParams};
use crate::scenario::Model;
use crate::state::FieldState2;
use crate::tw::{add_vacuum_noise, estimate_spin_moments, jackknife, stream_rng, xi_from_ensemble, SpinMomentEstimates, SpinSample, StreamPurpose, XiEstimate};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Shot-to-shot pulse-area s.d. (rad), common to all pulses of a shot.
    pub sigma_theta: f64,
    /// Atom-number s.d. relative to N.
    pub sigma_n_rel: f64,
    /// Detection resolution (atoms); adds Delta_n^2 / 2 to Var(Jz).
    pub delta_n: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (f, v) in [("sigma_theta", self.sigma_theta), ("sigma_n_rel", self.sigma_n_rel), ("delta_n", self.delta_n)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(f, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_theta == 0.0 && self.sigma_n_rel == 0.0 && self.delta_n == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Engine {
    MeanField,
    Tw { n_traj: usize, seed_root: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Bs2Choice {
    Fixed(Bs2Setting),
    /// theta_sq and phi_opt of the closed-form model fed with mean-field (lambda, Q).
    Analytic,
    /// theta scan and atan2 phase on a separate Wigner ensemble taken at 2 T_oat.
    Ensemble { n_traj: usize, theta_points: usize },
    /// Analytic theta_sq, phase from the atan2 rule on a Wigner ensemble.
    Hybrid { n_traj: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    pub t_oat: f64,
    pub t: f64,
    pub g0: f64,
    pub bs2: Bs2Choice,
}

impl ProtocolConfig {
    pub fn new(protocol: Protocol, t_oat: f64, t: f64) -> Self {
        ProtocolConfig { protocol, t_oat, t, g0: 0.0, bs2: Bs2Choice::Hybrid { n_traj: 1000 } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_oat >= 0.0 && self.t_oat.is_finite()) {
            return Err(invalid("t_oat", "must be >= 0"));
        }
        if self.protocol == Protocol::QuantumEnhanced && !(self.t_oat > 0.0) {
            return Err(invalid("t_oat", "quantum_enhanced needs t_oat > 0"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(invalid("t", "must be > 0"));
        }
        if !self.g0.is_finite() {
            return Err(invalid("g0", "must be finite"));
        }
        Ok(())
    }

    pub fn sequence(&self, bs2: Bs2Setting, k0: f64) -> PulseSequence {
        PulseSequence::for_protocol(self.protocol, self.t_oat, self.t, bs2, k0, self.g0)
    }
}

/// Output spin samples, indexed [branch][trajectory].
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub protocol: Protocol,
    pub g_values: Vec<f64>,
    pub bs2: Option<Bs2Setting>,
    pub tuning: Option<XiEstimate>,
    pub samples: Vec<Vec<SpinSample>>,
    /// Grid modes per component for Wigner runs, 0 for mean field.
    pub n_modes: usize,
}

impl ProtocolRun {
    pub fn estimates(&self, branch: usize) -> Result<SpinMomentEstimates> {
        estimate_spin_moments(&self.samples[branch], self.n_modes)
    }

    pub fn mean_jz(&self, branch: usize) -> f64 {
        let s = &self.samples[branch];
        crate::numerics::kahan_sum(s.iter().map(|x| x.j[2])) / s.len() as f64
    }
}

/// Spin samples at 2 T_oat (before BS2) for a Wigner ensemble on stream ids `ids`.
fn oat_stage_samples(model: &Model, t_oat: f64, seed_root: u64, ids: &[u64]) -> Result<Vec<SpinSample>> {
    let prop = &model.wigner;
    let seq = PulseSequence {
        segments: PulseSequence::quantum_enhanced(t_oat, 1.0, Bs2Setting { theta: 0.0, phi: 0.0 }, 0.0, 0.0).segments[..4].to_vec(),
    };
    ids.par_iter()
        .map_init(
            || prop.plan.workspace(),
            |ws, &id| {
                let mut s = model.initial.clone();
                add_vacuum_noise(&mut s, seed_root, id);
                let out = run_branches(&seq, &s, prop, &model.policy, model.k0, &[0.0], ShotDeviation::default(), ws)?;
                SpinSample::from_state(&out[0])
            },
        )
        .collect()
}

const TUNING_STREAM_OFFSET: u64 = 1 << 48;

fn tuning_ensemble(model: &Model, t_oat: f64, engine: &Engine, n_traj: usize, theta_points: usize) -> Result<XiEstimate> {
    let seed = match engine {
        Engine::Tw { seed_root, .. } => *seed_root,
        Engine::MeanField => 0,
    };
    let ids: Vec<u64> = (0..n_traj as u64).map(|k| TUNING_STREAM_OFFSET + k).collect();
    let samples = oat_stage_samples(model, t_oat, seed, &ids)?;
    let est = estimate_spin_moments(&samples, model.geometry().n_modes())?;
    xi_from_ensemble(&est, theta_points)
}

/// Optimal squeezing at 2 T_oat from a Wigner ensemble on the main stream ids 0..n_traj.
pub fn oat_stage_xi(model: &Model, t_oat: f64, seed_root: u64, n_traj: usize, theta_points: usize) -> Result<XiEstimate> {
    if n_traj < 2 {
        return Err(Error::InsufficientTrajectories { needed: 2, got: n_traj });
    }
    let ids: Vec<u64> = (0..n_traj as u64).collect();
    let samples = oat_stage_samples(model, t_oat, seed_root, &ids)?;
    let est = estimate_spin_moments(&samples, model.geometry().n_modes())?;
    xi_from_ensemble(&est, theta_points)
}

/// BS2 angle and phase for the quantum-enhanced sequence.
pub fn tune_bs2(model: &Model, cfg: &ProtocolConfig, engine: &Engine) -> Result<(Bs2Setting, Option<XiEstimate>)> {
    match cfg.bs2 {
        Bs2Choice::Fixed(b) => Ok((b, None)),
        Bs2Choice::Analytic => {
            let stage = SqueezingStage { t_oat: cfg.t_oat, policy: model.policy.clone(), sample_stride: usize::MAX, store_densities: false };
            let (d, _) = run_squeezing_stage(&model.mean_field, &model.initial, &stage)?;
            let p = OatParams::new(model.atom_number(), d.final_lambda(), d.final_q());
            let pred = xi_min(&p)?;
            Ok((Bs2Setting { theta: pred.theta_sq, phi: pred.phi_opt }, None))
        }
        Bs2Choice::Ensemble { n_traj, theta_points } => {
            let xi = tuning_ensemble(model, cfg.t_oat, engine, n_traj, theta_points)?;
            Ok((Bs2Setting { theta: xi.theta_opt, phi: xi.phi_opt }, Some(xi)))
        }
        Bs2Choice::Hybrid { n_traj } => {
            let (analytic, _) = tune_bs2(model, &ProtocolConfig { bs2: Bs2Choice::Analytic, ..*cfg }, engine)?;
            let xi = tuning_ensemble(model, cfg.t_oat, engine, n_traj, 8)?;
            Ok((Bs2Setting { theta: analytic.theta, phi: xi.phi_opt }, Some(xi)))
        }
    }
}

/// Per-shot draws: pulse-area offset and atom-number factor.
fn shot_draws(noise: &NoiseSpec, seed_root: u64, k: u64) -> (f64, f64) {
    if noise.sigma_theta == 0.0 && noise.sigma_n_rel == 0.0 {
        return (0.0, 1.0);
    }
    let mut rng = stream_rng(seed_root, StreamPurpose::Shot, k);
    let a: f64 = StandardNormal.sample(&mut rng);
    let b: f64 = StandardNormal.sample(&mut rng);
    (noise.sigma_theta * a, (1.0 + noise.sigma_n_rel * b).max(0.0))
}

fn detection_draw(noise: &NoiseSpec, seed_root: u64, k: u64) -> f64 {
    if noise.delta_n == 0.0 {
        return 0.0;
    }
    let mut rng = stream_rng(seed_root, StreamPurpose::Detection, k);
    let x: f64 = StandardNormal.sample(&mut rng);
    x * noise.delta_n / 2f64.sqrt()
}

fn run_shot(
    model: &Model,
    seq: &PulseSequence,
    g_values: &[f64],
    noise: &NoiseSpec,
    wigner: Option<(u64, u64)>,
    ws: &mut crate::grid::Workspace,
) -> Result<Vec<SpinSample>> {
    let (seed, k) = wigner.unwrap_or((0, 0));
    let (d_theta, n_factor) = shot_draws(noise, seed, k);
    let mut s: FieldState2 = model.initial.clone();
    if n_factor != 1.0 {
        let f = n_factor.sqrt();
        s.psi1.iter_mut().for_each(|v| *v *= f);
    }
    if wigner.is_some() {
        add_vacuum_noise(&mut s, seed, k);
    }
    let prop = model.propagator(wigner.is_some());
    let out = run_branches(seq, &s, prop, &model.policy, model.k0, g_values, ShotDeviation { d_theta }, ws)
        .map_err(|e| match e {
            Error::NonFinite { time, .. } if wigner.is_some() => Error::NonFinite { time, trajectory: Some(k) },
            other => other,
        })?;
    let det = detection_draw(noise, seed, k);
    out.iter()
        .map(|st| {
            let mut x = SpinSample::from_state(st)?;
            x.j[2] += det;
            Ok(x)
        })
        .collect()
}

/// Runs the protocol at each g in `g_values` (branching at the first gravity imprint).
pub fn run_protocol(model: &Model, cfg: &ProtocolConfig, engine: &Engine, g_values: &[f64], noise: &NoiseSpec) -> Result<ProtocolRun> {
    cfg.validate()?;
    noise.validate()?;
    let (bs2, tuning) = if cfg.protocol == Protocol::QuantumEnhanced {
        let (b, t) = tune_bs2(model, cfg, engine)?;
        (Some(b), t)
    } else {
        (None, None)
    };
    run_with_bs2(model, cfg, engine, g_values, noise, bs2, tuning)
}

fn run_with_bs2(
    model: &Model,
    cfg: &ProtocolConfig,
    engine: &Engine,
    g_values: &[f64],
    noise: &NoiseSpec,
    bs2: Option<Bs2Setting>,
    tuning: Option<XiEstimate>,
) -> Result<ProtocolRun> {
    let seq = cfg.sequence(bs2.unwrap_or(Bs2Setting { theta: 0.0, phi: 0.0 }), model.k0);
    seq.validate()?;
    let (per_traj, n_modes): (Vec<Vec<SpinSample>>, usize) = match *engine {
        Engine::MeanField => {
            if !noise.is_zero() {
                return Err(invalid("noise", "the mean-field engine has no shot-to-shot ensemble"));
            }
            let mut ws = model.mean_field.plan.workspace();
            (vec![run_shot(model, &seq, g_values, noise, None, &mut ws)?], 0)
        }
        Engine::Tw { n_traj, seed_root } => {
            if n_traj < 2 {
                return Err(Error::InsufficientTrajectories { needed: 2, got: n_traj });
            }
            let res: Result<Vec<Vec<SpinSample>>> = (0..n_traj as u64)
                .into_par_iter()
                .map_init(
                    || model.wigner.plan.workspace(),
                    |ws, k| run_shot(model, &seq, g_values, noise, Some((seed_root, k)), ws),
                )
                .collect();
            (res?, model.geometry().n_modes())
        }
    };
    let samples = (0..g_values.len()).map(|b| per_traj.iter().map(|t| t[b]).collect()).collect();
    Ok(ProtocolRun { protocol: cfg.protocol, g_values: g_values.to_vec(), bs2, tuning, samples, n_modes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub protocol: Protocol,
    pub t_oat: f64,
    pub t: f64,
    pub n_atoms: f64,
    pub noise: NoiseSpec,
    pub delta_g: f64,
    pub delta_g_stderr: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    /// Corrected Var(Jz_out), detection smearing included.
    pub output_variance: f64,
    pub detection_variance: f64,
    pub n_traj: usize,
    pub bs2: Option<Bs2Setting>,
}

/// Delta g = sqrt(Var Jz) / |d<Jz>/dg| from a same-seed pair of branches.
pub fn sensitivity_from_run(run: &ProtocolRun, cfg: &ProtocolConfig, n_atoms: f64, noise: &NoiseSpec) -> Result<SensitivityResult> {
    if run.g_values.len() != 2 {
        return Err(invalid("g_values", "finite difference needs two branches"));
    }
    let dg = run.g_values[1] - run.g_values[0];
    let m8 = run.n_modes as f64 / 8.0;
    let feats: Vec<[f64; 3]> =
        run.samples[0].iter().zip(&run.samples[1]).map(|(a, b)| [a.j[2], b.j[2], a.j[2] * a.j[2]]).collect();
    let (v, e) = jackknife(&feats, |m| {
        let slope = (m[1] - m[0]) / dg;
        let var = m[2] - m[0] * m[0] - m8;
        vec![slope, var, var.max(0.0).sqrt() / slope.abs()]
    })?;
    if !(v[0].abs() > 3.0 * e[0]) {
        return Err(Error::ZeroSlope);
    }
    Ok(SensitivityResult {
        protocol: run.protocol,
        t_oat: cfg.t_oat,
        t: cfg.t,
        n_atoms,
        noise: *noise,
        delta_g: v[2],
        delta_g_stderr: e[2],
        slope: v[0],
        slope_stderr: e[0],
        output_variance: v[1],
        detection_variance: 0.5 * noise.delta_n * noise.delta_n,
        n_traj: feats.len(),
        bs2: run.bs2,
    })
}

fn check_probe(dg: f64) -> Result<()> {
    if !(1e-10..=1e-4).contains(&dg.abs()) {
        return Err(invalid("delta_g_probe", "must lie in [1e-10, 1e-4] m/s^2"));
    }
    Ok(())
}

pub fn sensitivity_finite_difference(
    model: &Model,
    cfg: &ProtocolConfig,
    engine: &Engine,
    delta_g_probe: f64,
    noise: &NoiseSpec,
) -> Result<SensitivityResult> {
    check_probe(delta_g_probe)?;
    if matches!(engine, Engine::MeanField) {
        return Err(invalid("engine", "output variance needs the Wigner engine"));
    }
    let run = run_protocol(model, cfg, engine, &[cfg.g0, cfg.g0 + delta_g_probe], noise)?;
    sensitivity_from_run(&run, cfg, model.atom_number(), noise)
}

/// d<Jz_out>/dg by finite difference; valid for either engine. Returns (slope, stderr).
pub fn signal_slope(model: &Model, cfg: &ProtocolConfig, engine: &Engine, delta_g_probe: f64) -> Result<(f64, f64)> {
    check_probe(delta_g_probe)?;
    let run = run_protocol(model, cfg, engine, &[cfg.g0, cfg.g0 + delta_g_probe], &NoiseSpec::default())?;
    let feats: Vec<[f64; 2]> = run.samples[0].iter().zip(&run.samples[1]).map(|(a, b)| [a.j[2], b.j[2]]).collect();
    if feats.len() == 1 {
        return Ok(((feats[0][1] - feats[0][0]) / delta_g_probe, 0.0));
    }
    let (v, e) = jackknife(&feats, |m| vec![(m[1] - m[0]) / delta_g_probe])?;
    Ok((v[0], e[0]))
}

/// Sensitivity for each noise setting on identical seeds; BS2 is tuned once without noise.
pub fn noise_sweep(
    model: &Model,
    cfg: &ProtocolConfig,
    engine: &Engine,
    delta_g_probe: f64,
    noises: &[NoiseSpec],
) -> Result<Vec<SensitivityResult>> {
    check_probe(delta_g_probe)?;
    if matches!(engine, Engine::MeanField) {
        return Err(invalid("engine", "noise sweeps need the Wigner engine"));
    }
    cfg.validate()?;
    let (bs2, tuning) = if cfg.protocol == Protocol::QuantumEnhanced {
        let (b, t) = tune_bs2(model, cfg, engine)?;
        (Some(b), t)
    } else {
        (None, None)
    };
    noises
        .iter()
        .map(|n| {
            n.validate()?;
            let run = run_with_bs2(model, cfg, engine, &[cfg.g0, cfg.g0 + delta_g_probe], n, bs2, tuning.clone())?;
            sensitivity_from_run(&run, cfg, model.atom_number(), n)
        })
        .collect()
}

pub fn write_results_csv<W: std::io::Write>(rows: &[SensitivityResult], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["protocol", "T_oat_s", "T_s", "n_atoms", "sigma_theta", "sigma_n_rel", "delta_n", "delta_g", "delta_g_stderr"])?;
    for r in rows {
        wr.write_record(&[
            r.protocol.name().to_string(),
            format!("{:e}", r.t_oat),
            format!("{:e}", r.t),
            format!("{:e}", r.n_atoms),
            format!("{:e}", r.noise.sigma_theta),
            format!("{:e}", r.noise.sigma_n_rel),
            format!("{:e}", r.noise.delta_n),
            format!("{:e}", r.delta_g),
            format!("{:e}", r.delta_g_stderr),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Row subset that survives a CSV round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub protocol: Protocol,
    pub t_oat: f64,
    pub t: f64,
    pub n_atoms: f64,
    pub noise: NoiseSpec,
    pub delta_g: f64,
    pub delta_g_stderr: f64,
}

pub fn read_results_csv<R: std::io::Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Config { field: "results csv".into(), reason: format!("bad column {i}") })
        };
        out.push(ResultRow {
            protocol: Protocol::parse(rec.get(0).unwrap_or(""))?,
            t_oat: f(1)?,
            t: f(2)?,
            n_atoms: f(3)?,
            noise: NoiseSpec { sigma_theta: f(4)?, sigma_n_rel: f(5)?, delta_n: f(6)? },
            delta_g: f(7)?,
            delta_g_stderr: f(8)?,
        });
    }
    Ok(out)
}

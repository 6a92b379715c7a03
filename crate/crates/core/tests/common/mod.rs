#![allow(dead_code)]

use oat_gravimetry::gpe::{GroundstateOptions, GroundstateResult};
use oat_gravimetry::interferometer::{Bs2Setting, Protocol, PulseSequence};
use oat_gravimetry::scenario::{Model, Scenario, StepControl};
use std::sync::OnceLock;

pub const K0: f64 = 1.61e7;

pub fn scenario(n: f64) -> Scenario {
    Scenario::pancake(n).unwrap()
}

/// Small groundstate for N = 1e4, shared by every test in a binary.
pub fn groundstate_1e4() -> &'static GroundstateResult {
    static GS: OnceLock<GroundstateResult> = OnceLock::new();
    GS.get_or_init(|| scenario(1e4).groundstate(24, 64, &GroundstateOptions::default()).unwrap())
}

/// Effective 1D model at N = 1e4 whose grid holds every listed protocol.
pub fn model(t_oat: f64, t: f64, protocols: &[Protocol], n_z: usize, steps: &StepControl) -> Model {
    let sc = scenario(1e4);
    let generic = Bs2Setting { theta: 4.0, phi: 0.0 };
    let seqs: Vec<PulseSequence> =
        protocols.iter().map(|&p| PulseSequence::for_protocol(p, t_oat, t, generic, 0.0, 0.0)).collect();
    let total = seqs.iter().map(|s| s.total_duration()).fold(0.0, f64::max);
    let drift = seqs.iter().map(|s| s.max_drift_time()).fold(0.0, f64::max);
    let grid = sc.line_grid(n_z, total, sc.species.recoil_velocity() * drift).unwrap();
    sc.effective_1d(groundstate_1e4(), grid, total, steps).unwrap()
}

pub fn free_model(t_oat: f64, t: f64, protocols: &[Protocol]) -> Model {
    model(t_oat, t, protocols, 1024, &StepControl::default()).without_interactions()
}

/// Interacting model small enough for ensembles of a few dozen trajectories.
pub fn small_model(t_oat: f64, t: f64, protocols: &[Protocol]) -> Model {
    model(t_oat, t, protocols, 2048, &StepControl::default())
}

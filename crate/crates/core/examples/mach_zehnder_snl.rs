// Non-interacting Mach-Zehnder gravimeter: the Wigner ensemble reproduces the standard
// quantum limit 1 / (sqrt(N) k0 T^2).
use oat_gravimetry::figures::delta_g_snl;
use oat_gravimetry::gpe::GroundstateOptions;
use oat_gravimetry::interferometer::{
    sensitivity_finite_difference, Bs2Choice, Bs2Setting, Engine, NoiseSpec, Protocol, ProtocolConfig,
};
use oat_gravimetry::scenario::{Scenario, StepControl};
use oat_gravimetry::Result;

#[derive(Debug)]
pub struct SnlReport {
    pub delta_g: f64,
    pub delta_g_stderr: f64,
    pub snl: f64,
}

pub fn run_example() -> Result<SnlReport> {
    let (n, t) = (1e4, 0.02);
    let sc = Scenario::pancake(n)?;
    let gs = sc.groundstate(24, 64, &GroundstateOptions::default())?;
    let mut cfg = ProtocolConfig::new(Protocol::PlainMz, 0.0, t);
    cfg.bs2 = Bs2Choice::Fixed(Bs2Setting { theta: 0.0, phi: 0.0 });
    let seq = cfg.sequence(Bs2Setting { theta: 0.0, phi: 0.0 }, sc.species.k0);
    let offset = sc.species.recoil_velocity() * seq.max_drift_time();
    let grid = sc.line_grid(1024, seq.total_duration(), offset)?;
    let model = sc.effective_1d(&gs, grid, seq.total_duration(), &StepControl::default())?.without_interactions();

    let engine = Engine::Tw { n_traj: 400, seed_root: 3 };
    let r = sensitivity_finite_difference(&model, &cfg, &engine, 1e-8, &NoiseSpec::default())?;
    let snl = delta_g_snl(n, sc.species.k0, t);
    println!("delta g = {:.4e} +- {:.2e}, SNL {:.4e}, ratio {:.3}", r.delta_g, r.delta_g_stderr, snl, r.delta_g / snl);
    Ok(SnlReport { delta_g: r.delta_g, delta_g_stderr: r.delta_g_stderr, snl })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

// Imaginary-time groundstate of the pancake trap on an (r, z) grid, compared with the
// Thomas-Fermi chemical potential.
use oat_gravimetry::gpe::{energy_per_particle, GroundstateOptions};
use oat_gravimetry::scenario::Scenario;
use oat_gravimetry::Result;

#[derive(Debug)]
pub struct GroundstateReport {
    pub mu: f64,
    pub mu_tf: f64,
    pub energy_per_atom: f64,
    pub norm: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub fn run_example() -> Result<GroundstateReport> {
    let sc = Scenario::pancake(1e4)?;
    let gs = sc.groundstate(32, 64, &GroundstateOptions { tolerance: 1e-7, ..Default::default() })?;
    let r = GroundstateReport {
        mu: gs.mu,
        mu_tf: sc.thomas_fermi()?.mu,
        energy_per_atom: energy_per_particle(&gs),
        norm: gs.state.total_norm(),
        iterations: gs.iterations,
        residual: gs.residual,
    };
    println!(
        "mu = {:.4e} J (TF {:.4e}, ratio {:.3}), E/N = {:.4e} J, N = {:.1}, {} iterations, residual {:.1e}",
        r.mu,
        r.mu_tf,
        r.mu / r.mu_tf,
        r.energy_per_atom,
        r.norm,
        r.iterations,
        r.residual
    );
    Ok(r)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

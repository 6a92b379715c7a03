// Wigner ensemble checkpoints: evolve part way, write, read back and continue. The resumed
// ensemble ends bit-identical to one continued in memory.
use oat_gravimetry::gpe::GroundstateOptions;
use oat_gravimetry::interferometer::apply_beamsplitter;
use oat_gravimetry::scenario::{Scenario, StepControl};
use oat_gravimetry::tw::{evolve_tw, read_checkpoint, sample_initial_ensemble, write_checkpoint};
use oat_gravimetry::Result;

#[derive(Debug)]
pub struct CheckpointReport {
    pub bytes: usize,
    pub identical: bool,
}

pub fn run_example() -> Result<CheckpointReport> {
    let sc = Scenario::pancake(1e4)?;
    let gs = sc.groundstate(24, 64, &GroundstateOptions::default())?;
    let grid = sc.line_grid(1024, 2e-3, 0.0)?;
    let model = sc.effective_1d(&gs, grid, 2e-3, &StepControl::default())?;
    let mut split = model.initial.clone();
    apply_beamsplitter(&mut split, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2)?;

    let mut straight = sample_initial_ensemble(&split, 8, 21)?;
    evolve_tw(&mut straight, model.propagator(true), 1e-3, &model.policy)?;
    let mut buf = Vec::new();
    write_checkpoint(&straight, &mut buf)?;
    let mut resumed = read_checkpoint(buf.as_slice())?;
    for ens in [&mut straight, &mut resumed] {
        evolve_tw(ens, model.propagator(true), 1e-3, &model.policy)?;
    }

    let identical = straight.samples.iter().zip(&resumed.samples).all(|(a, b)| a.psi1 == b.psi1 && a.psi2 == b.psi2);
    println!("checkpoint {} bytes, resumed run identical: {identical}", buf.len());
    Ok(CheckpointReport { bytes: buf.len(), identical })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

// Mean-field squeezing stage on an effective 1D grid: chi(t), lambda and the overlap Q,
// fed into the closed-form squeezing estimate.
use oat_gravimetry::gpe::{run_squeezing_stage, GroundstateOptions, SqueezingStage};
use oat_gravimetry::oat::{xi_min, OatParams};
use oat_gravimetry::orchestrator::stage_sequence;
use oat_gravimetry::scenario::{Scenario, StepControl};
use oat_gravimetry::Result;

#[derive(Debug)]
pub struct StageReport {
    pub lambda: f64,
    pub q_abs: f64,
    pub xi: f64,
    pub theta_sq: f64,
    pub samples: usize,
}

pub fn run_example() -> Result<StageReport> {
    let t_oat = 5e-3;
    let sc = Scenario::pancake(1e4)?;
    let gs = sc.groundstate(24, 64, &GroundstateOptions::default())?;
    let seq = stage_sequence(t_oat);
    let offset = sc.species.recoil_velocity() * seq.max_drift_time();
    let grid = sc.line_grid(2048, seq.total_duration(), offset)?;
    let model = sc.effective_1d(&gs, grid, seq.total_duration(), &StepControl::default())?;

    let stage = SqueezingStage { t_oat, policy: model.policy.clone(), sample_stride: 4, store_densities: false };
    let (diag, _) = run_squeezing_stage(&model.mean_field, &model.initial, &stage)?;
    let n = diag.times.len();
    for i in (0..n).step_by((n / 6).max(1)).chain([n - 1]) {
        println!(
            "t = {:5.2} ms  chi = {:8.3e} 1/s  lambda = {:.3e}  |Q| = {:.4}",
            diag.times[i] * 1e3,
            diag.chi[i],
            diag.lambda[i],
            diag.q[i].norm()
        );
    }
    let pred = xi_min(&OatParams::new(model.atom_number(), diag.final_lambda(), diag.final_q()))?;
    println!("xi = {:.4} ({:+.2} dB) at theta = {:.4}", pred.xi, 20.0 * pred.xi.log10(), pred.theta_sq);
    Ok(StageReport {
        lambda: diag.final_lambda(),
        q_abs: diag.final_q().norm(),
        xi: pred.xi,
        theta_sq: pred.theta_sq,
        samples: diag.times.len(),
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

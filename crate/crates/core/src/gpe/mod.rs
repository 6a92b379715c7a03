//! Two-component mean-field engine.
//!
//! Real-time evolution is second-order Strang splitting, potential half-kicks merged
//! between consecutive steps. The same propagator runs truncated-Wigner trajectories
//! when `wigner` is set, which subtracts the symmetric-ordering self-energy terms.

mod diagnostics;
mod groundstate;

pub use diagnostics::*;
pub use groundstate::*;

use crate::error::{Error, Result};
use crate::grid::{Geometry, SpectralPlan, Step, Workspace};
use crate::numerics::KahanSum;
use crate::params::{CouplingMatrix, HBAR};
use crate::state::{FieldState2, Frame};
use crate::tw::scaling::{g1d_of_t, ScalingSeries};
use num_complex::Complex64;
use std::sync::Arc;

/// Interaction strengths as a function of time.
#[derive(Debug, Clone)]
pub enum Interaction {
    Constant(CouplingMatrix),
    /// 1D couplings 4 g / (3 pi R_perp(0)^2 b_perp(t)^2).
    Effective1D {
        g3d: CouplingMatrix,
        r_perp0: f64,
        series: Arc<ScalingSeries>,
    },
}

impl Interaction {
    pub fn at(&self, t: f64) -> CouplingMatrix {
        match self {
            Interaction::Constant(g) => *g,
            Interaction::Effective1D { g3d, r_perp0, series } => {
                g1d_of_t(g3d, *r_perp0, &series.at(t)).unwrap_or_default()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Interaction::Constant(g) => g.is_zero(),
            Interaction::Effective1D { g3d, .. } => g3d.is_zero(),
        }
    }
}

/// How a reference peak density thins out during free expansion.
#[derive(Debug, Clone)]
pub enum Dilution {
    None,
    /// 1 / b_z: axial density of the effective 1D model.
    Axial(Arc<ScalingSeries>),
    /// 1 / (b_perp^2 b_z): 3D density.
    Volume(Arc<ScalingSeries>),
}

/// Interaction-limited step sizes: the peak nonlinear phase per step stays below
/// `max_phase`. Steps are dt_max / 2^k so only a few kinetic tables are ever built,
/// and the schedule depends only on time, never on the fields.
#[derive(Debug, Clone)]
pub struct AdaptiveSteps {
    pub max_phase: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub peak_density0: f64,
    /// Extra density added to the estimate (vacuum noise in Wigner runs).
    pub noise_density: f64,
    pub dilution: Dilution,
}

#[derive(Debug, Clone)]
pub enum StepPolicy {
    Fixed(f64),
    Adaptive(AdaptiveSteps),
}

impl StepPolicy {
    /// Step sizes covering [t0, t0 + duration].
    pub fn schedule(&self, t0: f64, duration: f64, interaction: &Interaction) -> Result<Vec<f64>> {
        if duration < 0.0 || !duration.is_finite() {
            return Err(crate::error::invalid("duration", "must be >= 0"));
        }
        if duration == 0.0 {
            return Ok(Vec::new());
        }
        match self {
            StepPolicy::Fixed(dt) => {
                if !(*dt > 0.0) {
                    return Err(crate::error::invalid("dt", "must be > 0"));
                }
                let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
                Ok(vec![duration / n as f64; n])
            }
            StepPolicy::Adaptive(a) => {
                let mut out = Vec::new();
                let mut t = t0;
                let end = t0 + duration;
                while end - t > 1e-15 * end.abs().max(1e-30) {
                    let g = interaction.at(t).max_abs();
                    let dens = match &a.dilution {
                        Dilution::None => a.peak_density0,
                        Dilution::Axial(s) => a.peak_density0 / s.at(t).b_z,
                        Dilution::Volume(s) => {
                            let st = s.at(t);
                            a.peak_density0 / (st.b_perp * st.b_perp * st.b_z)
                        }
                    } + a.noise_density;
                    let e = g * dens;
                    let mut dt = a.dt_max;
                    if e > 0.0 {
                        let allowed = (a.max_phase * HBAR / e).max(a.dt_min);
                        while dt > allowed && dt > a.dt_min {
                            dt *= 0.5;
                        }
                    }
                    if t + dt >= end || end - (t + dt) < 1e-3 * dt {
                        dt = end - t;
                    }
                    out.push(dt);
                    t += dt;
                }
                Ok(out)
            }
        }
    }
}

/// Split-step propagator for one grid and one interaction model.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub plan: Arc<SpectralPlan>,
    pub interaction: Interaction,
    /// Subtract 1/dV (same component) and 1/(2 dV) (other component) in the nonlinearity.
    pub wigner: bool,
    /// Extra potential energy per grid point (J), applied to both components.
    pub external: Option<Arc<Vec<f64>>>,
}

impl Propagator {
    pub fn new(plan: Arc<SpectralPlan>, interaction: Interaction) -> Self {
        Propagator { plan, interaction, wigner: false, external: None }
    }

    pub fn with_wigner(mut self, on: bool) -> Self {
        self.wigner = on;
        self
    }

    /// Adds m g z, for cross-checks against the phase-imprint treatment of gravity.
    pub fn with_gravity(mut self, mass: f64, g: f64) -> Self {
        let geo = self.plan.geometry();
        let v: Vec<f64> = (0..geo.len()).map(|i| mass * g * geo.z_of(i)).collect();
        self.external = Some(Arc::new(v));
        self
    }

    pub fn geometry(&self) -> &Geometry {
        self.plan.geometry()
    }

    fn kick(&self, state: &mut FieldState2, tau: f64, t: f64) {
        let g = self.interaction.at(t);
        if g.is_zero() && self.external.is_none() {
            return;
        }
        let geo = self.plan.geometry();
        let ext = self.external.as_deref();
        let s = -tau / HBAR;
        let two = state.psi2.iter().any(|c| c.re != 0.0 || c.im != 0.0) || self.wigner;
        for i in 0..state.psi1.len() {
            let n1 = state.psi1[i].norm_sqr();
            let n2 = state.psi2[i].norm_sqr();
            let c = if self.wigner { 1.0 / geo.dv(i) } else { 0.0 };
            let v0 = ext.map_or(0.0, |e| e[i]);
            let v1 = g.g11 * (n1 - c) + g.g12 * (n2 - 0.5 * c) + v0;
            state.psi1[i] *= Complex64::from_polar(1.0, v1 * s);
            if two {
                let v2 = g.g22 * (n2 - c) + g.g12 * (n1 - 0.5 * c) + v0;
                state.psi2[i] *= Complex64::from_polar(1.0, v2 * s);
            }
        }
    }

    /// Runs the given steps as one closed Strang sequence starting at state.time.
    pub fn run_steps(&self, state: &mut FieldState2, steps: &[f64], ws: &mut Workspace) -> Result<()> {
        self.run_steps_observed(state, steps, ws, |_, _| {})
    }

    /// Like `run_steps`, calling `observe(t, state)` after every kinetic step. Densities are
    /// synchronised at that point; phases are not (a half kick is still pending).
    pub fn run_steps_observed(
        &self,
        state: &mut FieldState2,
        steps: &[f64],
        ws: &mut Workspace,
        mut observe: impl FnMut(f64, &FieldState2),
    ) -> Result<()> {
        if state.geometry != *self.plan.geometry() {
            return Err(Error::GridMismatch);
        }
        if steps.is_empty() {
            return Ok(());
        }
        let mut t = state.time;
        self.kick(state, 0.5 * steps[0], t);
        for (i, &dt) in steps.iter().enumerate() {
            self.plan.kinetic(state, Step::Real(dt), ws)?;
            t += dt;
            observe(t, state);
            let next = steps.get(i + 1).copied().unwrap_or(0.0);
            self.kick(state, 0.5 * (dt + next), t);
            if i % 256 == 255 && !state.is_finite() {
                state.time = t;
                return Err(Error::NonFinite { time: t, trajectory: None });
            }
        }
        state.time = t;
        if !state.is_finite() {
            return Err(Error::NonFinite { time: t, trajectory: None });
        }
        Ok(())
    }

    pub fn evolve(&self, state: &mut FieldState2, duration: f64, policy: &StepPolicy, ws: &mut Workspace) -> Result<()> {
        let steps = policy.schedule(state.time, duration, &self.interaction)?;
        self.run_steps(state, &steps, ws)
    }

    /// Total mean-field energy (J) at the state's time.
    pub fn energy(&self, state: &FieldState2, ws: &mut Workspace) -> f64 {
        let shift2 = if state.frame == Frame::CoMoving { self.plan.k0() } else { 0.0 };
        let mut e = self.plan.kinetic_energy(&state.psi1, 0.0, ws) + self.plan.kinetic_energy(&state.psi2, shift2, ws);
        let g = self.interaction.at(state.time);
        let geo = self.plan.geometry();
        let ext = self.external.as_deref();
        let mut acc = KahanSum::new();
        for i in 0..state.psi1.len() {
            let n1 = state.psi1[i].norm_sqr();
            let n2 = state.psi2[i].norm_sqr();
            let v0 = ext.map_or(0.0, |x| x[i]);
            acc.add((v0 * (n1 + n2) + 0.5 * (g.g11 * n1 * n1 + g.g22 * n2 * n2 + 2.0 * g.g12 * n1 * n2)) * geo.dv(i));
        }
        e += acc.value();
        e
    }

    /// Momentum-support check on the mean-field components.
    pub fn aliasing_guard(&self, state: &FieldState2) -> Result<()> {
        match self.plan.geometry() {
            Geometry::Line(g) => {
                g.aliasing_guard(&state.psi1)?;
                g.aliasing_guard(&state.psi2)
            }
            Geometry::Cylinder(g) => {
                let nz = g.n_axial();
                g.axial.aliasing_guard(&state.psi1[..nz])?;
                g.axial.aliasing_guard(&state.psi2[..nz])
            }
        }
    }
}

/// Mean-field real-time evolution with the aliasing guard applied first.
pub fn evolve_gpe(prop: &Propagator, state: &mut FieldState2, duration: f64, policy: &StepPolicy) -> Result<()> {
    if state.frame == Frame::Lab && state.norm2() > 0.0 {
        return Err(Error::FrameMismatch);
    }
    if duration == 0.0 {
        return Ok(());
    }
    prop.aliasing_guard(state)?;
    let mut ws = prop.plan.workspace();
    prop.evolve(state, duration, policy, &mut ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CylGrid, Grid1D};
    use crate::params::{derive_couplings, thomas_fermi_scales, SpeciesParams, TrapConfig};
    use crate::tw::scaling::integrate_scaling;

    fn line_state(n: usize, half: f64, sigma: f64, v: f64) -> (FieldState2, Grid1D) {
        let g = Grid1D::centered(n, half).unwrap();
        let psi: Vec<Complex64> = g
            .z_values()
            .iter()
            .map(|z| Complex64::from_polar((-(z * z) / (4.0 * sigma * sigma)).exp() * 1e3, v * z))
            .collect();
        let mut s = FieldState2::from_component1(Geometry::line(g.clone()), psi).unwrap();
        crate::interferometer::apply_beamsplitter(&mut s, 1.1, 0.3).unwrap();
        (s, g)
    }

    fn line_prop(g: &Grid1D, c: CouplingMatrix) -> Propagator {
        let sp = SpeciesParams::rb87();
        Propagator::new(Arc::new(SpectralPlan::new(Geometry::line(g.clone()), sp.mass, sp.k0)), Interaction::Constant(c))
    }

    #[test]
    fn zero_duration_is_identity() {
        let (mut s, g) = line_state(256, 50e-6, 3e-6, 0.0);
        let r = s.clone();
        let p = line_prop(&g, CouplingMatrix { g11: 1e-38, g22: 1e-38, g12: 1e-38 });
        evolve_gpe(&p, &mut s, 0.0, &StepPolicy::Fixed(1e-5)).unwrap();
        assert!(s.psi1 == r.psi1 && s.psi2 == r.psi2);
    }

    #[test]
    fn norm_per_component() {
        let (mut s, g) = line_state(512, 80e-6, 3e-6, 1e5);
        let (a, b) = (s.norm1(), s.norm2());
        let p = line_prop(&g, CouplingMatrix { g11: 3e-40, g22: 2e-40, g12: 2.5e-40 });
        evolve_gpe(&p, &mut s, 5e-3, &StepPolicy::Fixed(2e-5)).unwrap();
        assert!((s.norm1() - a).abs() / a < 1e-10);
        assert!((s.norm2() - b).abs() / b < 1e-10);
    }

    #[test]
    fn energy_drift_fixed_couplings() {
        let sp = SpeciesParams::rb87();
        let (mut s, g) = line_state(256, 30e-6, 2e-6, 2e5);
        let wz = 2.0 * std::f64::consts::PI * 160.0;
        let v: Vec<f64> = g.z_values().iter().map(|z| 0.5 * sp.mass * wz * wz * z * z).collect();
        let mut p = line_prop(&g, CouplingMatrix { g11: 2e-40, g22: 1.8e-40, g12: 1.9e-40 });
        p.external = Some(Arc::new(v));
        let mut ws = p.plan.workspace();
        let e0 = p.energy(&s, &mut ws);
        let steps = vec![2e-6; 10_000];
        p.run_steps(&mut s, &steps, &mut ws).unwrap();
        let e1 = p.energy(&s, &mut ws);
        assert!((e1 - e0).abs() / e0.abs() < 1e-6, "{}", (e1 - e0) / e0);
    }

    #[test]
    fn lab_frame_with_component2_rejected() {
        let (mut s, g) = line_state(128, 30e-6, 2e-6, 0.0);
        s.to_lab(1.61e7);
        let p = line_prop(&g, CouplingMatrix::zero());
        assert!(matches!(evolve_gpe(&p, &mut s, 1e-3, &StepPolicy::Fixed(1e-4)), Err(Error::FrameMismatch)));
    }

    #[test]
    fn nan_aborts_with_time() {
        let (mut s, g) = line_state(128, 30e-6, 2e-6, 0.0);
        s.psi1[7] = Complex64::new(f64::NAN, 0.0);
        let p = line_prop(&g, CouplingMatrix::zero());
        let mut ws = p.plan.workspace();
        assert!(matches!(p.run_steps(&mut s, &[1e-5; 10], &mut ws), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn gravity_potential_accelerates_packet() {
        let (mut s, g) = line_state(1024, 60e-6, 3e-6, 0.0);
        let sp = SpeciesParams::rb87();
        let p = line_prop(&g, CouplingMatrix::zero()).with_gravity(sp.mass, 1.0);
        let t = 2e-3;
        evolve_gpe(&p, &mut s, t, &StepPolicy::Fixed(1e-5)).unwrap();
        let zs = g.z_values();
        let d = s.density1();
        let mean: f64 = d.iter().zip(&zs).map(|(n, z)| n * z).sum::<f64>() / d.iter().sum::<f64>();
        let want = -0.5 * t * t;
        assert!((mean - want).abs() < 1e-3 * want.abs(), "{mean} {want}");
    }

    #[test]
    fn adaptive_schedule() {
        let trap = TrapConfig::pancake();
        let series = Arc::new(integrate_scaling(&trap, 0.05, 1e-5).unwrap());
        let inter = Interaction::Constant(CouplingMatrix { g11: 1e-50, g22: 0.0, g12: 0.0 });
        let pol = StepPolicy::Adaptive(AdaptiveSteps {
            max_phase: 0.05,
            dt_min: 1e-7,
            dt_max: 1e-3,
            peak_density0: 1e20,
            noise_density: 0.0,
            dilution: Dilution::Volume(series),
        });
        let steps = pol.schedule(0.0, 0.02, &inter).unwrap();
        let total: f64 = steps.iter().sum();
        assert!((total - 0.02).abs() < 1e-15);
        assert!(steps[0] < steps[steps.len() / 2]);
        assert!(steps[0] <= 0.05 * HBAR / (1e-50 * 1e20));
        for w in steps[..steps.len() - 1].windows(2) {
            assert!(w[1] >= w[0]);
        }
        let fixed = StepPolicy::Fixed(3e-4).schedule(0.0, 1e-3, &inter).unwrap();
        assert_eq!(fixed.len(), 4);
        assert!(StepPolicy::Fixed(0.0).schedule(0.0, 1.0, &inter).is_err());
    }

    #[test]
    fn released_cloud_follows_scaling() {
        let sp = SpeciesParams::rb87();
        let trap = TrapConfig::pancake();
        let n = 1e5;
        let tf = thomas_fermi_scales(&sp, &trap, n).unwrap();
        let gs_grid = CylGrid::new(32, 1.25 * tf.r_perp0, Grid1D::centered(64, 1.25 * tf.r_z0).unwrap()).unwrap();
        let problem = GroundstateProblem::cylindrical(&sp, &trap, n, gs_grid).unwrap();
        let gs = imaginary_time_groundstate(&problem, &GroundstateOptions::default()).unwrap();

        let t_end = 5.0 / trap.omega_radial();
        let series = Arc::new(integrate_scaling(&trap, t_end, 1e-5).unwrap());
        let end = series.at(t_end);
        let big = CylGrid::new(
            96,
            2.0 * end.b_perp * tf.r_perp0,
            Grid1D::centered(1024, 1.6 * end.b_z * tf.r_z0).unwrap(),
        )
        .unwrap();
        let geo = Geometry::cylinder(big);
        let mut s = transfer_groundstate(&gs, &geo).unwrap();
        let prop = Propagator::new(
            Arc::new(SpectralPlan::new(geo.clone(), sp.mass, sp.k0)),
            Interaction::Constant(derive_couplings(&sp)),
        );
        let policy = StepPolicy::Adaptive(AdaptiveSteps {
            max_phase: 0.05,
            dt_min: 1e-8,
            dt_max: 2e-4,
            peak_density0: tf.peak_density,
            noise_density: 0.0,
            dilution: Dilution::Volume(series.clone()),
        });
        let rms = |s: &FieldState2| -> f64 {
            let Geometry::Cylinder(g) = &s.geometry else { unreachable!() };
            let nz = g.n_axial();
            let dv = g.volume_elements();
            let mut a = KahanSum::new();
            for i in 0..s.len() {
                let r = g.radial_nodes[i / nz];
                a.add(r * r * s.psi1[i].norm_sqr() * dv[i]);
            }
            (a.value() / s.norm1()).sqrt()
        };
        let w0 = rms(&s);
        let mut ws = prop.plan.workspace();
        let mut worst: f64 = 0.0;
        for k in 1..=5 {
            let t = k as f64 / trap.omega_radial();
            let dur = t - s.time;
            prop.evolve(&mut s, dur, &policy, &mut ws).unwrap();
            let ratio = rms(&s) / w0;
            worst = worst.max((ratio / series.at(t).b_perp - 1.0).abs());
        }
        assert!(worst < 0.02, "{worst}");
    }
}

//! Ready-made physical models: a trapped condensate released at t = 0 and evolved either in
//! the effective 1D picture or on the full (r, z) grid.

use crate::error::{invalid, Result};
use crate::gpe::{
    imaginary_time_groundstate, transfer_groundstate, AdaptiveSteps, Dilution, GroundstateOptions,
    GroundstateProblem, GroundstateResult, Interaction, Propagator, StepPolicy,
};
use crate::grid::{CylGrid, Geometry, Grid1D, SpectralPlan};
use crate::params::{derive_couplings, thomas_fermi_scales, SpeciesParams, ThomasFermiScales, TrapConfig, HBAR};
use crate::state::FieldState2;
use crate::tw::{integrate_scaling, ScalingSeries};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub species: SpeciesParams,
    pub trap: TrapConfig,
    pub atom_number: f64,
}

/// Step-size controls shared by every model built here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Peak nonlinear phase per step (rad).
    pub max_phase: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { max_phase: 0.04, dt_min: 1e-8, dt_max: 1e-3 }
    }
}

/// Mean-field and Wigner propagators on one grid, with the released initial field.
#[derive(Debug, Clone)]
pub struct Model {
    pub initial: FieldState2,
    pub mean_field: Propagator,
    pub wigner: Propagator,
    pub policy: StepPolicy,
    pub k0: f64,
    pub series: Arc<ScalingSeries>,
}

impl Model {
    pub fn geometry(&self) -> &Geometry {
        &self.initial.geometry
    }

    pub fn propagator(&self, wigner: bool) -> &Propagator {
        if wigner {
            &self.wigner
        } else {
            &self.mean_field
        }
    }

    pub fn atom_number(&self) -> f64 {
        self.initial.norm1()
    }
}

fn oscillator_length(species: &SpeciesParams, omega: f64) -> f64 {
    (HBAR / (species.mass * omega)).sqrt()
}

impl Scenario {
    pub fn new(species: SpeciesParams, trap: TrapConfig, atom_number: f64) -> Result<Self> {
        species.validate()?;
        trap.validate()?;
        if !(atom_number >= 1.0) {
            return Err(invalid("atom_number", "must be >= 1"));
        }
        Ok(Scenario { species, trap, atom_number })
    }

    pub fn pancake(atom_number: f64) -> Result<Self> {
        Self::new(SpeciesParams::rb87(), TrapConfig::pancake(), atom_number)
    }

    pub fn thomas_fermi(&self) -> Result<ThomasFermiScales> {
        thomas_fermi_scales(&self.species, &self.trap, self.atom_number)
    }

    /// Cloud half-extents (radial, axial) in the trap, never below a few oscillator lengths.
    pub fn trapped_extent(&self) -> Result<(f64, f64)> {
        let tf = self.thomas_fermi()?;
        let ar = oscillator_length(&self.species, self.trap.omega_radial());
        let az = oscillator_length(&self.species, self.trap.omega_axial());
        Ok(((1.3 * tf.r_perp0).max(tf.r_perp0 + 3.0 * ar), (1.3 * tf.r_z0).max(tf.r_z0 + 3.0 * az)))
    }

    /// Tight (r, z) grid for the trapped groundstate.
    pub fn groundstate_grid(&self, n_radial: usize, n_axial: usize) -> Result<CylGrid> {
        let (r, z) = self.trapped_extent()?;
        CylGrid::new(n_radial, r, Grid1D::centered(n_axial, z)?)
    }

    pub fn groundstate(&self, n_radial: usize, n_axial: usize, opts: &GroundstateOptions) -> Result<GroundstateResult> {
        let grid = self.groundstate_grid(n_radial, n_axial)?;
        let p = GroundstateProblem::cylindrical(&self.species, &self.trap, self.atom_number, grid)?;
        imaginary_time_groundstate(&p, opts)
    }

    pub fn scaling(&self, t_end: f64) -> Result<Arc<ScalingSeries>> {
        Ok(Arc::new(integrate_scaling(&self.trap, t_end.max(1e-4), 1e-5)?))
    }

    /// Axial half-width of the freely expanded cloud at time t.
    pub fn expanded_half_width(&self, t: f64) -> Result<f64> {
        let (_, z) = self.trapped_extent()?;
        let r_z = self.thomas_fermi()?.r_z0;
        let s = self.scaling(t)?;
        Ok((r_z * s.at(t).b_z).max(z))
    }

    /// Line grid covering the cloud at rest and a copy displaced by up to `max_offset`
    /// (m, component 2 direction), both expanded until `t_total`.
    pub fn line_grid(&self, n_points: usize, t_total: f64, max_offset: f64) -> Result<Grid1D> {
        let w = 1.15 * self.expanded_half_width(t_total)?;
        Grid1D::new(n_points, -w, max_offset + w)
    }

    /// (r, z) evolution grid: radius follows the radial expansion, axis as in `line_grid`.
    pub fn cylinder_grid(&self, n_radial: usize, n_axial: usize, t_total: f64, max_offset: f64) -> Result<CylGrid> {
        let (r0, _) = self.trapped_extent()?;
        let s = self.scaling(t_total)?;
        let r = (self.thomas_fermi()?.r_perp0 * s.at(t_total).b_perp).max(r0);
        CylGrid::new(n_radial, 1.15 * r, self.line_grid(n_axial, t_total, max_offset)?)
    }

    fn policy(&self, peak: f64, noise: f64, dilution: Dilution, steps: &StepControl) -> StepPolicy {
        StepPolicy::Adaptive(AdaptiveSteps {
            max_phase: steps.max_phase,
            dt_min: steps.dt_min,
            dt_max: steps.dt_max,
            peak_density0: peak,
            noise_density: noise,
            dilution,
        })
    }

    /// Effective 1D model: radially integrated groundstate density, couplings
    /// 4 g / (3 pi R_perp(t)^2) from the Thomas-Fermi radius and the scaling solution.
    pub fn effective_1d(&self, gs: &GroundstateResult, grid: Grid1D, t_end: f64, steps: &StepControl) -> Result<Model> {
        let tf = self.thomas_fermi()?;
        let series = self.scaling(t_end)?;
        let dz = grid.dz;
        let geo = Geometry::line(grid);
        let initial = transfer_groundstate(gs, &geo)?;
        let g3d = derive_couplings(&self.species);
        let interaction = Interaction::Effective1D { g3d, r_perp0: tf.r_perp0, series: series.clone() };
        let plan = Arc::new(SpectralPlan::new(geo, self.species.mass, self.species.k0));
        let peak = initial.density1().into_iter().fold(0.0, f64::max);
        let policy = self.policy(peak, 0.5 / dz, Dilution::Axial(series.clone()), steps);
        Ok(Model {
            initial,
            mean_field: Propagator::new(plan.clone(), interaction.clone()),
            wigner: Propagator::new(plan, interaction).with_wigner(true),
            policy,
            k0: self.species.k0,
            series,
        })
    }

    /// Full (r, z) model on `grid`, from a groundstate computed on a tight grid.
    pub fn cylindrical(&self, gs: &GroundstateResult, grid: CylGrid, t_end: f64, steps: &StepControl) -> Result<Model> {
        let series = self.scaling(t_end)?;
        let geo = Geometry::cylinder(grid);
        let initial = transfer_groundstate(gs, &geo)?;
        let interaction = Interaction::Constant(derive_couplings(&self.species));
        let plan = Arc::new(SpectralPlan::new(geo.clone(), self.species.mass, self.species.k0));
        let peak = initial.density1().into_iter().fold(0.0, f64::max);
        let min_dv = geo.volume_elements().into_iter().fold(f64::INFINITY, f64::min);
        let policy = self.policy(peak, 0.5 / min_dv.max(1e-300), Dilution::Volume(series.clone()), steps);
        Ok(Model {
            initial,
            mean_field: Propagator::new(plan.clone(), interaction.clone()),
            wigner: Propagator::new(plan, interaction).with_wigner(true),
            policy,
            k0: self.species.k0,
            series,
        })
    }

    /// Same release, interactions switched off (for shot-noise references).
    pub fn non_interacting(&self) -> Scenario {
        Scenario { species: self.species.non_interacting(), ..*self }
    }
}

impl Model {
    /// Interactions off; every free segment becomes a single exact kinetic step.
    pub fn without_interactions(mut self) -> Self {
        let zero = Interaction::Constant(crate::params::CouplingMatrix::zero());
        self.mean_field.interaction = zero.clone();
        self.wigner.interaction = zero;
        self.policy = StepPolicy::Fixed(1.0);
        self
    }
}

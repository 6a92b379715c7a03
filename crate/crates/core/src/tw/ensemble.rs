use crate::error::{invalid, Error, Result};
use crate::gpe::{Propagator, StepPolicy};
use crate::grid::Geometry;
use crate::state::{FieldState2, Frame};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Independent random streams per (purpose, trajectory).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Vacuum = 1,
    Shot = 2,
    Detection = 3,
}

pub fn stream_rng(seed_root: u64, purpose: StreamPurpose, trajectory: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed_root);
    rng.set_stream(((purpose as u64) << 56) | (trajectory & ((1 << 56) - 1)));
    rng
}

/// Wigner vacuum noise of variance 1/(2 dV) added to both components.
pub fn add_vacuum_noise(state: &mut FieldState2, seed_root: u64, trajectory: u64) {
    let mut rng = stream_rng(seed_root, StreamPurpose::Vacuum, trajectory);
    let geo = state.geometry.clone();
    for (i, c) in state.psi1.iter_mut().chain(state.psi2.iter_mut()).enumerate() {
        let dv = geo.dv(i % geo.len());
        let s = (0.25 / dv).sqrt();
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        *c += Complex64::new(x * s, y * s);
    }
}

pub fn sample_trajectory(mean_field: &FieldState2, seed_root: u64, trajectory: u64) -> FieldState2 {
    let mut s = mean_field.clone();
    add_vacuum_noise(&mut s, seed_root, trajectory);
    s
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub samples: Vec<FieldState2>,
    pub stream_ids: Vec<u64>,
    pub seed_root: u64,
}

impl TrajectoryEnsemble {
    pub fn n_traj(&self) -> usize {
        self.samples.len()
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.samples.first().map(|s| &s.geometry)
    }

    /// Grid modes per component.
    pub fn n_modes(&self) -> usize {
        self.geometry().map_or(0, |g| g.n_modes())
    }

    pub fn check(&self) -> Result<()> {
        let Some(first) = self.samples.first() else {
            return Err(Error::InsufficientTrajectories { needed: 1, got: 0 });
        };
        if self.stream_ids.len() != self.samples.len() {
            return Err(Error::LengthMismatch { expected: self.samples.len(), got: self.stream_ids.len() });
        }
        for s in &self.samples {
            if s.geometry != first.geometry {
                return Err(Error::GridMismatch);
            }
            if s.frame != first.frame {
                return Err(Error::FrameMismatch);
            }
        }
        let mut ids = self.stream_ids.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("stream_ids", "must be unique"));
        }
        Ok(())
    }

    /// Applies `f` to every sample in parallel.
    pub fn try_for_each(&mut self, f: impl Fn(&mut FieldState2, u64) -> Result<()> + Sync) -> Result<()> {
        let ids = &self.stream_ids;
        let res: Vec<Result<()>> = self.samples.par_iter_mut().zip(ids.par_iter()).map(|(s, id)| f(s, *id)).collect();
        res.into_iter().collect()
    }
}

/// Mean field plus vacuum noise in both components, one stream per trajectory index.
pub fn sample_initial_ensemble(mean_field: &FieldState2, n_traj: usize, seed_root: u64) -> Result<TrajectoryEnsemble> {
    if n_traj < 2 {
        return Err(Error::InsufficientTrajectories { needed: 2, got: n_traj });
    }
    let mut base = mean_field.clone();
    base.frame = Frame::CoMoving;
    if mean_field.frame == Frame::Lab && mean_field.norm2() > 0.0 {
        return Err(Error::FrameMismatch);
    }
    let samples = (0..n_traj as u64).into_par_iter().map(|k| sample_trajectory(&base, seed_root, k)).collect();
    Ok(TrajectoryEnsemble { samples, stream_ids: (0..n_traj as u64).collect(), seed_root })
}

/// Fraction of the region holding 99% of the atoms where there is less than one atom per grid point.
pub fn sparse_fraction(state: &FieldState2) -> f64 {
    let geo = &state.geometry;
    let mut occ: Vec<f64> = (0..state.len())
        .map(|i| (state.psi1[i].norm_sqr() + state.psi2[i].norm_sqr()) * geo.dv(i))
        .collect();
    let total: f64 = occ.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    occ.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut region = 0;
    let mut sparse = 0;
    for o in occ {
        if acc >= 0.99 * total {
            break;
        }
        acc += o;
        region += 1;
        if o < 1.0 {
            sparse += 1;
        }
    }
    sparse as f64 / region.max(1) as f64
}

/// Wigner evolution of every trajectory. `prop` must have `wigner` set; the geometry decides
/// whether this is the effective 1D or the cylindrical model.
pub fn evolve_tw(ensemble: &mut TrajectoryEnsemble, prop: &Propagator, duration: f64, policy: &StepPolicy) -> Result<()> {
    ensemble.check()?;
    if ensemble.geometry() != Some(prop.geometry()) {
        return Err(Error::GridMismatch);
    }
    ensemble.samples[0].require_comoving()?;
    let steps = policy.schedule(ensemble.samples[0].time, duration, &prop.interaction)?;
    ensemble.try_for_each(|s, id| {
        let mut ws = prop.plan.workspace();
        prop.run_steps(s, &steps, &mut ws).map_err(|e| match e {
            Error::NonFinite { time, .. } => Error::NonFinite { time, trajectory: Some(id) },
            other => other,
        })
    })
}

pub fn evolve_tw_1d(ensemble: &mut TrajectoryEnsemble, prop: &Propagator, duration: f64, policy: &StepPolicy) -> Result<()> {
    if !matches!(prop.geometry(), Geometry::Line(_)) {
        return Err(invalid("geometry", "effective 1D evolution needs a line grid"));
    }
    evolve_tw(ensemble, prop, duration, policy)
}

pub fn evolve_tw_cyl(ensemble: &mut TrajectoryEnsemble, prop: &Propagator, duration: f64, policy: &StepPolicy) -> Result<()> {
    if !matches!(prop.geometry(), Geometry::Cylinder(_)) {
        return Err(invalid("geometry", "cylindrical evolution needs an (r, z) grid"));
    }
    evolve_tw(ensemble, prop, duration, policy)
}

/// Logs a warning when the truncation is questionable for this mean field.
pub fn warn_if_sparse(mean_field: &FieldState2, threshold: f64) -> f64 {
    let f = sparse_fraction(mean_field);
    if f > threshold {
        log::warn!("{:.1}% of the occupied region has < 1 atom per grid point; Wigner truncation may be unreliable", 100.0 * f);
    }
    f
}

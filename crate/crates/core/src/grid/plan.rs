use super::{CylGrid, Geometry, Grid1D};
use crate::error::{Error, Result};
use crate::state::{FieldState2, Frame};
use num_complex::Complex64;
use std::sync::{Arc, RwLock};

/// Time argument of a kinetic propagator: real time, or imaginary time for relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Real(f64),
    Imaginary(f64),
}

impl Step {
    fn key(&self) -> (u8, u64) {
        match *self {
            Step::Real(t) => (0, t.to_bits()),
            Step::Imaginary(t) => (1, t.to_bits()),
        }
    }

    /// exp(-i w t) for real time, exp(-w tau) for imaginary time.
    pub fn factor(&self, omega: f64) -> Complex64 {
        match *self {
            Step::Real(t) => Complex64::from_polar(1.0, -omega * t),
            Step::Imaginary(tau) => Complex64::new((-omega * tau).exp(), 0.0),
        }
    }
}

/// Separable multipliers: the full spectral factor is radial[m] * axial[j].
#[derive(Debug)]
struct Tables {
    axial1: Vec<Complex64>,
    axial1_lab2: Vec<Complex64>,
    axial2: Vec<Complex64>,
    radial: Vec<Complex64>,
}

/// Per-thread buffers for a spectral step.
#[derive(Debug, Default)]
pub struct Workspace {
    fft: Vec<Complex64>,
    buf: Vec<Complex64>,
}

/// Kinetic propagator tables for one grid, cached per time step.
#[derive(Debug)]
pub struct SpectralPlan {
    geometry: Geometry,
    hbar_over_2m: f64,
    k0: f64,
    cache: RwLock<Vec<((u8, u64), Arc<Tables>)>>,
}

impl SpectralPlan {
    pub fn new(geometry: Geometry, mass: f64, k0: f64) -> Self {
        SpectralPlan {
            geometry,
            hbar_over_2m: crate::params::HBAR / (2.0 * mass),
            k0,
            cache: RwLock::new(Vec::new()),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn workspace(&self) -> Workspace {
        let ax = self.geometry.axial();
        let buf = match &self.geometry {
            Geometry::Line(_) => 0,
            Geometry::Cylinder(g) => g.len(),
        };
        Workspace { fft: vec![Complex64::default(); ax.scratch_len()], buf: vec![Complex64::default(); buf] }
    }

    fn tables(&self, step: Step) -> Arc<Tables> {
        let key = step.key();
        if let Some((_, t)) = self.cache.read().unwrap().iter().find(|(k, _)| *k == key) {
            return t.clone();
        }
        let ax = self.geometry.axial();
        let inv_n = 1.0 / ax.n_points as f64;
        let c = self.hbar_over_2m;
        let axial = |shift: f64| -> Vec<Complex64> {
            ax.k_values.iter().map(|k| step.factor(c * (k + shift) * (k + shift)) * inv_n).collect()
        };
        let radial = match &self.geometry {
            Geometry::Line(_) => Vec::new(),
            Geometry::Cylinder(g) => g.k_radial.iter().map(|k| step.factor(c * k * k)).collect(),
        };
        let t = Arc::new(Tables { axial1: axial(0.0), axial1_lab2: axial(0.0), axial2: axial(self.k0), radial });
        let mut w = self.cache.write().unwrap();
        if w.len() > 64 {
            w.clear();
        }
        w.push((key, t.clone()));
        t
    }

    /// Kinetic propagator on both components; component 2 uses (k_z + k0) in the co-moving frame.
    pub fn kinetic(&self, state: &mut FieldState2, step: Step, ws: &mut Workspace) -> Result<()> {
        if state.geometry != self.geometry {
            return Err(Error::GridMismatch);
        }
        if matches!(step, Step::Real(t) | Step::Imaginary(t) if t == 0.0) {
            return Ok(());
        }
        let t = self.tables(step);
        let a2 = if state.frame == Frame::CoMoving { &t.axial2 } else { &t.axial1_lab2 };
        let zero = Complex64::default();
        if state.psi1.iter().any(|c| *c != zero) {
            self.apply(&mut state.psi1, &t.axial1, &t.radial, ws);
        }
        if state.psi2.iter().any(|c| *c != zero) {
            self.apply(&mut state.psi2, a2, &t.radial, ws);
        }
        Ok(())
    }

    /// Kinetic propagator on component 1 only.
    pub fn kinetic_component1(&self, psi: &mut [Complex64], step: Step, ws: &mut Workspace) {
        let t = self.tables(step);
        self.apply(psi, &t.axial1, &t.radial, ws);
    }

    /// psi <- F^-1[ symbol(|k|^2) F[psi] ], with k_z shifted by `shift`.
    pub fn apply_symbol(&self, psi: &mut [Complex64], shift: f64, ws: &mut Workspace, symbol: impl Fn(f64) -> f64) {
        let ax = self.geometry.axial();
        let inv_n = 1.0 / ax.n_points as f64;
        let axial_k2: Vec<f64> = ax.k_values.iter().map(|k| (k + shift) * (k + shift)).collect();
        match &self.geometry {
            Geometry::Line(g) => {
                g.fft_in_place(psi, &mut ws.fft);
                for (v, k2) in psi.iter_mut().zip(&axial_k2) {
                    *v *= symbol(*k2) * inv_n;
                }
                g.ifft_raw_in_place(psi, &mut ws.fft);
            }
            Geometry::Cylinder(g) => {
                let nz = g.n_axial();
                let sw = g.sqrt_weights();
                for (n, row) in psi.chunks_exact_mut(nz).enumerate() {
                    g.axial.fft_in_place(row, &mut ws.fft);
                    row.iter_mut().for_each(|v| *v *= sw[n]);
                }
                g.apply_kernel(psi, &mut ws.buf, nz);
                for (m, row) in ws.buf.chunks_exact_mut(nz).enumerate() {
                    let kr2 = g.k_radial[m] * g.k_radial[m];
                    for (v, k2) in row.iter_mut().zip(&axial_k2) {
                        *v *= symbol(kr2 + k2) * inv_n;
                    }
                }
                g.apply_kernel(&ws.buf, psi, nz);
                for (n, row) in psi.chunks_exact_mut(nz).enumerate() {
                    let s = 1.0 / sw[n];
                    row.iter_mut().for_each(|v| *v *= s);
                    g.axial.ifft_raw_in_place(row, &mut ws.fft);
                }
            }
        }
    }

    /// Kinetic energy integral of psi* T psi (J times norm), k_z shifted by `shift`.
    pub fn kinetic_energy(&self, psi: &[Complex64], shift: f64, ws: &mut Workspace) -> f64 {
        let c = self.hbar_over_2m * crate::params::HBAR;
        let ax = self.geometry.axial();
        let mut acc = crate::numerics::KahanSum::new();
        let mut tmp = psi.to_vec();
        match &self.geometry {
            Geometry::Line(g) => {
                g.fft_in_place(&mut tmp, &mut ws.fft);
                for (v, k) in tmp.iter().zip(&ax.k_values) {
                    acc.add((k + shift) * (k + shift) * v.norm_sqr());
                }
                acc.value() * c * g.dz / g.n_points as f64
            }
            Geometry::Cylinder(g) => {
                let nz = g.n_axial();
                let sw = g.sqrt_weights();
                for (n, row) in tmp.chunks_exact_mut(nz).enumerate() {
                    g.axial.fft_in_place(row, &mut ws.fft);
                    row.iter_mut().for_each(|v| *v *= sw[n]);
                }
                g.apply_kernel(&tmp, &mut ws.buf, nz);
                for (m, row) in ws.buf.chunks_exact(nz).enumerate() {
                    let kr2 = g.k_radial[m] * g.k_radial[m];
                    for (v, k) in row.iter().zip(&ax.k_values) {
                        acc.add((kr2 + (k + shift) * (k + shift)) * v.norm_sqr());
                    }
                }
                acc.value() * c * 2.0 * std::f64::consts::PI * g.axial.dz / nz as f64
            }
        }
    }

    fn apply(&self, psi: &mut [Complex64], axial: &[Complex64], radial: &[Complex64], ws: &mut Workspace) {
        match &self.geometry {
            Geometry::Line(g) => apply_line(g, psi, axial, ws),
            Geometry::Cylinder(g) => apply_cyl(g, psi, axial, radial, ws),
        }
    }
}

fn apply_line(g: &Grid1D, psi: &mut [Complex64], axial: &[Complex64], ws: &mut Workspace) {
    g.fft_in_place(psi, &mut ws.fft);
    for (v, f) in psi.iter_mut().zip(axial) {
        *v *= f;
    }
    g.ifft_raw_in_place(psi, &mut ws.fft);
}

fn apply_cyl(g: &CylGrid, psi: &mut [Complex64], axial: &[Complex64], radial: &[Complex64], ws: &mut Workspace) {
    let nz = g.n_axial();
    let sw = g.sqrt_weights();
    for (n, row) in psi.chunks_exact_mut(nz).enumerate() {
        g.axial.fft_in_place(row, &mut ws.fft);
        for v in row.iter_mut() {
            *v *= sw[n];
        }
    }
    g.apply_kernel(psi, &mut ws.buf, nz);
    for (m, row) in ws.buf.chunks_exact_mut(nz).enumerate() {
        let r = radial[m];
        for (v, a) in row.iter_mut().zip(axial) {
            *v *= r * a;
        }
    }
    g.apply_kernel(&ws.buf, psi, nz);
    for (n, row) in psi.chunks_exact_mut(nz).enumerate() {
        let s = 1.0 / sw[n];
        for v in row.iter_mut() {
            *v *= s;
        }
        g.axial.ifft_raw_in_place(row, &mut ws.fft);
    }
}

/// One-shot kinetic step with a fresh workspace.
pub fn apply_kinetic_phase(state: &mut FieldState2, dt: f64, plan: &SpectralPlan) -> Result<()> {
    let mut ws = plan.workspace();
    plan.kinetic(state, Step::Real(dt), &mut ws)
}

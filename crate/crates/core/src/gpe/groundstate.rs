//! Single-component groundstates.
//!
//! A short imaginary-time split-step warm start is followed by preconditioned nonlinear
//! conjugate gradients on the unit sphere. Split-step relaxation alone stalls at an
//! O(dtau^2) fixed-point bias well above 1e-8 in the residual.

use super::Propagator;
use crate::error::{invalid, Error, Result};
use crate::grid::{CylGrid, Geometry, Grid1D, SpectralPlan, Step, Workspace};
use crate::numerics::KahanSum;
use crate::params::{derive_couplings, SpeciesParams, TrapConfig, HBAR};
use crate::state::FieldState2;
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct GroundstateOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub warm_steps: usize,
}

impl Default for GroundstateOptions {
    fn default() -> Self {
        GroundstateOptions { tolerance: 1e-8, max_iterations: 20_000, warm_steps: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct GroundstateResult {
    pub state: FieldState2,
    pub mu: f64,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

/// Trap potential and contact coupling for component 1 on a given grid.
#[derive(Debug, Clone)]
pub struct GroundstateProblem {
    pub geometry: Geometry,
    pub species: SpeciesParams,
    pub atom_number: f64,
    pub g11: f64,
    pub potential: Vec<f64>,
}

impl GroundstateProblem {
    /// Full 3D problem on an (r, z) grid.
    pub fn cylindrical(species: &SpeciesParams, trap: &TrapConfig, atom_number: f64, grid: CylGrid) -> Result<Self> {
        let wr = trap.omega_radial();
        let wz = trap.omega_axial();
        let nz = grid.n_axial();
        let mut potential = Vec::with_capacity(grid.len());
        for &r in &grid.radial_nodes {
            for j in 0..nz {
                let z = grid.axial.z(j);
                potential.push(0.5 * species.mass * (wr * wr * r * r + wz * wz * z * z));
            }
        }
        Self::build(Geometry::cylinder(grid), species, trap, atom_number, derive_couplings(species).g11, potential)
    }

    /// Axial problem with a given 1D coupling (J m).
    pub fn line(species: &SpeciesParams, trap: &TrapConfig, atom_number: f64, grid: Grid1D, g11_1d: f64) -> Result<Self> {
        let wz = trap.omega_axial();
        let potential = grid.z_values().iter().map(|z| 0.5 * species.mass * wz * wz * z * z).collect();
        Self::build(Geometry::line(grid), species, trap, atom_number, g11_1d, potential)
    }

    fn build(
        geometry: Geometry,
        species: &SpeciesParams,
        trap: &TrapConfig,
        atom_number: f64,
        g11: f64,
        potential: Vec<f64>,
    ) -> Result<Self> {
        species.validate()?;
        trap.validate()?;
        if !(trap.f_radial > 0.0 && trap.f_axial > 0.0) {
            return Err(invalid("trap", "groundstate needs both trap frequencies > 0"));
        }
        if !(atom_number > 0.0) {
            return Err(invalid("atom_number", "must be > 0"));
        }
        Ok(GroundstateProblem { geometry, species: *species, atom_number, g11, potential })
    }
}

struct Solver<'a> {
    p: &'a GroundstateProblem,
    plan: SpectralPlan,
    dv: Vec<f64>,
    gn: f64,
    ws: Workspace,
}

impl Solver<'_> {
    fn dot(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut s = KahanSum::new();
        for ((x, y), w) in a.iter().zip(b).zip(&self.dv) {
            s.add((x.conj() * y).re * w);
        }
        s.value()
    }

    fn normalize(&self, f: &mut [Complex64]) {
        let n = self.dot(f, f).sqrt();
        f.iter_mut().for_each(|v| *v /= n);
    }

    fn h_apply(&mut self, f: &[Complex64]) -> Vec<Complex64> {
        let mut t = f.to_vec();
        let c = HBAR * HBAR / (2.0 * self.p.species.mass);
        self.plan.apply_symbol(&mut t, 0.0, &mut self.ws, |k2| c * k2);
        for i in 0..f.len() {
            t[i] += f[i] * (self.p.potential[i] + self.gn * f[i].norm_sqr());
        }
        t
    }

    fn precondition(&mut self, r: &[Complex64], f: &[Complex64], alpha: f64) -> Vec<Complex64> {
        let c = HBAR * HBAR / (2.0 * self.p.species.mass);
        let d: Vec<f64> = (0..r.len())
            .map(|i| (alpha / (alpha + self.p.potential[i] + self.gn * f[i].norm_sqr())).sqrt())
            .collect();
        let mut z: Vec<Complex64> = r.iter().zip(&d).map(|(v, s)| v * *s).collect();
        self.plan.apply_symbol(&mut z, 0.0, &mut self.ws, |k2| 1.0 / (alpha + c * k2));
        z.iter_mut().zip(&d).for_each(|(v, s)| *v *= *s);
        z
    }

    fn energy(&mut self, f: &[Complex64]) -> f64 {
        let kin = self.plan.kinetic_energy(f, 0.0, &mut self.ws);
        let mut s = KahanSum::new();
        for i in 0..f.len() {
            let n = f[i].norm_sqr();
            s.add((self.p.potential[i] * n + 0.5 * self.gn * n * n) * self.dv[i]);
        }
        kin + s.value()
    }

    /// Imaginary-time Strang steps with renormalisation after each.
    fn warm_start(&mut self, f: &mut [Complex64], steps: usize, dtau: f64) {
        for _ in 0..steps {
            for i in 0..f.len() {
                let w = self.p.potential[i] + self.gn * f[i].norm_sqr();
                f[i] *= (-0.5 * w * dtau / HBAR).exp();
            }
            self.plan.kinetic_component1(f, Step::Imaginary(dtau), &mut self.ws);
            for i in 0..f.len() {
                let w = self.p.potential[i] + self.gn * f[i].norm_sqr();
                f[i] *= (-0.5 * w * dtau / HBAR).exp();
            }
            self.normalize(f);
        }
    }
}

fn tf_guess(p: &GroundstateProblem, dv: &[f64]) -> Vec<Complex64> {
    if p.g11 <= 0.0 {
        // Smooth positive profile; the solver does the rest.
        let vmax = p.potential.iter().cloned().fold(0.0, f64::max);
        return p.potential.iter().map(|v| Complex64::new((-8.0 * v / vmax.max(1e-300)).exp(), 0.0)).collect();
    }
    let count = |mu: f64| -> f64 { p.potential.iter().zip(dv).map(|(v, w)| (mu - v).max(0.0) / p.g11 * w).sum() };
    let (mut lo, mut hi) = (0.0, p.potential.iter().cloned().fold(0.0, f64::max) + 1e-40);
    if count(hi) < p.atom_number {
        hi *= 1e6;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) < p.atom_number {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = hi;
    p.potential
        .iter()
        .map(|v| Complex64::new(((mu - v).max(0.0) / p.g11).sqrt() + 1e-9 * (mu / p.g11).sqrt(), 0.0))
        .collect()
}

pub fn imaginary_time_groundstate(problem: &GroundstateProblem, opts: &GroundstateOptions) -> Result<GroundstateResult> {
    if !(opts.tolerance > 0.0) {
        return Err(invalid("tolerance", "must be > 0"));
    }
    let plan = SpectralPlan::new(problem.geometry.clone(), problem.species.mass, problem.species.k0);
    let dv = problem.geometry.volume_elements();
    let ws = plan.workspace();
    let mut s = Solver { p: problem, plan, dv, gn: problem.g11 * problem.atom_number, ws };

    let mut f = tf_guess(problem, &s.dv);
    s.normalize(&mut f);
    // Warm start with dtau ~ 0.1 / (energy scale).
    let e0 = s.energy(&f).abs().max(1e-40);
    s.warm_start(&mut f, opts.warm_steps, 0.1 * HBAR / e0);

    let mut history = Vec::new();
    let mut d_prev: Option<Vec<Complex64>> = None;
    let mut r_prev: Option<Vec<Complex64>> = None;
    let mut z_prev: Option<Vec<Complex64>> = None;
    let mut tau: f64 = 0.05;
    let mut it = 0;
    let (mu, residual) = loop {
        let hf = s.h_apply(&f);
        let mu = s.dot(&f, &hf);
        let r: Vec<Complex64> = hf.iter().zip(&f).map(|(h, x)| h - x * mu).collect();
        let res = s.dot(&r, &r).sqrt() / mu.abs();
        if !res.is_finite() {
            return Err(Error::NonFinite { time: 0.0, trajectory: None });
        }
        history.push(res);
        if res <= opts.tolerance {
            break (mu, res);
        }
        if it >= opts.max_iterations {
            return Err(Error::NotConverged { iterations: it, residual: res, history });
        }
        it += 1;
        let z = s.precondition(&r, &f, mu.abs());
        let beta = match (&r_prev, &z_prev) {
            (Some(rp), Some(zp)) => {
                let num: f64 = s.dot(&z, &r) - s.dot(&z, rp);
                let den = s.dot(zp, rp);
                if den > 0.0 {
                    (num / den).max(0.0)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let mut d: Vec<Complex64> = match &d_prev {
            Some(dp) if beta > 0.0 => z.iter().zip(dp).map(|(a, b)| -a + b * beta).collect(),
            _ => z.iter().map(|a| -a).collect(),
        };
        let proj = s.dot(&f, &d);
        d.iter_mut().zip(&f).for_each(|(a, b)| *a -= b * proj);
        if s.dot(&r, &d) >= 0.0 {
            d = z.iter().map(|a| -a).collect();
            let proj = s.dot(&f, &d);
            d.iter_mut().zip(&f).for_each(|(a, b)| *a -= b * proj);
        }
        let dn = s.dot(&d, &d).sqrt();
        let dh: Vec<Complex64> = d.iter().map(|a| a / dn).collect();

        // Secant on dE/dtau along the great circle f cos t + dh sin t.
        let slope0 = 2.0 * s.dot(&r, &dh);
        let curve = |t: f64| -> Vec<Complex64> {
            let (st, ct) = t.sin_cos();
            f.iter().zip(&dh).map(|(a, b)| a * ct + b * st).collect()
        };
        let mut t1 = tau.clamp(1e-8, 1.0);
        let mut chosen = t1;
        for attempt in 0..12 {
            let f1 = curve(t1);
            let h1 = s.h_apply(&f1);
            let (st, ct) = t1.sin_cos();
            let tangent: Vec<Complex64> = f.iter().zip(&dh).map(|(a, b)| -a * st + b * ct).collect();
            let slope1 = 2.0 * s.dot(&h1, &tangent);
            if slope1 > slope0 {
                let ts = t1 * slope0 / (slope0 - slope1);
                if ts <= 4.0 * t1 || attempt == 11 || t1 >= 1.0 {
                    chosen = ts.min(4.0 * t1).min(1.0);
                    break;
                }
            }
            if t1 >= 1.0 {
                chosen = 1.0;
                break;
            }
            t1 = (4.0 * t1).min(1.0);
            chosen = t1;
        }
        tau = chosen;
        f = curve(chosen);
        s.normalize(&mut f);
        d_prev = Some(d);
        r_prev = Some(r);
        z_prev = Some(z);
    };

    let e_per = s.energy(&f);
    let scale = problem.atom_number.sqrt();
    let psi: Vec<Complex64> = f.iter().map(|v| v * scale).collect();
    let state = FieldState2::from_component1(problem.geometry.clone(), psi)?;
    Ok(GroundstateResult {
        state,
        mu,
        energy: e_per * problem.atom_number,
        iterations: it,
        residual,
        residual_history: history,
    })
}

/// Energy per particle of the 1D/3D mean-field functional (J).
pub fn energy_per_particle(result: &GroundstateResult) -> f64 {
    result.energy / result.state.norm1()
}

/// Radially integrated density 2 pi integral |psi|^2 r dr on the axial grid of a cylindrical state.
pub fn axial_density(state: &FieldState2) -> Result<Vec<f64>> {
    match &state.geometry {
        Geometry::Cylinder(g) => {
            let nz = g.n_axial();
            let mut out = vec![0.0; nz];
            for (n, w) in g.radial_weights.iter().enumerate() {
                for j in 0..nz {
                    out[j] += 2.0 * std::f64::consts::PI * w * state.psi1[n * nz + j].norm_sqr();
                }
            }
            Ok(out)
        }
        Geometry::Line(_) => Err(invalid("geometry", "axial density needs a cylindrical state")),
    }
}

/// Interpolates sqrt of an axial density onto another 1D grid (Catmull-Rom), renormalised to N.
pub fn resample_axial(density: &[f64], from: &Grid1D, to: &Grid1D, atom_number: f64) -> Vec<Complex64> {
    let amp: Vec<f64> = density.iter().map(|d| d.max(0.0).sqrt()).collect();
    let n = amp.len() as isize;
    let get = |i: isize| if i < 0 || i >= n { 0.0 } else { amp[i as usize] };
    let mut out: Vec<f64> = (0..to.n_points)
        .map(|j| {
            let x = (to.z(j) - from.z_min) / from.dz;
            let i = x.floor() as isize;
            if i < -1 || i > n {
                return 0.0;
            }
            let u = x - i as f64;
            let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
            let v = 0.5
                * (2.0 * p1
                    + (-p0 + p2) * u
                    + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u
                    + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
            v.max(0.0)
        })
        .collect();
    let norm: f64 = out.iter().map(|v| v * v).sum::<f64>() * to.dz;
    let s = if norm > 0.0 { (atom_number / norm).sqrt() } else { 0.0 };
    out.iter_mut().for_each(|v| *v *= s);
    out.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

/// Closed-form Thomas-Fermi axial profile (15 N / 16 R_z)(1 - z^2/R_z^2)^2 as field amplitudes.
pub fn thomas_fermi_axial(grid: &Grid1D, atom_number: f64, r_z: f64) -> Vec<Complex64> {
    let mut amp: Vec<f64> = grid
        .z_values()
        .iter()
        .map(|z| {
            let u = 1.0 - z * z / (r_z * r_z);
            if u > 0.0 {
                (15.0 * atom_number / (16.0 * r_z)).sqrt() * u
            } else {
                0.0
            }
        })
        .collect();
    let norm: f64 = amp.iter().map(|v| v * v).sum::<f64>() * grid.dz;
    let s = (atom_number / norm).sqrt();
    amp.iter_mut().for_each(|v| *v *= s);
    amp.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

/// Four-point Lagrange weights for x on nonuniform nodes; returns (first index, weights).
fn lagrange4(nodes: &[f64], x: f64) -> Option<(usize, [f64; 4])> {
    let n = nodes.len();
    if n < 4 || x < nodes[0] || x > nodes[n - 1] {
        return None;
    }
    let hi = nodes.partition_point(|v| *v <= x).clamp(1, n - 1);
    let start = (hi as isize - 2).clamp(0, n as isize - 4) as usize;
    let xs = &nodes[start..start + 4];
    let mut w = [1.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                w[i] *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
    }
    Some((start, w))
}

/// Cubic tensor-product interpolation of a field between cylindrical grids; zero outside
/// the source support, even continuation through r = 0.
pub fn resample_cylinder(psi: &[Complex64], from: &CylGrid, to: &CylGrid) -> Vec<Complex64> {
    let (nr, nz) = (from.n_radial, from.n_axial());
    let nz_to = to.n_axial();
    let zs = from.axial.z_values();
    // Axial pass for every source row.
    let mut rows = vec![Complex64::default(); nr * nz_to];
    for j in 0..nz_to {
        if let Some((s0, w)) = lagrange4(&zs, to.axial.z(j)) {
            for n in 0..nr {
                let mut acc = Complex64::default();
                for (k, wk) in w.iter().enumerate() {
                    acc += psi[n * nz + s0 + k] * *wk;
                }
                rows[n * nz_to + j] = acc;
            }
        }
    }
    // Radial pass on the evenly continued node set.
    let r = &from.radial_nodes;
    let mut ext: Vec<f64> = vec![-r[1], -r[0]];
    ext.extend_from_slice(r);
    let idx = |e: usize| if e < 2 { 1 - e } else { e - 2 };
    let mut out = vec![Complex64::default(); to.len()];
    for (m, &rt) in to.radial_nodes.iter().enumerate() {
        if let Some((s0, w)) = lagrange4(&ext, rt) {
            for j in 0..nz_to {
                let mut acc = Complex64::default();
                for (k, wk) in w.iter().enumerate() {
                    acc += rows[idx(s0 + k) * nz_to + j] * *wk;
                }
                out[m * nz_to + j] = acc;
            }
        }
    }
    out
}

/// Groundstate on a tight grid carried over to a larger evolution grid, renormalised to N.
pub fn transfer_groundstate(result: &GroundstateResult, to: &Geometry) -> Result<FieldState2> {
    let n = result.state.norm1();
    let psi = match (&result.state.geometry, to) {
        (Geometry::Cylinder(a), Geometry::Cylinder(b)) => resample_cylinder(&result.state.psi1, a, b),
        (Geometry::Cylinder(a), Geometry::Line(b)) => {
            return FieldState2::from_component1(to.clone(), resample_axial(&axial_density(&result.state)?, &a.axial, b, n));
        }
        (Geometry::Line(a), Geometry::Line(b)) => {
            let d: Vec<f64> = result.state.psi1.iter().map(|c| c.norm_sqr()).collect();
            return FieldState2::from_component1(to.clone(), resample_axial(&d, a, b, n));
        }
        _ => return Err(Error::GridMismatch),
    };
    let mut s = FieldState2::from_component1(to.clone(), psi)?;
    let m = s.norm1();
    if !(m > 0.0) {
        return Err(Error::ZeroNorm(1));
    }
    let f = (n / m).sqrt();
    s.psi1.iter_mut().for_each(|v| *v *= f);
    Ok(s)
}

/// Propagator matching a groundstate problem (trap as external potential), for checks.
pub fn trapped_propagator(problem: &GroundstateProblem) -> Propagator {
    let plan = Arc::new(SpectralPlan::new(problem.geometry.clone(), problem.species.mass, problem.species.k0));
    let mut p = Propagator::new(
        plan,
        super::Interaction::Constant(crate::params::CouplingMatrix { g11: problem.g11, g22: 0.0, g12: 0.0 }),
    );
    p.external = Some(Arc::new(problem.potential.clone()));
    p
}

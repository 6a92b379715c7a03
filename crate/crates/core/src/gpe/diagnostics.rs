//! Squeezing-stage diagnostics: twisting rate chi, accumulated lambda and mode overlap Q.
//!
//! CSV columns: time_s, chi_per_s, lambda, q_abs, q_phase_rad.

use super::{Propagator, StepPolicy};
use crate::error::{Error, Result};
use crate::interferometer::pulse::apply_beamsplitter;
use crate::numerics::KahanSum;
use crate::params::{CouplingMatrix, HBAR};
use crate::state::FieldState2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiComponents {
    pub chi11: f64,
    pub chi22: f64,
    pub chi12: f64,
    pub chi: f64,
}

/// chi_ij = g_ij / (2 hbar) * integral |u_i|^2 |u_j|^2 with u_i = psi_i / ||psi_i||.
pub fn compute_chi(state: &FieldState2, couplings: &CouplingMatrix) -> Result<ChiComponents> {
    let (n1, n2) = (state.norm1(), state.norm2());
    if !(n1 > 0.0) {
        return Err(Error::ZeroNorm(1));
    }
    if !(n2 > 0.0) {
        return Err(Error::ZeroNorm(2));
    }
    let (mut a, mut b, mut c) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for i in 0..state.len() {
        let d1 = state.psi1[i].norm_sqr();
        let d2 = state.psi2[i].norm_sqr();
        let dv = state.geometry.dv(i);
        a.add(d1 * d1 * dv);
        b.add(d2 * d2 * dv);
        c.add(d1 * d2 * dv);
    }
    let k = 0.5 / HBAR;
    let chi11 = k * couplings.g11 * a.value() / (n1 * n1);
    let chi22 = k * couplings.g22 * b.value() / (n2 * n2);
    let chi12 = k * couplings.g12 * c.value() / (n1 * n2);
    Ok(ChiComponents { chi11, chi22, chi12, chi: chi11 + chi22 - 2.0 * chi12 })
}

/// Q = integral u1^* u2 in the co-moving frame.
pub fn compute_overlap(state: &FieldState2) -> Result<Complex64> {
    state.require_comoving()?;
    let (n1, n2) = (state.norm1(), state.norm2());
    if !(n1 > 0.0) {
        return Err(Error::ZeroNorm(1));
    }
    if !(n2 > 0.0) {
        return Err(Error::ZeroNorm(2));
    }
    Ok(state.inner(&state.psi1, &state.psi2) / (n1 * n2).sqrt())
}

/// Axial density snapshot. For cylindrical grids the radial direction is integrated out.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySlice {
    pub time: f64,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SqueezingDiagnostics {
    pub times: Vec<f64>,
    pub chi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub q: Vec<Complex64>,
    pub densities: Vec<DensitySlice>,
}

impl SqueezingDiagnostics {
    pub fn final_lambda(&self) -> f64 {
        self.lambda.last().copied().unwrap_or(0.0)
    }

    pub fn final_q(&self) -> Complex64 {
        self.q.last().copied().unwrap_or(Complex64::new(1.0, 0.0))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time_s", "chi_per_s", "lambda", "q_abs", "q_phase_rad"])?;
        for i in 0..self.times.len() {
            wr.write_record(&[
                format!("{:e}", self.times[i]),
                format!("{:e}", self.chi[i]),
                format!("{:e}", self.lambda[i]),
                format!("{:e}", self.q[i].norm()),
                format!("{:e}", self.q[i].arg()),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = SqueezingDiagnostics::default();
        for rec in rd.records() {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Config { field: "diagnostics csv".into(), reason: format!("bad column {i}") })
            };
            out.times.push(f(0)?);
            out.chi.push(f(1)?);
            out.lambda.push(f(2)?);
            out.q.push(Complex64::from_polar(f(3)?, f(4)?));
        }
        Ok(out)
    }
}

fn axial_slice(state: &FieldState2) -> DensitySlice {
    let (n1, n2) = match &state.geometry {
        crate::grid::Geometry::Line(_) => (state.density1(), state.density2()),
        crate::grid::Geometry::Cylinder(g) => {
            let nz = g.n_axial();
            let mut a = vec![0.0; nz];
            let mut b = vec![0.0; nz];
            for (n, w) in g.radial_weights.iter().enumerate() {
                for j in 0..nz {
                    a[j] += 2.0 * PI * w * state.psi1[n * nz + j].norm_sqr();
                    b[j] += 2.0 * PI * w * state.psi2[n * nz + j].norm_sqr();
                }
            }
            (a, b)
        }
    };
    DensitySlice { time: state.time, n1, n2 }
}

/// Options for the BS1 - T_oat - mirror - T_oat stage.
#[derive(Debug, Clone)]
pub struct SqueezingStage {
    pub t_oat: f64,
    pub policy: StepPolicy,
    /// Record a row every `sample_stride` steps (chi is integrated on every step regardless).
    pub sample_stride: usize,
    pub store_densities: bool,
}

/// Runs the squeezing stage on a released groundstate. Returns the diagnostics and the
/// field at 2 T_oat.
pub fn run_squeezing_stage(
    prop: &Propagator,
    groundstate: &FieldState2,
    stage: &SqueezingStage,
) -> Result<(SqueezingDiagnostics, FieldState2)> {
    if !(stage.t_oat > 0.0) {
        return Err(crate::error::invalid("t_oat", "must be > 0"));
    }
    if stage.sample_stride == 0 {
        return Err(crate::error::invalid("sample_stride", "must be >= 1"));
    }
    let mut state = groundstate.clone();
    state.time = 0.0;
    apply_beamsplitter(&mut state, FRAC_PI_2, -FRAC_PI_2)?;
    prop.aliasing_guard(&state)?;

    let mut diag = SqueezingDiagnostics::default();
    let mut ws = prop.plan.workspace();
    let mut lambda = KahanSum::new();
    let mut last = (0.0, compute_chi(&state, &prop.interaction.at(0.0))?.chi);
    let record = |diag: &mut SqueezingDiagnostics, s: &FieldState2, chi: f64, lam: f64| -> Result<()> {
        diag.times.push(s.time);
        diag.chi.push(chi);
        diag.lambda.push(lam);
        diag.q.push(compute_overlap(s)?);
        if stage.store_densities {
            diag.densities.push(axial_slice(s));
        }
        Ok(())
    };
    record(&mut diag, &state, last.1, 0.0)?;

    for half in 0..2 {
        if half == 1 {
            apply_beamsplitter(&mut state, PI, 0.0)?;
            last.1 = compute_chi(&state, &prop.interaction.at(state.time))?.chi;
        }
        let steps = stage.policy.schedule(state.time, stage.t_oat, &prop.interaction)?;
        let mut err = None;
        for chunk in steps.chunks(stage.sample_stride) {
            prop.run_steps_observed(&mut state, chunk, &mut ws, |t, s| {
                if err.is_some() {
                    return;
                }
                match compute_chi(s, &prop.interaction.at(t)) {
                    Ok(c) => {
                        lambda.add(0.5 * (c.chi + last.1) * (t - last.0));
                        last = (t, c.chi);
                    }
                    Err(e) => err = Some(e),
                }
            })?;
            if let Some(e) = err.take() {
                return Err(e);
            }
            record(&mut diag, &state, last.1, lambda.value())?;
        }
    }
    Ok((diag, state))
}

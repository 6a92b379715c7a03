//! Self-similar expansion of a condensate released from a cylindrical harmonic trap.

use crate::error::{invalid, Result};
use crate::params::{CouplingMatrix, TrapConfig};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingState {
    pub b_perp: f64,
    pub b_z: f64,
    pub db_perp: f64,
    pub db_z: f64,
}

impl ScalingState {
    pub const REST: ScalingState = ScalingState { b_perp: 1.0, b_z: 1.0, db_perp: 0.0, db_z: 0.0 };
}

/// Scale factors sampled on a uniform time grid, with Hermite interpolation in between.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSeries {
    pub dt: f64,
    pub states: Vec<ScalingState>,
    w_perp2: f64,
    w_z2: f64,
}

fn rhs(s: &ScalingState, wp2: f64, wz2: f64) -> [f64; 4] {
    [
        s.db_perp,
        s.db_z,
        wp2 / (s.b_perp.powi(3) * s.b_z),
        wz2 / (s.b_perp * s.b_perp * s.b_z * s.b_z),
    ]
}

fn add(s: &ScalingState, k: &[f64; 4], h: f64) -> ScalingState {
    ScalingState {
        b_perp: s.b_perp + h * k[0],
        b_z: s.b_z + h * k[1],
        db_perp: s.db_perp + h * k[2],
        db_z: s.db_z + h * k[3],
    }
}

pub fn integrate_scaling(trap: &TrapConfig, t_end: f64, dt: f64) -> Result<ScalingSeries> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be > 0"));
    }
    if !(t_end >= 0.0) {
        return Err(invalid("t_end", "must be >= 0"));
    }
    trap.validate()?;
    let wp2 = trap.omega_radial().powi(2);
    let wz2 = trap.omega_axial().powi(2);
    let n = (t_end / dt).ceil() as usize;
    let h = if n == 0 { dt } else { t_end / n as f64 };
    let mut states = Vec::with_capacity(n + 1);
    let mut s = ScalingState::REST;
    states.push(s);
    for _ in 0..n {
        let k1 = rhs(&s, wp2, wz2);
        let k2 = rhs(&add(&s, &k1, 0.5 * h), wp2, wz2);
        let k3 = rhs(&add(&s, &k2, 0.5 * h), wp2, wz2);
        let k4 = rhs(&add(&s, &k3, h), wp2, wz2);
        let mut k = [0.0; 4];
        for i in 0..4 {
            k[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        s = add(&s, &k, h);
        states.push(s);
    }
    Ok(ScalingSeries { dt: h, states, w_perp2: wp2, w_z2: wz2 })
}

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, u: f64) -> f64 {
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * h * d1
}

impl ScalingSeries {
    pub fn t_end(&self) -> f64 {
        self.dt * (self.states.len() - 1) as f64
    }

    /// Cubic Hermite interpolation; beyond the end the expansion continues ballistically.
    pub fn at(&self, t: f64) -> ScalingState {
        if t <= 0.0 {
            return self.states[0];
        }
        let last = self.states.len() - 1;
        if t >= self.t_end() {
            let s = self.states[last];
            let d = t - self.t_end();
            return ScalingState { b_perp: s.b_perp + s.db_perp * d, b_z: s.b_z + s.db_z * d, ..s };
        }
        let x = t / self.dt;
        let i = (x.floor() as usize).min(last - 1);
        let u = x - i as f64;
        let (a, b) = (self.states[i], self.states[i + 1]);
        let (ap, bp) = (rhs(&a, self.w_perp2, self.w_z2), rhs(&b, self.w_perp2, self.w_z2));
        ScalingState {
            b_perp: hermite(a.b_perp, a.db_perp, b.b_perp, b.db_perp, self.dt, u),
            b_z: hermite(a.b_z, a.db_z, b.b_z, b.db_z, self.dt, u),
            db_perp: hermite(a.db_perp, ap[2], b.db_perp, bp[2], self.dt, u),
            db_z: hermite(a.db_z, ap[3], b.db_z, bp[3], self.dt, u),
        }
    }
}

/// Effective 1D couplings 4 g / (3 pi R_perp(0)^2 b_perp^2).
pub fn g1d_of_t(couplings: &CouplingMatrix, r_perp0: f64, scaling: &ScalingState) -> Result<CouplingMatrix> {
    if !(r_perp0 > 0.0) {
        return Err(invalid("r_perp0", "must be > 0"));
    }
    Ok(couplings.scaled(4.0 / (3.0 * PI * r_perp0 * r_perp0 * scaling.b_perp * scaling.b_perp)))
}

//! Ensemble estimators. Wigner averages are symmetrically ordered; the corrections below turn
//! them into plain quantum expectations for M grid modes per component:
//! <n_i> = mean(n_i) - M/2 and Var(J_a) = var(j_a) - M/8. Means and covariances between
//! different spin components need no correction.

use crate::error::{invalid, Error, Result};
use crate::numerics::KahanSum;
use crate::oat::negative_cos_branch;
use crate::spin::{PseudospinMoments, X, Y};
use crate::state::FieldState2;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Per-trajectory pseudospin: jx + i jy = integral Phi1^* Phi2, jz = (n1 - n2)/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSample {
    pub j: [f64; 3],
    pub n1: f64,
    pub n2: f64,
}

impl SpinSample {
    pub fn from_state(state: &FieldState2) -> Result<Self> {
        state.require_comoving()?;
        let c = state.inner(&state.psi1, &state.psi2);
        let (n1, n2) = (state.norm1(), state.norm2());
        Ok(SpinSample { j: [c.re, c.im, 0.5 * (n1 - n2)], n1, n2 })
    }

    fn features(&self) -> [f64; 10] {
        let [x, y, z] = self.j;
        [x, y, z, x * x, y * y, z * z, x * y, x * z, y * z, self.n1 + self.n2]
    }
}

/// Moments from averaged features, Wigner-corrected when `modes` > 0.
fn moments_from(f: &[f64; 10], modes: f64) -> PseudospinMoments {
    let c = modes / 8.0;
    let second = [[f[3] - c, f[6], f[7]], [f[6], f[4] - c, f[8]], [f[7], f[8], f[5] - c]];
    PseudospinMoments { mean: [f[0], f[1], f[2]], second, n_mean: f[9] - modes }
}

/// Delete-one jackknife of a smooth function of sample means. Returns (value, stderr).
pub fn jackknife<const K: usize>(
    features: &[[f64; K]],
    f: impl Fn(&[f64; K]) -> Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = features.len();
    if n < 2 {
        return Err(Error::InsufficientTrajectories { needed: 2, got: n });
    }
    let mut sums = [KahanSum::new(); K];
    for x in features {
        for k in 0..K {
            sums[k].add(x[k]);
        }
    }
    let s: Vec<f64> = sums.iter().map(|v| v.value()).collect();
    let mut full = [0.0; K];
    for k in 0..K {
        full[k] = s[k] / n as f64;
    }
    let value = f(&full);
    let mut dev = vec![KahanSum::new(); value.len()];
    let mut loo = [0.0; K];
    for x in features {
        for k in 0..K {
            loo[k] = (s[k] - x[k]) / (n - 1) as f64;
        }
        for (d, (a, b)) in dev.iter_mut().zip(f(&loo).iter().zip(&value)) {
            d.add((a - b) * (a - b));
        }
    }
    let scale = (n - 1) as f64 / n as f64;
    Ok((value, dev.iter().map(|d| (scale * d.value()).sqrt()).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinMomentEstimates {
    pub moments: PseudospinMoments,
    pub mean_stderr: [f64; 3],
    pub second_stderr: [[f64; 3]; 3],
    pub n_mean_stderr: f64,
    pub n_traj: usize,
    pub n_modes: usize,
    pub samples: Vec<SpinSample>,
}

impl SpinMomentEstimates {
    pub fn variance(&self, a: usize) -> f64 {
        self.moments.cov(a, a)
    }

    /// Jackknife standard error of Var(J_a).
    pub fn variance_stderr(&self, a: usize) -> f64 {
        let feats: Vec<[f64; 2]> = self.samples.iter().map(|s| [s.j[a], s.j[a] * s.j[a]]).collect();
        jackknife(&feats, |m| vec![m[1] - m[0] * m[0]]).map(|(_, e)| e[0]).unwrap_or(f64::NAN)
    }
}

pub fn estimate_spin_moments(samples: &[SpinSample], n_modes: usize) -> Result<SpinMomentEstimates> {
    let feats: Vec<[f64; 10]> = samples.iter().map(|s| s.features()).collect();
    let (_, err) = jackknife(&feats, |m| m.to_vec())?;
    let mut total = [KahanSum::new(); 10];
    for x in &feats {
        for k in 0..10 {
            total[k].add(x[k]);
        }
    }
    let mut mean = [0.0; 10];
    for k in 0..10 {
        mean[k] = total[k].value() / feats.len() as f64;
    }
    let sec = [[err[3], err[6], err[7]], [err[6], err[4], err[8]], [err[7], err[8], err[5]]];
    Ok(SpinMomentEstimates {
        moments: moments_from(&mean, n_modes as f64),
        mean_stderr: [err[0], err[1], err[2]],
        second_stderr: sec,
        n_mean_stderr: err[9],
        n_traj: samples.len(),
        n_modes,
        samples: samples.to_vec(),
    })
}

pub fn estimate_from_states(states: &[FieldState2]) -> Result<SpinMomentEstimates> {
    let samples: Result<Vec<SpinSample>> = states.iter().map(SpinSample::from_state).collect();
    let modes = states.first().map_or(0, |s| s.geometry.n_modes());
    estimate_spin_moments(&samples?, modes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub xi: f64,
    pub xi_stderr: f64,
    pub theta_opt: f64,
    pub theta_stderr: f64,
    pub phi_opt: f64,
    pub phi_stderr: f64,
    /// (theta, xi) on the scan grid at phi_opt.
    pub scan: Vec<(f64, f64)>,
}

/// Optimum on the branch theta in [pi/2, 3pi/2) together with the squeezing parameter.
fn optimum(m: &PseudospinMoments) -> Option<(f64, f64, f64)> {
    let phi = m.optimal_phi();
    let l = m.spin_length(phi);
    if !(l > 0.0) {
        return None;
    }
    let (t, num) = m.min_over_theta(phi);
    let t = negative_cos_branch(t);
    Some(((m.n_mean * num.max(0.0)).sqrt() / l, t, phi))
}

/// Minimum squeezing parameter over BS2 angle at the atan2 phase, with jackknife errors.
pub fn xi_from_ensemble(est: &SpinMomentEstimates, theta_points: usize) -> Result<XiEstimate> {
    if theta_points < 2 {
        return Err(invalid("theta_points", "need at least 2"));
    }
    let m = &est.moments;
    let phi = m.optimal_phi();
    let length = m.spin_length(phi);
    let length_err = phi.cos().abs() * est.mean_stderr[X] + phi.sin().abs() * est.mean_stderr[Y];
    if !(length > 5.0 * length_err) {
        return Err(Error::ZeroSpinLength);
    }
    let scan = (0..theta_points)
        .map(|k| {
            let t = FRAC_PI_2 + PI * k as f64 / theta_points as f64;
            (t, m.xi_squared(t, phi, m.n_mean).map(|x| x.max(0.0).sqrt()).unwrap_or(f64::NAN))
        })
        .collect();
    let modes = est.n_modes as f64;
    let feats: Vec<[f64; 10]> = est.samples.iter().map(|s| s.features()).collect();
    let (_, e) = jackknife(&feats, |f| {
        let mm = moments_from(f, modes);
        match optimum(&mm) {
            Some((xi, t, p)) => vec![xi, t, p],
            None => vec![f64::NAN; 3],
        }
    })?;
    let (xi, theta, _) = optimum(m).ok_or(Error::ZeroSpinLength)?;
    Ok(XiEstimate { xi, xi_stderr: e[0], theta_opt: theta, theta_stderr: e[1], phi_opt: phi, phi_stderr: e[2], scan })
}

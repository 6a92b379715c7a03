//! Pseudospin first and second moments and the generalized squeezing parameter.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Means and symmetric-ordered second moments of (Jx, Jy, Jz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudospinMoments {
    pub mean: [f64; 3],
    /// second[a][b] = <(J_a J_b + J_b J_a)/2>.
    pub second: [[f64; 3]; 3],
    /// Mean total atom number.
    pub n_mean: f64,
}

pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;

impl PseudospinMoments {
    pub fn cov(&self, a: usize, b: usize) -> f64 {
        self.second[a][b] - self.mean[a] * self.mean[b]
    }

    /// J_par(phi) = sin(phi) Jx + cos(phi) Jy.
    fn par(phi: f64) -> [f64; 3] {
        [phi.sin(), phi.cos(), 0.0]
    }

    fn quad(&self, u: &[f64; 3], v: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += u[a] * v[b] * self.cov(a, b);
            }
        }
        s
    }

    /// <J_perp(phi)> = cos(phi) <Jx> - sin(phi) <Jy>.
    pub fn spin_length(&self, phi: f64) -> f64 {
        phi.cos() * self.mean[X] - phi.sin() * self.mean[Y]
    }

    /// atan2(-<Jy>, <Jx>): aligns the mean spin with J_perp.
    pub fn optimal_phi(&self) -> f64 {
        (-self.mean[Y]).atan2(self.mean[X])
    }

    /// Variance, parallel variance and covariance entering the squeezing numerator.
    pub fn quadratic_form(&self, phi: f64) -> (f64, f64, f64) {
        let p = Self::par(phi);
        let z = [0.0, 0.0, 1.0];
        (self.quad(&z, &z), self.quad(&p, &p), self.quad(&p, &z))
    }

    /// Numerator sin^2 Var(Jz) + cos^2 Var(J_par) - 2 sin cos Cov(J_par, Jz).
    pub fn numerator(&self, theta: f64, phi: f64) -> f64 {
        let (vz, vp, c) = self.quadratic_form(phi);
        let (s, co) = theta.sin_cos();
        s * s * vz + co * co * vp - 2.0 * s * co * c
    }

    /// xi^2(theta, phi) normalised by `n_atoms`.
    pub fn xi_squared(&self, theta: f64, phi: f64, n_atoms: f64) -> Result<f64> {
        let l = self.spin_length(phi);
        if l == 0.0 || !l.is_finite() {
            return Err(Error::ZeroSpinLength);
        }
        Ok(n_atoms * self.numerator(theta, phi) / (l * l))
    }

    /// Closed-form minimum of the numerator over theta at fixed phi: (theta_min, numerator_min).
    pub fn min_over_theta(&self, phi: f64) -> (f64, f64) {
        let (vz, vp, c) = self.quadratic_form(phi);
        // numerator = (vz+vp)/2 + R cos(2t + d), R cos d = (vp-vz)/2, R sin d = c
        let a = (vz + vp) / 2.0;
        let r = ((vp - vz) / 2.0).hypot(c);
        let two_t = std::f64::consts::PI - c.atan2((vp - vz) / 2.0);
        let t = (two_t / 2.0).rem_euclid(std::f64::consts::PI);
        (t, a - r)
    }

    /// Adds Gaussian detection noise of s.d. dn atoms per output port: Var(Jz) += dn^2/2.
    pub fn with_detection_noise(mut self, delta_n: f64) -> Self {
        self.second[Z][Z] += 0.5 * delta_n * delta_n;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherent(n: f64) -> PseudospinMoments {
        let mut second = [[0.0; 3]; 3];
        second[X][X] = n * n / 4.0;
        second[Y][Y] = n / 4.0;
        second[Z][Z] = n / 4.0;
        PseudospinMoments { mean: [n / 2.0, 0.0, 0.0], second, n_mean: n }
    }

    #[test]
    fn coherent_is_unity() {
        let m = coherent(1000.0);
        for k in 0..20 {
            let t = k as f64 * 0.3;
            assert!((m.xi_squared(t, 0.0, 1000.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.optimal_phi(), 0.0);
    }

    #[test]
    fn min_over_theta_matches_scan() {
        let mut m = coherent(100.0);
        m.second[Y][Y] = 300.0;
        m.second[Y][Z] = 80.0;
        m.second[Z][Y] = 80.0;
        let (t, v) = m.min_over_theta(0.0);
        let scan = (0..10000)
            .map(|k| m.numerator(k as f64 * std::f64::consts::PI / 10000.0, 0.0))
            .fold(f64::INFINITY, f64::min);
        assert!((v - scan).abs() < 1e-4 * scan);
        assert!((m.numerator(t, 0.0) - v).abs() < 1e-10 * v);
    }

    #[test]
    fn zero_length_rejected() {
        let mut m = coherent(10.0);
        m.mean = [0.0; 3];
        assert!(matches!(m.xi_squared(0.0, 0.0, 10.0), Err(Error::ZeroSpinLength)));
    }
}

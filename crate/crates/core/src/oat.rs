//! Closed-form two-mode one-axis-twisting model.
//!
//! The coherent spin state along +Jx evolves under hbar chi(t) jz^2; the accumulated
//! twisting phase is lambda. Mode mismatch enters through the complex overlap Q.

use crate::error::{invalid, Error, Result};
use crate::spin::{PseudospinMoments, X, Y};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OatParams {
    pub n_atoms: f64,
    pub lambda: f64,
    pub q_overlap: Complex64,
}

impl OatParams {
    pub fn new(n_atoms: f64, lambda: f64, q_overlap: Complex64) -> Self {
        OatParams { n_atoms, lambda, q_overlap }
    }

    pub fn perfect_overlap(n_atoms: f64, lambda: f64) -> Self {
        Self::new(n_atoms, lambda, Complex64::new(1.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_atoms >= 1.0) {
            return Err(invalid("n_atoms", "must be >= 1"));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite"));
        }
        let q = self.q_overlap.norm();
        if !(q <= 1.0 + 1e-9) {
            return Err(invalid("q_overlap", "|Q| must lie in [0, 1]"));
        }
        Ok(())
    }

    /// N |Q| lambda.
    pub fn twist(&self) -> f64 {
        self.n_atoms * self.q_overlap.norm() * self.lambda
    }

    /// N lambda^2, the small parameter of the linearised model.
    pub fn nonlinearity(&self) -> f64 {
        self.n_atoms * self.lambda * self.lambda
    }
}

/// Two-mode pseudospin moments of the twisted coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OatMoments {
    pub jx_mean: f64,
    pub jy_mean: f64,
    pub jz_mean: f64,
    pub jx2: f64,
    pub jy2: f64,
    pub jz2: f64,
    pub sym_xy: f64,
    pub sym_xz: f64,
    pub sym_yz: f64,
}

/// sign(c)^n |c|^n via logarithms so large n never underflows prematurely.
fn signed_pow(c: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 1.0;
    }
    if c == 0.0 {
        return 0.0;
    }
    let mag = (n * c.abs().ln()).exp();
    if c < 0.0 && (n as i64) % 2 != 0 {
        -mag
    } else {
        mag
    }
}

pub fn oat_moments(n: f64, lambda: f64) -> OatMoments {
    let (s, c) = lambda.sin_cos();
    let c2 = (2.0 * lambda).cos();
    let nm1 = n - 1.0;
    let c_n2 = if nm1 == 0.0 { 0.0 } else { signed_pow(c2, n - 2.0) };
    let cl_n2 = if nm1 == 0.0 { 0.0 } else { signed_pow(c, n - 2.0) };
    OatMoments {
        jx_mean: 0.5 * n * signed_pow(c, nm1),
        jy_mean: 0.0,
        jz_mean: 0.0,
        jx2: n / 8.0 * (n + 1.0 + nm1 * c_n2),
        jy2: n / 4.0 * (1.0 + 0.5 * nm1 * (1.0 - c_n2)),
        jz2: n / 4.0,
        sym_xy: 0.0,
        sym_xz: 0.0,
        sym_yz: n / 4.0 * nm1 * s * cl_n2,
    }
}

/// Leading-order moments for N lambda^2 << 1.
pub fn oat_moments_linearized(n: f64, lambda: f64) -> OatMoments {
    OatMoments {
        jx_mean: 0.5 * n,
        jy_mean: 0.0,
        jz_mean: 0.0,
        jx2: n * n / 4.0 * (1.0 - n * lambda * lambda),
        jy2: n / 4.0 * (1.0 + n * n * lambda * lambda),
        jz2: n / 4.0,
        sym_xy: 0.0,
        sym_xz: 0.0,
        sym_yz: n * n / 4.0 * lambda,
    }
}

impl OatMoments {
    /// Interferometer-level moments: rotate by the overlap phase, scale by |Q|, and add
    /// the vacuum contribution (1 - |Q|^2) N / 4 to the transverse variances.
    pub fn to_pseudospin(&self, n: f64, q: Complex64) -> PseudospinMoments {
        let (qa, qp) = (q.norm(), q.arg());
        let (s, c) = qp.sin_cos();
        let r = [[qa * c, -qa * s, 0.0], [qa * s, qa * c, 0.0], [0.0, 0.0, 1.0]];
        let mj = [self.jx_mean, self.jy_mean, self.jz_mean];
        let sj = [
            [self.jx2, self.sym_xy, self.sym_xz],
            [self.sym_xy, self.jy2, self.sym_yz],
            [self.sym_xz, self.sym_yz, self.jz2],
        ];
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            for k in 0..3 {
                mean[a] += r[a][k] * mj[k];
            }
            for b in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        v += r[a][k] * sj[k][l] * r[b][l];
                    }
                }
                second[a][b] = v;
            }
        }
        let vac = 0.25 * (1.0 - qa * qa) * n;
        second[X][X] += vac;
        second[Y][Y] += vac;
        PseudospinMoments { mean, second, n_mean: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentModel {
    Exact,
    Linearized,
}

/// xi^2(theta, phi) from exact moments.
pub fn xi_general(theta: f64, phi: f64, params: &OatParams) -> Result<f64> {
    xi_general_with(theta, phi, params, MomentModel::Exact)
}

pub fn xi_general_with(theta: f64, phi: f64, params: &OatParams, model: MomentModel) -> Result<f64> {
    params.validate()?;
    if params.q_overlap.norm() == 0.0 {
        return Err(invalid("q_overlap", "|Q| = 0"));
    }
    let m = match model {
        MomentModel::Exact => oat_moments(params.n_atoms, params.lambda),
        MomentModel::Linearized => oat_moments_linearized(params.n_atoms, params.lambda),
    };
    m.to_pseudospin(params.n_atoms, params.q_overlap).xi_squared(theta, phi, params.n_atoms)
}

/// Threshold on N lambda^2 beyond which the closed-form minimum is flagged.
pub const LINEAR_REGIME_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingPrediction {
    pub xi: f64,
    pub theta_sq: f64,
    pub theta_antisq: f64,
    pub phi_opt: f64,
    pub moments: OatMoments,
    pub linear_regime: bool,
}

/// Puts a squeezing angle on the branch with cos(theta) <= 0, which maximises
/// |T^2 - cos(theta) T_oat^2|. Result lies in [pi/2, 3pi/2).
pub fn negative_cos_branch(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t < 0.5 * PI {
        t + PI
    } else {
        t
    }
}

pub fn xi_min(params: &OatParams) -> Result<SqueezingPrediction> {
    params.validate()?;
    let qa = params.q_overlap.norm();
    if qa == 0.0 {
        return Err(invalid("q_overlap", "|Q| = 0"));
    }
    if params.lambda < 0.0 {
        return Err(invalid("lambda", "must be >= 0"));
    }
    let x = params.twist();
    let xi2 = (1.0 - 0.5 * x * ((4.0 + x * x).sqrt() - x)) / (qa * qa);
    let theta_sq = if x == 0.0 { 1.5 * PI - 0.25 * PI } else { 1.5 * PI - 0.5 * (2.0 / x).atan() };
    Ok(SqueezingPrediction {
        xi: xi2.max(0.0).sqrt(),
        theta_sq,
        theta_antisq: theta_sq - 0.5 * PI,
        phi_opt: crate::numerics::wrap_angle(-params.q_overlap.arg()),
        moments: oat_moments(params.n_atoms, params.lambda),
        linear_regime: params.nonlinearity() < LINEAR_REGIME_LIMIT,
    })
}

/// Minimum over theta with the exact moments at phi = -arg(Q).
pub fn xi_min_exact(params: &OatParams) -> Result<SqueezingPrediction> {
    params.validate()?;
    let qa = params.q_overlap.norm();
    if qa == 0.0 {
        return Err(invalid("q_overlap", "|Q| = 0"));
    }
    let m = oat_moments(params.n_atoms, params.lambda);
    let p = m.to_pseudospin(params.n_atoms, params.q_overlap);
    let phi = crate::numerics::wrap_angle(-params.q_overlap.arg());
    let l = p.spin_length(phi);
    if l == 0.0 {
        return Err(Error::ZeroSpinLength);
    }
    let (t, num) = p.min_over_theta(phi);
    let theta_sq = negative_cos_branch(t);
    Ok(SqueezingPrediction {
        xi: (params.n_atoms * num / (l * l)).max(0.0).sqrt(),
        theta_sq,
        theta_antisq: theta_sq - 0.5 * PI,
        phi_opt: phi,
        moments: m,
        linear_regime: params.nonlinearity() < LINEAR_REGIME_LIMIT,
    })
}

pub fn xi_detection_noise(xi: f64, n: f64, delta_n: f64) -> f64 {
    (xi * xi + 2.0 * delta_n * delta_n / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumberFluctuationXi {
    pub xi_exact: f64,
    pub xi_bound: f64,
}

/// Coefficient of (sigma_N/N)^2/|Q|^2 in the number-fluctuation correction; at most 1.
pub fn number_fluctuation_bracket(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let r = (4.0 + x * x).sqrt();
    1.5 * x * x * (r - x - 4.0 / (3.0 * x)) / r
}

pub fn xi_number_fluctuations(params: &OatParams, sigma_n_rel: f64) -> Result<NumberFluctuationXi> {
    if !(0.0..0.5).contains(&sigma_n_rel) {
        return Err(invalid("sigma_n_rel", "must lie in [0, 0.5)"));
    }
    let pred = xi_min(params)?;
    Ok(number_fluctuations_from(pred.xi, params.twist(), params.q_overlap.norm(), sigma_n_rel))
}

pub fn number_fluctuations_from(xi: f64, twist: f64, q_abs: f64, sigma_n_rel: f64) -> NumberFluctuationXi {
    let s2 = sigma_n_rel * sigma_n_rel / (q_abs * q_abs);
    NumberFluctuationXi {
        xi_exact: (xi * xi + number_fluctuation_bracket(twist) * s2).max(0.0).sqrt(),
        xi_bound: (xi * xi + s2).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEstimate {
    pub exact: f64,
    pub approx: f64,
}

pub fn sensitivity_from_xi(xi: f64, n: f64, k0: f64, t: f64, t_oat: f64, theta: f64) -> Result<SensitivityEstimate> {
    if !(t > 0.0) {
        return Err(invalid("T", "must be > 0"));
    }
    if !(n >= 1.0) {
        return Err(invalid("n_atoms", "must be >= 1"));
    }
    let lever = (t * t - theta.cos() * t_oat * t_oat).abs();
    Ok(SensitivityEstimate {
        exact: xi / (n.sqrt() * k0 * lever),
        approx: xi / (n.sqrt() * k0 * t * t),
    })
}

/// Coefficients with Jz_out = Cx Jx + Cy Jy + Cz Jz in terms of the moments just before BS2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JzOutCoefficients {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

pub fn jz_out_coefficients(theta: f64, phi: f64, phi1: f64, phi2: f64, phi_bs3: f64) -> JzOutCoefficients {
    let a = phi2 + phi + phi_bs3;
    let b = phi1 + phi;
    let (st, ct) = theta.sin_cos();
    JzOutCoefficients {
        cx: -a.sin() * b.cos() + a.cos() * b.sin() * ct,
        cy: a.sin() * b.sin() + a.cos() * b.cos() * ct,
        cz: -a.cos() * st,
    }
}

/// Compensated operating point: BS2 phase and BS3 phase for a given g0 and phi'.
pub fn compensation_phases(k0: f64, g0: f64, t: f64, t_oat: f64, phi_prime: f64) -> (f64, f64) {
    let phi = -k0 * g0 * t_oat * t_oat + phi_prime;
    let phi_bs3 = -k0 * g0 * (t * t - t_oat * t_oat) - phi_prime;
    (phi, phi_bs3)
}

/// d<Jz_out>/dg at the compensated point: -k0 (T^2 - cos(theta) T_oat^2) <J_perp>.
pub fn compensated_slope(k0: f64, t: f64, t_oat: f64, theta: f64, j_perp: f64) -> f64 {
    -k0 * (t * t - theta.cos() * t_oat * t_oat) * j_perp
}

/// One row of the analytic table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub n_atoms: f64,
    pub lambda: f64,
    pub q_abs: f64,
    pub xi: f64,
    pub theta_sq_rad: f64,
    pub phi_opt_rad: f64,
}

impl AnalyticRow {
    pub fn from_prediction(p: &OatParams, s: &SqueezingPrediction) -> Self {
        AnalyticRow {
            n_atoms: p.n_atoms,
            lambda: p.lambda,
            q_abs: p.q_overlap.norm(),
            xi: s.xi,
            theta_sq_rad: s.theta_sq,
            phi_opt_rad: s.phi_opt,
        }
    }
}

pub fn write_analytic_csv<W: std::io::Write>(rows: &[AnalyticRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_analytic_csv<R: std::io::Read>(r: R) -> Result<Vec<AnalyticRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|x| x.map_err(Error::from)).collect()
}

/// xi-vs-lambda scan at fixed N and perfect overlap.
pub fn lambda_scan(n: f64, lambdas: &[f64]) -> Result<Vec<AnalyticRow>> {
    lambdas
        .iter()
        .map(|&l| {
            let p = OatParams::perfect_overlap(n, l);
            Ok(AnalyticRow::from_prediction(&p, &xi_min(&p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exact state-vector OAT on the N+1 symmetric Dicke states.
    fn fock_moments(n: usize, lambda: f64) -> OatMoments {
        let j = n as f64 / 2.0;
        let dim = n + 1;
        let m_of = |k: usize| k as f64 - j;
        let mut binom = vec![1.0f64; dim];
        for k in 1..dim {
            binom[k] = binom[k - 1] * (n + 1 - k) as f64 / k as f64;
        }
        let norm = 2f64.powf(-(n as f64) / 2.0);
        let psi: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::from_polar(binom[k].sqrt() * norm, -lambda * m_of(k) * m_of(k)))
            .collect();
        let raise = |v: &[Complex64]| -> Vec<Complex64> {
            let mut o = vec![Complex64::default(); dim];
            for k in 0..dim - 1 {
                let m = m_of(k);
                o[k + 1] += v[k] * ((j - m) * (j + m + 1.0)).sqrt();
            }
            o
        };
        let lower = |v: &[Complex64]| -> Vec<Complex64> {
            let mut o = vec![Complex64::default(); dim];
            for k in 1..dim {
                let m = m_of(k);
                o[k - 1] += v[k] * ((j + m) * (j - m + 1.0)).sqrt();
            }
            o
        };
        let up = raise(&psi);
        let dn = lower(&psi);
        let i = Complex64::new(0.0, 1.0);
        let jx: Vec<Complex64> = up.iter().zip(&dn).map(|(a, b)| (a + b) * 0.5).collect();
        let jy: Vec<Complex64> = up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * i)).collect();
        let jz: Vec<Complex64> = psi.iter().enumerate().map(|(k, a)| a * m_of(k)).collect();
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
        OatMoments {
            jx_mean: dot(&psi, &jx).re,
            jy_mean: dot(&psi, &jy).re,
            jz_mean: dot(&psi, &jz).re,
            jx2: dot(&jx, &jx).re,
            jy2: dot(&jy, &jy).re,
            jz2: dot(&jz, &jz).re,
            sym_xy: dot(&jx, &jy).re,
            sym_xz: dot(&jx, &jz).re,
            sym_yz: dot(&jy, &jz).re,
        }
    }

    fn as_array(m: &OatMoments) -> [f64; 9] {
        [m.jx_mean, m.jy_mean, m.jz_mean, m.jx2, m.jy2, m.jz2, m.sym_xy, m.sym_xz, m.sym_yz]
    }

    #[test]
    fn fock_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[1usize, 2, 5, 16, 33, 64] {
            for _ in 0..10 {
                let lambda: f64 = rng.gen_range(0.0..1.5);
                let a = as_array(&oat_moments(n as f64, lambda));
                let b = as_array(&fock_moments(n, lambda));
                let scale = (n * n) as f64 / 4.0;
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-10 * y.abs().max(scale * 1e-3), "N={n} l={lambda}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn coherent_and_landmarks() {
        let m = oat_moments(100.0, 0.0);
        assert_eq!(m.jx_mean, 50.0);
        assert!((m.jy2 - 25.0).abs() < 1e-12 && (m.jz2 - 25.0).abs() < 1e-12);
        assert_eq!(m.sym_yz, 0.0);
        let m = oat_moments(100.0, 0.01);
        assert!((m.jx_mean - 50.0 * 0.01f64.cos().powi(99)).abs() < 1e-12);
        assert!((m.jx_mean - 49.75).abs() < 0.01);
        // Large N stays finite.
        let m = oat_moments(1e6, 3e-4);
        assert!(m.jx_mean.is_finite() && m.jx_mean > 0.0);
    }

    #[test]
    fn xi_min_landmarks() {
        let p = OatParams::perfect_overlap(1e4, 0.0);
        assert_eq!(xi_min(&p).unwrap().xi, 1.0);
        let p = OatParams::perfect_overlap(1e4, 2e-4);
        let s = xi_min(&p).unwrap();
        assert!((s.xi * s.xi - (1.0 - (8f64.sqrt() - 2.0))).abs() < 1e-12);
        assert!((s.xi - 0.4142).abs() < 1e-4);
        assert!((s.theta_sq - (1.5 * PI - PI / 8.0)).abs() < 1e-12);
        let p = OatParams::new(1e4, 0.0, Complex64::new(0.5, 0.0));
        assert!((xi_min(&p).unwrap().xi - 2.0).abs() < 1e-12);
        assert!(xi_min(&OatParams::new(1e4, 1e-4, Complex64::default())).is_err());
    }

    #[test]
    fn general_matches_closed_form_linear_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 10f64.powf(rng.gen_range(2.0..6.0));
            let lambda = rng.gen_range(0.0..5.0) / n;
            let q = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(-3.0..3.0));
            let p = OatParams::new(n, lambda, q);
            let s = xi_min(&p).unwrap();
            let g = xi_general_with(s.theta_sq, s.phi_opt, &p, MomentModel::Linearized).unwrap();
            assert!((g - s.xi * s.xi).abs() < 1e-10, "{g} {}", s.xi * s.xi);
        }
    }

    #[test]
    fn general_coherent_isotropic() {
        let p = OatParams::perfect_overlap(1e4, 0.0);
        for k in 0..16 {
            let t = k as f64 * 0.4;
            assert!((xi_general(t, 0.0, &p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_minimum_below_scan() {
        let p = OatParams::new(1e4, 3e-4, Complex64::from_polar(0.97, 0.3));
        let s = xi_min_exact(&p).unwrap();
        for k in 0..1000 {
            let t = k as f64 * PI / 1000.0;
            assert!(s.xi * s.xi <= xi_general(t, s.phi_opt, &p).unwrap() + 1e-12);
        }
        // Linear regime: exact and linearised minima agree closely.
        let lin = xi_min(&p).unwrap();
        assert!((s.xi - lin.xi).abs() / lin.xi < 0.05);
    }

    #[test]
    fn noise_landmarks() {
        assert_eq!(xi_detection_noise(0.3, 1e4, 0.0), 0.3);
        assert!((xi_detection_noise(0.2, 1e4, 10.0) - 0.06f64.sqrt()).abs() < 1e-12);
        assert!((xi_detection_noise(1.0, 1e4, (5e3f64).sqrt()) - 2f64.sqrt()).abs() < 1e-12);
        let b = number_fluctuations_from(0.2, 4.0, 1.0, 0.1);
        assert!((b.xi_bound - 0.05f64.sqrt()).abs() < 1e-12);
        assert!(b.xi_exact <= b.xi_bound + 1e-12);
        let p = OatParams::perfect_overlap(1e4, 3e-4);
        let z = xi_number_fluctuations(&p, 0.0).unwrap();
        assert_eq!(z.xi_exact, xi_min(&p).unwrap().xi);
        let mut x = 1e-3;
        while x < 1e3 {
            assert!(number_fluctuation_bracket(x) <= 1.0);
            x *= 1.1;
        }
    }

    #[test]
    fn sensitivity_landmarks() {
        let s = sensitivity_from_xi(1.0, 1e4, 1.61e7, 0.06, 0.0, 0.0).unwrap();
        assert!((s.exact - 1.73e-7).abs() / 1.73e-7 < 5e-3);
        assert_eq!(s.exact, s.approx);
        let s2 = sensitivity_from_xi(0.2, 1e4, 1.61e7, 0.06, 0.0, 0.0).unwrap();
        assert!((s.exact / s2.exact - 5.0).abs() < 1e-12);
    }

    #[test]
    fn coefficients() {
        let c = jz_out_coefficients(PI / 2.0, 0.0, 0.0, 0.0, 0.0);
        assert!(c.cx.abs() < 1e-15 && c.cy.abs() < 1e-15 && (c.cz + 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-7.0..7.0)).collect();
            let c = jz_out_coefficients(v[0], v[1], v[2], v[3], v[4]);
            assert!((c.cx * c.cx + c.cy * c.cy + c.cz * c.cz - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let rows = lambda_scan(1e4, &[0.0, 1e-4, 2e-4]).unwrap();
        assert_eq!(rows[0].xi, 1.0);
        let mut buf = Vec::new();
        write_analytic_csv(&rows, &mut buf).unwrap();
        let head = String::from_utf8(buf.clone()).unwrap();
        assert!(head.starts_with("n_atoms,lambda,q_abs,xi,theta_sq_rad,phi_opt_rad"));
        assert_eq!(read_analytic_csv(&buf[..]).unwrap(), rows);
    }
}

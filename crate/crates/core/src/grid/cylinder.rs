use super::bessel::{bessel_j0, bessel_j0_zeros, bessel_j1};
use super::line::Grid1D;
use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Cylindrically symmetric (r, z) grid. Fields are stored radial-major:
/// index `n * nz + j` for radial node n and axial point j.
///
/// The radial transform is the zeroth-order quasi-discrete Hankel transform on nodes
/// r_n = j_n R / j_{N+1}. Its symmetric kernel is orthogonalised once at construction
/// (polar-factor iteration), which keeps repeated application norm preserving.
#[derive(Debug, Clone)]
pub struct CylGrid {
    pub n_radial: usize,
    pub r_max: f64,
    pub radial_nodes: Vec<f64>,
    pub axial: Grid1D,
    pub k_radial: Vec<f64>,
    /// Quadrature weights for integral of f(r) r dr.
    pub radial_weights: Vec<f64>,
    sqrt_w: Vec<f64>,
    /// Spectral-side weights for integral of F(k) k dk.
    k_weights: Vec<f64>,
    kernel: Vec<f64>,
    volume: Vec<f64>,
}

impl PartialEq for CylGrid {
    fn eq(&self, o: &Self) -> bool {
        self.n_radial == o.n_radial && self.r_max == o.r_max && self.axial == o.axial
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            let (bk, ci) = (&b[k * n..(k + 1) * n], &mut c[i * n..(i + 1) * n]);
            for j in 0..n {
                ci[j] += aik * bk[j];
            }
        }
    }
    c
}

impl CylGrid {
    pub fn new(n_radial: usize, r_max: f64, axial: Grid1D) -> Result<Self> {
        if n_radial < 2 {
            return Err(invalid("n_radial", "need at least 2 radial nodes"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(invalid("r_max", "must be positive"));
        }
        let n = n_radial;
        let zeros = bessel_j0_zeros(n + 1);
        let s = zeros[n];
        let j1: Vec<f64> = zeros[..n].iter().map(|&x| bessel_j1(x).abs()).collect();
        let radial_nodes: Vec<f64> = zeros[..n].iter().map(|&x| x * r_max / s).collect();
        let k_radial: Vec<f64> = zeros[..n].iter().map(|&x| x / r_max).collect();
        let radial_weights: Vec<f64> = j1.iter().map(|&j| 2.0 * r_max * r_max / (s * s * j * j)).collect();
        let k_weights: Vec<f64> = j1.iter().map(|&j| 2.0 / (r_max * r_max * j * j)).collect();
        let sqrt_w = radial_weights.iter().map(|w| w.sqrt()).collect();

        let mut t = vec![0.0; n * n];
        for m in 0..n {
            for p in m..n {
                let v = 2.0 * bessel_j0(zeros[m] * zeros[p] / s) / (s * j1[m] * j1[p]);
                t[m * n + p] = v;
                t[p * n + m] = v;
            }
        }
        // X <- X (3I - X^T X) / 2 converges to the orthogonal polar factor; X stays symmetric.
        for _ in 0..20 {
            let xtx = matmul(&t, &t, n);
            let mut dev: f64 = 0.0;
            let mut a = xtx;
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((a[i * n + j] - id).abs());
                    a[i * n + j] = 1.5 * id - 0.5 * a[i * n + j];
                }
            }
            if dev < 1e-15 {
                break;
            }
            t = matmul(&t, &a, n);
            for i in 0..n {
                for j in i + 1..n {
                    let v = 0.5 * (t[i * n + j] + t[j * n + i]);
                    t[i * n + j] = v;
                    t[j * n + i] = v;
                }
            }
        }

        let nz = axial.n_points;
        let mut volume = Vec::with_capacity(n * nz);
        for w in &radial_weights {
            volume.extend(std::iter::repeat_n(2.0 * PI * w * axial.dz, nz));
        }
        Ok(CylGrid {
            n_radial,
            r_max,
            radial_nodes,
            axial,
            k_radial,
            radial_weights,
            sqrt_w,
            k_weights,
            kernel: t,
            volume,
        })
    }

    pub fn n_axial(&self) -> usize {
        self.axial.n_points
    }

    pub fn len(&self) -> usize {
        self.n_radial * self.axial.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume_elements(&self) -> &[f64] {
        &self.volume
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_w
    }

    /// Orthonormal transform: `dst[m, :] = sum_n T[m, n] src[n, :]` over rows of length `row`.
    pub fn apply_kernel(&self, src: &[Complex64], dst: &mut [Complex64], row: usize) {
        let n = self.n_radial;
        debug_assert_eq!(src.len(), n * row);
        for m in 0..n {
            let d = &mut dst[m * row..(m + 1) * row];
            d.iter_mut().for_each(|v| *v = Complex64::default());
            for p in 0..n {
                let t = self.kernel[m * n + p];
                let s = &src[p * row..(p + 1) * row];
                for (dv, sv) in d.iter_mut().zip(s) {
                    *dv += sv * t;
                }
            }
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n_radial {
            return Err(Error::LengthMismatch { expected: self.n_radial, got: len });
        }
        Ok(())
    }

    /// F(k_m) = integral of f(r) J0(k_m r) r dr.
    pub fn hankel_forward(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(field.len())?;
        let v: Vec<Complex64> = field.iter().zip(&self.sqrt_w).map(|(f, w)| f * *w).collect();
        let mut out = vec![Complex64::default(); self.n_radial];
        self.apply_kernel(&v, &mut out, 1);
        for (o, w) in out.iter_mut().zip(&self.k_weights) {
            *o /= w.sqrt();
        }
        Ok(out)
    }

    pub fn hankel_inverse(&self, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(spectrum.len())?;
        let v: Vec<Complex64> = spectrum.iter().zip(&self.k_weights).map(|(f, w)| f * w.sqrt()).collect();
        let mut out = vec![Complex64::default(); self.n_radial];
        self.apply_kernel(&v, &mut out, 1);
        for (o, w) in out.iter_mut().zip(&self.sqrt_w) {
            *o /= *w;
        }
        Ok(out)
    }
}

pub fn hankel_roundtrip(grid: &CylGrid, field: &[Complex64]) -> Result<Vec<Complex64>> {
    grid.hankel_inverse(&grid.hankel_forward(field)?)
}

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Uniform periodic grid on [z_min, z_max) with FFT plans attached.
#[derive(Clone)]
pub struct Grid1D {
    pub n_points: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub dz: f64,
    pub k_values: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("n_points", &self.n_points)
            .field("z_min", &self.z_min)
            .field("z_max", &self.z_max)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, o: &Self) -> bool {
        self.n_points == o.n_points && self.z_min == o.z_min && self.z_max == o.z_max
    }
}

impl Grid1D {
    pub fn new(n_points: usize, z_min: f64, z_max: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(invalid("n_points", format!("{n_points} is not a power of two >= 4")));
        }
        if !(z_max > z_min) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(invalid("z_max", "must exceed z_min"));
        }
        let len = z_max - z_min;
        let dz = len / n_points as f64;
        let dk = 2.0 * PI / len;
        let k_values = (0..n_points)
            .map(|j| {
                let s = if j < n_points / 2 { j as isize } else { j as isize - n_points as isize };
                s as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid1D {
            n_points,
            z_min,
            z_max,
            dz,
            k_values,
            fwd: planner.plan_fft_forward(n_points),
            inv: planner.plan_fft_inverse(n_points),
        })
    }

    /// Grid centred on zero.
    pub fn centered(n_points: usize, half_width: f64) -> Result<Self> {
        Self::new(n_points, -half_width, half_width)
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.dz
    }

    pub fn z_values(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.z(j)).collect()
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.z_max - self.z_min)
    }

    pub fn k_nyquist(&self) -> f64 {
        PI / self.dz
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::LengthMismatch { expected: self.n_points, got: len });
        }
        Ok(())
    }

    /// In-place unnormalised forward DFT of one row.
    pub fn fft_in_place(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd.process_with_scratch(data, scratch);
    }

    /// In-place inverse DFT including the 1/n factor.
    pub fn ifft_in_place(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(data, scratch);
        let s = 1.0 / self.n_points as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Inverse DFT without the 1/n factor.
    pub fn ifft_raw_in_place(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(data, scratch);
    }

    pub fn scratch_len(&self) -> usize {
        self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len())
    }

    /// Continuous-normalised transform: f~(k_j) = dz * sum_n f(z_n) e^{-i k_j (z_n - z_min)}.
    pub fn forward(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(field.len())?;
        let mut out = field.to_vec();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.fft_in_place(&mut out, &mut scratch);
        for v in out.iter_mut() {
            *v *= self.dz;
        }
        Ok(out)
    }

    pub fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(spectrum.len())?;
        let mut out = spectrum.to_vec();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.ifft_in_place(&mut out, &mut scratch);
        let s = 1.0 / self.dz;
        for v in out.iter_mut() {
            *v *= s;
        }
        Ok(out)
    }

    /// Smallest |k| such that the bins with |k'| <= |k| hold 1 - 1e-6 of the spectral weight.
    pub fn momentum_support(&self, field: &[Complex64]) -> Result<f64> {
        let spec = self.forward(field)?;
        let mut bins: Vec<(f64, f64)> =
            spec.iter().zip(&self.k_values).map(|(c, k)| (k.abs(), c.norm_sqr())).collect();
        bins.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = bins.iter().map(|b| b.1).sum();
        if total == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (k, w) in bins {
            acc += w;
            if acc >= (1.0 - 1e-6) * total {
                return Ok(k);
            }
        }
        Ok(self.k_nyquist())
    }

    /// Rejects fields whose momentum support exceeds half the Nyquist wavenumber.
    pub fn aliasing_guard(&self, field: &[Complex64]) -> Result<()> {
        let k_support = self.momentum_support(field)?;
        let k_limit = 0.5 * self.k_nyquist();
        if k_support > k_limit {
            return Err(Error::Aliasing { k_support, k_limit });
        }
        Ok(())
    }
}

pub fn fourier_roundtrip(grid: &Grid1D, field: &[Complex64]) -> Result<Vec<Complex64>> {
    grid.inverse(&grid.forward(field)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn l2(a: &[Complex64]) -> f64 {
        a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(100, 0.0, 1.0).is_err());
        assert!(Grid1D::new(64, 1.0, 1.0).is_err());
        let g = Grid1D::new(64, 0.0, 1.0).unwrap();
        assert!(matches!(g.forward(&[Complex64::default(); 3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn roundtrip_and_parseval() {
        let g = Grid1D::new(512, -3e-5, 5e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f: Vec<Complex64> =
            (0..512).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let back = fourier_roundtrip(&g, &f).unwrap();
        let err: Vec<Complex64> = back.iter().zip(&f).map(|(a, b)| a - b).collect();
        assert!(l2(&err) / l2(&f) < 1e-12);
        let spec = g.forward(&f).unwrap();
        let lhs: f64 = f.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dz;
        let rhs: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dk() / (2.0 * PI);
        assert!((lhs - rhs).abs() / lhs < 1e-10);
    }

    #[test]
    fn constant_and_plane_wave() {
        let g = Grid1D::new(128, 0.0, 1e-4).unwrap();
        let c = vec![Complex64::new(1.0, 0.0); 128];
        let s = g.forward(&c).unwrap();
        assert!(s[0].norm() > 0.0);
        assert!(s[1..].iter().all(|v| v.norm() < 1e-12 * s[0].norm()));
        let k1 = g.k_values[5];
        let pw: Vec<Complex64> = (0..128).map(|j| Complex64::from_polar(1.0, k1 * g.z(j))).collect();
        let s = g.forward(&pw).unwrap();
        for (j, v) in s.iter().enumerate() {
            if j == 5 {
                assert!(v.norm() > 0.0);
            } else {
                assert!(v.norm() < 1e-10 * s[5].norm(), "bin {j}");
            }
        }
    }

    #[test]
    fn aliasing_guard() {
        let g = Grid1D::centered(256, 20e-6).unwrap();
        let smooth: Vec<Complex64> =
            (0..256).map(|j| Complex64::new((-(g.z(j) / 3e-6).powi(2)).exp(), 0.0)).collect();
        assert!(g.aliasing_guard(&smooth).is_ok());
        let k = 0.8 * g.k_nyquist();
        let rough: Vec<Complex64> =
            smooth.iter().enumerate().map(|(j, v)| v * Complex64::from_polar(1.0, k * g.z(j))).collect();
        assert!(matches!(g.aliasing_guard(&rough), Err(Error::Aliasing { .. })));
    }
}

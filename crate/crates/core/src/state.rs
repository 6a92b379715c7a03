//! Two-component field state.

use crate::error::{Error, Result};
use crate::grid::Geometry;
use crate::numerics::KahanSum;
use num_complex::Complex64;

/// Whether component 2 carries the e^{-i k0 z} co-moving transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Frame {
    Lab,
    CoMoving,
}

#[derive(Debug, Clone)]
pub struct FieldState2 {
    pub geometry: Geometry,
    pub psi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
    pub frame: Frame,
    pub time: f64,
}

impl FieldState2 {
    pub fn vacuum(geometry: Geometry) -> Self {
        let n = geometry.len();
        FieldState2 {
            geometry,
            psi1: vec![Complex64::default(); n],
            psi2: vec![Complex64::default(); n],
            frame: Frame::CoMoving,
            time: 0.0,
        }
    }

    /// All atoms in component 1; the frame tag is irrelevant while component 2 is empty.
    pub fn from_component1(geometry: Geometry, psi1: Vec<Complex64>) -> Result<Self> {
        if psi1.len() != geometry.len() {
            return Err(Error::LengthMismatch { expected: geometry.len(), got: psi1.len() });
        }
        let mut s = Self::vacuum(geometry);
        s.psi1 = psi1;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.psi1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi1.is_empty()
    }

    fn norm_of(&self, f: &[Complex64]) -> f64 {
        let mut s = KahanSum::new();
        match &self.geometry {
            Geometry::Line(g) => {
                for c in f {
                    s.add(c.norm_sqr());
                }
                s.value() * g.dz
            }
            Geometry::Cylinder(g) => {
                for (c, dv) in f.iter().zip(g.volume_elements()) {
                    s.add(c.norm_sqr() * dv);
                }
                s.value()
            }
        }
    }

    pub fn norm1(&self) -> f64 {
        self.norm_of(&self.psi1)
    }

    pub fn norm2(&self) -> f64 {
        self.norm_of(&self.psi2)
    }

    pub fn total_norm(&self) -> f64 {
        self.norm1() + self.norm2()
    }

    pub fn density1(&self) -> Vec<f64> {
        self.psi1.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn density2(&self) -> Vec<f64> {
        self.psi2.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Sum over grid of conj(a) b dV.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            let v = x.conj() * y * self.geometry.dv(i);
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    fn apply_plane_wave(&mut self, k: f64) {
        for (i, c) in self.psi2.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, k * self.geometry.z_of(i));
        }
    }

    /// Stored component 2 becomes e^{-i k0 z} times the lab field.
    pub fn to_comoving(&mut self, k0: f64) {
        if self.frame == Frame::Lab {
            self.apply_plane_wave(-k0);
            self.frame = Frame::CoMoving;
        }
    }

    pub fn to_lab(&mut self, k0: f64) {
        if self.frame == Frame::CoMoving {
            self.apply_plane_wave(k0);
            self.frame = Frame::Lab;
        }
    }

    pub fn require_comoving(&self) -> Result<()> {
        if self.frame != Frame::CoMoving {
            return Err(Error::FrameMismatch);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.psi1.iter().chain(&self.psi2).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

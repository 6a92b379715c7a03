//! Spatial grids and spectral transforms.

pub mod bessel;
mod cylinder;
mod line;
mod plan;

pub use cylinder::{hankel_roundtrip, CylGrid};
pub use line::{fourier_roundtrip, Grid1D};
pub use plan::{apply_kinetic_phase, SpectralPlan, Step, Workspace};

use std::sync::Arc;

/// Either grid kind, shared by reference.
#[derive(Debug, Clone)]
pub enum Geometry {
    Line(Arc<Grid1D>),
    Cylinder(Arc<CylGrid>),
}

impl PartialEq for Geometry {
    fn eq(&self, o: &Self) -> bool {
        match (self, o) {
            (Geometry::Line(a), Geometry::Line(b)) => Arc::ptr_eq(a, b) || a == b,
            (Geometry::Cylinder(a), Geometry::Cylinder(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl Geometry {
    pub fn line(g: Grid1D) -> Self {
        Geometry::Line(Arc::new(g))
    }
    pub fn cylinder(g: CylGrid) -> Self {
        Geometry::Cylinder(Arc::new(g))
    }

    pub fn len(&self) -> usize {
        match self {
            Geometry::Line(g) => g.n_points,
            Geometry::Cylinder(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axial(&self) -> &Grid1D {
        match self {
            Geometry::Line(g) => g,
            Geometry::Cylinder(g) => &g.axial,
        }
    }

    /// Volume element of point `i` (dz in 1D).
    pub fn dv(&self, i: usize) -> f64 {
        match self {
            Geometry::Line(g) => g.dz,
            Geometry::Cylinder(g) => g.volume_elements()[i],
        }
    }

    pub fn volume_elements(&self) -> Vec<f64> {
        match self {
            Geometry::Line(g) => vec![g.dz; g.n_points],
            Geometry::Cylinder(g) => g.volume_elements().to_vec(),
        }
    }

    /// Axial coordinate of point `i`.
    pub fn z_of(&self, i: usize) -> f64 {
        let ax = self.axial();
        ax.z(i % ax.n_points)
    }

    /// Number of independent grid modes per component.
    pub fn n_modes(&self) -> usize {
        self.len()
    }
}

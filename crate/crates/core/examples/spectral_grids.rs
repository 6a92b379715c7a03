// Fourier and Hankel transforms on the line and (r, z) grids, and a kinetic-energy check
// against a Gaussian with known <p^2>.
use num_complex::Complex64;
use oat_gravimetry::grid::{fourier_roundtrip, hankel_roundtrip, CylGrid, Geometry, Grid1D, SpectralPlan};
use oat_gravimetry::params::{HBAR, RB87_MASS};
use oat_gravimetry::Result;
use std::sync::Arc;

#[derive(Debug)]
pub struct GridChecks {
    pub fourier_err: f64,
    pub hankel_err: f64,
    pub kinetic_rel_err: f64,
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn run_example() -> Result<GridChecks> {
    let sigma = 5e-6;
    let line = Grid1D::centered(512, 60e-6)?;
    let gauss: Vec<Complex64> =
        line.z_values().iter().map(|z| Complex64::new((-z * z / (4.0 * sigma * sigma)).exp(), 0.0)).collect();
    let fourier_err = max_diff(&fourier_roundtrip(&line, &gauss)?, &gauss);

    let cyl = CylGrid::new(48, 40e-6, Grid1D::centered(64, 40e-6)?)?;
    let radial: Vec<Complex64> =
        cyl.radial_nodes.iter().map(|r| Complex64::new((-r * r / (4.0 * sigma * sigma)).exp(), 0.0)).collect();
    let hankel_err = max_diff(&hankel_roundtrip(&cyl, &radial)?, &radial);

    // <p^2>/2m for a Gaussian of position s.d. sigma is hbar^2 / (8 m sigma^2).
    let plan = SpectralPlan::new(Geometry::Line(Arc::new(line)), RB87_MASS, 0.0);
    let mut ws = plan.workspace();
    let norm: f64 = gauss.iter().map(|c| c.norm_sqr()).sum::<f64>() * plan.geometry().dv(0);
    let e = plan.kinetic_energy(&gauss, 0.0, &mut ws) / norm;
    let exact = HBAR * HBAR / (8.0 * RB87_MASS * sigma * sigma);
    let checks = GridChecks { fourier_err, hankel_err, kinetic_rel_err: (e - exact).abs() / exact };
    println!("{checks:?}");
    Ok(checks)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

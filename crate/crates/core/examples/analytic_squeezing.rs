// Closed-form one-axis-twisting squeezing: xi against lambda at perfect overlap, the effect of
// a reduced overlap |Q|, and the sensitivity that follows.
use num_complex::Complex64;
use oat_gravimetry::oat::{lambda_scan, sensitivity_from_xi, xi_min, xi_min_exact, OatParams};
use oat_gravimetry::params::SpeciesParams;
use oat_gravimetry::Result;

#[derive(Debug)]
pub struct AnalyticReport {
    /// (lambda N, xi) pairs.
    pub scan: Vec<(f64, f64)>,
    pub xi_reduced_overlap: f64,
    pub xi_exact: f64,
    pub delta_g: f64,
}

pub fn run_example() -> Result<AnalyticReport> {
    let n = 1e4;
    let lambdas: Vec<f64> = (0..=8).map(|i| i as f64 * 0.5 / n).collect();
    let rows = lambda_scan(n, &lambdas)?;
    let scan: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda * n, r.xi)).collect();
    for (ln, xi) in &scan {
        println!("lambda N = {ln:4.1}  xi = {xi:.4}  ({:+.2} dB)", 20.0 * xi.log10());
    }
    // N lambda = 2 at |Q| = 1 gives xi^2 = 3 - 2 sqrt(2).
    let lambda = 2.0 / n;
    let q = Complex64::from_polar(0.95, 0.3);
    let reduced = xi_min(&OatParams::new(n, lambda, q))?;
    let exact = xi_min_exact(&OatParams::perfect_overlap(n, lambda))?;
    let k0 = SpeciesParams::rb87().k0;
    let s = sensitivity_from_xi(reduced.xi, n, k0, 0.06, 0.01, reduced.theta_sq)?;
    println!(
        "N lambda = 2, |Q| = 0.95: xi = {:.4}, theta_sq = {:.4}, phi_opt = {:.3}; exact moments at |Q| = 1: {:.4}",
        reduced.xi, reduced.theta_sq, reduced.phi_opt, exact.xi
    );
    println!("delta g = {:.3e} m/s^2 (T^2 lever {:.3e})", s.exact, s.approx);
    Ok(AnalyticReport { scan, xi_reduced_overlap: reduced.xi, xi_exact: exact.xi, delta_g: s.exact })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

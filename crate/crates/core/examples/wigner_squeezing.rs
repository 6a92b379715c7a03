// Truncated-Wigner estimate of the squeezing after the stage, next to the closed-form value
// from the same mean-field run.
use oat_gravimetry::config::SimConfig;
use oat_gravimetry::orchestrator::squeeze_point;
use oat_gravimetry::Result;

pub const CONFIG: &str = r#"
atom_number = 1e4
seed_root = 7

[grid]
n_z = 2048
groundstate_n_r = 24
groundstate_n_z = 64

[time]
t_oat_ms = 5.0

[engine]
kind = "tw"
n_traj = 48

[protocol]
theta_points = 360
"#;

#[derive(Debug)]
pub struct WignerReport {
    pub xi_analytic: f64,
    pub xi_tw: f64,
    pub xi_tw_stderr: f64,
}

pub fn run_example() -> Result<WignerReport> {
    let cfg = SimConfig::from_toml_str(CONFIG)?;
    let (s, _) = squeeze_point(&cfg)?;
    let r = WignerReport {
        xi_analytic: s.xi_analytic,
        xi_tw: s.xi_tw.unwrap_or(f64::NAN),
        xi_tw_stderr: s.xi_tw_stderr.unwrap_or(f64::NAN),
    };
    println!(
        "closed form xi = {:.4}; Wigner xi = {:.4} +- {:.4} over {} trajectories (theta {:.4}, phi {:.4})",
        r.xi_analytic,
        r.xi_tw,
        r.xi_tw_stderr,
        s.n_traj.unwrap_or(0),
        s.theta_opt_tw_rad.unwrap_or(f64::NAN),
        s.phi_opt_tw_rad.unwrap_or(f64::NAN)
    );
    Ok(r)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

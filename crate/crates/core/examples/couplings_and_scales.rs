// Contact couplings, Thomas-Fermi scales and the standard quantum limit for the default cloud.
use oat_gravimetry::figures::delta_g_snl;
use oat_gravimetry::params::{derive_couplings, thomas_fermi_scales, SpeciesParams, TrapConfig};
use oat_gravimetry::Result;

#[derive(Debug)]
pub struct Scales {
    pub g11: f64,
    pub mu_over_h_hz: f64,
    pub r_perp_um: f64,
    pub r_z_um: f64,
    pub recoil_mm_s: f64,
    pub snl: f64,
}

pub fn run_example() -> Result<Scales> {
    let rb = SpeciesParams::rb87();
    rb.validate()?;
    let trap = TrapConfig::pancake();
    let g = derive_couplings(&rb);
    let tf = thomas_fermi_scales(&rb, &trap, 1e4)?;
    let s = Scales {
        g11: g.g11,
        mu_over_h_hz: tf.mu / (2.0 * std::f64::consts::PI * oat_gravimetry::params::HBAR),
        r_perp_um: tf.r_perp0 * 1e6,
        r_z_um: tf.r_z0 * 1e6,
        recoil_mm_s: rb.recoil_velocity() * 1e3,
        snl: delta_g_snl(1e4, rb.k0, 0.06),
    };
    println!("g11 = {:.4e} J m^3, g12/g11 = {:.4}", g.g11, g.g12 / g.g11);
    println!("mu/h = {:.1} Hz, R_perp = {:.2} um, R_z = {:.2} um", s.mu_over_h_hz, s.r_perp_um, s.r_z_um);
    println!("recoil velocity {:.3} mm/s", s.recoil_mm_s);
    println!("SNL at N = 1e4, T = 60 ms: {:.3e} m/s^2", s.snl);
    Ok(s)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}

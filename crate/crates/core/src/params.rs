//! Physical constants, species and trap parameters, derived couplings.
//!
//! Everything is SI. Angular frequencies are derived from the Hz values on demand.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub bohr_radius: f64,
    pub gravity_default: f64,
    /// Unified atomic mass unit, kg.
    pub amu: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    bohr_radius: 5.291_772_109_03e-11,
    gravity_default: 9.81,
    amu: 1.660_539_066_60e-27,
};

pub const HBAR: f64 = CONSTANTS.hbar;
pub const BOHR: f64 = CONSTANTS.bohr_radius;

/// 87Rb atomic mass, kg.
pub const RB87_MASS: f64 = 1.4432e-25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesParams {
    pub mass: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub k0: f64,
}

impl SpeciesParams {
    /// 87Rb in |F=1> / |F=2> with the Raman wavevector used throughout.
    pub fn rb87() -> Self {
        SpeciesParams {
            mass: RB87_MASS,
            a11: 100.4 * BOHR,
            a22: 95.0 * BOHR,
            a12: 97.66 * BOHR,
            k0: 1.61e7,
        }
    }

    pub fn non_interacting(mut self) -> Self {
        self.a11 = 0.0;
        self.a22 = 0.0;
        self.a12 = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass", "must be positive"));
        }
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(invalid("k0", "must be positive"));
        }
        for (name, a) in [("a11", self.a11), ("a22", self.a22), ("a12", self.a12)] {
            if !a.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Recoil velocity hbar k0 / m.
    pub fn recoil_velocity(&self) -> f64 {
        HBAR * self.k0 / self.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub f_radial: f64,
    pub f_axial: f64,
}

impl TrapConfig {
    pub fn new(f_radial: f64, f_axial: f64) -> Self {
        TrapConfig { f_radial, f_axial }
    }
    pub fn spherical(f: f64) -> Self {
        Self::new(f, f)
    }
    /// (f_r, f_z) = (32, 160) Hz.
    pub fn pancake() -> Self {
        Self::new(32.0, 160.0)
    }
    pub fn omega_radial(&self) -> f64 {
        2.0 * PI * self.f_radial
    }
    pub fn omega_axial(&self) -> f64 {
        2.0 * PI * self.f_axial
    }
    /// Geometric mean (w_r^2 w_z)^(1/3).
    pub fn omega_bar(&self) -> f64 {
        (self.omega_radial().powi(2) * self.omega_axial()).cbrt()
    }
    pub fn validate(&self) -> Result<()> {
        if !(self.f_radial >= 0.0 && self.f_radial.is_finite()) {
            return Err(invalid("f_radial", "must be >= 0"));
        }
        if !(self.f_axial >= 0.0 && self.f_axial.is_finite()) {
            return Err(invalid("f_axial", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
}

impl CouplingMatrix {
    pub fn zero() -> Self {
        Self::default()
    }
    pub fn scaled(&self, s: f64) -> Self {
        CouplingMatrix {
            g11: self.g11 * s,
            g22: self.g22 * s,
            g12: self.g12 * s,
        }
    }
    pub fn max_abs(&self) -> f64 {
        self.g11.abs().max(self.g22.abs()).max(self.g12.abs())
    }
    pub fn is_zero(&self) -> bool {
        self.g11 == 0.0 && self.g22 == 0.0 && self.g12 == 0.0
    }
}

pub fn derive_couplings(species: &SpeciesParams) -> CouplingMatrix {
    let c = 4.0 * PI * HBAR * HBAR / species.mass;
    CouplingMatrix {
        g11: c * species.a11,
        g22: c * species.a22,
        g12: c * species.a12,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThomasFermiScales {
    pub mu: f64,
    pub r_perp0: f64,
    pub r_z0: f64,
    /// Peak density, atoms / m^3.
    pub peak_density: f64,
}

pub fn thomas_fermi_scales(
    species: &SpeciesParams,
    trap: &TrapConfig,
    atom_number: f64,
) -> Result<ThomasFermiScales> {
    if !(atom_number > 0.0) {
        return Err(invalid("atom_number", "must be > 0"));
    }
    if !(trap.f_radial > 0.0) {
        return Err(invalid("f_radial", "Thomas-Fermi radius undefined for a zero trap frequency"));
    }
    if !(trap.f_axial > 0.0) {
        return Err(invalid("f_axial", "Thomas-Fermi radius undefined for a zero trap frequency"));
    }
    if !(species.a11 > 0.0) {
        return Err(invalid("a11", "Thomas-Fermi regime needs a11 > 0"));
    }
    let wbar = trap.omega_bar();
    let abar = (HBAR / (species.mass * wbar)).sqrt();
    let mu = 0.5 * HBAR * wbar * (15.0 * atom_number * species.a11 / abar).powf(0.4);
    let wr = trap.omega_radial();
    let wz = trap.omega_axial();
    let g11 = derive_couplings(species).g11;
    Ok(ThomasFermiScales {
        mu,
        r_perp0: (2.0 * mu / (species.mass * wr * wr)).sqrt(),
        r_z0: (2.0 * mu / (species.mass * wz * wz)).sqrt(),
        peak_density: mu / g11,
    })
}

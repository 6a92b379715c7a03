use crate::error::Result;
use crate::state::FieldState2;
use num_complex::Complex64;

/// 2x2 mixing matrix of an instantaneous pulse, acting on (psi1, psi2) in the co-moving frame.
pub fn beamsplitter_matrix(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    let mi = Complex64::new(0.0, -1.0);
    [
        [Complex64::new(c, 0.0), mi * Complex64::from_polar(s, phi)],
        [mi * Complex64::from_polar(s, -phi), Complex64::new(c, 0.0)],
    ]
}

pub fn apply_matrix(state: &mut FieldState2, m: &[[Complex64; 2]; 2]) {
    for (a, b) in state.psi1.iter_mut().zip(state.psi2.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = m[0][0] * x + m[0][1] * y;
        *b = m[1][0] * x + m[1][1] * y;
    }
}

/// Raman pulse of area theta and laser phase phi. Requires the co-moving frame, where the
/// momentum kick is already absorbed into the stored component 2.
pub fn apply_beamsplitter(state: &mut FieldState2, theta: f64, phi: f64) -> Result<()> {
    state.require_comoving()?;
    apply_matrix(state, &beamsplitter_matrix(theta, phi));
    Ok(())
}

/// Relative phase imprint psi1 e^{-i phi/2}, psi2 e^{+i phi/2}.
pub fn apply_gravity_phase(state: &mut FieldState2, phi: f64) {
    let a = Complex64::from_polar(1.0, -0.5 * phi);
    let b = a.conj();
    state.psi1.iter_mut().for_each(|v| *v *= a);
    state.psi2.iter_mut().for_each(|v| *v *= b);
}

/// Gravity phase k0 g T^2.
pub fn gravity_phase(k0: f64, g: f64, t: f64) -> f64 {
    k0 * g * t * t
}

//! Compactly supported initial data `u0 = s0 phi`, `u1 = s1 phi` with the
//! fixed profile `phi(r) = (1 - (r/r0)^2)^3` on `r <= r0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::unit_sphere_area;

/// `phi(r) = (1 - (r/r0)^2)^3` for `r < r0`, zero beyond.
pub fn bump_profile(r: f64, r0: f64) -> f64 {
    let s = r / r0;
    if s.abs() >= 1.0 {
        0.0
    } else {
        let v = 1.0 - s * s;
        v * v * v
    }
}

/// `int_{|x|<=r0} phi(|x|) dx = r0^n n omega_n sum_k C(3,k) (-1)^k / (n+2k)`.
pub fn bump_ball_integral(n: u32, r0: f64) -> f64 {
    let nf = n as f64;
    let moments = 1.0 / nf - 3.0 / (nf + 2.0) + 3.0 / (nf + 4.0) - 1.0 / (nf + 6.0);
    r0.powi(n as i32) * unit_sphere_area(n) * moments
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialData {
    pub n: u32,
    pub r0: f64,
    /// Amplitude of `u0`.
    pub s0: f64,
    /// Amplitude of `u1`.
    pub s1: f64,
    pub target_w0: f64,
    pub target_w1: f64,
}

impl InitialData {
    pub fn u0(&self, r: f64) -> f64 {
        self.s0 * bump_profile(r, self.r0)
    }

    pub fn u1(&self, r: f64) -> f64 {
        self.s1 * bump_profile(r, self.r0)
    }
}

/// Scales the profile so that `int u0 = w0` and `int u1 = w1`.
pub fn make_initial_data(n: u32, r0: f64, w0: f64, w1: f64) -> Result<InitialData> {
    if n < 1 {
        return Err(Error::invalid("n", "spatial dimension must be at least 1"));
    }
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::invalid("r0", "initial support radius must be positive"));
    }
    let mass = bump_ball_integral(n, r0);
    Ok(InitialData {
        n,
        r0,
        s0: w0 / mass,
        s1: w1 / mass,
        target_w0: w0,
        target_w1: w1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_integrals() {
        assert!((bump_ball_integral(1, 1.0) - 32.0 / 35.0).abs() < 1e-15);
        assert!((bump_ball_integral(3, 1.0) - 64.0 * PI / 315.0).abs() < 1e-14);
        let d = make_initial_data(1, 1.0, 1.0, 0.0).unwrap();
        assert!((d.s0 - 35.0 / 32.0).abs() < 1e-15);
        assert_eq!(make_initial_data(1, 1.0, 0.0, 0.0).unwrap().u0(0.3), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for n in 1..=4u32 {
            let r0 = 1.7;
            let f = |r: f64| bump_profile(r, r0) * r.powi(n as i32 - 1) * unit_sphere_area(n);
            let v = crate::numeric::adaptive_simpson(f, 0.0, r0, 1e-13);
            assert!((v - bump_ball_integral(n, r0)).abs() < 1e-10 * v);
        }
    }

    #[test]
    fn support_inside_ball() {
        assert_eq!(bump_profile(1.0, 1.0), 0.0);
        assert_eq!(bump_profile(1.5, 1.0), 0.0);
        assert!(bump_profile(0.999, 1.0) > 0.0);
    }
}

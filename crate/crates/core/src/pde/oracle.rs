//! d'Alembert reference solution for the flat, massless, linear line.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

use super::PdeModel;

/// `(u0(x-ct) + u0(x+ct))/2 + (1/2c) int_{x-ct}^{x+ct} u1` with
/// `c = c/a0`.
///
/// Only defined for `n = 1`, `lambda = 0`, `m^2 = 0` on a flat closed-form
/// background.
pub fn dalembert_oracle<F, G>(model: &PdeModel, u0: F, u1: G, t: f64, x: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    let p = model.geom().params();
    let flat = model.geom().scale().is_closed_form() && p.hubble == 0.0;
    if !(p.n == 1 && flat && model.lambda() == 0.0 && p.m_squared == 0.0) {
        return Err(Error::Configuration(
            "the d'Alembert oracle needs n = 1, H = 0, m^2 = 0 and lambda = 0".into(),
        ));
    }
    let c = p.c / p.a0;
    let (lo, hi) = (x - c * t, x + c * t);
    let re = adaptive_simpson(|s| u1(s).re, lo, hi, 1e-12);
    let im = adaptive_simpson(|s| u1(s).im, lo, hi, 1e-12);
    Ok((u0(lo) + u0(hi)) * 0.5 + Complex64::new(re, im) / (2.0 * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeGeometry;
    use crate::cosmology::CosmologyParams;
    use crate::pde::initial::bump_profile;

    fn model(lambda: f64) -> PdeModel {
        let geom = ConeGeometry::new(CosmologyParams::minkowski(1, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        PdeModel::new(geom, lambda, 3.0).unwrap()
    }

    #[test]
    fn initial_time_returns_u0() {
        let u0 = |x: f64| Complex64::new(bump_profile(x, 1.0), 0.0);
        let z = |_: f64| Complex64::new(0.0, 0.0);
        let v = dalembert_oracle(&model(0.0), u0, z, 0.0, 0.3).unwrap();
        assert_eq!(v.re, bump_profile(0.3, 1.0));
    }

    #[test]
    fn splits_into_half_bumps() {
        let u0 = |x: f64| Complex64::new(bump_profile(x, 1.0), 0.0);
        let z = |_: f64| Complex64::new(0.0, 0.0);
        let v = dalembert_oracle(&model(0.0), u0, z, 10.0, 10.0).unwrap();
        assert!((v.re - 0.5).abs() < 1e-15);
        let m = model(0.0);
        let at = |x: f64| dalembert_oracle(&m, u0, z, 5.0, x).unwrap().re;
        let mass = adaptive_simpson(at, -6.0, -4.0, 1e-12) + adaptive_simpson(at, 4.0, 6.0, 1e-12);
        assert!((mass - 32.0 / 35.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonlinear() {
        let z = |_: f64| Complex64::new(0.0, 0.0);
        assert!(dalembert_oracle(&model(1.0), z, z, 1.0, 0.0).is_err());
    }
}

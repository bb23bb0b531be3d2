//! Forward light cone of the initial support and the weight `q = a r^2 / a0`.
//!
//! `r(t) = r0 + int_0^t c/a(s) ds` is the radius of the region that can be
//! influenced by data supported in `|x| <= r0`. For the closed-form family
//! all three textbook cases (Minkowski, `k = 1` logarithmic, generic power)
//! collapse into
//!
//! ```text
//! r(t) = r0 + c/(a0 H) * expm1((k-1) L) / (k-1),   L = ln(a/a0),
//! ```
//!
//! with the `k -> 1` limit `c L / (a0 H)`; the `expm1` form stays accurate
//! near `k = 1` where the textbook expression cancels catastrophically.

use serde::Serialize;

use crate::cosmology::{CosmologyParams, ScaleModel};
use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

/// Monotonicity of `q` on `[0, T0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
    NotMonotone,
}

/// Which sufficient condition decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityRule {
    /// `H = 0`: `qdot = 2 c r / a0 > 0`.
    Minkowski,
    /// `H > 0`.
    Expanding,
    /// `H < 0`, `sigma <= -1 + 1/n`, `r0 <= -2c/(a0 H)`.
    ContractingSmallSupport,
    /// `H < 0`, `sigma >= -1 + 1/n`, `r0 >= -2c/(a0 H)`.
    ContractingLargeSupport,
    /// None of the sufficient conditions apply.
    Undecided,
    /// Tabulated background; no closed-form criterion.
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QClassification {
    pub monotonicity: Monotonicity,
    pub rule: MonotonicityRule,
    /// `d(0) = r0 + 2c/(a0 H)` for `H != 0`.
    pub d_initial: Option<f64>,
    /// `-2c/(a0 H)` for `H < 0`.
    pub radius_threshold: Option<f64>,
}

/// Cone data for one background and one initial support radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeGeometry {
    params: CosmologyParams,
    scale: ScaleModel,
    r0: f64,
    classification: QClassification,
}

impl ConeGeometry {
    /// Geometry over the closed-form scale factor of `params`.
    pub fn new(params: CosmologyParams, r0: f64) -> Result<Self> {
        params.validate()?;
        Self::build(params, ScaleModel::ClosedForm(params), r0)
    }

    /// Geometry over an arbitrary scale model; `params` still supplies
    /// `n`, `c`, `a0` and the mass.
    pub fn with_scale(params: CosmologyParams, scale: ScaleModel, r0: f64) -> Result<Self> {
        params.validate()?;
        if let ScaleModel::Tabulated(tab) = &scale {
            if tab.time_range().0 != 0.0 {
                return Err(Error::invalid("scale table", "the table must start at t = 0"));
            }
        }
        Self::build(params, scale, r0)
    }

    fn build(params: CosmologyParams, scale: ScaleModel, r0: f64) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::invalid("r0", "initial support radius must be positive"));
        }
        let classification = if scale.is_closed_form() {
            classify_closed_form(&params, r0)
        } else {
            QClassification {
                monotonicity: Monotonicity::NotMonotone,
                rule: MonotonicityRule::Tabulated,
                d_initial: None,
                radius_threshold: None,
            }
        };
        Ok(ConeGeometry {
            params,
            scale,
            r0,
            classification,
        })
    }

    pub fn params(&self) -> &CosmologyParams {
        &self.params
    }

    pub fn scale(&self) -> &ScaleModel {
        &self.scale
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `q0 = r0^2`.
    pub fn q0(&self) -> f64 {
        self.r0 * self.r0
    }

    pub fn end(&self) -> f64 {
        self.scale.end()
    }

    pub fn classify(&self) -> QClassification {
        self.classification
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.classification.monotonicity
    }

    /// `r(t)`.
    pub fn comoving_radius(&self, t: f64) -> Result<f64> {
        match &self.scale {
            ScaleModel::ClosedForm(p) => {
                p.check_time(t)?;
                Ok(self.r0 + self.travel_closed_form(t))
            }
            ScaleModel::Tabulated(_) => {
                self.scale.value(t)?;
                let c = self.params.c;
                let scale = &self.scale;
                let dist = adaptive_simpson(|s| c / scale.value(s).unwrap_or(f64::NAN), 0.0, t, 1e-10);
                Ok(self.r0 + dist)
            }
        }
    }

    /// `int_0^t c/a` on the closed-form family.
    fn travel_closed_form(&self, t: f64) -> f64 {
        let p = &self.params;
        if p.hubble == 0.0 {
            return p.c * t / p.a0;
        }
        let big_l = p.ln_scale_ratio_unchecked(t);
        let km1 = p.power_index() - 1.0;
        let factor = if km1 == 0.0 {
            big_l
        } else {
            (km1 * big_l).exp_m1() / km1
        };
        p.c / (p.a0 * p.hubble) * factor
    }

    /// `ln r(t)`, accurate when `r` itself would overflow.
    pub fn ln_comoving_radius(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        if let ScaleModel::ClosedForm(_) = self.scale {
            p.check_time(t)?;
            if p.hubble != 0.0 {
                let km1 = p.power_index() - 1.0;
                let x = km1 * p.ln_scale_ratio_unchecked(t);
                if km1 != 0.0 && x > 30.0 {
                    // r = r0 - s + s e^x with s = c/(a0 H (k-1)) > 0
                    let s = p.c / (p.a0 * p.hubble * km1);
                    return Ok(x + s.ln() + ((self.r0 - s) / s * (-x).exp()).ln_1p());
                }
            }
        }
        self.comoving_radius(t).map(f64::ln)
    }

    /// `q(t) = a(t) r(t)^2 / a0`, with `q(0) = r0^2` exactly.
    pub fn q(&self, t: f64) -> Result<f64> {
        let r = self.comoving_radius(t)?;
        let ratio = match &self.scale {
            ScaleModel::ClosedForm(p) => p.scale_ratio_unchecked(t),
            ScaleModel::Tabulated(_) => self.scale.value(t)? / self.params.a0,
        };
        Ok(ratio * r * r)
    }

    /// `ln q(t)`.
    pub fn ln_q(&self, t: f64) -> Result<f64> {
        let ln_ratio = match &self.scale {
            ScaleModel::ClosedForm(p) => p.ln_scale_ratio(t)?,
            ScaleModel::Tabulated(_) => (self.scale.value(t)? / self.params.a0).ln(),
        };
        Ok(ln_ratio + 2.0 * self.ln_comoving_radius(t)?)
    }

    /// `d = r + 2c/(a0 H) (a/a0)^{k-1}` (closed form, `H != 0`).
    pub fn d(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        if p.hubble == 0.0 || !self.scale.is_closed_form() {
            return Err(Error::Precondition(
                "d is defined for the closed-form family with H != 0".into(),
            ));
        }
        let r = self.comoving_radius(t)?;
        let x = ((p.power_index() - 1.0) * p.ln_scale_ratio_unchecked(t)).exp();
        Ok(r + 2.0 * p.c / (p.a0 * p.hubble) * x)
    }

    /// Analytic `qdot`: `2cr/a0` for `H = 0`, `H r d (a/a0)^{1-k}` otherwise.
    pub fn q_dot(&self, t: f64) -> Result<f64> {
        let p = &self.params;
        if !self.scale.is_closed_form() {
            return Err(Error::Precondition("analytic qdot needs the closed-form family".into()));
        }
        let r = self.comoving_radius(t)?;
        if p.hubble == 0.0 {
            return Ok(2.0 * p.c * r / p.a0);
        }
        let x = ((1.0 - p.power_index()) * p.ln_scale_ratio_unchecked(t)).exp();
        Ok(p.hubble * r * self.d(t)? * x)
    }

    /// Monotone envelope `q~`: `q0` when `q` is non-increasing, `q` when it
    /// is non-decreasing.
    pub fn q_tilde(&self, t: f64) -> Result<f64> {
        match self.monotonicity() {
            Monotonicity::NonIncreasing => {
                self.scale.value(t)?;
                Ok(self.q0())
            }
            Monotonicity::NonDecreasing => self.q(t),
            Monotonicity::NotMonotone => Err(Error::NotMonotone),
        }
    }

    /// `ln q~(t)`.
    pub fn ln_q_tilde(&self, t: f64) -> Result<f64> {
        match self.monotonicity() {
            Monotonicity::NonIncreasing => {
                self.scale.value(t)?;
                Ok(self.q0().ln())
            }
            Monotonicity::NonDecreasing => self.ln_q(t),
            Monotonicity::NotMonotone => Err(Error::NotMonotone),
        }
    }
}

fn classify_closed_form(p: &CosmologyParams, r0: f64) -> QClassification {
    let h = p.hubble;
    if h == 0.0 {
        return QClassification {
            monotonicity: Monotonicity::NonDecreasing,
            rule: MonotonicityRule::Minkowski,
            d_initial: None,
            radius_threshold: None,
        };
    }
    let d_initial = Some(r0 + 2.0 * p.c / (p.a0 * h));
    if h > 0.0 {
        return QClassification {
            monotonicity: Monotonicity::NonDecreasing,
            rule: MonotonicityRule::Expanding,
            d_initial,
            radius_threshold: None,
        };
    }
    let threshold = -2.0 * p.c / (p.a0 * h);
    let sigma_crit = -1.0 + 1.0 / p.n as f64;
    let (monotonicity, rule) = if p.sigma <= sigma_crit && r0 <= threshold {
        (Monotonicity::NonDecreasing, MonotonicityRule::ContractingSmallSupport)
    } else if p.sigma >= sigma_crit && r0 >= threshold {
        (Monotonicity::NonIncreasing, MonotonicityRule::ContractingLargeSupport)
    } else {
        (Monotonicity::NotMonotone, MonotonicityRule::Undecided)
    };
    QClassification {
        monotonicity,
        rule,
        d_initial,
        radius_threshold: Some(threshold),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(n: u32, c: f64, a0: f64, h: f64, sigma: f64, r0: f64) -> ConeGeometry {
        ConeGeometry::new(CosmologyParams::new(n, c, a0, h, sigma, 0.0).unwrap(), r0).unwrap()
    }

    #[test]
    fn radius_examples() {
        let g = geom(1, 1.0, 1.0, 0.0, 0.0, 1.0);
        assert_eq!(g.comoving_radius(2.0).unwrap(), 3.0);
        assert_eq!(geom(3, 2.0, 0.5, -0.3, 2.0, 1.7).comoving_radius(0.0).unwrap(), 1.7);
        let ds = geom(1, 1.0, 1.0, 1.0, -1.0, 1.0);
        assert!((ds.comoving_radius(40.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(ds.comoving_radius(1.0).unwrap() < ds.comoving_radius(2.0).unwrap());
    }

    #[test]
    fn logarithmic_branch_matches_textbook_form() {
        // n = 2, sigma = 0 gives k = 1
        let g = geom(2, 1.5, 2.0, 0.7, 0.0, 1.0);
        for t in [0.1f64, 1.0, 10.0] {
            let expect = 1.0 + 1.5 * (1.0 + 0.7 * t).ln() / (2.0 * 0.7);
            assert!((g.comoving_radius(t).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn power_branch_matches_textbook_form() {
        let (n, c, a0, h, sigma, r0) = (3u32, 1.2, 0.9, 0.8, 0.5, 0.4);
        let g = geom(n, c, a0, h, sigma, r0);
        let k = n as f64 * (1.0 + sigma) / 2.0;
        for t in [0.3, 2.0, 9.0] {
            let ratio = (1.0 + k * h * t).powf(1.0 / k);
            let expect = r0 + 2.0 * c / (a0 * h * (2.0 - 2.0 * k)) * (1.0 - ratio.powf(k - 1.0));
            assert!((g.comoving_radius(t).unwrap() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn q_examples() {
        assert_eq!(geom(2, 1.0, 1.0, 0.5, 0.1, 3.0).q(0.0).unwrap(), 9.0);
        assert!((geom(1, 1.0, 1.0, 0.0, 0.0, 1.0).q(1.0).unwrap() - 4.0).abs() < 1e-15);
        let g = geom(1, 1.0, 1.0, -1.0, -1.0, 1.0);
        let t: f64 = 30.0;
        assert!((g.q(t).unwrap() / t.exp() - 1.0).abs() < 1e-12);
        assert!((g.ln_q(t).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn ln_q_survives_overflow() {
        let g = geom(1, 1.0, 1.0, -1.0, -1.0, 0.5);
        let t = 2000.0;
        assert!(!g.q(t).unwrap().is_finite());
        let lq = g.ln_q(t).unwrap();
        // q ~ (c/(a0 H))^2 e^{-Ht}
        assert!((lq - t).abs() < 1e-9);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            geom(1, 1.0, 1.0, 1.0, -5.0, 0.1).monotonicity(),
            Monotonicity::NonDecreasing
        );
        assert_eq!(
            geom(2, 1.0, 1.0, -1.0, 0.0, 3.0).monotonicity(),
            Monotonicity::NonIncreasing
        );
        assert_eq!(
            geom(2, 1.0, 1.0, -1.0, -0.9, 5.0).monotonicity(),
            Monotonicity::NotMonotone
        );
        let cls = geom(1, 1.0, 1.0, 0.0, 0.0, 1.0).classify();
        assert_eq!(cls.rule, MonotonicityRule::Minkowski);
        // both rows apply at the boundary: non-decreasing by convention
        assert_eq!(
            geom(2, 1.0, 1.0, -1.0, -0.5, 2.0).monotonicity(),
            Monotonicity::NonDecreasing
        );
    }

    #[test]
    fn d_initial_value() {
        let g = geom(3, 1.3, 0.7, -0.4, 0.5, 2.0);
        let expect = 2.0 + 2.0 * 1.3 / (0.7 * -0.4);
        assert!((g.d(0.0).unwrap() - expect).abs() <= 1e-12 * expect.abs());
        assert_eq!(g.classify().d_initial, Some(expect));
    }

    #[test]
    fn q_tilde_examples() {
        let g = geom(2, 1.0, 1.0, -1.0, 0.0, 2.0);
        assert_eq!(g.monotonicity(), Monotonicity::NonIncreasing);
        assert_eq!(g.q_tilde(0.3).unwrap(), 4.0);
        let g = geom(1, 1.0, 1.0, 0.0, 0.0, 1.0);
        assert!((g.q_tilde(1.0).unwrap() - 4.0).abs() < 1e-15);
        let g = geom(2, 1.0, 1.0, -1.0, -0.9, 5.0);
        assert!(matches!(g.q_tilde(0.1), Err(Error::NotMonotone)));
    }

    #[test]
    fn analytic_q_dot_matches_difference_quotient() {
        let g = geom(3, 1.0, 1.0, -0.5, 0.2, 4.0);
        for t in [0.1, 0.5, 1.0] {
            let h = 1e-6;
            let fd = (g.q(t + h).unwrap() - g.q(t - h).unwrap()) / (2.0 * h);
            assert!((fd - g.q_dot(t).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn tabulated_radius_by_quadrature() {
        use crate::cosmology::TabulatedScale;
        let params = CosmologyParams::new(1, 1.0, 1.0, 1.0, -1.0, 0.0).unwrap();
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.005).collect();
        let values: Vec<f64> = times.iter().map(|t| t.exp()).collect();
        let tab = ScaleModel::Tabulated(TabulatedScale::new(times, values, 10.0).unwrap());
        let g = ConeGeometry::with_scale(params, tab, 1.0).unwrap();
        let exact = 1.0 + (1.0 - (-3.0f64).exp());
        assert!((g.comoving_radius(3.0).unwrap() - exact).abs() < 1e-8);
        assert_eq!(g.monotonicity(), Monotonicity::NotMonotone);
    }
}

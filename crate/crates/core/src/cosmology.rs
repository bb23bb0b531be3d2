//! Flat FLRW backgrounds: the power-law/exponential scale-factor family,
//! its horizon, and the curved mass that appears after the substitution
//! `u = v a^{n/2}`.
//!
//! The closed-form family is
//!
//! ```text
//! a(t) = a0 {1 + n(1+sigma) H t / 2}^{2/(n(1+sigma))}   (sigma != -1)
//! a(t) = a0 exp(H t)                                      (sigma == -1)
//! ```
//!
//! defined on `[0, T0)` where `T0` is finite only when `(1+sigma)H < 0`.
//! Throughout, `k = n(1+sigma)/2` and `g(t) = 1 + k H t`, so that
//! `a/a0 = g^{1/k}` and `adot/a = H/g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CubicSpline;

/// Relative margin below a finite horizon inside which evaluation is refused.
pub const HORIZON_MARGIN: f64 = 1e-12;

/// Background parameters `(n, c, a0, H, sigma, m^2)`.
///
/// `m_squared` may be negative, which encodes a purely imaginary mass; the
/// square root is never taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosmologyParams {
    pub n: u32,
    pub c: f64,
    pub a0: f64,
    #[serde(rename = "H")]
    pub hubble: f64,
    pub sigma: f64,
    pub m_squared: f64,
}

/// `(a, adot, addot)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleValue {
    pub a: f64,
    pub a_dot: f64,
    pub a_ddot: f64,
}

impl CosmologyParams {
    pub fn new(n: u32, c: f64, a0: f64, hubble: f64, sigma: f64, m_squared: f64) -> Result<Self> {
        let params = CosmologyParams {
            n,
            c,
            a0,
            hubble,
            sigma,
            m_squared,
        };
        params.validate()?;
        Ok(params)
    }

    /// Minkowski background with `a == a0`.
    pub fn minkowski(n: u32, c: f64, a0: f64, m_squared: f64) -> Result<Self> {
        Self::new(n, c, a0, 0.0, 0.0, m_squared)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("n", "spatial dimension must be at least 1"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid("c", "speed of light must be positive"));
        }
        if !(self.a0.is_finite() && self.a0 > 0.0) {
            return Err(Error::invalid("a0", "initial scale factor must be positive"));
        }
        if !self.hubble.is_finite() {
            return Err(Error::invalid("H", "Hubble constant must be finite"));
        }
        if !self.sigma.is_finite() {
            return Err(Error::invalid("sigma", "sigma must be finite"));
        }
        if !self.m_squared.is_finite() {
            return Err(Error::invalid("m_squared", "m^2 must be finite"));
        }
        Ok(())
    }

    fn dim(&self) -> f64 {
        self.n as f64
    }

    /// `k = n(1+sigma)/2`.
    pub fn power_index(&self) -> f64 {
        self.dim() * (1.0 + self.sigma) / 2.0
    }

    pub fn is_exponential(&self) -> bool {
        self.sigma == -1.0
    }

    /// `(n H / 2c)^2`.
    pub fn hubble_mass_sq(&self) -> f64 {
        let x = self.dim() * self.hubble / (2.0 * self.c);
        x * x
    }

    /// `(1+sigma)H < 0` with `sigma < 0`: the curved mass runs to `-inf`
    /// at the horizon and no blow-up certificate is available.
    pub fn is_excluded_region(&self) -> bool {
        (1.0 + self.sigma) * self.hubble < 0.0 && self.sigma < 0.0
    }

    /// End `T0` of the background, `+inf` unless `(1+sigma)H < 0`.
    pub fn horizon_end(&self) -> f64 {
        let s = (1.0 + self.sigma) * self.hubble;
        if s >= 0.0 {
            f64::INFINITY
        } else {
            -2.0 / (self.dim() * s)
        }
    }

    /// Rejects `t < 0`, non-finite `t`, and `t` within the horizon margin.
    pub fn check_time(&self, t: f64) -> Result<()> {
        check_time_against(t, self.horizon_end())
    }

    /// `g(t) = 1 + k H t` (identically 1 for the exponential branch).
    pub fn base(&self, t: f64) -> f64 {
        if self.is_exponential() {
            1.0
        } else {
            1.0 + self.power_index() * self.hubble * t
        }
    }

    /// `ln(a(t)/a0)` without forming `a`.
    pub fn ln_scale_ratio(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.ln_scale_ratio_unchecked(t))
    }

    pub(crate) fn ln_scale_ratio_unchecked(&self, t: f64) -> f64 {
        if self.hubble == 0.0 {
            0.0
        } else if self.is_exponential() {
            self.hubble * t
        } else {
            self.base(t).ln() / self.power_index()
        }
    }

    /// `a(t)/a0`; exactly 1 at `t = 0`.
    pub(crate) fn scale_ratio_unchecked(&self, t: f64) -> f64 {
        if self.hubble == 0.0 {
            1.0
        } else if self.is_exponential() {
            (self.hubble * t).exp()
        } else {
            self.base(t).powf(1.0 / self.power_index())
        }
    }

    /// Closed-form `(a, adot, addot)`.
    pub fn scale_factor(&self, t: f64) -> Result<ScaleValue> {
        self.check_time(t)?;
        let ratio = self.scale_ratio_unchecked(t);
        let a = self.a0 * ratio;
        let h = self.hubble;
        if h == 0.0 {
            return Ok(ScaleValue {
                a,
                a_dot: 0.0,
                a_ddot: 0.0,
            });
        }
        if self.is_exponential() {
            return Ok(ScaleValue {
                a,
                a_dot: h * a,
                a_ddot: h * h * a,
            });
        }
        // adot = H a / g, addot = H^2 (1 - k) a / g^2
        let g = self.base(t);
        let k = self.power_index();
        Ok(ScaleValue {
            a,
            a_dot: h * a / g,
            a_ddot: h * h * (1.0 - k) * a / (g * g),
        })
    }

    /// `adot/a = H (a/a0)^{-k}`.
    pub fn hubble_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.is_exponential() || self.hubble == 0.0 {
            Ok(self.hubble)
        } else {
            Ok(self.hubble / self.base(t))
        }
    }

    /// `M^2(t) = m^2 + sigma (nH/2c)^2 g(t)^{-2}`.
    pub fn curved_mass_sq(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.curved_mass_sq_unchecked(t))
    }

    pub(crate) fn curved_mass_sq_unchecked(&self, t: f64) -> f64 {
        if self.sigma == 0.0 || self.hubble == 0.0 {
            return self.m_squared;
        }
        let g = self.base(t);
        self.m_squared + self.sigma * self.hubble_mass_sq() / (g * g)
    }

    /// Time at which `M^2` changes sign in a contracting background with
    /// real mass, if it does.
    pub fn mass_sign_change_time(&self) -> Option<f64> {
        let s = (1.0 + self.sigma) * self.hubble;
        if !(s < 0.0 && self.sigma < 0.0 && self.m_squared > 0.0) {
            return None;
        }
        let m = self.m_squared.sqrt();
        let crit = self.sigma.abs().sqrt() * self.dim() * self.hubble.abs() / (2.0 * self.c);
        if m <= crit {
            return None;
        }
        Some(-2.0 / (self.dim() * s) * (1.0 - crit / m))
    }

    /// Qualitative behaviour of `M^2` on `[0, T0)`.
    pub fn classify_mass_behavior(&self) -> MassBehavior {
        let m2 = self.m_squared;
        let h = self.hubble;
        let sigma = self.sigma;
        if h == 0.0 || sigma == 0.0 {
            return MassBehavior::Constant { value: m2 };
        }
        let initial = m2 + sigma * self.hubble_mass_sq();
        if sigma == -1.0 {
            return MassBehavior::DeSitterConstant { value: initial };
        }
        if sigma > 0.0 {
            if h > 0.0 {
                MassBehavior::DecreasingBounded { initial, limit: m2 }
            } else {
                MassBehavior::DivergesPlus { initial }
            }
        } else if (1.0 + sigma) * h > 0.0 {
            MassBehavior::IncreasingBounded { initial, limit: m2 }
        } else {
            MassBehavior::DivergesMinus { initial }
        }
    }
}

pub(crate) fn check_time_against(t: f64, end: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(t, "time must be finite and non-negative"));
    }
    if end.is_finite() && t >= end * (1.0 - HORIZON_MARGIN) {
        return Err(Error::domain(t, format!("time must lie below the horizon T0 = {end}")));
    }
    Ok(())
}

/// Behaviour of the curved mass on the closed-form family, one variant per
/// sign pattern of `(H, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassBehavior {
    /// `H = 0` or `sigma = 0`: `M^2 = m^2`.
    Constant { value: f64 },
    /// `sigma = -1, H != 0`: `M^2 = m^2 - (nH/2c)^2`.
    DeSitterConstant { value: f64 },
    /// `H > 0, sigma > 0`: `m^2 < M^2 <= initial`, tending to `m^2`.
    DecreasingBounded { initial: f64, limit: f64 },
    /// `(1+sigma)H > 0, sigma < 0`: `initial <= M^2 < m^2`, tending to `m^2`.
    IncreasingBounded { initial: f64, limit: f64 },
    /// `H < 0, sigma > 0`: `M^2 >= initial`, diverging to `+inf` at `T0`.
    DivergesPlus { initial: f64 },
    /// `(1+sigma)H < 0, sigma < 0`: `M^2 <= initial`, diverging to `-inf`.
    DivergesMinus { initial: f64 },
}

impl MassBehavior {
    /// `inf_{0<t<T0} M^2(t)`.
    pub fn infimum(&self) -> f64 {
        match *self {
            MassBehavior::Constant { value } | MassBehavior::DeSitterConstant { value } => value,
            MassBehavior::DecreasingBounded { limit, .. } => limit,
            MassBehavior::IncreasingBounded { initial, .. } => initial,
            MassBehavior::DivergesPlus { initial } => initial,
            MassBehavior::DivergesMinus { .. } => f64::NEG_INFINITY,
        }
    }

    /// `sup_{0<t<T0} M^2(t)`.
    pub fn supremum(&self) -> f64 {
        match *self {
            MassBehavior::Constant { value } | MassBehavior::DeSitterConstant { value } => value,
            MassBehavior::DecreasingBounded { initial, .. } => initial,
            MassBehavior::IncreasingBounded { limit, .. } => limit,
            MassBehavior::DivergesPlus { .. } => f64::INFINITY,
            MassBehavior::DivergesMinus { initial } => initial,
        }
    }

    /// Whether `M^2(t)` is consistent with this behaviour's bounds.
    pub fn admits(&self, m2: f64, tol: f64) -> bool {
        let slack = tol * m2.abs().max(1.0);
        match *self {
            MassBehavior::Constant { value } | MassBehavior::DeSitterConstant { value } => (m2 - value).abs() <= slack,
            MassBehavior::DecreasingBounded { initial, limit } => m2 >= limit - slack && m2 <= initial + slack,
            MassBehavior::IncreasingBounded { initial, limit } => m2 >= initial - slack && m2 <= limit + slack,
            MassBehavior::DivergesPlus { initial } => m2 >= initial - slack,
            MassBehavior::DivergesMinus { initial } => m2 <= initial + slack,
        }
    }
}

/// A tabulated scale factor, interpolated by a natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedScale {
    spline: CubicSpline,
    end: f64,
}

impl TabulatedScale {
    /// `times` strictly increasing (at least three knots), `values` strictly
    /// positive, `end` the horizon of the tabulated background.
    pub fn new(times: Vec<f64>, values: Vec<f64>, end: f64) -> Result<Self> {
        if times.len() != values.len() || times.len() < 3 {
            return Err(Error::invalid(
                "scale table",
                "need at least three (time, value) pairs of equal length",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
            return Err(Error::invalid(
                "scale table",
                "times must be non-negative and strictly increasing",
            ));
        }
        if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("scale table", "scale values must be positive"));
        }
        if !(end > *times.last().unwrap()) {
            return Err(Error::invalid("scale table", "end must exceed the last tabulated time"));
        }
        Ok(TabulatedScale {
            spline: CubicSpline::new(times, values),
            end,
        })
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn time_range(&self) -> (f64, f64) {
        self.spline.domain()
    }

    fn check(&self, t: f64) -> Result<()> {
        check_time_against(t, self.end)?;
        let (lo, hi) = self.spline.domain();
        if t < lo || t > hi {
            return Err(Error::domain(t, format!("outside the tabulated range [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<ScaleValue> {
        self.check(t)?;
        let (lo, hi) = self.spline.domain();
        let h = self.spline.local_spacing(t);
        // centred stencil, shifted inwards at the table ends
        let tc = t.clamp(lo + h, hi - h);
        let (fm, f0, fp) = (self.spline.eval(tc - h), self.spline.eval(tc), self.spline.eval(tc + h));
        Ok(ScaleValue {
            a: self.spline.eval(t),
            a_dot: (fp - fm) / (2.0 * h),
            a_ddot: (fp - 2.0 * f0 + fm) / (h * h),
        })
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        self.spline.eval(t)
    }

    /// Smallest tabulated value.
    pub fn min_value(&self) -> f64 {
        let (lo, hi) = self.spline.domain();
        let n = 4096;
        (0..=n)
            .map(|i| self.spline.eval(lo + (hi - lo) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the interpolated scale factor is monotone on the table.
    pub fn is_monotone(&self) -> bool {
        let (lo, hi) = self.spline.domain();
        let n = 4096;
        let vals: Vec<f64> = (0..=n)
            .map(|i| self.spline.eval(lo + (hi - lo) * i as f64 / n as f64))
            .collect();
        vals.windows(2).all(|w| w[1] >= w[0]) || vals.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Source of `a(t)`: the closed-form family or a table.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleModel {
    ClosedForm(CosmologyParams),
    Tabulated(TabulatedScale),
}

impl ScaleModel {
    /// Horizon `T0` of the model.
    pub fn end(&self) -> f64 {
        match self {
            ScaleModel::ClosedForm(p) => p.horizon_end(),
            ScaleModel::Tabulated(tab) => tab.end(),
        }
    }

    /// Last time at which the model can be evaluated.
    pub fn last_time(&self) -> f64 {
        match self {
            ScaleModel::ClosedForm(p) => p.horizon_end(),
            ScaleModel::Tabulated(tab) => tab.time_range().1,
        }
    }

    pub fn eval(&self, t: f64) -> Result<ScaleValue> {
        match self {
            ScaleModel::ClosedForm(p) => p.scale_factor(t),
            ScaleModel::Tabulated(tab) => tab.eval(t),
        }
    }

    /// `a(t)` only; skips the derivative stencil for tables.
    pub fn value(&self, t: f64) -> Result<f64> {
        match self {
            ScaleModel::ClosedForm(p) => p.scale_factor(t).map(|s| s.a),
            ScaleModel::Tabulated(tab) => {
                tab.check(t)?;
                Ok(tab.value(t))
            }
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self, ScaleModel::ClosedForm(_))
    }
}

/// `M^2 = m^2 - n(n-2)/(4c^2) (adot/a)^2 - n/(2c^2) (addot/a)` from any
/// scale model.
pub fn curved_mass_sq_from_scale(model: &ScaleModel, params: &CosmologyParams, t: f64) -> Result<f64> {
    let s = model.eval(t)?;
    let n = params.n as f64;
    let c2 = params.c * params.c;
    let rate = s.a_dot / s.a;
    Ok(params.m_squared - n * (n - 2.0) / (4.0 * c2) * rate * rate - n / (2.0 * c2) * (s.a_ddot / s.a))
}

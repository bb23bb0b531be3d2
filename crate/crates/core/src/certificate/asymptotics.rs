//! Growth orders of the A and B objectives at the end of `[0, T0)`.
//!
//! An order is a triple `(exp, power, log)` meaning
//! `exp(exp * s) * s^power * (ln s)^log` as `s -> inf`, where `s = t` when
//! `T0 = inf` and `s = 1/(T0 - t)` otherwise (the exponential slot is then
//! unused). Orders compare lexicographically, so `A > 0` exactly when the A
//! objective has order `>= 0` and `B < inf` exactly when the B objective has
//! order `<= 0`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::cone::{ConeGeometry, Monotonicity};
use crate::cosmology::CosmologyParams;

/// Relative tolerance under which two rates count as equal.
pub const RATE_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthOrder {
    pub exp: f64,
    pub power: f64,
    pub log: f64,
}

impl GrowthOrder {
    pub const ZERO: GrowthOrder = GrowthOrder {
        exp: 0.0,
        power: 0.0,
        log: 0.0,
    };

    pub fn exp(rate: f64) -> Self {
        GrowthOrder {
            exp: rate,
            ..Self::ZERO
        }
    }

    pub fn power(power: f64) -> Self {
        GrowthOrder { power, ..Self::ZERO }
    }

    /// Sign of the order, treating components within tolerance of zero as
    /// zero. `scale` sets the magnitude against which the tolerance applies.
    pub fn sign(&self, scale: f64) -> Ordering {
        let tol = RATE_TIE_TOL * scale.abs().max(1.0);
        for x in [self.exp, self.power, self.log] {
            if x > tol {
                return Ordering::Greater;
            }
            if x < -tol {
                return Ordering::Less;
            }
        }
        Ordering::Equal
    }
}

impl Add for GrowthOrder {
    type Output = GrowthOrder;
    fn add(self, o: GrowthOrder) -> GrowthOrder {
        GrowthOrder {
            exp: self.exp + o.exp,
            power: self.power + o.power,
            log: self.log + o.log,
        }
    }
}

impl Sub for GrowthOrder {
    type Output = GrowthOrder;
    fn sub(self, o: GrowthOrder) -> GrowthOrder {
        self + o * -1.0
    }
}

impl Mul<f64> for GrowthOrder {
    type Output = GrowthOrder;
    fn mul(self, k: f64) -> GrowthOrder {
        GrowthOrder {
            exp: self.exp * k,
            power: self.power * k,
            log: self.log * k,
        }
    }
}

/// Order of `q~` at the end of the interval; `None` when `q` is not
/// monotone.
pub fn q_tilde_growth(geom: &ConeGeometry) -> Option<GrowthOrder> {
    let p = geom.params();
    match geom.monotonicity() {
        Monotonicity::NotMonotone => None,
        Monotonicity::NonIncreasing => Some(GrowthOrder::ZERO),
        Monotonicity::NonDecreasing => Some(q_growth(p)),
    }
}

/// Order of `q` itself on the closed-form family.
pub fn q_growth(p: &CosmologyParams) -> GrowthOrder {
    if p.hubble == 0.0 {
        return GrowthOrder::power(2.0);
    }
    if p.is_exponential() {
        // bounded radius when expanding, radius ~ exp(|H| t) when contracting;
        // either way q ~ exp(|H| t)
        return GrowthOrder::exp(p.hubble.abs());
    }
    let k = p.power_index();
    let inv_k = 1.0 / k;
    let log_term = if k == 1.0 { 2.0 } else { 0.0 };
    if p.horizon_end().is_finite() {
        // in s = 1/(T0 - t): a/a0 ~ s^{-1/k}, r ~ s^{1/k - 1} when that is positive
        let power = -inv_k + 2.0 * (inv_k - 1.0).max(0.0);
        return GrowthOrder {
            exp: 0.0,
            power,
            log: log_term,
        };
    }
    // kH > 0: a/a0 ~ t^{1/k}, r ~ t^{1 - 1/k} when that is positive
    let e = 1.0 - inv_k;
    let power = if k == 1.0 {
        1.0
    } else if e > 0.0 {
        2.0 - inv_k
    } else {
        inv_k
    };
    GrowthOrder {
        exp: 0.0,
        power,
        log: log_term,
    }
}

/// Behaviour of `N^2 + M^2(t)` at the end of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingGrowth {
    /// `N^2 + M^2` vanishes identically.
    Zero,
    Order(GrowthOrder),
}

pub fn forcing_growth(p: &CosmologyParams, growth_rate: f64) -> ForcingGrowth {
    let n2 = growth_rate * growth_rate;
    let varies = p.hubble != 0.0 && p.sigma != 0.0 && !p.is_exponential();
    let limit = if p.is_exponential() && p.hubble != 0.0 {
        n2 + p.m_squared - p.hubble_mass_sq()
    } else {
        n2 + p.m_squared
    };
    if p.horizon_end().is_finite() && varies {
        // M^2 ~ sigma (nH/2c)^2 g^{-2}, and g ~ (T0 - t)
        return ForcingGrowth::Order(GrowthOrder::power(2.0 * p.sigma.signum()));
    }
    if !varies {
        return if limit == 0.0 {
            ForcingGrowth::Zero
        } else {
            ForcingGrowth::Order(GrowthOrder::ZERO)
        };
    }
    if limit == 0.0 {
        // M^2 - m^2 ~ t^{-2}
        ForcingGrowth::Order(GrowthOrder::power(-2.0))
    } else {
        ForcingGrowth::Order(GrowthOrder::ZERO)
    }
}

/// Order of `e^{cN(1-eps)t} / q~^{n/2}`.
pub fn a_objective_growth(geom: &ConeGeometry, growth_rate: f64, epsilon: f64) -> Option<GrowthOrder> {
    let p = geom.params();
    let qg = q_tilde_growth(geom)?;
    let exp_part = if p.horizon_end().is_finite() {
        GrowthOrder::ZERO
    } else {
        GrowthOrder::exp(p.c * growth_rate * (1.0 - epsilon))
    };
    Some(exp_part - qg * (p.n as f64 / 2.0))
}

/// Order of `q~^{n/2} (N^2+M^2)^{1/(p-1)} e^{-cNt}`; `Some(None)` when the
/// objective vanishes identically.
pub fn b_objective_growth(geom: &ConeGeometry, growth_rate: f64, power: f64) -> Option<Option<GrowthOrder>> {
    let p = geom.params();
    let qg = q_tilde_growth(geom)?;
    let forcing = match forcing_growth(p, growth_rate) {
        ForcingGrowth::Zero => return Some(None),
        ForcingGrowth::Order(o) => o,
    };
    let exp_part = if p.horizon_end().is_finite() {
        GrowthOrder::ZERO
    } else {
        GrowthOrder::exp(p.c * growth_rate)
    };
    Some(Some(
        qg * (p.n as f64 / 2.0) + forcing * (1.0 / (power - 1.0)) - exp_part,
    ))
}

/// Scale for tie tolerance: the largest exponential rate involved.
pub(crate) fn rate_scale(p: &CosmologyParams, growth_rate: f64) -> f64 {
    (p.c * growth_rate).abs().max(p.n as f64 * p.hubble.abs())
}

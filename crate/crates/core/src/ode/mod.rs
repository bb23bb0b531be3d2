//! Comparison dynamics `c^{-2} w'' + M^2(t) w = b(t) |w|^p`.
//!
//! The spatial integral of a solution satisfies this as an inequality; the
//! equality trajectory is the extremal case, so every check here is
//! one-sided with slack.

pub mod rk;

use serde::Serialize;

use crate::certificate::{envelope, search_grid, BlowupCertificate, TheoremInputs};
use crate::cone::ConeGeometry;
use crate::error::{Error, Result};
use crate::numeric::pow_nonneg;
use crate::output::csv_row;

pub use rk::{dopri5, Flow, RkControls, RkResult, RkStatus};

/// Relative stop before a finite horizon.
pub const HORIZON_STOP: f64 = 1e-9;
/// `|w|` must exceed this multiple of `max(1, |w0|)` to declare blow-up.
pub const BLOWUP_MAGNITUDE: f64 = 1e8;
/// And the step must have collapsed below this multiple of `max(1, t)`.
pub const BLOWUP_STEP: f64 = 1e-14;

/// Time-dependent coefficients of the comparison equation.
pub trait ComparisonCoefficients: Sync {
    fn c(&self) -> f64;
    /// `M^2(t)`.
    fn mass_sq(&self, t: f64) -> f64;
    /// `b(t) > 0`.
    fn b(&self, t: f64) -> f64;
    /// `ln b(t)`, finite where `b` itself under- or overflows.
    fn ln_b(&self, t: f64) -> f64 {
        self.b(t).ln()
    }
    /// End of the interval of definition.
    fn end(&self) -> f64;
}

/// `M^2` from the closed-form background and `b = lambda / (Q q)^{n(p-1)/2}`.
#[derive(Debug, Clone)]
pub struct FlrwCoefficients {
    geom: ConeGeometry,
    lambda: f64,
    p: f64,
    ln_q_const: f64,
}

impl FlrwCoefficients {
    pub fn new(geom: ConeGeometry, lambda: f64, p: f64) -> Self {
        let ln_q_const = crate::certificate::q_constant(geom.params()).ln();
        FlrwCoefficients {
            geom,
            lambda,
            p,
            ln_q_const,
        }
    }

    pub fn from_inputs(inputs: &TheoremInputs) -> Self {
        Self::new(inputs.geom.clone(), inputs.theorem.lambda, inputs.theorem.p)
    }

    fn exponent(&self) -> f64 {
        self.geom.params().n as f64 * (self.p - 1.0) / 2.0
    }

    /// `b~ = lambda / (Q q~)^{n(p-1)/2}`, NaN when `q` is not monotone.
    pub fn b_tilde(&self, t: f64) -> f64 {
        match self.geom.ln_q_tilde(t) {
            Ok(lq) => (self.lambda.ln() - self.exponent() * (self.ln_q_const + lq)).exp(),
            Err(_) => f64::NAN,
        }
    }
}

impl ComparisonCoefficients for FlrwCoefficients {
    fn c(&self) -> f64 {
        self.geom.params().c
    }

    fn mass_sq(&self, t: f64) -> f64 {
        self.geom.params().curved_mass_sq_unchecked(t)
    }

    fn b(&self, t: f64) -> f64 {
        self.ln_b(t).exp()
    }

    fn ln_b(&self, t: f64) -> f64 {
        match self.geom.ln_q(t) {
            Ok(lq) => self.lambda.ln() - self.exponent() * (self.ln_q_const + lq),
            Err(_) => f64::NAN,
        }
    }

    fn end(&self) -> f64 {
        self.geom.end()
    }
}

/// Constant `c`, `M^2` and `b`, for benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub c: f64,
    pub mass_sq: f64,
    pub b: f64,
}

impl ComparisonCoefficients for ConstantCoefficients {
    fn c(&self) -> f64 {
        self.c
    }
    fn mass_sq(&self, _t: f64) -> f64 {
        self.mass_sq
    }
    fn b(&self, _t: f64) -> f64 {
        self.b
    }
    fn end(&self) -> f64 {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    ReachedHorizon,
    BlowupThreshold,
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeSample {
    pub t: f64,
    pub w: f64,
    pub wdot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    /// Starts at `(0, w0, w1)`, strictly increasing in `t`.
    pub samples: Vec<OdeSample>,
    pub blowup_detected: bool,
    pub blowup_time: Option<f64>,
    pub termination: Termination,
    /// Step size proposed after the last accepted step.
    pub last_step: f64,
    pub p: f64,
}

impl OdeTrajectory {
    pub fn last(&self) -> &OdeSample {
        self.samples.last().expect("trajectory has the initial sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeControls {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeControls {
    fn default() -> Self {
        OdeControls {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

/// `|w|^p` as `exp(p ln|w|)`, zero at zero.
pub fn abs_pow(w: f64, p: f64) -> f64 {
    pow_nonneg(w.abs(), p)
}

/// Integrates the comparison equation for generic coefficients.
pub fn integrate_with<C: ComparisonCoefficients>(
    coeffs: &C,
    p: f64,
    w0: f64,
    w1: f64,
    t_end: f64,
    controls: &OdeControls,
) -> Result<OdeTrajectory> {
    let end = coeffs.end();
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", "integration end must be finite and positive"));
    }
    if t_end > end {
        return Err(Error::domain(t_end, format!("beyond the horizon T0 = {end}")));
    }
    let stop = if end.is_finite() {
        t_end.min(end * (1.0 - HORIZON_STOP))
    } else {
        t_end
    };
    let c2 = coeffs.c() * coeffs.c();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = c2 * (coeffs.b(t) * abs_pow(y[0], p) - coeffs.mass_sq(t) * y[0]);
    };
    let threshold = BLOWUP_MAGNITUDE * w0.abs().max(1.0);
    let mut samples = vec![OdeSample {
        t: 0.0,
        w: w0,
        wdot: w1,
    }];
    let mut blowup = false;
    let ctl = RkControls {
        rtol: controls.rtol,
        atol: controls.atol,
        max_steps: controls.max_steps,
        ..Default::default()
    };
    let res = dopri5(rhs, 0.0, &[w0, w1], stop, &ctl, |t, y, h| {
        samples.push(OdeSample { t, w: y[0], wdot: y[1] });
        if y[0].abs() > threshold && h.abs() < BLOWUP_STEP * t.max(1.0) {
            blowup = true;
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    let termination = match res.status {
        RkStatus::Reached => Termination::ReachedHorizon,
        RkStatus::Stopped => Termination::BlowupThreshold,
        RkStatus::StepUnderflow | RkStatus::NonFinite => Termination::StepUnderflow,
        RkStatus::MaxSteps => Termination::MaxSteps,
    };
    Ok(OdeTrajectory {
        blowup_detected: blowup,
        blowup_time: if blowup { Some(res.t) } else { None },
        termination,
        last_step: res.h_next.abs(),
        samples,
        p,
    })
}

/// Integrates the comparison equation of the theorem inputs up to `t_end`.
pub fn integrate(inputs: &TheoremInputs, t_end: f64, controls: &OdeControls) -> Result<OdeTrajectory> {
    let p = inputs.params();
    if p.is_excluded_region() {
        return Err(Error::ExcludedRegion {
            hubble: p.hubble,
            sigma: p.sigma,
        });
    }
    let coeffs = FlrwCoefficients::from_inputs(inputs);
    let th = &inputs.theorem;
    integrate_with(&coeffs, th.p, th.w0, th.w1, t_end, controls)
}

/// Integrates between two arbitrary times (either direction) and returns the
/// final `(w, wdot)`.
pub fn integrate_between<C: ComparisonCoefficients>(
    coeffs: &C,
    p: f64,
    t0: f64,
    state: [f64; 2],
    t1: f64,
    controls: &OdeControls,
) -> [f64; 2] {
    let c2 = coeffs.c() * coeffs.c();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = c2 * (coeffs.b(t) * abs_pow(y[0], p) - coeffs.mass_sq(t) * y[0]);
    };
    let ctl = RkControls {
        rtol: controls.rtol,
        atol: controls.atol,
        max_steps: controls.max_steps,
        ..Default::default()
    };
    let r = dopri5(rhs, t0, &state, t1, &ctl, |_, _, _| Flow::Continue);
    [r.y[0], r.y[1]]
}

/// Extrapolated blow-up time: near the singularity `w ~ (T - t)^{-2/(p-1)}`,
/// so `z = |w|^{-(p-1)/2}` vanishes linearly at `T`. A quadratic through the
/// last three samples is solved for its root, falling back to the secant
/// through the last two.
pub fn detect_blowup_time(traj: &OdeTrajectory) -> Option<f64> {
    if !traj.blowup_detected {
        return None;
    }
    let k = (traj.p - 1.0) / 2.0;
    let pts: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .rev()
        .take(3)
        .map(|s| (s.t, pow_nonneg(s.w.abs(), -k)))
        .collect();
    let last_t = pts[0].0;
    let secant = || {
        let (t2, z2) = pts[0];
        let (t1, z1) = pts[1];
        if z1 == z2 {
            return last_t;
        }
        t2 - z2 * (t2 - t1) / (z2 - z1)
    };
    if pts.len() < 2 {
        return Some(last_t);
    }
    if pts.len() == 3 {
        // Newton form centred at the last sample
        let (t2, z2) = pts[0];
        let (t1, z1) = pts[1];
        let (t0, z0) = pts[2];
        let d1 = (z2 - z1) / (t2 - t1);
        let d0 = (z1 - z0) / (t1 - t0);
        let curv = (d1 - d0) / (t2 - t0);
        // z(t) ~ z2 + s (d1 + curv (t2 - t1)) + curv s^2, s = t - t2
        let lin = d1 + curv * (t2 - t1);
        if lin < 0.0 {
            let disc = lin * lin - 4.0 * curv * z2;
            if disc >= 0.0 {
                // smaller root in the cancellation-free form
                let s = 2.0 * z2 / (-lin + disc.sqrt());
                if s.is_finite() && s >= 0.0 {
                    return Some(t2 + s);
                }
            }
        }
    }
    let t = secant();
    Some(if t.is_finite() && t >= last_t { t } else { last_t })
}

/// Largest value of `e^{-cNt} {(N^2+M^2)/((1-theta) b)}^{1/(p-1)}` over the
/// interval: the lower bound `w0` has to beat in the growth estimate.
pub fn growth_w0_bound<C: ComparisonCoefficients>(coeffs: &C, growth_rate: f64, theta: f64, p: f64) -> f64 {
    let c = coeffs.c();
    let n2 = growth_rate * growth_rate;
    let inv = 1.0 / (p - 1.0);
    let f = |t: f64| {
        let num = (n2 + coeffs.mass_sq(t)).max(0.0);
        -c * growth_rate * t + inv * (num.ln() - (1.0 - theta).ln() - coeffs.ln_b(t))
    };
    let mut best = f64::NEG_INFINITY;
    for t in search_grid(coeffs.end(), 4096) {
        let v = f(t);
        if v.is_nan() {
            return f64::INFINITY;
        }
        best = best.max(v);
    }
    best.exp()
}

/// Pointwise outcome of the four growth properties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub samples: usize,
    /// (1) `w >= w0 e^{cNt}`.
    pub exponential_lower_bound: bool,
    /// (2) `(1-theta) b w^{p-1} - M^2 > N^2`.
    pub forcing_dominates: bool,
    /// (3) `c^{-2} w'' - N^2 w - theta b w^p >= 0`.
    pub reduced_inequality: bool,
    /// (4) `w' >= w1`.
    pub derivative_lower_bound: bool,
    /// First sample time at which each property fails.
    pub first_failure: [Option<f64>; 4],
    pub tolerance: f64,
}

impl GrowthReport {
    pub fn all_hold(&self) -> bool {
        self.exponential_lower_bound && self.forcing_dominates && self.reduced_inequality && self.derivative_lower_bound
    }
}

/// Checks the four growth properties at every sample, after verifying the
/// hypotheses on `(w0, w1)`.
pub fn check_growth_properties<C: ComparisonCoefficients>(
    traj: &OdeTrajectory,
    coeffs: &C,
    growth_rate: f64,
    theta: f64,
    tol: f64,
) -> Result<GrowthReport> {
    let p = traj.p;
    let first = traj.samples[0];
    let (w0, w1) = (first.w, first.wdot);
    let c = coeffs.c();
    let bound = growth_w0_bound(coeffs, growth_rate, theta, p);
    if !(w0 > bound) {
        return Err(Error::Precondition(format!(
            "w0 hypothesis of the growth estimate: w0 = {w0} must exceed sup e^{{-cNt}}((N^2+M^2)/((1-theta)b))^{{1/(p-1)}} = {bound}"
        )));
    }
    if !(w1 >= c * growth_rate * w0) {
        return Err(Error::Precondition(format!(
            "w1 hypothesis of the growth estimate: w1 = {w1} must be at least cN w0 = {}",
            c * growth_rate * w0
        )));
    }
    let n2 = growth_rate * growth_rate;
    let mut fail: [Option<f64>; 4] = [None; 4];
    let mut mark = |i: usize, t: f64| {
        if fail[i].is_none() {
            fail[i] = Some(t);
        }
    };
    for s in &traj.samples {
        let (t, w, wd) = (s.t, s.w, s.wdot);
        let b = coeffs.b(t);
        let m2 = coeffs.mass_sq(t);
        if !(w >= w0 * (c * growth_rate * t).exp() * (1.0 - tol)) {
            mark(0, t);
        }
        let force = (1.0 - theta) * b * pow_nonneg(w, p - 1.0);
        let scale2 = force.abs().max(m2.abs()).max(n2).max(f64::MIN_POSITIVE);
        if !(force - m2 - n2 > -tol * scale2) {
            mark(1, t);
        }
        let wpow = abs_pow(w, p);
        let wdd_over_c2 = b * wpow - m2 * w;
        let reduced = wdd_over_c2 - n2 * w - theta * b * pow_nonneg(w, p);
        let scale3 = (b * wpow)
            .abs()
            .max((m2 * w).abs())
            .max((n2 * w).abs())
            .max(f64::MIN_POSITIVE);
        if !(reduced >= -tol * scale3) {
            mark(2, t);
        }
        if !(wd >= w1 - tol * w1.abs().max(wd.abs())) {
            mark(3, t);
        }
    }
    Ok(GrowthReport {
        samples: traj.samples.len(),
        exponential_lower_bound: fail[0].is_none(),
        forcing_dominates: fail[1].is_none(),
        reduced_inequality: fail[2].is_none(),
        derivative_lower_bound: fail[3].is_none(),
        first_failure: fail,
        tolerance: tol,
    })
}

/// Worst ratio `w(t) / envelope(t)` over samples with `t <= frac * pole`.
pub fn envelope_ratio(traj: &OdeTrajectory, cert: &BlowupCertificate, frac: f64) -> Result<f64> {
    let w0 = traj.samples[0].w;
    let pole = crate::certificate::envelope_pole(w0, cert.c_squared, cert.alpha);
    let mut worst = f64::INFINITY;
    for s in traj.samples.iter().filter(|s| s.t <= frac * pole) {
        let env = envelope(w0, cert.c_squared, cert.alpha, s.t)?;
        worst = worst.min(s.w / env);
    }
    Ok(worst)
}

/// Whether `E = w'^2/(2c^2) - theta b~ w^{p+1}/(p+1)` is non-decreasing
/// along the samples, up to relative slack `tol`.
pub fn energy_nondecreasing(traj: &OdeTrajectory, coeffs: &FlrwCoefficients, theta: f64, tol: f64) -> bool {
    let p = traj.p;
    let c2 = coeffs.c() * coeffs.c();
    let mut prev: Option<(f64, f64)> = None;
    for s in &traj.samples {
        let kin = s.wdot * s.wdot / (2.0 * c2);
        let pot = theta * coeffs.b_tilde(s.t) * abs_pow(s.w, p + 1.0) / (p + 1.0);
        let e = kin - pot;
        let scale = kin.abs().max(pot.abs());
        if let Some((pe, ps)) = prev {
            if !(e >= pe - tol * scale.max(ps)) {
                return false;
            }
        }
        prev = Some((e, scale));
    }
    true
}

/// Whether `w' >= C w^alpha` along the samples, up to relative slack `tol`.
pub fn derivative_power_bound(traj: &OdeTrajectory, cert: &BlowupCertificate, tol: f64) -> bool {
    let c = cert.c_squared.sqrt();
    traj.samples
        .iter()
        .all(|s| s.wdot >= c * pow_nonneg(s.w, cert.alpha) * (1.0 - tol))
}

/// Trajectory CSV: `t, w, wdot, envelope, growth_bound`.
pub fn trajectory_csv(traj: &OdeTrajectory, c: f64, growth_rate: f64, cert: Option<&BlowupCertificate>) -> String {
    let w0 = traj.samples[0].w;
    let mut out = String::from("t,w,wdot,envelope,growth_bound\n");
    for s in &traj.samples {
        let env = cert
            .and_then(|k| envelope(w0, k.c_squared, k.alpha, s.t).ok())
            .unwrap_or(f64::NAN);
        let growth = w0 * (c * growth_rate * s.t).exp();
        out.push_str(&csv_row(&[s.t, s.w, s.wdot, env, growth]));
        out.push('\n');
    }
    out
}

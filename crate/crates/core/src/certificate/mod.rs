//! Blow-up certificate for the closed-form FLRW family.
//!
//! The certificate bundles every hypothesis of the blow-up theorem (growth
//! rate `N` admissible, `q` monotone, `A > 0`, `B < inf`, data above the
//! thresholds, lifespan bound below the horizon) together with the derived
//! constants `Q, D, C^2, alpha, T*`.

pub mod asymptotics;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cone::{ConeGeometry, Monotonicity, QClassification};
use crate::cosmology::{CosmologyParams, MassBehavior};
use crate::error::{Error, Result};
use crate::numeric::{golden_section_min, pow_nonneg, unit_ball_volume};
use crate::output::extended;

use asymptotics::{a_objective_growth, b_objective_growth, rate_scale, GrowthOrder};

/// Grid size used for the numeric inf/sup of the A and B objectives.
pub const DEFAULT_NODES: usize = 4096;

/// Reason reported for `(1+sigma)H < 0, sigma < 0`.
pub const EXCLUDED_REASON: &str = "excluded region (1+sigma)H<0, sigma<0";

/// Parameters of the blow-up theorem other than the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremParams {
    /// Exponential growth rate `N >= 0` of the lower bound `w0 e^{cNt}`.
    #[serde(rename = "N")]
    pub growth_rate: f64,
    pub epsilon: f64,
    pub theta: f64,
    pub lambda: f64,
    pub p: f64,
    pub w0: f64,
    pub w1: f64,
}

impl TheoremParams {
    pub fn validate(&self) -> Result<()> {
        let hyp = "blow-up theorem hypothesis";
        if !(self.growth_rate.is_finite() && self.growth_rate >= 0.0) {
            return Err(Error::invalid("N", format!("N must be a non-negative real, {hyp}")));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("epsilon must lie in (0,1), {hyp}")));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::invalid("theta", format!("theta must lie in (0,1), {hyp}")));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda", format!("lambda must be positive, {hyp}")));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::invalid("p", format!("p must lie in (1,inf), {hyp}")));
        }
        if !self.w0.is_finite() {
            return Err(Error::invalid("w0", "w0 must be finite"));
        }
        if !self.w1.is_finite() {
            return Err(Error::invalid("w1", "w1 must be finite"));
        }
        Ok(())
    }
}

/// Everything the theorem needs: background, cone, and theorem parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremInputs {
    pub geom: ConeGeometry,
    pub theorem: TheoremParams,
}

impl TheoremInputs {
    pub fn new(geom: ConeGeometry, theorem: TheoremParams) -> Result<Self> {
        theorem.validate()?;
        Ok(TheoremInputs { geom, theorem })
    }

    pub fn params(&self) -> &CosmologyParams {
        self.geom.params()
    }

    /// Same inputs with different data `(w0, w1)`.
    pub fn with_data(&self, w0: f64, w1: f64) -> Self {
        let mut out = self.clone();
        out.theorem.w0 = w0;
        out.theorem.w1 = w1;
        out
    }
}

/// `Q = omega_n^{2/n} a0`.
pub fn q_constant(params: &CosmologyParams) -> f64 {
    unit_ball_volume(params.n).powf(2.0 / params.n as f64) * params.a0
}

/// Outcome of the growth-rate admissibility test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NCheck {
    pub holds: bool,
    #[serde(serialize_with = "extended")]
    pub inf_mass_sq: f64,
    pub reason: Option<String>,
}

/// `N >= 0` and `N^2 + inf M^2 >= 0`, with the infimum taken from the exact
/// bounds of the mass behaviour.
pub fn check_n(inputs: &TheoremInputs) -> NCheck {
    let p = inputs.params();
    let n = inputs.theorem.growth_rate;
    let behavior = p.classify_mass_behavior();
    let inf = behavior.infimum();
    if let MassBehavior::DivergesMinus { .. } = behavior {
        return NCheck {
            holds: false,
            inf_mass_sq: inf,
            reason: Some(EXCLUDED_REASON.into()),
        };
    }
    if n < 0.0 {
        return NCheck {
            holds: false,
            inf_mass_sq: inf,
            reason: Some("N must be non-negative".into()),
        };
    }
    let total = n * n + inf;
    if total >= 0.0 {
        NCheck {
            holds: true,
            inf_mass_sq: inf,
            reason: None,
        }
    } else {
        NCheck {
            holds: false,
            inf_mass_sq: inf,
            reason: Some(format!("N^2 + inf M^2 = {total} < 0")),
        }
    }
}

/// Value and location of an infimum or supremum over `(0, T0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    #[serde(serialize_with = "extended")]
    pub value: f64,
    /// Time where it is attained; `T0` (possibly `inf`) for a limit at the
    /// end of the interval.
    #[serde(serialize_with = "extended")]
    pub at: f64,
    /// Asymptotic order of the objective at the end of the interval.
    pub order: Option<GrowthOrder>,
}

/// Sample times for the numeric search: compactified `t = s/(1-s)` plus a
/// far probe when `T0 = inf`, uniform up to `T0(1 - 1e-9)` otherwise. The
/// first node sits at `1e-12` to stand in for the open endpoint.
pub fn search_grid(end: f64, nodes: usize) -> Vec<f64> {
    let nodes = nodes.max(3);
    let mut grid: Vec<f64> = if end.is_infinite() {
        let mut g: Vec<f64> = (0..nodes)
            .map(|i| {
                let s = i as f64 / nodes as f64;
                s / (1.0 - s)
            })
            .collect();
        g.push(1e8);
        g
    } else {
        let last = end * (1.0 - 1e-9);
        (0..nodes).map(|i| last * i as f64 / (nodes - 1) as f64).collect()
    };
    grid[0] = 1e-12_f64.min(grid[1] * 1e-6);
    grid
}

/// Minimises `f` over the grid and polishes the best bracket by golden
/// section. NaN values are treated as `+inf`.
fn minimise_on_grid<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> (f64, f64) {
    let clean = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let v = clean(f(t));
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (t_ref, v_ref) = golden_section_min(|t| clean(f(t)), lo, hi, 1e-10);
    if v_ref < best_val {
        (t_ref, v_ref)
    } else {
        (grid[best], best_val)
    }
}

/// `A = inf_{(0,T0)} e^{cN(1-eps)t} / q~^{n/2}` on a grid of `nodes` points.
///
/// Positivity is settled by the asymptotic order first; a vanishing limit
/// gives `A = 0` without any search.
pub fn compute_a(inputs: &TheoremInputs, nodes: usize) -> Result<Extremum> {
    let p = *inputs.params();
    let th = &inputs.theorem;
    let geom = &inputs.geom;
    let order = a_objective_growth(geom, th.growth_rate, th.epsilon).ok_or(Error::NotMonotone)?;
    let end = p.horizon_end();
    if order.sign(rate_scale(&p, th.growth_rate)) == Ordering::Less {
        return Ok(Extremum {
            value: 0.0,
            at: end,
            order: Some(order),
        });
    }
    let rate = p.c * th.growth_rate * (1.0 - th.epsilon);
    let half_n = p.n as f64 / 2.0;
    let ln_obj = |t: f64| match geom.ln_q_tilde(t) {
        Ok(lq) => rate * t - half_n * lq,
        Err(_) => f64::NAN,
    };
    let (at, v) = minimise_on_grid(ln_obj, &search_grid(end, nodes));
    Ok(Extremum {
        value: v.exp(),
        at,
        order: Some(order),
    })
}

/// `B = sup_{(0,T0)} q~^{n/2} (N^2+M^2)^{1/(p-1)} e^{-cNt}`.
///
/// Requires the growth rate to be admissible so that the bracket is
/// non-negative; divergence is decided by the asymptotic order.
pub fn compute_b(inputs: &TheoremInputs, nodes: usize) -> Result<Extremum> {
    let p = *inputs.params();
    let th = &inputs.theorem;
    let geom = &inputs.geom;
    if !check_n(inputs).holds {
        return Err(Error::Precondition("N^2 + inf M^2 >= 0 is required for B".into()));
    }
    let end = p.horizon_end();
    let order = match b_objective_growth(geom, th.growth_rate, th.p).ok_or(Error::NotMonotone)? {
        None => {
            return Ok(Extremum {
                value: 0.0,
                at: 0.0,
                order: None,
            })
        }
        Some(o) => o,
    };
    if order.sign(rate_scale(&p, th.growth_rate)) == Ordering::Greater {
        return Ok(Extremum {
            value: f64::INFINITY,
            at: end,
            order: Some(order),
        });
    }
    let n2 = th.growth_rate * th.growth_rate;
    let rate = p.c * th.growth_rate;
    let half_n = p.n as f64 / 2.0;
    let inv = 1.0 / (th.p - 1.0);
    let neg_ln_obj = |t: f64| {
        let lq = match geom.ln_q_tilde(t) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let forcing = (n2 + p.curved_mass_sq_unchecked(t)).max(0.0);
        -(half_n * lq + inv * forcing.ln() - rate * t)
    };
    let (at, v) = minimise_on_grid(neg_ln_obj, &search_grid(end, nodes));
    Ok(Extremum {
        value: (-v).exp(),
        at,
        order: Some(order),
    })
}

/// `(w0 threshold, w1 threshold)`:
/// `Q^{n/2} B / ((1-theta) lambda)^{1/(p-1)}` and
/// `max(cN w0, sqrt(2 lambda c^2 theta/(p+1)) w0^{(p+1)/2} / (r0^2 Q)^{n(p-1)/4})`.
pub fn data_thresholds(inputs: &TheoremInputs, b: f64, q: f64) -> (f64, f64) {
    let p = inputs.params();
    let th = &inputs.theorem;
    let n = p.n as f64;
    let w0_thr = q.powf(n / 2.0) * b / ((1.0 - th.theta) * th.lambda).powf(1.0 / (th.p - 1.0));
    let coef = (2.0 * th.lambda * p.c * p.c * th.theta / (th.p + 1.0)).sqrt();
    let second = coef * pow_nonneg(th.w0, (th.p + 1.0) / 2.0) / (inputs.geom.q0() * q).powf(n * (th.p - 1.0) / 4.0);
    let first = p.c * th.growth_rate * th.w0;
    (w0_thr, first.max(second))
}

/// `D`, `T*`, `C^2`, `alpha` from the data and `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lifespan {
    #[serde(rename = "D", serialize_with = "extended")]
    pub d: f64,
    #[serde(rename = "T_star", serialize_with = "extended")]
    pub t_star: f64,
    #[serde(rename = "C_squared", serialize_with = "extended")]
    pub c_squared: f64,
    pub alpha: f64,
}

pub fn lifespan(inputs: &TheoremInputs, a: f64, q: f64) -> Lifespan {
    let p = inputs.params();
    let th = &inputs.theorem;
    let n = p.n as f64;
    let pm1 = th.p - 1.0;
    let d = 2.0 * p.c * p.c * th.theta * th.lambda * pow_nonneg(a, pm1) / ((th.p + 1.0) * q.powf(n * pm1 / 2.0));
    let t_star = 2.0 / (th.epsilon * pm1 * d.sqrt() * pow_nonneg(th.w0, pm1 / 2.0));
    let c_squared = d * pow_nonneg(th.w0, (1.0 - th.epsilon) * pm1);
    Lifespan {
        d,
        t_star,
        c_squared,
        alpha: 1.0 + th.epsilon * pm1 / 2.0,
    }
}

/// `C^2` in its second printed form
/// `(2 lambda c^2 theta/(p+1)) {w0^{1-eps} A / Q^{n/2}}^{p-1}`.
pub fn c_squared_alternate(inputs: &TheoremInputs, a: f64, q: f64) -> f64 {
    let p = inputs.params();
    let th = &inputs.theorem;
    let inner = pow_nonneg(th.w0, 1.0 - th.epsilon) * a / q.powf(p.n as f64 / 2.0);
    2.0 * th.lambda * p.c * p.c * th.theta / (th.p + 1.0) * pow_nonneg(inner, th.p - 1.0)
}

/// Pole `1/(C (alpha-1) w0^{alpha-1})` of the lower envelope.
pub fn envelope_pole(w0: f64, c_squared: f64, alpha: f64) -> f64 {
    1.0 / (c_squared.sqrt() * (alpha - 1.0) * pow_nonneg(w0, alpha - 1.0))
}

/// Lower envelope `w0 {1 - C(alpha-1) w0^{alpha-1} t}^{-1/(alpha-1)}`.
pub fn envelope(w0: f64, c_squared: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(c_squared > 0.0 && w0 > 0.0) {
        return Err(Error::Precondition("envelope needs C^2 > 0 and w0 > 0".into()));
    }
    let pole = envelope_pole(w0, c_squared, alpha);
    if t >= pole {
        return Err(Error::Pole { pole });
    }
    let brace = 1.0 - t / pole;
    Ok(w0 * brace.powf(-1.0 / (alpha - 1.0)))
}

/// Cases of the FLRW corollary, keyed by the signs of `H` and `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorollaryCase {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl CorollaryCase {
    pub const ALL: [CorollaryCase; 8] = [
        CorollaryCase::I,
        CorollaryCase::II,
        CorollaryCase::III,
        CorollaryCase::IV,
        CorollaryCase::V,
        CorollaryCase::VI,
        CorollaryCase::VII,
        CorollaryCase::VIII,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            CorollaryCase::I => "i",
            CorollaryCase::II => "ii",
            CorollaryCase::III => "iii",
            CorollaryCase::IV => "iv",
            CorollaryCase::V => "v",
            CorollaryCase::VI => "vi",
            CorollaryCase::VII => "vii",
            CorollaryCase::VIII => "viii",
        }
    }

    /// The case whose `(H, sigma)` clause matches, if any.
    pub fn partition(hubble: f64, sigma: f64) -> Option<CorollaryCase> {
        use CorollaryCase::*;
        if hubble == 0.0 {
            Some(I)
        } else if hubble > 0.0 {
            if sigma >= 0.0 {
                Some(II)
            } else if sigma > -1.0 {
                Some(III)
            } else if sigma == -1.0 {
                Some(IV)
            } else {
                None
            }
        } else if sigma > 0.0 {
            Some(V)
        } else if sigma == 0.0 {
            Some(VI)
        } else if sigma == -1.0 {
            Some(VII)
        } else if sigma < -1.0 {
            Some(VIII)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub case: Option<CorollaryCase>,
    /// The case selected by the `(H, sigma)` clause, even if another clause
    /// fails.
    pub candidate: Option<CorollaryCase>,
    pub clauses: Vec<Clause>,
    pub reason: Option<String>,
}

/// Matches the inputs against the corollary cases clause by clause.
///
/// The corollary path demands `N > 0`, stricter than the theorem itself.
pub fn corollary_case_check(inputs: &TheoremInputs) -> CorollaryReport {
    use CorollaryCase::*;
    let p = inputs.params();
    let th = &inputs.theorem;
    let (h, sigma, n, c, a0) = (p.hubble, p.sigma, p.n as f64, p.c, p.a0);
    let r0 = inputs.geom.r0();
    let big_n = th.growth_rate;
    let n2m2 = big_n * big_n + p.m_squared;
    let hm = p.hubble_mass_sq();

    if p.is_excluded_region() {
        return CorollaryReport {
            case: None,
            candidate: None,
            clauses: vec![],
            reason: Some(EXCLUDED_REASON.into()),
        };
    }
    let Some(case) = CorollaryCase::partition(h, sigma) else {
        return CorollaryReport {
            case: None,
            candidate: None,
            clauses: vec![],
            reason: Some("no case matches (H, sigma)".into()),
        };
    };
    let mut clauses = vec![Clause {
        name: "N > 0".into(),
        holds: big_n > 0.0,
    }];
    let mut add = |name: &str, holds: bool| {
        clauses.push(Clause {
            name: name.into(),
            holds,
        })
    };
    let r_thr = 2.0 * c / (a0 * h.abs());
    let n_floor = n * h.abs() / (2.0 * c * (1.0 - th.epsilon));
    match case {
        I | II | VI => add("N^2 + m^2 >= 0", n2m2 >= 0.0),
        III | V | VIII => add("N^2 + m^2 + sigma (nH/2c)^2 >= 0", n2m2 + sigma * hm >= 0.0),
        IV | VII => add("N^2 + m^2 - (nH/2c)^2 >= 0", n2m2 - hm >= 0.0),
    }
    match case {
        IV => add("N > nH/(2c(1-eps))", big_n > n_floor),
        V => add("r0 >= -2c/(a0 H)", r0 >= r_thr),
        VI => add("r0 >= -2c/(a0 H) if n >= 2", p.n < 2 || r0 >= r_thr),
        VII => {
            add("r0 <= 2c/(a0 |H|)", r0 <= r_thr);
            add("N > n|H|/(2c(1-eps))", big_n > n_floor);
        }
        VIII => add("r0 <= 2c/(a0 |H|)", r0 <= r_thr),
        _ => add("r0 > 0", r0 > 0.0),
    }
    let failed: Vec<&str> = clauses.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
    let reason = if failed.is_empty() {
        None
    } else {
        Some(format!("case ({}) clause fails: {}", case.tag(), failed.join("; ")))
    };
    CorollaryReport {
        case: if failed.is_empty() { Some(case) } else { None },
        candidate: Some(case),
        clauses,
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: &'static str,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

/// Complete certificate. Quantities that could not be computed are NaN
/// (serialized as `null`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupCertificate {
    pub valid: bool,
    #[serde(rename = "A", serialize_with = "extended")]
    pub a: f64,
    #[serde(rename = "B", serialize_with = "extended")]
    pub b: f64,
    #[serde(rename = "Q", serialize_with = "extended")]
    pub q: f64,
    #[serde(serialize_with = "extended")]
    pub omega_n: f64,
    #[serde(rename = "D", serialize_with = "extended")]
    pub d: f64,
    #[serde(rename = "C_squared", serialize_with = "extended")]
    pub c_squared: f64,
    #[serde(serialize_with = "extended")]
    pub alpha: f64,
    #[serde(serialize_with = "extended")]
    pub w0_threshold: f64,
    #[serde(serialize_with = "extended")]
    pub w1_threshold: f64,
    #[serde(rename = "T_star", serialize_with = "extended")]
    pub t_star: f64,
    #[serde(rename = "T0", serialize_with = "extended")]
    pub t0: f64,
    pub verdict: Vec<Hypothesis>,
    pub corollary_case: Option<CorollaryCase>,
    pub corollary: CorollaryReport,
    pub q_classification: QClassification,
    pub mass_behavior: MassBehavior,
    #[serde(rename = "A_extremum")]
    pub a_extremum: Option<Extremum>,
    #[serde(rename = "B_extremum")]
    pub b_extremum: Option<Extremum>,
}

impl BlowupCertificate {
    /// Reasons of every hypothesis that does not hold.
    pub fn reasons(&self) -> Vec<String> {
        self.verdict
            .iter()
            .filter(|h| h.verdict != Verdict::Holds)
            .map(|h| format!("{}: {}", h.name, h.reason.as_deref().unwrap_or("fails")))
            .collect()
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.verdict.iter().find(|h| h.name == name)
    }
}

fn holds(name: &'static str) -> Hypothesis {
    Hypothesis {
        name,
        verdict: Verdict::Holds,
        reason: None,
    }
}

fn fails(name: &'static str, reason: impl Into<String>) -> Hypothesis {
    Hypothesis {
        name,
        verdict: Verdict::Fails,
        reason: Some(reason.into()),
    }
}

/// Runs every check with the default grid.
pub fn certify(inputs: &TheoremInputs) -> BlowupCertificate {
    certify_with_nodes(inputs, DEFAULT_NODES)
}

pub fn certify_with_nodes(inputs: &TheoremInputs, nodes: usize) -> BlowupCertificate {
    let p = *inputs.params();
    let th = &inputs.theorem;
    let q = q_constant(&p);
    let corollary = corollary_case_check(inputs);
    let mut cert = BlowupCertificate {
        valid: false,
        a: f64::NAN,
        b: f64::NAN,
        q,
        omega_n: unit_ball_volume(p.n),
        d: f64::NAN,
        c_squared: f64::NAN,
        alpha: 1.0 + th.epsilon * (th.p - 1.0) / 2.0,
        w0_threshold: f64::NAN,
        w1_threshold: f64::NAN,
        t_star: f64::NAN,
        t0: p.horizon_end(),
        verdict: vec![],
        corollary_case: corollary.case,
        corollary,
        q_classification: inputs.geom.classify(),
        mass_behavior: p.classify_mass_behavior(),
        a_extremum: None,
        b_extremum: None,
    };
    if p.is_excluded_region() {
        cert.verdict.push(fails("excluded_region", EXCLUDED_REASON));
        return cert;
    }

    let mut v = Vec::new();
    let r0 = inputs.geom.r0();
    if r0 > 0.0 && r0.is_finite() {
        v.push(holds("support_radius"));
    } else {
        v.push(fails("support_radius", "r0 must be positive"));
    }

    let n_check = check_n(inputs);
    v.push(match &n_check.reason {
        None => holds("n_admissible"),
        Some(r) => fails("n_admissible", r.clone()),
    });

    let monotone = inputs.geom.monotonicity() != Monotonicity::NotMonotone;
    v.push(if monotone {
        holds("q_monotone")
    } else {
        fails("q_monotone", "q is not known to be monotone for these parameters")
    });

    if monotone {
        match compute_a(inputs, nodes) {
            Ok(ext) => {
                cert.a = ext.value;
                cert.a_extremum = Some(ext);
                v.push(if ext.value > 0.0 {
                    holds("a_positive")
                } else {
                    fails("a_positive", "the A objective tends to 0")
                });
            }
            Err(e) => v.push(fails("a_positive", e.to_string())),
        }
        if n_check.holds {
            match compute_b(inputs, nodes) {
                Ok(ext) => {
                    cert.b = ext.value;
                    cert.b_extremum = Some(ext);
                    v.push(if ext.value.is_finite() {
                        holds("b_finite")
                    } else {
                        fails("b_finite", "the B objective is unbounded")
                    });
                }
                Err(e) => v.push(fails("b_finite", e.to_string())),
            }
        } else {
            v.push(fails("b_finite", "not evaluated: N is not admissible"));
        }
    } else {
        v.push(fails("a_positive", "not evaluated: q is not monotone"));
        v.push(fails("b_finite", "not evaluated: q is not monotone"));
    }

    if cert.b.is_finite() {
        let (w0_thr, w1_thr) = data_thresholds(inputs, cert.b, q);
        cert.w0_threshold = w0_thr;
        cert.w1_threshold = w1_thr;
        v.push(if th.w0 > w0_thr {
            holds("w0_threshold")
        } else {
            fails("w0_threshold", format!("w0 = {} must exceed {}", th.w0, w0_thr))
        });
        v.push(if th.w1 >= w1_thr {
            holds("w1_threshold")
        } else {
            fails("w1_threshold", format!("w1 = {} must be at least {}", th.w1, w1_thr))
        });
    } else {
        v.push(fails("w0_threshold", "not evaluated: B unavailable"));
        v.push(fails("w1_threshold", "not evaluated: B unavailable"));
    }

    if cert.a > 0.0 && th.w0 > 0.0 {
        let life = lifespan(inputs, cert.a, q);
        cert.d = life.d;
        cert.t_star = life.t_star;
        cert.c_squared = life.c_squared;
        v.push(if life.t_star <= cert.t0 {
            holds("lifespan_within_horizon")
        } else {
            Hypothesis {
                name: "lifespan_within_horizon",
                verdict: Verdict::Inconclusive,
                reason: Some(format!("T* = {} exceeds T0 = {}", life.t_star, cert.t0)),
            }
        });
    } else {
        v.push(fails(
            "lifespan_within_horizon",
            "not evaluated: needs A > 0 and w0 > 0",
        ));
    }

    cert.valid = v.iter().all(|h| h.verdict == Verdict::Holds);
    cert.verdict = v;
    cert
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(params: CosmologyParams, r0: f64, th: TheoremParams) -> TheoremInputs {
        TheoremInputs::new(ConeGeometry::new(params, r0).unwrap(), th).unwrap()
    }

    fn theorem(n: f64, eps: f64, theta: f64, lambda: f64, p: f64, w0: f64, w1: f64) -> TheoremParams {
        TheoremParams {
            growth_rate: n,
            epsilon: eps,
            theta,
            lambda,
            p,
            w0,
            w1,
        }
    }

    fn flat(n: u32, m2: f64) -> CosmologyParams {
        CosmologyParams::minkowski(n, 1.0, 1.0, m2).unwrap()
    }

    fn benchmark() -> TheoremInputs {
        inputs(flat(1, 0.0), 1.0, theorem(2.0, 0.5, 0.5, 1.0, 3.0, 16.0, 64.0))
    }

    #[test]
    fn check_n_examples() {
        let th = theorem(0.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0);
        assert!(check_n(&inputs(flat(1, 1.0), 1.0, th)).holds);
        let p = CosmologyParams::new(3, 1.0, 1.0, 2.0, -1.0, 10.0).unwrap();
        let chk = check_n(&inputs(p, 1.0, th));
        assert!(chk.holds);
        assert!((chk.inf_mass_sq - 1.0).abs() < 1e-15);
        let p = CosmologyParams::new(2, 1.0, 1.0, 2.0, -1.0, 0.0).unwrap();
        assert!(!check_n(&inputs(p, 1.0, theorem(1.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0))).holds);
        let p = CosmologyParams::new(1, 1.0, 1.0, 1.0, -2.0, 0.0).unwrap();
        let chk = check_n(&inputs(p, 1.0, th));
        assert_eq!(chk.reason.as_deref(), Some(EXCLUDED_REASON));
    }

    #[test]
    fn a_examples() {
        // non-increasing q: q~ = q0, N = 0
        let p = CosmologyParams::new(2, 1.0, 1.0, -1.0, 0.0, 0.0).unwrap();
        let inp = inputs(p, 3.0, theorem(0.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0));
        assert!((compute_a(&inp, DEFAULT_NODES).unwrap().value - 1.0 / 9.0).abs() < 1e-14);
        // e^t/(1+t), min 1 at t = 0
        let a = compute_a(&benchmark(), DEFAULT_NODES).unwrap().value;
        assert!((a - 1.0).abs() < 1e-10);
        // de Sitter with insufficient N
        let p = CosmologyParams::new(2, 1.0, 1.0, 1.0, -1.0, 0.0).unwrap();
        let inp = inputs(p, 1.0, theorem(1.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0));
        assert_eq!(compute_a(&inp, DEFAULT_NODES).unwrap().value, 0.0);
    }

    #[test]
    fn b_examples() {
        // (1+t) e^{-t}, sup 1 as t -> 0
        let inp = inputs(flat(1, 0.0), 1.0, theorem(1.0, 0.5, 0.5, 1.0, 2.0, 1.0, 1.0));
        let b = compute_b(&inp, DEFAULT_NODES).unwrap().value;
        assert!((b - 1.0).abs() < 1e-10);
        // N = 0 with positive mass: q~ grows without exponential damping
        let inp = inputs(flat(1, 1.0), 1.0, theorem(0.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0));
        assert_eq!(compute_b(&inp, DEFAULT_NODES).unwrap().value, f64::INFINITY);
        // N = 0 and m = 0: the forcing vanishes identically
        let inp = inputs(flat(1, 0.0), 1.0, theorem(0.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0));
        assert_eq!(compute_b(&inp, DEFAULT_NODES).unwrap().value, 0.0);
        // contracting de Sitter with q~ = q: finite iff cN > n|H|/2
        let p = CosmologyParams::new(1, 1.0, 1.0, -1.0, -1.0, 1.0).unwrap();
        let fin = inputs(p, 1.0, theorem(0.6, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0));
        assert!(compute_b(&fin, DEFAULT_NODES).unwrap().value.is_finite());
        let inf = inputs(p, 1.0, theorem(0.4, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0));
        assert!(compute_b(&inf, DEFAULT_NODES).unwrap().value.is_infinite());
    }

    #[test]
    fn threshold_examples() {
        let inp = inputs(flat(1, 0.0), 1.0, theorem(0.0, 0.5, 0.5, 2.0, 2.0, 1.0, 1.0));
        let q = q_constant(inp.params());
        assert!((q - 4.0).abs() < 1e-15);
        assert!((data_thresholds(&inp, 1.0, q).0 - 2.0).abs() < 1e-14);
        let inp = inputs(flat(1, 0.0), 1.0, theorem(0.0, 0.5, 0.5, 1.0, 3.0, 2.0, 1.0));
        assert!((data_thresholds(&inp, 1.0, q).1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lifespan_examples() {
        let inp = benchmark();
        let life = lifespan(&inp, 1.0, 4.0);
        assert!((life.d - 1.0 / 16.0).abs() < 1e-15);
        assert!((life.t_star - 0.5).abs() < 1e-14);
        assert_eq!(life.alpha, 1.5);
        let alt = c_squared_alternate(&inp, 1.0, 4.0);
        assert!((life.c_squared - alt).abs() <= 1e-10 * alt);
        let pole = envelope_pole(16.0, life.c_squared, life.alpha);
        assert!((pole - life.t_star).abs() < 1e-12);
        assert_eq!(envelope(16.0, life.c_squared, life.alpha, 0.0).unwrap(), 16.0);
        assert!(matches!(
            envelope(16.0, life.c_squared, life.alpha, pole),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn corollary_examples() {
        let inp = inputs(
            CosmologyParams::new(1, 1.0, 1.0, 0.0, 5.0, 0.0).unwrap(),
            1.0,
            theorem(1.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0),
        );
        assert_eq!(corollary_case_check(&inp).case, Some(CorollaryCase::I));
        let inp = inputs(
            CosmologyParams::new(1, 1.0, 1.0, 1.0, -2.0, 0.0).unwrap(),
            1.0,
            theorem(1.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0),
        );
        let rep = corollary_case_check(&inp);
        assert_eq!(rep.case, None);
        assert_eq!(rep.reason.as_deref(), Some(EXCLUDED_REASON));
        let inp = inputs(
            CosmologyParams::new(1, 1.0, 1.0, -1.0, -1.0, 1.0).unwrap(),
            1.0,
            theorem(2.0, 0.5, 0.5, 1.0, 3.0, 1.0, 1.0),
        );
        let rep = corollary_case_check(&inp);
        assert_eq!(rep.case, Some(CorollaryCase::VII));
        assert!(rep.clauses.iter().all(|c| c.holds));
    }

    #[test]
    fn certify_benchmark() {
        let cert = certify(&benchmark());
        assert!(cert.valid, "{:?}", cert.reasons());
        assert!((cert.t_star - 0.5).abs() < 1e-9);
        assert!((cert.b - 2.0).abs() < 1e-9);
        assert!((cert.w0_threshold - 32f64.sqrt()).abs() < 1e-8);
        assert_eq!(cert.corollary_case, Some(CorollaryCase::I));
    }

    #[test]
    fn certify_gates() {
        let p = CosmologyParams::new(1, 1.0, 1.0, 1.0, -2.0, 0.0).unwrap();
        let cert = certify(&inputs(p, 1.0, theorem(1.0, 0.5, 0.5, 1.0, 3.0, 1e3, 1e6)));
        assert!(!cert.valid);
        assert_eq!(cert.verdict.len(), 1);
        let small = benchmark().with_data(1.0, 64.0);
        let cert = certify(&small);
        assert!(!cert.valid);
        assert_eq!(cert.reasons().len(), 1);
        assert_eq!(cert.hypothesis("w0_threshold").unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn theorem_params_rejected() {
        let mut th = theorem(1.0, 1.5, 0.5, 1.0, 3.0, 1.0, 1.0);
        let err = th.validate().unwrap_err().to_string();
        assert!(err.contains("(0,1)"));
        th.epsilon = 0.5;
        th.p = 1.0;
        assert!(th.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let cert = certify(&benchmark());
        let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
        assert_eq!(v["valid"], true);
        assert_eq!(v["T0"], "inf");
        assert_eq!(v["corollary_case"], "i");
    }
}

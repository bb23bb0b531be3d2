//! Radially symmetric Cauchy problem
//!
//! ```text
//! c^{-2} u_tt - a^{-2} Lap u + M^2(t) u = lambda a^{-n(p-1)/2} |u|^p
//! ```
//!
//! by the method of lines: centred second differences for
//! `u_rr + (n-1)/r u_r` (with `n u_rr` on the axis), Dirichlet data at
//! `R_max`, and the adaptive Dormand-Prince integrator on the stacked
//! system `[Re u, Im u, Re u_t, Im u_t]`. For `n = 1` a full-line mode with
//! an arbitrary apex is also available.

pub mod initial;
pub mod oracle;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::q_constant;
use crate::cone::ConeGeometry;
use crate::cosmology::{curved_mass_sq_from_scale, ScaleModel};
use crate::error::{Error, Result};
use crate::numeric::{pow_nonneg, unit_sphere_area};
use crate::ode::{dopri5, Flow, RkControls, RkStatus, Termination, BLOWUP_MAGNITUDE, BLOWUP_STEP, HORIZON_STOP};
use crate::output::csv_row;

pub use initial::{bump_ball_integral, bump_profile, make_initial_data, InitialData};
pub use oracle::dalembert_oracle;

/// Node count above which the right-hand side is evaluated in parallel.
const PARALLEL_NODES: usize = 8192;

/// Courant factor of the step cap `a_min h / (c sqrt(n))`.
pub const CFL_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// `r_j = j h` on `[0, R_max]`.
    Radial,
    /// `x_j = center + (j - J) h` on `[center - R_max, center + R_max]`,
    /// one space dimension only.
    Line { center: f64 },
}

/// Discrete field on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeField {
    pub kind: GridKind,
    pub n: u32,
    pub h: f64,
    /// Number of cells between the apex and the outer boundary.
    pub cells: usize,
    pub t: f64,
    pub u: Vec<Complex64>,
    pub ut: Vec<Complex64>,
}

impl PdeField {
    /// Zero field reaching at least `r_max` from the apex.
    pub fn zeros(kind: GridKind, n: u32, h: f64, r_max: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("grid_h", "grid spacing must be positive"));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::invalid("r_max", "outer radius must be positive"));
        }
        if n < 1 {
            return Err(Error::invalid("n", "spatial dimension must be at least 1"));
        }
        if matches!(kind, GridKind::Line { .. }) && n != 1 {
            return Err(Error::Configuration("full-line mode needs n = 1".into()));
        }
        let cells = (r_max / h).ceil().max(2.0) as usize;
        let len = match kind {
            GridKind::Radial => cells + 1,
            GridKind::Line { .. } => 2 * cells + 1,
        };
        Ok(PdeField {
            kind,
            n,
            h,
            cells,
            t: 0.0,
            u: vec![Complex64::new(0.0, 0.0); len],
            ut: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    /// Field sampled from radial initial data.
    pub fn from_data(kind: GridKind, h: f64, r_max: f64, data: &InitialData) -> Result<Self> {
        let mut f = Self::zeros(kind, data.n, h, r_max)?;
        for j in 0..f.len() {
            let d = f.distance(j);
            f.u[j] = Complex64::new(data.u0(d), 0.0);
            f.ut[j] = Complex64::new(data.u1(d), 0.0);
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Outer radius `R_max`.
    pub fn extent(&self) -> f64 {
        self.cells as f64 * self.h
    }

    /// Distance of node `j` from the apex.
    pub fn distance(&self, j: usize) -> f64 {
        match self.kind {
            GridKind::Radial => j as f64 * self.h,
            GridKind::Line { .. } => (j as f64 - self.cells as f64).abs() * self.h,
        }
    }

    /// Coordinate of node `j` (`r` or `x`).
    pub fn coordinate(&self, j: usize) -> f64 {
        match self.kind {
            GridKind::Radial => j as f64 * self.h,
            GridKind::Line { center } => center + (j as f64 - self.cells as f64) * self.h,
        }
    }

    /// Trapezoid weights of `int f dx` in the reduced coordinate.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let len = self.len();
        let mut w: Vec<f64> = match self.kind {
            GridKind::Radial => {
                let area = unit_sphere_area(self.n);
                (0..len)
                    .map(|j| area * (j as f64 * self.h).powi(self.n as i32 - 1) * self.h)
                    .collect()
            }
            GridKind::Line { .. } => vec![self.h; len],
        };
        w[0] *= 0.5;
        w[len - 1] *= 0.5;
        w
    }

    fn pack(&self) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; 4 * n];
        for j in 0..n {
            y[j] = self.u[j].re;
            y[n + j] = self.u[j].im;
            y[2 * n + j] = self.ut[j].re;
            y[3 * n + j] = self.ut[j].im;
        }
        y
    }

    fn unpack(&mut self, t: f64, y: &[f64]) {
        let n = self.len();
        for j in 0..n {
            self.u[j] = Complex64::new(y[j], y[n + j]);
            self.ut[j] = Complex64::new(y[2 * n + j], y[3 * n + j]);
        }
        self.t = t;
    }

    /// Snapshot CSV: `r, re_u, im_u, re_ut, im_ut` (`x` in full-line mode).
    pub fn snapshot_csv(&self) -> String {
        let head = match self.kind {
            GridKind::Radial => "r",
            GridKind::Line { .. } => "x",
        };
        let mut out = format!("{head},re_u,im_u,re_ut,im_ut\n");
        for j in 0..self.len() {
            out.push_str(&csv_row(&[
                self.coordinate(j),
                self.u[j].re,
                self.u[j].im,
                self.ut[j].re,
                self.ut[j].im,
            ]));
            out.push('\n');
        }
        out
    }
}

/// `W = Re int u dx` by the trapezoid rule.
pub fn observable_w(field: &PdeField) -> f64 {
    field
        .quadrature_weights()
        .iter()
        .zip(&field.u)
        .map(|(w, u)| w * u.re)
        .sum()
}

/// Largest distance from the apex at which `|u|` or `|u_t|` exceeds
/// `floor`; zero for a field below the floor everywhere.
pub fn support_radius(field: &PdeField, floor: f64) -> f64 {
    (0..field.len())
        .filter(|&j| field.u[j].norm() > floor || field.ut[j].norm() > floor)
        .map(|j| field.distance(j))
        .fold(0.0, f64::max)
}

/// Support radius with separate floors `rel max|u|` and `rel max|u_t|`, so
/// that the much larger scale of `u_t` near a singularity does not hide `u`.
pub fn relative_support_radius(field: &PdeField, rel: f64) -> f64 {
    let fu = rel * max_abs(&field.u);
    let fv = rel * max_abs(&field.ut);
    (0..field.len())
        .filter(|&j| field.u[j].norm() > fu || field.ut[j].norm() > fv)
        .map(|j| field.distance(j))
        .fold(0.0, f64::max)
}

/// Background, nonlinearity strength `lambda >= 0` and power `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeModel {
    geom: ConeGeometry,
    lambda: f64,
    p: f64,
    ln_q_const: f64,
}

impl PdeModel {
    pub fn new(geom: ConeGeometry, lambda: f64, p: f64) -> Result<Self> {
        let params = geom.params();
        if params.is_excluded_region() {
            return Err(Error::ExcludedRegion {
                hubble: params.hubble,
                sigma: params.sigma,
            });
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid("lambda", "lambda must be non-negative"));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid("p", "p must lie in (1,inf)"));
        }
        let ln_q_const = q_constant(params).ln();
        Ok(PdeModel {
            geom,
            lambda,
            p,
            ln_q_const,
        })
    }

    pub fn geom(&self) -> &ConeGeometry {
        &self.geom
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn scale(&self) -> &ScaleModel {
        self.geom.scale()
    }

    pub fn mass_sq(&self, t: f64) -> Result<f64> {
        match self.scale() {
            ScaleModel::ClosedForm(p) => p.curved_mass_sq(t),
            model => curved_mass_sq_from_scale(model, self.geom.params(), t),
        }
    }

    /// `lambda a^{-n(p-1)/2}`.
    pub fn forcing_coefficient(&self, a: f64) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let n = self.geom.params().n as f64;
        (self.lambda.ln() - n * (self.p - 1.0) / 2.0 * a.ln()).exp()
    }

    /// `b = lambda / (Q q)^{n(p-1)/2}` from the cone weight.
    pub fn b(&self, t: f64) -> Result<f64> {
        let n = self.geom.params().n as f64;
        let lq = self.geom.ln_q(t)?;
        Ok((self.lambda.ln() - n * (self.p - 1.0) / 2.0 * (self.ln_q_const + lq)).exp())
    }

    /// Smallest scale factor on `[t0, t1]`.
    fn min_scale(&self, t0: f64, t1: f64) -> Result<f64> {
        let mut m = f64::INFINITY;
        for i in 0..=256 {
            let t = t0 + (t1 - t0) * i as f64 / 256.0;
            m = m.min(self.scale().value(t)?);
        }
        Ok(m)
    }
}

/// Time-stepping and output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeControls {
    pub rtol: f64,
    pub atol: f64,
    pub output_dt: f64,
    /// Constant step; must respect the CFL cap.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
    /// Floor of the support radius relative to the largest nodal value.
    pub support_floor_rel: f64,
    /// Times at which full snapshots are kept.
    pub snapshot_times: Vec<f64>,
    pub detect_blowup: bool,
}

impl Default for PdeControls {
    fn default() -> Self {
        PdeControls {
            rtol: 1e-9,
            atol: 1e-12,
            output_dt: 0.01,
            fixed_step: None,
            max_steps: 5_000_000,
            support_floor_rel: 1e-10,
            snapshot_times: vec![],
            detect_blowup: true,
        }
    }
}

/// Observables at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub t: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_dot")]
    pub w_dot: f64,
    #[serde(rename = "W_ddot")]
    pub w_ddot: f64,
    pub support_radius: f64,
    pub cone_radius: f64,
    pub energy: f64,
    /// Relative `L^1` mass of `|u|` beyond `cone + 2h`.
    pub outside_mass: f64,
    /// `lambda a^{-n(p-1)/2} int |u|^p`.
    pub forcing: f64,
    /// `b |W|^p`.
    pub jensen_bound: f64,
    pub mass_sq: f64,
    pub max_abs_u: f64,
    pub max_abs_imag: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeRun {
    pub observations: Vec<Observation>,
    pub termination: Termination,
    pub blowup_time: Option<f64>,
    pub snapshots: Vec<PdeField>,
    pub steps: usize,
    pub grid_h: f64,
    pub r_max: f64,
    pub support_floor_rel: f64,
}

impl PdeRun {
    /// Observables CSV: `t, W, support_radius, cone_radius, energy` followed
    /// by the diagnostic columns.
    pub fn observables_csv(&self) -> String {
        let mut out = String::from(
            "t,W,support_radius,cone_radius,energy,W_dot,W_ddot,outside_mass,forcing,jensen_bound,mass_sq,max_abs_u,max_abs_imag\n",
        );
        for o in &self.observations {
            out.push_str(&csv_row(&[
                o.t,
                o.w,
                o.support_radius,
                o.cone_radius,
                o.energy,
                o.w_dot,
                o.w_ddot,
                o.outside_mass,
                o.forcing,
                o.jensen_bound,
                o.mass_sq,
                o.max_abs_u,
                o.max_abs_imag,
            ]));
            out.push('\n');
        }
        out
    }
}

/// Per-instant coefficients of the semi-discrete system.
struct Coefficients {
    c2: f64,
    inv_a2: f64,
    mass_sq: f64,
    forcing: f64,
}

struct Stencil {
    kind: GridKind,
    n: f64,
    h: f64,
    len: usize,
}

impl Stencil {
    fn new(field: &PdeField) -> Self {
        Stencil {
            kind: field.kind,
            n: field.n as f64,
            h: field.h,
            len: field.len(),
        }
    }

    fn is_boundary(&self, j: usize) -> bool {
        match self.kind {
            GridKind::Radial => j == self.len - 1,
            GridKind::Line { .. } => j == 0 || j == self.len - 1,
        }
    }

    fn laplacian(&self, v: &[f64], j: usize) -> f64 {
        let h2 = self.h * self.h;
        match self.kind {
            GridKind::Line { .. } => (v[j + 1] - 2.0 * v[j] + v[j - 1]) / h2,
            GridKind::Radial => {
                if j == 0 {
                    self.n * 2.0 * (v[1] - v[0]) / h2
                } else {
                    let r = j as f64 * self.h;
                    (v[j + 1] - 2.0 * v[j] + v[j - 1]) / h2
                        + (self.n - 1.0) / r * (v[j + 1] - v[j - 1]) / (2.0 * self.h)
                }
            }
        }
    }

    /// Second time derivatives for the real and imaginary parts.
    fn accel(&self, k: &Coefficients, p: f64, re: &[f64], im: &[f64], j: usize) -> (f64, f64) {
        if self.is_boundary(j) {
            return (0.0, 0.0);
        }
        let modulus = re[j].hypot(im[j]);
        let force = if k.forcing == 0.0 {
            0.0
        } else {
            k.forcing * pow_nonneg(modulus, p)
        };
        let ar = k.c2 * (k.inv_a2 * self.laplacian(re, j) - k.mass_sq * re[j] + force);
        let ai = k.c2 * (k.inv_a2 * self.laplacian(im, j) - k.mass_sq * im[j]);
        (ar, ai)
    }

    fn rhs(&self, k: &Coefficients, p: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.len;
        let (u, v) = y.split_at(2 * n);
        let (re, im) = u.split_at(n);
        let (dpos, dvel) = dy.split_at_mut(2 * n);
        dpos.copy_from_slice(v);
        for j in 0..n {
            if self.is_boundary(j) {
                dpos[j] = 0.0;
                dpos[n + j] = 0.0;
            }
        }
        let (dre, dim) = dvel.split_at_mut(n);
        if n >= PARALLEL_NODES {
            dre.par_iter_mut()
                .zip(dim.par_iter_mut())
                .enumerate()
                .for_each(|(j, (a, b))| {
                    let (x, z) = self.accel(k, p, re, im, j);
                    *a = x;
                    *b = z;
                });
        } else {
            for j in 0..n {
                let (x, z) = self.accel(k, p, re, im, j);
                dre[j] = x;
                dim[j] = z;
            }
        }
    }
}

/// Largest stable step for the explicit scheme: `CFL_FACTOR a_min h / (c sqrt(n))`.
pub fn cfl_step(h: f64, c: f64, n: u32, a_min: f64) -> f64 {
    CFL_FACTOR * a_min * h / (c * (n as f64).sqrt())
}

struct Diagnostics<'a> {
    model: &'a PdeModel,
    stencil: Stencil,
    weights: Vec<f64>,
    floor_rel: f64,
}

impl Diagnostics<'_> {
    fn coefficients(&self, t: f64) -> Result<Coefficients> {
        let a = self.model.scale().value(t)?;
        let c = self.model.geom.params().c;
        Ok(Coefficients {
            c2: c * c,
            inv_a2: 1.0 / (a * a),
            mass_sq: self.model.mass_sq(t)?,
            forcing: self.model.forcing_coefficient(a),
        })
    }

    fn observe(&self, field: &PdeField) -> Result<Observation> {
        let t = field.t;
        let k = self.coefficients(t)?;
        let p = self.model.p;
        let n = field.len();
        let re: Vec<f64> = field.u.iter().map(|z| z.re).collect();
        let im: Vec<f64> = field.u.iter().map(|z| z.im).collect();
        let cone = self.model.geom.comoving_radius(t)?;
        let (mut w, mut w_dot, mut w_ddot, mut forcing) = (0.0, 0.0, 0.0, 0.0);
        let (mut total_abs, mut outside_abs) = (0.0, 0.0);
        let (mut kinetic, mut potential, mut gradient) = (0.0, 0.0, 0.0);
        let (mut max_u, mut max_im): (f64, f64) = (0.0, 0.0);
        let edge = cone + 2.0 * field.h;
        for j in 0..n {
            let wj = self.weights[j];
            let u = field.u[j];
            let ut = field.ut[j];
            w += wj * u.re;
            w_dot += wj * ut.re;
            w_ddot += wj * self.stencil.accel(&k, p, &re, &im, j).0;
            let modulus = u.norm();
            forcing += wj * pow_nonneg(modulus, p);
            total_abs += wj * modulus;
            if field.distance(j) > edge {
                outside_abs += wj * modulus;
            }
            kinetic += wj * ut.norm_sqr();
            potential += wj * u.norm_sqr();
            max_u = max_u.max(modulus);
            max_im = max_im.max(u.im.abs());
            if j + 1 < n {
                // flux weight at the half node
                let wh = match field.kind {
                    GridKind::Radial => {
                        unit_sphere_area(field.n) * ((j as f64 + 0.5) * field.h).powi(field.n as i32 - 1) * field.h
                    }
                    GridKind::Line { .. } => field.h,
                };
                let du = (field.u[j + 1] - u) / field.h;
                gradient += wh * du.norm_sqr();
            }
        }
        let energy = 0.5 * (kinetic / k.c2 + k.inv_a2 * gradient + k.mass_sq * potential);
        let jensen = if self.model.lambda == 0.0 {
            0.0
        } else {
            self.model.b(t)? * pow_nonneg(w.abs(), p)
        };
        Ok(Observation {
            t,
            w,
            w_dot,
            w_ddot,
            support_radius: relative_support_radius(field, self.floor_rel),
            cone_radius: cone,
            energy,
            outside_mass: if total_abs > 0.0 { outside_abs / total_abs } else { 0.0 },
            forcing: k.forcing * forcing,
            jensen_bound: jensen,
            mass_sq: k.mass_sq,
            max_abs_u: max_u,
            max_abs_imag: max_im,
        })
    }
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Evolves `field` up to `t_end`, recording observables every
/// `output_dt` and at every accepted step once `|W|` exceeds `1e3 |W(0)|`
/// (steps shrink geometrically towards a singularity, so the records do
/// too).
pub fn evolve(field: &mut PdeField, model: &PdeModel, t_end: f64, controls: &PdeControls) -> Result<PdeRun> {
    let params = *model.geom.params();
    if field.n != params.n {
        return Err(Error::Configuration(format!(
            "field dimension {} differs from background dimension {}",
            field.n, params.n
        )));
    }
    let end = model.geom.end();
    if !(t_end.is_finite() && t_end > field.t) {
        return Err(Error::invalid(
            "t_end",
            "end time must be finite and after the current time",
        ));
    }
    if t_end > end {
        return Err(Error::domain(t_end, format!("beyond the horizon T0 = {end}")));
    }
    if !(controls.output_dt > 0.0) {
        return Err(Error::invalid("output_dt", "output interval must be positive"));
    }
    let stop = if end.is_finite() {
        t_end.min(end * (1.0 - HORIZON_STOP))
    } else {
        t_end
    };
    let cone_end = model.geom.comoving_radius(stop)?;
    if field.extent() < cone_end {
        return Err(Error::DomainTooSmall {
            r_max: field.extent(),
            cone: cone_end,
        });
    }
    let a_min = model.min_scale(field.t, stop)?;
    let cap = cfl_step(field.h, params.c, params.n, a_min);
    if let Some(step) = controls.fixed_step {
        if !(step > 0.0 && step <= cap) {
            return Err(Error::Configuration(format!(
                "fixed step {step} violates the CFL limit {cap}"
            )));
        }
    }

    let diag = Diagnostics {
        model,
        stencil: Stencil::new(field),
        weights: field.quadrature_weights(),
        floor_rel: controls.support_floor_rel,
    };
    let mut schedule: Vec<f64> = Vec::new();
    let mut k = 1usize;
    loop {
        let t = field.t + k as f64 * controls.output_dt;
        if t >= stop * (1.0 - 1e-14) {
            break;
        }
        schedule.push(t);
        k += 1;
    }
    schedule.extend(
        controls
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > field.t && t < stop),
    );
    schedule.push(stop);
    schedule.sort_by(f64::total_cmp);
    schedule.dedup();

    let mut observations = vec![diag.observe(field)?];
    let mut snapshots = Vec::new();
    if controls.snapshot_times.contains(&field.t) {
        snapshots.push(field.clone());
    }
    let w_ref = observations[0].w.abs();
    let dense_level = 1e3 * w_ref.max(f64::MIN_POSITIVE);
    let blowup_level = BLOWUP_MAGNITUDE * w_ref.max(1.0);
    let ctl = RkControls {
        rtol: controls.rtol,
        atol: controls.atol,
        h_init: controls.fixed_step,
        h_max: cap,
        max_steps: controls.max_steps,
        fixed_step: controls.fixed_step,
    };
    let mut y = field.pack();
    let mut h_next: Option<f64> = None;
    let mut steps = 0usize;
    let mut termination = Termination::ReachedHorizon;
    let mut blowup_time = None;
    let mut error: Option<Error> = None;
    let len = field.len();

    for &target in &schedule {
        let seg_ctl = RkControls {
            h_init: h_next.or(ctl.h_init),
            max_steps: ctl.max_steps.saturating_sub(steps),
            ..ctl
        };
        let mut scratch = field.clone();
        let mut blew = false;
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| match diag.coefficients(t) {
            Ok(k) => diag.stencil.rhs(&k, model.p, y, dy),
            Err(_) => dy.iter_mut().for_each(|v| *v = f64::NAN),
        };
        let res = dopri5(rhs, field.t, &y, target, &seg_ctl, |t, state, h| {
            if !controls.detect_blowup && model.lambda == 0.0 {
                return Flow::Continue;
            }
            let w: f64 = diag.weights.iter().zip(&state[..len]).map(|(a, b)| a * b).sum();
            if w.abs() > dense_level {
                scratch.unpack(t, state);
                match diag.observe(&scratch) {
                    Ok(o) => observations.push(o),
                    Err(e) => {
                        error = Some(e);
                        return Flow::Stop;
                    }
                }
            }
            if controls.detect_blowup && w.abs() > blowup_level && h.abs() < BLOWUP_STEP * t.max(1.0) {
                blew = true;
                return Flow::Stop;
            }
            Flow::Continue
        });
        if let Some(e) = error.take() {
            return Err(e);
        }
        steps += res.steps;
        h_next = Some(res.h_next.abs());
        y = res.y;
        field.unpack(res.t, &y);
        match res.status {
            RkStatus::Reached => {
                if observations.last().map(|o| o.t) != Some(field.t) {
                    observations.push(diag.observe(field)?);
                }
                if controls.snapshot_times.contains(&target) {
                    snapshots.push(field.clone());
                }
            }
            RkStatus::Stopped if blew => {
                termination = Termination::BlowupThreshold;
                blowup_time = Some(field.t);
                break;
            }
            RkStatus::Stopped => break,
            RkStatus::StepUnderflow | RkStatus::NonFinite => {
                termination = Termination::StepUnderflow;
                break;
            }
            RkStatus::MaxSteps => {
                termination = Termination::MaxSteps;
                break;
            }
        }
    }
    Ok(PdeRun {
        observations,
        termination,
        blowup_time,
        snapshots,
        steps,
        grid_h: field.h,
        r_max: field.extent(),
        support_floor_rel: controls.support_floor_rel,
    })
}

/// Field over `[0, r_max_factor * cone(t_end)]` carrying the given data.
pub fn prepare_field(
    model: &PdeModel,
    data: &InitialData,
    kind: GridKind,
    h: f64,
    t_end: f64,
    r_max_factor: f64,
) -> Result<PdeField> {
    if !(r_max_factor >= 1.0) {
        return Err(Error::invalid("r_max_factor", "outer radius factor must be at least 1"));
    }
    let end = model.geom.end();
    let stop = if end.is_finite() {
        t_end.min(end * (1.0 - HORIZON_STOP))
    } else {
        t_end
    };
    let cone = model.geom.comoving_radius(stop)?;
    PdeField::from_data(kind, h, r_max_factor * cone, data)
}

/// Containment of the numerical support in the forward cone at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeCheckRow {
    pub t: f64,
    pub support_radius: f64,
    pub cone_radius: f64,
    pub allowance: f64,
    pub outside_mass: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeReport {
    pub all_hold: bool,
    /// The background is tabulated and not monotone, so containment is
    /// checked but not backed by theory.
    pub outside_proven_regime: bool,
    pub max_outside_mass: f64,
    pub rows: Vec<ConeCheckRow>,
}

/// Allowance beyond the cone for the dispersive front of the centred
/// scheme. After a comoving distance `L` the front has the Airy width
/// `l = (L h^2 / 8)^{1/3}` and drops to the relative floor `f` within
/// `l (1.5 ln(1/f))^{2/3}`; two cells are added for the grid itself.
pub fn cone_allowance(h: f64, travelled: f64, floor_rel: f64) -> f64 {
    let width = (travelled.max(0.0) * h * h / 8.0).cbrt();
    let decay = (1.5 * (1.0 / floor_rel).ln().max(0.0)).powf(2.0 / 3.0);
    2.0 * h + width * decay
}

/// Checks `support_radius <= cone + allowance` at every recorded time.
pub fn cone_containment_check(run: &PdeRun, geom: &ConeGeometry) -> Result<ConeReport> {
    let r0 = geom.r0();
    let mut rows = Vec::with_capacity(run.observations.len());
    for o in &run.observations {
        let cone = geom.comoving_radius(o.t)?;
        let allowance = cone_allowance(run.grid_h, cone - r0, run.support_floor_rel);
        rows.push(ConeCheckRow {
            t: o.t,
            support_radius: o.support_radius,
            cone_radius: cone,
            allowance,
            outside_mass: o.outside_mass,
            holds: o.support_radius <= cone + allowance,
        });
    }
    let outside_proven_regime = match geom.scale() {
        ScaleModel::Tabulated(tab) => !tab.is_monotone(),
        ScaleModel::ClosedForm(_) => false,
    };
    Ok(ConeReport {
        all_hold: rows.iter().all(|r| r.holds),
        outside_proven_regime,
        max_outside_mass: rows.iter().map(|r| r.outside_mass).fold(0.0, f64::max),
        rows,
    })
}

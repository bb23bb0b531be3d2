//! Dormand-Prince 5(4) with FSAL, step-size control in the max norm, and an
//! observer hook called after every accepted step.

/// Observer verdict after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkControls {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated from the right-hand side when absent.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Constant step without error control.
    pub fixed_step: Option<f64>,
}

impl Default for RkControls {
    fn default() -> Self {
        RkControls {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
            fixed_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Reached,
    Stopped,
    StepUnderflow,
    NonFinite,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RkResult {
    pub t: f64,
    pub y: Vec<f64>,
    /// Step the controller proposes next (signed).
    pub h_next: f64,
    pub steps: usize,
    pub rejected: usize,
    pub status: RkStatus,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }
}

/// One step from `(t, y)` with `k[0] = f(t, y)` already filled; leaves the
/// fifth-order solution in `y_new`, `f(t+h, y_new)` in `k[6]`, and returns
/// the scaled max-norm error estimate.
fn step<F: FnMut(f64, &[f64], &mut [f64])>(
    f: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    s: &mut Stages,
    rtol: f64,
    atol: f64,
) -> f64 {
    let n = y.len();
    let [k1, k2, k3, k4, k5, k6, k7] = &mut s.k;
    let tmp = &mut s.tmp;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    f(t + C2 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    f(t + C3 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    f(t + C4 * h, tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    f(t + C5 * h, tmp, k5);
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    f(t + h, tmp, k6);
    let y_new = &mut s.y_new;
    for i in 0..n {
        y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    f(t + h, y_new, k7);
    let mut err: f64 = 0.0;
    for i in 0..n {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
        let r = (e / sc).abs();
        if r.is_nan() {
            return f64::NAN;
        }
        err = err.max(r);
    }
    err
}

fn max_norm_scaled(v: &[f64], y: &[f64], rtol: f64, atol: f64) -> f64 {
    v.iter()
        .zip(y)
        .map(|(x, yi)| (x / (atol + rtol * yi.abs())).abs())
        .fold(0.0, f64::max)
}

/// Starting step from the size of `y`, `f` and a second-derivative probe.
fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    ctl: &RkControls,
) -> f64 {
    let d0 = max_norm_scaled(y, y, ctl.rtol, ctl.atol);
    let d1 = max_norm_scaled(f0, y, ctl.rtol, ctl.atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = max_norm_scaled(&diff, y, ctl.rtol, ctl.atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctl.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `observe(t, y, h_next)` runs after each accepted step and may stop the
/// integration.
pub fn dopri5<F, O>(mut f: F, t0: f64, y0: &[f64], t_end: f64, ctl: &RkControls, mut observe: O) -> RkResult
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64], f64) -> Flow,
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut s = Stages::new(dim);
    let finish = |t: f64, y: Vec<f64>, h: f64, steps, rejected, status| RkResult {
        t,
        y,
        h_next: h,
        steps,
        rejected,
        status,
    };
    if t == t_end {
        return finish(t, y, 0.0, 0, 0, RkStatus::Reached);
    }
    f(t, &y, &mut s.k[0]);
    let mut h = match (ctl.fixed_step, ctl.h_init) {
        (Some(hf), _) => hf.abs(),
        (None, Some(h0)) => h0.abs(),
        (None, None) => initial_step(&mut f, t, &y, &s.k[0], dir, ctl),
    }
    .min(ctl.h_max)
        * dir;
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut last_accepted = false;
    loop {
        if steps >= ctl.max_steps {
            return finish(t, y, h, steps, rejected, RkStatus::MaxSteps);
        }
        let remaining = t_end - t;
        let mut last = false;
        let mut h_try = h;
        if (h_try.abs()) >= remaining.abs() * (1.0 - 1e-12) {
            h_try = remaining;
            last = true;
        }
        let tiny = 16.0 * f64::EPSILON * t.abs().max(1e-300);
        if h_try.abs() <= tiny {
            return finish(t, y, h, steps, rejected, RkStatus::StepUnderflow);
        }
        let err = step(&mut f, t, &y, h_try, &mut s, ctl.rtol, ctl.atol);
        if ctl.fixed_step.is_some() {
            if !s.y_new.iter().all(|v| v.is_finite()) {
                return finish(t, y, h, steps, rejected, RkStatus::NonFinite);
            }
            steps += 1;
            t = if last { t_end } else { t + h_try };
            y.copy_from_slice(&s.y_new);
            s.k.swap(0, 6);
            if observe(t, &y, h) == Flow::Stop {
                return finish(t, y, h, steps, rejected, RkStatus::Stopped);
            }
            if last {
                return finish(t, y, h, steps, rejected, RkStatus::Reached);
            }
            continue;
        }
        if !err.is_finite() || !s.y_new.iter().all(|v| v.is_finite()) {
            rejected += 1;
            h = h_try * 0.2;
            if h.abs() <= tiny {
                return finish(t, y, h, steps, rejected, RkStatus::NonFinite);
            }
            last_accepted = false;
            continue;
        }
        if err <= 1.0 {
            steps += 1;
            t = if last { t_end } else { t + h_try };
            y.copy_from_slice(&s.y_new);
            s.k.swap(0, 6);
            let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if !last_accepted {
                // no growth right after a rejection
                fac = fac.min(1.0);
            }
            let h_new = (h_try.abs() * fac).min(ctl.h_max) * dir;
            // keep the proposal when the final step was clipped short
            h = if last { h.abs().max(h_new.abs()) * dir } else { h_new };
            last_accepted = true;
            if observe(t, &y, h) == Flow::Stop {
                return finish(t, y, h, steps, rejected, RkStatus::Stopped);
            }
            if last {
                return finish(t, y, h, steps, rejected, RkStatus::Reached);
            }
        } else {
            rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h = h_try * fac;
            last_accepted = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let r = dopri5(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            5.0,
            &RkControls::default(),
            |_, _, _| Flow::Continue,
        );
        assert_eq!(r.status, RkStatus::Reached);
        assert_eq!(r.t, 5.0);
        assert!((r.y[0] - (-5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_backward() {
        let f = |_: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let ctl = RkControls::default();
        let fw = dopri5(f, 0.0, &[1.0, 0.0], 10.0, &ctl, |_, _, _| Flow::Continue);
        let bw = dopri5(f, 10.0, &fw.y, 0.0, &ctl, |_, _, _| Flow::Continue);
        assert!((bw.y[0] - 1.0).abs() < 1e-8 && bw.y[1].abs() < 1e-8);
    }

    #[test]
    fn fixed_step_fifth_order() {
        let run = |h: f64| {
            let ctl = RkControls {
                fixed_step: Some(h),
                ..Default::default()
            };
            let r = dopri5(
                |_, y, dy| dy[0] = y[0],
                0.0,
                &[1.0],
                1.0,
                &ctl,
                |_, _, _| Flow::Continue,
            );
            (r.y[0] - 1f64.exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 25.0 && ratio < 40.0, "ratio {ratio}");
    }

    #[test]
    fn observer_stops() {
        let r = dopri5(
            |_, _, dy| dy[0] = 1.0,
            0.0,
            &[0.0],
            10.0,
            &RkControls::default(),
            |_, y, _| if y[0] > 1.0 { Flow::Stop } else { Flow::Continue },
        );
        assert_eq!(r.status, RkStatus::Stopped);
        assert!(r.y[0] > 1.0);
    }
}

//! Small numerical kernels shared by the solver modules.

use std::f64::consts::PI;

/// `x^y` for `x >= 0` computed as `exp(y ln x)`, with `0^y = 0`.
///
/// Negative `x` yields NaN so that sign errors surface instead of being
/// silently folded into a real power.
pub fn pow_nonneg(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x > 0.0 {
        (y * x.ln()).exp()
    } else {
        f64::NAN
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    // omega_n = 2 pi / n * omega_{n-2}
    let (mut vol, mut k) = if n.is_multiple_of(2) { (1.0, 0) } else { (2.0, 1) };
    while k < n {
        k += 2;
        vol *= 2.0 * PI / k as f64;
    }
    vol
}

/// Surface area of the unit sphere in `R^n`, `n * omega_n`.
pub fn unit_sphere_area(n: u32) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Maximum number of subintervals the adaptive Simpson rule may create.
pub const SIMPSON_MAX_INTERVALS: usize = 1 << 20;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `rtol`.
///
/// Works with an explicit stack; once the interval budget is exhausted the
/// remaining panels are accepted with their Richardson-corrected estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        depth: u32,
    }
    let simpson = |a: f64, b: f64, fa: f64, fm: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);

    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    // Coarse magnitude for the absolute floor of the local test.
    let scale = whole.abs().max(f64::MIN_POSITIVE);

    let mut total = 0.0;
    let mut intervals = 1usize;
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        depth: 0,
    }];
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let diff = left + right - p.whole;
        let width_share = (p.b - p.a) / (b - a);
        let tol = rtol * scale.max((left + right).abs()) * width_share.abs();
        if diff.abs() <= 15.0 * tol || intervals >= SIMPSON_MAX_INTERVALS || p.depth > 60 {
            total += left + right + diff / 15.0;
        } else {
            intervals += 1;
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                depth: p.depth + 1,
            });
        }
    }
    total
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `rtol * max(|x|, 1e-300)` and
/// returns `(x_min, f(x_min))`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, rtol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= rtol * mid.abs().max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Natural cubic spline through `(xs[i], ys[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Requires at least two strictly increasing abscissae.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n);
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
                if i > 1 {
                    let w = h0 / diag[i - 1];
                    diag[i] -= w * upper[i - 1];
                    rhs[i] -= w * rhs[i - 1];
                }
            }
            m[n - 2] = rhs[n - 2] / diag[n - 2];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
            }
        }
        CubicSpline { xs, ys, m }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Index `i` of the knot interval `[xs[i], xs[i+1]]` containing `x`.
    pub fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Width of the knot interval containing `x`.
    pub fn local_spacing(&self, x: f64) -> f64 {
        let i = self.interval(x);
        self.xs[i + 1] - self.xs[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn pow_conventions() {
        assert_eq!(pow_nonneg(0.0, 0.5), 0.0);
        assert!((pow_nonneg(4.0, 0.5) - 2.0).abs() < 1e-15);
        assert!(pow_nonneg(-1.0, 2.0).is_nan());
    }

    #[test]
    fn simpson_integrates_exponential() {
        let v = adaptive_simpson(|x| (-x).exp(), 0.0, 30.0, 1e-12);
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spline_reproduces_cubic_interior() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::new(xs, ys);
        for &x in &[0.5, 1.0, 1.234] {
            assert!((s.eval(x) - f64::sin(x)).abs() < 1e-8);
        }
    }
}

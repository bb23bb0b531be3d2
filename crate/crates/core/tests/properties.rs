use proptest::prelude::*;

use flrw_blowup::certificate::{
    certify, compute_a, compute_b, envelope, envelope_pole, lifespan, q_constant, CorollaryCase, TheoremInputs,
    TheoremParams,
};
use flrw_blowup::cone::{ConeGeometry, Monotonicity};
use flrw_blowup::cosmology::{curved_mass_sq_from_scale, CosmologyParams, ScaleModel};
use flrw_blowup::ode::{dopri5, Flow, RkControls, RkStatus};
use flrw_blowup::pde::{make_initial_data, observable_w, GridKind, PdeField};

/// Backgrounds outside the excluded region.
fn background() -> impl Strategy<Value = CosmologyParams> {
    (
        1u32..=4,
        0.5f64..2.0,
        0.5f64..2.0,
        -2.0f64..2.0,
        -3.0f64..3.0,
        -1.0f64..1.0,
        0u8..4,
    )
        .prop_filter_map("excluded region", |(n, c, a0, h, sigma, m2, special)| {
            let sigma = match special {
                0 => -1.0,
                1 => 0.0,
                _ => sigma,
            };
            let p = CosmologyParams::new(n, c, a0, h, sigma, m2).ok()?;
            (!p.is_excluded_region()).then_some(p)
        })
}

fn horizon_fraction(p: &CosmologyParams, frac: f64) -> f64 {
    let end = p.horizon_end();
    if end.is_finite() {
        frac * end
    } else {
        frac * 10.0
    }
}

fn theorem(n_rate: f64, w0: f64) -> TheoremParams {
    TheoremParams {
        growth_rate: n_rate,
        epsilon: 0.5,
        theta: 0.5,
        lambda: 1.0,
        p: 3.0,
        w0,
        w1: 1e3 * w0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn curved_mass_formulas_agree(p in background(), frac in 0.0f64..0.95) {
        let t = horizon_fraction(&p, frac);
        let a = p.curved_mass_sq(t).unwrap();
        let b = curved_mass_sq_from_scale(&ScaleModel::ClosedForm(p), &p, t).unwrap();
        let scale = a.abs().max(b.abs()).max(p.m_squared.abs()).max(1e-300);
        prop_assert!((a - b).abs() <= 1e-10 * scale.max(p.hubble_mass_sq()));
    }

    #[test]
    fn cone_radius_grows_from_r0(p in background(), r0 in 0.1f64..5.0, f1 in 0.0f64..0.9, f2 in 0.0f64..0.9) {
        let geom = ConeGeometry::new(p, r0).unwrap();
        prop_assert_eq!(geom.comoving_radius(0.0).unwrap(), r0);
        prop_assert_eq!(geom.q(0.0).unwrap(), r0 * r0);
        let (t1, t2) = (horizon_fraction(&p, f1.min(f2)), horizon_fraction(&p, f1.max(f2)));
        let (r1, r2) = (geom.comoving_radius(t1).unwrap(), geom.comoving_radius(t2).unwrap());
        prop_assert!(r2 >= r1 * (1.0 - 1e-14));
        prop_assert!((geom.ln_comoving_radius(t2).unwrap() - r2.ln()).abs() <= 1e-12 * r2.ln().abs().max(1.0));
        prop_assert!(geom.q(t2).unwrap() > 0.0);
    }

    #[test]
    fn q_tilde_is_monotone_envelope(p in background(), r0 in 0.1f64..5.0, frac in 0.0f64..0.9) {
        let geom = ConeGeometry::new(p, r0).unwrap();
        prop_assume!(geom.monotonicity() != Monotonicity::NotMonotone);
        let t = horizon_fraction(&p, frac);
        let q = geom.q(t).unwrap();
        let qt = geom.q_tilde(t).unwrap();
        prop_assert!(qt >= q * (1.0 - 1e-12));
        prop_assert!(qt >= geom.q0() * (1.0 - 1e-12));
    }

    #[test]
    fn extrema_bound_their_objectives(p in background(), r0 in 0.2f64..3.0, n_rate in 0.5f64..4.0, frac in 0.0f64..0.95) {
        let geom = ConeGeometry::new(p, r0).unwrap();
        prop_assume!(geom.monotonicity() != Monotonicity::NotMonotone);
        let inputs = TheoremInputs::new(geom.clone(), theorem(n_rate, 10.0)).unwrap();
        let t = horizon_fraction(&p, frac).max(1e-9);
        let half_n = p.n as f64 / 2.0;
        let lq = geom.ln_q_tilde(t).unwrap();
        let a = compute_a(&inputs, 512).unwrap().value;
        let a_obj = (p.c * n_rate * 0.5 * t - half_n * lq).exp();
        prop_assert!(a <= a_obj * (1.0 + 1e-9));
        if let Ok(b) = compute_b(&inputs, 512) {
            let forcing = n_rate * n_rate + p.curved_mass_sq(t).unwrap();
            let b_obj = (half_n * lq + 0.5 * forcing.max(0.0).ln() - p.c * n_rate * t).exp();
            prop_assert!(b.value >= b_obj * (1.0 - 1e-9));
        }
    }

    #[test]
    fn lifespan_scales_with_data(w0 in 1.0f64..100.0, k in 1.1f64..10.0) {
        let geom = ConeGeometry::new(CosmologyParams::minkowski(1, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        let inputs = TheoremInputs::new(geom, theorem(2.0, w0)).unwrap();
        let l1 = lifespan(&inputs, 1.0, q_constant(inputs.params()));
        let l2 = lifespan(&inputs.with_data(k * w0, 1.0), 1.0, q_constant(inputs.params()));
        // T* ~ w0^{-(p-1)/2} = w0^{-1}
        prop_assert!((l1.t_star / l2.t_star - k).abs() <= 1e-12 * k);
        let pole = envelope_pole(w0, l1.c_squared, l1.alpha);
        prop_assert!((pole - l1.t_star).abs() <= 1e-12 * l1.t_star);
    }

    #[test]
    fn envelope_increases_to_its_pole(w0 in 0.5f64..50.0, c2 in 0.01f64..10.0, alpha in 1.05f64..3.0, f1 in 0.0f64..0.99, f2 in 0.0f64..0.99) {
        let pole = envelope_pole(w0, c2, alpha);
        let (t1, t2) = (f1.min(f2) * pole, f1.max(f2) * pole);
        let (e1, e2) = (envelope(w0, c2, alpha, t1).unwrap(), envelope(w0, c2, alpha, t2).unwrap());
        prop_assert!(e1 >= w0 * (1.0 - 1e-14));
        prop_assert!(e2 >= e1 * (1.0 - 1e-14));
        prop_assert!(envelope(w0, c2, alpha, pole * 1.01).is_err());
    }

    #[test]
    fn certificate_is_monotone_in_w0(w0 in 0.5f64..40.0, k in 1.0f64..4.0) {
        let geom = ConeGeometry::new(CosmologyParams::minkowski(1, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        let inputs = TheoremInputs::new(geom, theorem(2.0, w0)).unwrap();
        // w1 large enough for both data sizes
        let big_w1 = 1e6;
        let low = certify(&inputs.with_data(w0, big_w1));
        let high = certify(&inputs.with_data(k * w0, big_w1));
        prop_assert!(!low.valid || high.valid);
        prop_assert!(high.t_star <= low.t_star * (1.0 + 1e-12));
    }

    #[test]
    fn case_partition_is_exclusive(h in -3.0f64..3.0, sigma in -3.0f64..3.0, pick in 0u8..4) {
        let h = if pick == 0 { 0.0 } else { h };
        let sigma = match pick { 1 => -1.0, 2 => 0.0, _ => sigma };
        let p = CosmologyParams::new(1, 1.0, 1.0, h, sigma, 0.0).unwrap();
        let case = CorollaryCase::partition(h, sigma);
        prop_assert_eq!(case.is_none(), p.is_excluded_region());
    }

    #[test]
    fn initial_data_integral(n in 1u32..=4, r0 in 0.2f64..3.0, w0 in -10.0f64..10.0) {
        let data = make_initial_data(n, r0, w0, 0.0).unwrap();
        let field = PdeField::from_data(GridKind::Radial, r0 / 4000.0, 1.2 * r0, &data).unwrap();
        let w = observable_w(&field);
        prop_assert!((w - w0).abs() <= 1e-6 * w0.abs().max(1e-12));
    }

    #[test]
    fn dopri5_tracks_exponential(rate in -3.0f64..3.0, t_end in 0.1f64..3.0) {
        let res = dopri5(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = rate * y[0],
            0.0,
            &[1.0],
            t_end,
            &RkControls::default(),
            |_, _, _| Flow::Continue,
        );
        prop_assert_eq!(res.status, RkStatus::Reached);
        prop_assert!((res.y[0] - (rate * t_end).exp()).abs() <= 1e-8 * (rate * t_end).exp());
    }
}

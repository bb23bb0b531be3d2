use num_complex::Complex64;

use flrw_blowup::cone::ConeGeometry;
use flrw_blowup::cosmology::{CosmologyParams, ScaleModel, TabulatedScale};
use flrw_blowup::pde::{
    cone_containment_check, evolve, make_initial_data, observable_w, prepare_field, GridKind, PdeControls, PdeModel,
};
use flrw_blowup::Error;

fn model(n: u32, h: f64, sigma: f64, m2: f64, lambda: f64) -> PdeModel {
    let geom = ConeGeometry::new(CosmologyParams::new(n, 1.0, 1.0, h, sigma, m2).unwrap(), 1.0).unwrap();
    PdeModel::new(geom, lambda, 3.0).unwrap()
}

#[test]
fn linear_support_stays_in_cone_for_every_case() {
    let cases = [
        (0.0, 0.0),
        (1.0, 0.5),
        (1.0, -0.5),
        (1.0, -1.0),
        (-1.0, 0.5),
        (-1.0, 0.0),
        (-1.0, -1.0),
        (-1.0, -2.0),
    ];
    for (h, sigma) in cases {
        let m = model(1, h, sigma, 0.5, 0.0);
        let end = m.geom().end();
        let t_end = if end.is_finite() { (0.9 * end).min(1.0) } else { 1.0 };
        let data = make_initial_data(1, 1.0, 1.0, 0.5).unwrap();
        let mut field = prepare_field(&m, &data, GridKind::Radial, 2e-3, t_end, 1.25).unwrap();
        let run = evolve(&mut field, &m, t_end, &PdeControls::default()).unwrap();
        let report = cone_containment_check(&run, m.geom()).unwrap();
        assert!(report.all_hold, "H = {h}, sigma = {sigma}");
        assert!(
            report.max_outside_mass < 1e-8,
            "H = {h}, sigma = {sigma}: {}",
            report.max_outside_mass
        );
        assert!(!report.outside_proven_regime);
    }
}

#[test]
fn full_line_translation_is_exact() {
    let m = model(1, 0.5, 0.0, 1.0, 0.3);
    let data = make_initial_data(1, 1.0, 2.0, 1.0).unwrap();
    let evolved = |center: f64| {
        let mut f = prepare_field(&m, &data, GridKind::Line { center }, 5e-3, 0.5, 1.25).unwrap();
        evolve(&mut f, &m, 0.5, &PdeControls::default()).unwrap();
        f
    };
    let a = evolved(0.0);
    let b = evolved(-17.125);
    let peak = a.u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..a.len() {
        assert!((a.u[j] - b.u[j]).norm() <= 1e-12 * peak);
        assert!((b.coordinate(j) - a.coordinate(j) + 17.125).abs() < 1e-12);
    }
}

#[test]
fn real_data_stays_real() {
    let m = model(2, 1.0, 0.0, 0.5, 1.0);
    let data = make_initial_data(2, 1.0, 1.0, 0.0).unwrap();
    let mut f = prepare_field(&m, &data, GridKind::Radial, 5e-3, 0.5, 1.25).unwrap();
    let run = evolve(&mut f, &m, 0.5, &PdeControls::default()).unwrap();
    for o in &run.observations {
        assert!(o.max_abs_imag <= 1e-12 * o.max_abs_u);
    }
    assert!(f.u.iter().all(|z| z.im == 0.0));
}

#[test]
fn imaginary_part_evolves_linearly() {
    let m = model(1, 0.0, 0.0, 0.0, 1.0);
    let data = make_initial_data(1, 1.0, 1.0, 0.0).unwrap();
    let mut f = prepare_field(&m, &data, GridKind::Radial, 1e-2, 0.3, 1.25).unwrap();
    for z in f.u.iter_mut() {
        *z = Complex64::new(z.re, 0.5 * z.re);
    }
    let run = evolve(&mut f, &m, 0.3, &PdeControls::default()).unwrap();
    assert!(run.observations.last().unwrap().max_abs_imag > 0.0);
}

#[test]
fn w_obeys_its_averaged_equation() {
    let m = model(1, 0.0, 0.0, 0.0, 1.0);
    let data = make_initial_data(1, 1.0, 1.0, 0.0).unwrap();
    let mut f = prepare_field(&m, &data, GridKind::Radial, 1e-3, 0.5, 1.25).unwrap();
    let dt = 1e-3;
    let ctl = PdeControls {
        output_dt: dt,
        rtol: 1e-12,
        atol: 1e-14,
        ..Default::default()
    };
    let run = evolve(&mut f, &m, 0.5, &ctl).unwrap();
    let obs = &run.observations;
    let mut checked = 0;
    for k in 1..obs.len() - 1 {
        let (a, b, c) = (obs[k - 1], obs[k], obs[k + 1]);
        if ((b.t - a.t) - dt).abs() > 1e-12 || ((c.t - b.t) - dt).abs() > 1e-12 {
            continue;
        }
        let w_ddot = (a.w - 2.0 * b.w + c.w) / (dt * dt);
        let lhs = w_ddot + b.mass_sq * b.w;
        assert!(
            (lhs - b.forcing).abs() <= 1e-3 * b.forcing.abs().max(w_ddot.abs()),
            "t = {}",
            b.t
        );
        assert!(b.forcing >= b.jensen_bound * (1.0 - 1e-3), "t = {}", b.t);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn massless_linear_w_is_affine_in_three_dimensions() {
    let m = model(3, 0.0, 0.0, 0.0, 0.0);
    let data = make_initial_data(3, 1.0, 2.0, 3.0).unwrap();
    let mut f = prepare_field(&m, &data, GridKind::Radial, 2e-3, 1.0, 1.25).unwrap();
    let ctl = PdeControls {
        output_dt: 0.1,
        ..Default::default()
    };
    let run = evolve(&mut f, &m, 1.0, &ctl).unwrap();
    for o in &run.observations {
        let expect = 2.0 + 3.0 * o.t;
        assert!(
            (o.w - expect).abs() <= 1e-4 * expect,
            "t = {}: {} vs {expect}",
            o.t,
            o.w
        );
    }
    assert!((observable_w(&f) - 5.0).abs() < 5e-4);
}

#[test]
fn tabulated_oscillating_background_is_flagged() {
    let params = CosmologyParams::new(1, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
    let values: Vec<f64> = times.iter().map(|t| 1.0 + 0.2 * (5.0 * t).sin()).collect();
    let table = TabulatedScale::new(times, values, 2.5).unwrap();
    let geom = ConeGeometry::with_scale(params, ScaleModel::Tabulated(table), 1.0).unwrap();
    let m = PdeModel::new(geom, 0.0, 3.0).unwrap();
    let data = make_initial_data(1, 1.0, 1.0, 0.0).unwrap();
    let mut f = prepare_field(&m, &data, GridKind::Radial, 5e-3, 1.0, 1.25).unwrap();
    let run = evolve(&mut f, &m, 1.0, &PdeControls::default()).unwrap();
    let report = cone_containment_check(&run, m.geom()).unwrap();
    assert!(report.outside_proven_regime);
    assert!(report.all_hold);
}

#[test]
fn configuration_errors() {
    let m = model(1, 0.0, 0.0, 0.0, 1.0);
    let data = make_initial_data(1, 1.0, 1.0, 0.0).unwrap();
    let mut f = prepare_field(&m, &data, GridKind::Radial, 1e-2, 0.5, 1.25).unwrap();
    assert!(matches!(
        evolve(&mut f, &m, 2.0, &PdeControls::default()),
        Err(Error::DomainTooSmall { .. })
    ));
    let ctl = PdeControls {
        fixed_step: Some(1e-3),
        ..Default::default()
    };
    let run = evolve(&mut f, &m, 0.5, &ctl).unwrap();
    assert!((run.observations.last().unwrap().t - 0.5).abs() < 1e-12);
    let crunch = model(1, -1.0, 0.0, 0.0, 1.0);
    let mut g = prepare_field(&crunch, &data, GridKind::Radial, 1e-2, 1.0, 1.25).unwrap();
    assert!(matches!(
        evolve(&mut g, &crunch, 3.0, &PdeControls::default()),
        Err(Error::Domain { .. })
    ));
}

use approx::assert_relative_eq;
use proptest::prelude::*;
use shockint_core::eos::{AnalyticEos, EosModel, FluidState, RiemannPair};

fn jet_fd(eos: &EosModel, p: RiemannPair) {
    let j = eos.speed_jet(&p).unwrap();
    let h = 1e-5;
    let at = |a: f64, b: f64| eos.speed_jet(&RiemannPair::new(a, b)).unwrap();
    let (pa, ma) = (at(p.alpha + h, p.beta), at(p.alpha - h, p.beta));
    let (pb, mb) = (at(p.alpha, p.beta + h), at(p.alpha, p.beta - h));
    let tol = 1e-6 * (1.0 + j.c_out.abs());
    assert!((j.d_out[0] - (pa.c_out - ma.c_out) / (2.0 * h)).abs() < tol);
    assert!((j.d_out[1] - (pb.c_out - mb.c_out) / (2.0 * h)).abs() < tol);
    assert!((j.d_in[0] - (pa.c_in - ma.c_in) / (2.0 * h)).abs() < tol);
    assert!((j.d_in[1] - (pb.c_in - mb.c_in) / (2.0 * h)).abs() < tol);
    let tol2 = 1e-5 * (1.0 + j.dd_out[0].abs() + j.dd_out[2].abs());
    assert!((j.dd_out[0] - (pa.d_out[0] - ma.d_out[0]) / (2.0 * h)).abs() < tol2);
    assert!((j.dd_out[1] - (pb.d_out[0] - mb.d_out[0]) / (2.0 * h)).abs() < tol2);
    assert!((j.dd_out[2] - (pb.d_out[1] - mb.d_out[1]) / (2.0 * h)).abs() < tol2);
    assert!((j.dd_in[0] - (pa.d_in[0] - ma.d_in[0]) / (2.0 * h)).abs() < tol2);
    assert!((j.dd_in[2] - (pb.d_in[1] - mb.d_in[1]) / (2.0 * h)).abs() < tol2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn riemann_round_trip(
        kappa in 0.2f64..3.0,
        gamma in 1.1f64..3.5,
        rho in 0.05f64..10.0,
        w in -5.0f64..5.0,
    ) {
        let eos = EosModel::polytropic(kappa, gamma).unwrap();
        let state = FluidState { rho, w };
        let back = eos.to_fluid(&eos.to_riemann(&state).unwrap()).unwrap();
        prop_assert!((back.rho - rho).abs() <= 1e-11 * rho);
        prop_assert!((back.w - w).abs() <= 1e-11 * (1.0 + w.abs()));
    }

    #[test]
    fn speeds_bracket_flow_velocity(
        gamma in 1.1f64..3.5,
        rho in 0.05f64..10.0,
        w in -5.0f64..5.0,
    ) {
        let eos = EosModel::polytropic(1.0, gamma).unwrap();
        let s = eos.char_speeds(&eos.to_riemann(&FluidState { rho, w }).unwrap()).unwrap();
        let eta = eos.sound_speed(rho);
        prop_assert!((s.c_out - (w + eta)).abs() < 1e-11 * (1.0 + eta + w.abs()));
        prop_assert!((s.c_in - (w - eta)).abs() < 1e-11 * (1.0 + eta + w.abs()));
    }

    #[test]
    fn speed_jet_matches_differences(
        gamma in 1.2f64..3.0,
        rho in 0.3f64..4.0,
        w in -2.0f64..2.0,
    ) {
        let eos = EosModel::polytropic(0.7, gamma).unwrap();
        jet_fd(&eos, eos.to_riemann(&FluidState { rho, w }).unwrap());
    }
}

#[test]
fn pressure_derivative_is_sound_speed_squared() {
    let eos = EosModel::polytropic(0.5, 1.4).unwrap();
    for &rho in &[0.1, 1.0, 7.0] {
        let h = 1e-6 * rho;
        let dp = (eos.pressure(rho + h) - eos.pressure(rho - h)) / (2.0 * h);
        assert_relative_eq!(dp, eos.sound_speed(rho).powi(2), max_relative = 1e-8);
    }
}

#[test]
fn closures_reproduce_polytropic_model() {
    let (kappa, gamma) = (1.3, 5.0 / 3.0);
    let poly = EosModel::polytropic(kappa, gamma).unwrap();
    let c = (gamma * kappa).sqrt();
    let ex = (gamma - 1.0) / 2.0;
    let analytic: EosModel = AnalyticEos::new(
        move |r| kappa * r.powf(gamma),
        move |r| gamma * kappa * r.powf(gamma - 1.0),
        move |r| 2.0 * c * r.powf(ex) / (gamma - 1.0),
        0.0,
        20.0,
    )
    .unwrap()
    .into();
    for &(rho, w) in &[(0.2, -1.0), (1.0, 0.0), (3.7, 2.5)] {
        let s = FluidState { rho, w };
        let a = analytic.to_riemann(&s).unwrap();
        let p = poly.to_riemann(&s).unwrap();
        assert_relative_eq!(a.alpha, p.alpha, max_relative = 1e-13);
        let back = analytic.to_fluid(&a).unwrap();
        assert_relative_eq!(back.rho, rho, max_relative = 1e-10);
        let ja = analytic.speed_jet(&a).unwrap();
        let jp = poly.speed_jet(&p).unwrap();
        assert_relative_eq!(ja.d_out[0], jp.d_out[0], max_relative = 1e-6);
        assert_relative_eq!(ja.dd_out[0], jp.dd_out[0], max_relative = 1e-3, epsilon = 1e-6);
    }
}

#[test]
fn isothermal_closure_has_unbounded_potential() {
    // p = rho, F = ln rho
    let eos: EosModel = AnalyticEos::new(|r| r, |_| 1.0, |r: f64| r.ln(), 0.0, 10.0)
        .unwrap()
        .with_inverse_potential(|s: f64| s.exp())
        .into();
    assert_eq!(eos.potential_floor(), f64::NEG_INFINITY);
    let p = eos.to_riemann(&FluidState { rho: 0.01, w: 0.3 }).unwrap();
    let back = eos.to_fluid(&p).unwrap();
    assert_relative_eq!(back.rho, 0.01, max_relative = 1e-12);
    jet_fd(&eos, p);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(EosModel::polytropic(-1.0, 2.0).is_err());
    assert!(EosModel::polytropic(1.0, 1.0).is_err());
    assert!(AnalyticEos::new(|r| -r, |_| -1.0, |r: f64| r, 0.0, 1.0).is_err());
    let eos = EosModel::polytropic(1.0, 2.0).unwrap();
    assert!(eos.to_riemann(&FluidState { rho: -1.0, w: 0.0 }).is_err());
    assert!(eos.to_fluid(&RiemannPair::new(-1.0, 0.0)).is_err());
}

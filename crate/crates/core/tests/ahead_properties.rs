use std::sync::Arc;

use proptest::prelude::*;
use shockint_core::ahead::{
    ahead_pde_residual, AheadField, AnalyticAhead, BoundaryChar, SimpleWave, TanhProfile, WaveFamily,
};
use shockint_core::eos::{EosModel, FluidState, RiemannPair};
use shockint_core::error::Error;
use shockint_core::jump::ShockSide;

fn eos() -> EosModel {
    EosModel::polytropic(1.0, 2.0).unwrap()
}

fn wave(family: WaveFamily, amp: f64, width: f64) -> Result<SimpleWave, Error> {
    let e = eos();
    let p = e.to_riemann(&FluidState { rho: 1.0, w: 0.0 }).unwrap();
    let (fixed, base) = match family {
        WaveFamily::Out => (p.beta, p.alpha),
        WaveFamily::In => (p.alpha, p.beta),
    };
    SimpleWave::new(
        e,
        family,
        fixed,
        Arc::new(TanhProfile {
            base,
            amp,
            width,
            center: 0.0,
        }),
        0.5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simple_waves_are_classical_solutions(
        out in any::<bool>(),
        amp in 0.01f64..0.3,
        width in 0.1f64..0.5,
        t in 0.0f64..0.45,
        x in -1.0f64..1.0,
    ) {
        // expansive sign for each family, so no focusing within the horizon
        let (family, amp) = if out { (WaveFamily::Out, amp) } else { (WaveFamily::In, -amp) };
        let w = wave(family, amp, width).unwrap();
        let field = AheadField::new(ShockSide::Right, Arc::new(w));
        let h = 1e-6;
        let d = field.partials(t + h, x).unwrap();
        let fx = |q: fn(RiemannPair) -> f64| {
            (q(field.eval(t + h, x + h).unwrap()) - q(field.eval(t + h, x - h).unwrap())) / (2.0 * h)
        };
        let ft = |q: fn(RiemannPair) -> f64| {
            (q(field.eval(t + 2.0 * h, x).unwrap()) - q(field.eval(t, x).unwrap())) / (2.0 * h)
        };
        let tol = 1e-6 * (1.0 + amp.abs() / width);
        prop_assert!((d.alpha_x - fx(|p| p.alpha)).abs() < tol);
        prop_assert!((d.beta_x - fx(|p| p.beta)).abs() < tol);
        prop_assert!((d.alpha_t - ft(|p| p.alpha)).abs() < tol);
        prop_assert!((d.beta_t - ft(|p| p.beta)).abs() < tol);
        let r = ahead_pde_residual(&eos(), &field, 0.45, (x - 0.2, x + 0.2), 6).unwrap();
        prop_assert!(r < 1e-10, "pde residual {}", r);
    }

    #[test]
    fn boosts_commute_with_the_pde(b in -1.0f64..1.0) {
        let field = AheadField::new(ShockSide::Right, Arc::new(wave(WaveFamily::Out, 0.1, 0.2).unwrap()));
        let r = ahead_pde_residual(&eos(), &field.boosted(b), 0.4, (-0.5, 0.5), 8).unwrap();
        prop_assert!(r < 1e-10);
        let r = ahead_pde_residual(&eos(), &field.mirrored().boosted(b), 0.4, (-0.5, 0.5), 8).unwrap();
        prop_assert!(r < 1e-10);
    }
}

#[test]
fn compressive_profiles_focus() {
    assert!(matches!(
        wave(WaveFamily::Out, -0.5, 0.01),
        Err(Error::CharacteristicFocusing(_))
    ));
    assert!(matches!(
        wave(WaveFamily::In, 0.5, 0.01),
        Err(Error::CharacteristicFocusing(_))
    ));
}

#[test]
fn boundary_characteristic_follows_its_family() {
    let e = eos();
    let w = wave(WaveFamily::Out, 0.1, 0.2).unwrap();
    let field = AheadField::new(ShockSide::Right, Arc::new(w));
    let bc = BoundaryChar::new(&e, &field).unwrap();
    let h = 1e-4;
    for &t in &[0.05, 0.2, 0.4] {
        let x = bc.position(t).unwrap();
        let speed = (bc.position(t + h).unwrap() - bc.position(t - h).unwrap()) / (2.0 * h);
        let c = e.char_speeds(&field.eval(t, x).unwrap()).unwrap();
        assert!((speed - c.c_out).abs() < 1e-7, "{speed} vs {}", c.c_out);
        assert!(bc.contains(t, x + 0.01).unwrap() > 0.0);
        assert!(bc.contains(t, x - 0.01).unwrap() < 0.0);
    }
}

#[test]
fn analytic_closure_is_accepted() {
    let e = eos();
    let p = e.to_riemann(&FluidState { rho: 1.0, w: 0.0 }).unwrap();
    let sol = AnalyticAhead::new(move |_, _| p, |_, _| Default::default(), 1.0);
    let field = AheadField::new(ShockSide::Left, Arc::new(sol));
    assert_eq!(field.eval(0.3, -2.0).unwrap(), p);
    assert!(matches!(field.eval(1.5, 0.0), Err(Error::HorizonExceeded { .. })));
}

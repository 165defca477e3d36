#![allow(dead_code)]

use std::sync::Arc;

use shockint_core::ahead::{AheadField, SimpleWave, TanhProfile, WaveFamily};
use shockint_core::eos::{EosModel, FluidState, RiemannPair};
use shockint_core::jump::ShockSide;
use shockint_core::scheme::{Problem, SchemeConfig};

pub fn gamma2() -> EosModel {
    EosModel::polytropic(1.0, 2.0).unwrap()
}

/// Ahead states `(1, +sqrt(1.5))` on the left and `(1, -sqrt(1.5))` on the right.
pub fn symmetric_pairs(eos: &EosModel) -> (RiemannPair, RiemannPair) {
    let s = 1.5f64.sqrt();
    (
        eos.to_riemann(&FluidState { rho: 1.0, w: s }).unwrap(),
        eos.to_riemann(&FluidState { rho: 1.0, w: -s }).unwrap(),
    )
}

pub fn constant_fields() -> (EosModel, AheadField, AheadField) {
    let eos = gamma2();
    let (l, r) = symmetric_pairs(&eos);
    (
        eos,
        AheadField::constant(ShockSide::Left, l, 1.0),
        AheadField::constant(ShockSide::Right, r, 1.0),
    )
}

/// Simple waves of amplitude `amp` entering both shocks.
pub fn wave_fields(amp: f64) -> (EosModel, AheadField, AheadField) {
    let eos = gamma2();
    let (l, r) = symmetric_pairs(&eos);
    let right = SimpleWave::new(
        eos.clone(),
        WaveFamily::Out,
        r.beta,
        Arc::new(TanhProfile {
            base: r.alpha,
            amp,
            width: 0.1,
            center: 0.0,
        }),
        1.0,
    )
    .unwrap();
    let left = SimpleWave::new(
        eos.clone(),
        WaveFamily::In,
        l.alpha,
        Arc::new(TanhProfile {
            base: l.beta,
            amp: -amp,
            width: 0.1,
            center: 0.0,
        }),
        1.0,
    )
    .unwrap();
    (
        eos,
        AheadField::new(ShockSide::Left, Arc::new(left)),
        AheadField::new(ShockSide::Right, Arc::new(right)),
    )
}

pub fn constant_problem(eps: f64, n: usize) -> Problem {
    let (eos, l, r) = constant_fields();
    Problem::new(eos, &l, &r, eps, n, n, SchemeConfig::default()).unwrap()
}

pub fn wave_problem(amp: f64, eps: f64, n: usize) -> Problem {
    let (eos, l, r) = wave_fields(amp);
    Problem::new(eos, &l, &r, eps, n, n, SchemeConfig::default()).unwrap()
}

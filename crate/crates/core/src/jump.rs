//! Rankine-Hugoniot conditions for barotropic shocks in Riemann invariants.
//!
//! The jump function is `J = [rho w]^2 - [rho w^2 + p][rho]` with
//! `[q] = q_plus - q_minus`, `plus` denoting the state behind the shock.

use serde::{Deserialize, Serialize};

use crate::eos::{EosModel, FluidState, RiemannPair};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShockSide {
    /// Left-moving shock, family 1: solves for `alpha_plus`.
    Left,
    /// Right-moving shock, family 2: solves for `beta_plus`.
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPair {
    pub behind: RiemannPair,
    pub ahead: RiemannPair,
}

impl JumpPair {
    pub fn new(behind: RiemannPair, ahead: RiemannPair) -> Self {
        Self { behind, ahead }
    }
}

/// `J` and its gradient in `(alpha_plus, beta_plus, alpha_minus, beta_minus)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpGradient {
    pub value: f64,
    pub scale: f64,
    pub d_alpha_plus: f64,
    pub d_beta_plus: f64,
    pub d_alpha_minus: f64,
    pub d_beta_minus: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpCoefficients {
    pub f: f64,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Determinism {
    pub ok: bool,
    pub margins: (f64, f64),
}

/// Jump function in primitive variables, with gradient
/// `[d/drho_p, d/dw_p, d/drho_m, d/dw_m]` and the magnitude scale used for
/// relative tolerances.
pub fn primitive_residual(eos: &EosModel, plus: &FluidState, minus: &FluidState) -> (f64, [f64; 4], f64) {
    let (rp, wp, rm, wm) = (plus.rho, plus.w, minus.rho, minus.w);
    let pp = eos.pressure(rp);
    let pm = eos.pressure(rm);
    let ep = eos.sound_speed(rp);
    let em = eos.sound_speed(rm);
    let jm = rp * wp - rm * wm;
    let jf = rp * wp * wp + pp - rm * wm * wm - pm;
    let jr = rp - rm;
    let value = jm * jm - jf * jr;
    let grad = [
        2.0 * jm * wp - (wp * wp + ep * ep) * jr - jf,
        2.0 * jm * rp - 2.0 * rp * wp * jr,
        -2.0 * jm * wm + (wm * wm + em * em) * jr + jf,
        -2.0 * jm * rm + 2.0 * rm * wm * jr,
    ];
    let scale = 1.0f64.max((jf * jr).abs()).max(jm * jm);
    (value, grad, scale)
}

pub fn hugoniot_residual(eos: &EosModel, jp: &JumpPair) -> Result<f64> {
    let plus = eos.to_fluid(&jp.behind)?;
    let minus = eos.to_fluid(&jp.ahead)?;
    Ok(primitive_residual(eos, &plus, &minus).0)
}

pub fn jump_gradient(eos: &EosModel, jp: &JumpPair) -> Result<JumpGradient> {
    let plus = eos.to_fluid(&jp.behind)?;
    let minus = eos.to_fluid(&jp.ahead)?;
    let (value, g, scale) = primitive_residual(eos, &plus, &minus);
    // d rho/d alpha = d rho/d beta = rho/(2 eta), d w/d alpha = -d w/d beta = 1/2
    let kp = plus.rho / (2.0 * eos.sound_speed(plus.rho));
    let km = minus.rho / (2.0 * eos.sound_speed(minus.rho));
    Ok(JumpGradient {
        value,
        scale,
        d_alpha_plus: g[0] * kp + 0.5 * g[1],
        d_beta_plus: g[0] * kp - 0.5 * g[1],
        d_alpha_minus: g[2] * km + 0.5 * g[3],
        d_beta_minus: g[2] * km - 0.5 * g[3],
    })
}

pub fn shock_speed(eos: &EosModel, jp: &JumpPair) -> Result<f64> {
    let plus = eos.to_fluid(&jp.behind)?;
    let minus = eos.to_fluid(&jp.ahead)?;
    shock_speed_fluid(&plus, &minus)
}

pub fn shock_speed_fluid(plus: &FluidState, minus: &FluidState) -> Result<f64> {
    let jr = plus.rho - minus.rho;
    if jr.abs() <= 1e-14 * plus.rho.max(minus.rho) {
        return Err(Error::DegenerateJump);
    }
    Ok((plus.rho * plus.w - minus.rho * minus.w) / jr)
}

pub const NEWTON_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 8;
/// Relative size of `J` treated as exact.
const ROUNDOFF: f64 = 1e-13;

/// Solves `J = 0` for the unknown behind invariant of `side` (`alpha_plus`
/// for `Left`, `beta_plus` for `Right`), the other behind invariant being
/// `known_behind`.
pub fn solve_hugoniot(
    eos: &EosModel,
    side: ShockSide,
    known_behind: f64,
    ahead: &RiemannPair,
    seed: f64,
    tol: f64,
) -> Result<f64> {
    let pair = |x: f64| match side {
        ShockSide::Left => RiemannPair::new(x, known_behind),
        ShockSide::Right => RiemannPair::new(known_behind, x),
    };
    let eval = |x: f64| -> Result<(f64, f64, f64)> {
        let g = jump_gradient(eos, &JumpPair::new(pair(x), *ahead))?;
        let d = match side {
            ShockSide::Left => g.d_alpha_plus,
            ShockSide::Right => g.d_beta_plus,
        };
        Ok((g.value, d, g.scale))
    };
    // one extra step once the tolerance is met, unless already at round-off
    let polish = |x: f64, r: f64, d: f64, scale: f64| -> f64 {
        if r.abs() > ROUNDOFF * scale && d != 0.0 && d.is_finite() {
            let polished = x - r / d;
            if let Ok((rp, _, _)) = eval(polished) {
                if rp.abs() < r.abs() {
                    return polished;
                }
            }
        }
        x
    };
    let mut x = seed;
    let (mut r, mut d, mut scale) = eval(x)?;
    if r.abs() <= tol * scale {
        return Ok(polish(x, r, d, scale));
    }
    for it in 0..NEWTON_MAX_ITER {
        if d == 0.0 || !d.is_finite() || d.abs() <= 1e-300 {
            return Err(Error::SingularJacobian);
        }
        let step = r / d;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = x - lambda * step;
            if let Ok((rt, dt, st)) = eval(trial) {
                if rt.abs() < r.abs() || rt.abs() <= tol * st {
                    accepted = Some((trial, rt, dt, st));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((xn, rn, dn, sn)) = accepted else {
            return Err(Error::NewtonDiverged {
                iterations: it + 1,
                residual: r.abs(),
            });
        };
        x = xn;
        r = rn;
        d = dn;
        scale = sn;
        if r.abs() <= tol * scale {
            return Ok(polish(x, r, d, scale));
        }
    }
    Err(Error::NewtonDiverged {
        iterations: NEWTON_MAX_ITER,
        residual: r.abs(),
    })
}

/// Linearisation coefficients of the shock map `H`:
/// `dH = f d(other behind) + m1 d alpha_minus + m2 d beta_minus`.
pub fn jump_coefficients(eos: &EosModel, side: ShockSide, jp: &JumpPair) -> Result<JumpCoefficients> {
    let plus = eos.to_fluid(&jp.behind)?;
    let minus = eos.to_fluid(&jp.ahead)?;
    let g = jump_gradient(eos, jp)?;
    if g.value.abs() > 1e-8 * g.scale {
        return Err(Error::NotOnHugoniot(g.value));
    }
    let v = shock_speed_fluid(&plus, &minus)?;
    let eta = eos.sound_speed(plus.rho);
    let c_out = plus.w + eta;
    let c_in = plus.w - eta;
    let lo = v - c_in;
    let hi = c_out - v;
    let tiny = 1e-12 * (1.0 + eta);
    if !(lo > tiny && hi > tiny) {
        return Err(Error::SonicDegeneracy);
    }
    Ok(match side {
        ShockSide::Left => JumpCoefficients {
            f: -(lo / hi).powi(2),
            m1: -g.d_alpha_minus / g.d_alpha_plus,
            m2: -g.d_beta_minus / g.d_alpha_plus,
        },
        ShockSide::Right => JumpCoefficients {
            f: -(hi / lo).powi(2),
            m1: -g.d_alpha_minus / g.d_beta_plus,
            m2: -g.d_beta_minus / g.d_beta_plus,
        },
    })
}

/// Lax-type determinism: `c_in+ < V < c_in-` on the left shock and
/// `c_out- < V < c_out+` on the right shock. Margins are the two gaps.
pub fn determinism_check(eos: &EosModel, side: ShockSide, jp: &JumpPair) -> Result<Determinism> {
    let plus = eos.to_fluid(&jp.behind)?;
    let minus = eos.to_fluid(&jp.ahead)?;
    let v = shock_speed_fluid(&plus, &minus)?;
    Ok(determinism_margins(eos, side, &plus, &minus, v))
}

pub fn determinism_margins(
    eos: &EosModel,
    side: ShockSide,
    plus: &FluidState,
    minus: &FluidState,
    v: f64,
) -> Determinism {
    let ep = eos.sound_speed(plus.rho);
    let em = eos.sound_speed(minus.rho);
    let margins = match side {
        ShockSide::Left => (v - (plus.w - ep), (minus.w - em) - v),
        ShockSide::Right => (v - (minus.w + em), (plus.w + ep) - v),
    };
    Determinism {
        ok: margins.0 > 0.0 && margins.1 > 0.0,
        margins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eos() -> EosModel {
        EosModel::polytropic(1.0, 2.0).unwrap()
    }

    fn reference() -> (RiemannPair, RiemannPair, RiemannPair) {
        let e = eos();
        let s = 1.5f64.sqrt();
        let behind = e.to_riemann(&FluidState { rho: 2.0, w: 0.0 }).unwrap();
        let left = e.to_riemann(&FluidState { rho: 1.0, w: s }).unwrap();
        let right = e.to_riemann(&FluidState { rho: 1.0, w: -s }).unwrap();
        (behind, left, right)
    }

    #[test]
    fn reference_states_lie_on_hugoniot() {
        let e = eos();
        let (b, l, r) = reference();
        let s = 1.5f64.sqrt();
        let jl = JumpPair::new(b, l);
        let jr = JumpPair::new(b, r);
        assert!(hugoniot_residual(&e, &jl).unwrap().abs() < 1e-13);
        assert!(hugoniot_residual(&e, &jr).unwrap().abs() < 1e-13);
        assert_relative_eq!(shock_speed(&e, &jl).unwrap(), -s, epsilon = 1e-14);
        assert_relative_eq!(shock_speed(&e, &jr).unwrap(), s, epsilon = 1e-14);
    }

    #[test]
    fn zero_strength_root_is_returned_at_seed() {
        let e = eos();
        let own = RiemannPair::new(4.0, 4.0);
        let a = solve_hugoniot(&e, ShockSide::Left, 4.0, &own, 4.0, 1e-12).unwrap();
        assert_eq!(a, 4.0);
    }

    #[test]
    fn solves_reference_left_shock() {
        let e = eos();
        let (b, l, _) = reference();
        let a = solve_hugoniot(&e, ShockSide::Left, b.beta, &l, 4.3, 1e-12).unwrap();
        assert_relative_eq!(a, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_jump() {
        let e = eos();
        let p = RiemannPair::new(3.0, 3.0);
        assert_eq!(shock_speed(&e, &JumpPair::new(p, p)), Err(Error::DegenerateJump));
    }

    #[test]
    fn coefficients_at_reference_state() {
        let e = eos();
        let (b, l, r) = reference();
        let s = 1.5f64.sqrt();
        let gamma0 = -(2.0 - s) / (2.0 + s);
        let c1 = jump_coefficients(&e, ShockSide::Left, &JumpPair::new(b, l)).unwrap();
        let c2 = jump_coefficients(&e, ShockSide::Right, &JumpPair::new(b, r)).unwrap();
        assert_relative_eq!(c1.f, -gamma0 * gamma0, epsilon = 1e-14);
        assert_relative_eq!(c2.f, -gamma0 * gamma0, epsilon = 1e-14);
        assert_relative_eq!(c1.f, -0.0577962, epsilon = 1e-7);
    }

    #[test]
    fn closed_form_gradient_on_hugoniot() {
        // d J/d alpha_plus = -([rho] rho_p / 2 eta_p)(c_out_p - V)^2 and the
        // analogous minus-side forms, which follow from the +/- symmetry of J.
        let e = eos();
        let (b, l, _) = reference();
        let jp = JumpPair::new(b, l);
        let g = jump_gradient(&e, &jp).unwrap();
        let p = e.to_fluid(&b).unwrap();
        let m = e.to_fluid(&l).unwrap();
        let v = shock_speed(&e, &jp).unwrap();
        let jr = p.rho - m.rho;
        let (ep, em) = (e.sound_speed(p.rho), e.sound_speed(m.rho));
        let kp = jr * p.rho / (2.0 * ep);
        let km = jr * m.rho / (2.0 * em);
        assert_relative_eq!(g.d_alpha_plus, -kp * (p.w + ep - v).powi(2), epsilon = 1e-12);
        assert_relative_eq!(g.d_beta_plus, -kp * (v - p.w + ep).powi(2), epsilon = 1e-12);
        assert_relative_eq!(g.d_alpha_minus, km * (m.w + em - v).powi(2), epsilon = 1e-12);
        assert_relative_eq!(g.d_beta_minus, km * (v - m.w + em).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn determinism_margins_reference() {
        let e = eos();
        let (b, l, r) = reference();
        let d1 = determinism_check(&e, ShockSide::Left, &JumpPair::new(b, l)).unwrap();
        let d2 = determinism_check(&e, ShockSide::Right, &JumpPair::new(b, r)).unwrap();
        assert!(d1.ok && d2.ok);
        let s = 1.5f64.sqrt();
        assert_relative_eq!(d1.margins.0, 2.0 - s, epsilon = 1e-14);
        assert_relative_eq!(d1.margins.1, 2.0 * s - 2.0f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(d2.margins.0, d1.margins.1, epsilon = 1e-14);
        assert_relative_eq!(d2.margins.1, d1.margins.0, epsilon = 1e-14);
        assert_relative_eq!(d1.margins.0, 0.7752551, epsilon = 1e-7);
        assert_relative_eq!(d1.margins.1, 1.0352762, epsilon = 1e-7);
    }

    #[test]
    fn expansion_branch_fails_determinism() {
        // rho_p = 1, rho_m = 2, w_m = 0 gives J = 2 w^2 - 3; w = sqrt(1.5) moves left
        let e = eos();
        let ahead = e.to_riemann(&FluidState { rho: 2.0, w: 0.0 }).unwrap();
        let w = 1.5f64.sqrt();
        let plus = FluidState { rho: 1.0, w };
        assert!(primitive_residual(&e, &plus, &FluidState { rho: 2.0, w: 0.0 }).0.abs() < 1e-14);
        let behind = e.to_riemann(&plus).unwrap();
        let d = determinism_check(&e, ShockSide::Left, &JumpPair::new(behind, ahead)).unwrap();
        assert!(!d.ok);
    }
}

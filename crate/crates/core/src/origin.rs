//! The interaction point: the state behind both shocks at `t = 0` and the
//! constants that fix the local geometry.

use serde::{Deserialize, Serialize};

use crate::ahead::{AheadField, AheadPartials};
use crate::eos::{EosModel, FluidState, RiemannPair};
use crate::error::{Error, Result};
use crate::jump::{
    determinism_margins, jump_coefficients, primitive_residual, shock_speed_fluid, JumpCoefficients, JumpPair,
    ShockSide,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginRoot {
    pub behind: FluidState,
    pub v_left: f64,
    pub v_right: f64,
    pub margins_left: (f64, f64),
    pub margins_right: (f64, f64),
}

/// Everything the scheme needs at the origin, in the frame where the
/// behind state is at rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionPointData {
    pub rho0: f64,
    pub eta0: f64,
    pub beta0: f64,
    pub shock_speed_left: f64,
    pub shock_speed_right: f64,
    pub a: f64,
    pub gamma0: f64,
    pub alpha0_prime: f64,
    pub beta0_prime: f64,
    pub det_m: f64,
    pub frame_boost: f64,
    pub coeff_left: JumpCoefficients,
    pub coeff_right: JumpCoefficients,
    pub ahead_left0: RiemannPair,
    pub ahead_right0: RiemannPair,
    pub margins_left: (f64, f64),
    pub margins_right: (f64, f64),
}

const NEWTON_ITERS: usize = 60;
const SCAN: usize = 64;

fn residuals(eos: &EosModel, x: (f64, f64), left: &FluidState, right: &FluidState) -> ([f64; 2], [[f64; 2]; 2], f64) {
    let plus = FluidState { rho: x.0, w: x.1 };
    let (r1, g1, s1) = primitive_residual(eos, &plus, left);
    let (r2, g2, s2) = primitive_residual(eos, &plus, right);
    ([r1, r2], [[g1[0], g1[1]], [g2[0], g2[1]]], s1.max(s2))
}

fn newton2(eos: &EosModel, seed: (f64, f64), left: &FluidState, right: &FluidState, tol: f64) -> Option<(f64, f64)> {
    let mut x = seed;
    let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());
    let (mut r, mut jac, mut scale) = residuals(eos, x, left, right);
    for _ in 0..NEWTON_ITERS {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let d0 = (r[0] * jac[1][1] - r[1] * jac[0][1]) / det;
        let d1 = (jac[0][0] * r[1] - jac[1][0] * r[0]) / det;
        let converged = norm(&r) <= tol * scale;
        let mut lambda = 1.0;
        let mut next = None;
        for _ in 0..12 {
            let trial = (x.0 - lambda * d0, x.1 - lambda * d1);
            if trial.0 > 0.0 {
                let (rt, jt, st) = residuals(eos, trial, left, right);
                if norm(&rt) < norm(&r) || (converged && norm(&rt) <= tol * st) {
                    next = Some((trial, rt, jt, st));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match next {
            Some((xt, rt, jt, st)) => {
                x = xt;
                r = rt;
                jac = jt;
                scale = st;
            }
            None => return if converged { Some(x) } else { None },
        }
        if converged {
            return Some(x);
        }
    }
    if norm(&r) <= tol * scale {
        Some(x)
    } else {
        None
    }
}

fn admissible(eos: &EosModel, x: (f64, f64), left: &FluidState, right: &FluidState) -> Option<OriginRoot> {
    let plus = FluidState { rho: x.0, w: x.1 };
    if !(plus.rho > 0.0) {
        return None;
    }
    let v1 = shock_speed_fluid(&plus, left).ok()?;
    let v2 = shock_speed_fluid(&plus, right).ok()?;
    let d1 = determinism_margins(eos, ShockSide::Left, &plus, left, v1);
    let d2 = determinism_margins(eos, ShockSide::Right, &plus, right, v2);
    if d1.ok && d2.ok && v1 < plus.w && plus.w < v2 {
        Some(OriginRoot {
            behind: plus,
            v_left: v1,
            v_right: v2,
            margins_left: d1.margins,
            margins_right: d2.margins,
        })
    } else {
        None
    }
}

/// Finds the behind state connected to the left ahead state by a determined
/// left-moving shock and to the right ahead state by a determined
/// right-moving shock.
pub fn solve_interaction_point(
    eos: &EosModel,
    ahead_left: &RiemannPair,
    ahead_right: &RiemannPair,
    tol: f64,
) -> Result<OriginRoot> {
    let left = eos.to_fluid(ahead_left)?;
    let right = eos.to_fluid(ahead_right)?;
    let rho_max = left.rho.max(right.rho);
    let seed = (1.5 * rho_max, 0.5 * (left.w + right.w));
    if let Some(x) = newton2(eos, seed, &left, &right, tol) {
        if let Some(root) = admissible(eos, x, &left, &right) {
            return Ok(root);
        }
    }
    // fall back to a coarse scan of seeds
    let (w_lo, w_hi) = (left.w.min(right.w), left.w.max(right.w));
    let spread = 0.5 * (w_hi - w_lo) + eos.sound_speed(rho_max);
    let mut roots: Vec<OriginRoot> = Vec::new();
    for i in 0..SCAN {
        let rho = rho_max * (8.0f64).powf((i as f64 + 0.5) / SCAN as f64);
        for j in 0..SCAN {
            let w = w_lo - spread + (w_hi - w_lo + 2.0 * spread) * (j as f64 + 0.5) / SCAN as f64;
            if let Some(x) = newton2(eos, (rho, w), &left, &right, tol) {
                if let Some(root) = admissible(eos, x, &left, &right) {
                    let dup = roots.iter().any(|r| {
                        (r.behind.rho - root.behind.rho).abs() <= 1e-8 * root.behind.rho
                            && (r.behind.w - root.behind.w).abs() <= 1e-8 * (1.0 + root.behind.w.abs())
                    });
                    if !dup {
                        roots.push(root);
                    }
                }
            }
        }
    }
    match roots.len() {
        0 => Err(Error::NoAdmissibleRoot),
        1 => Ok(roots[0]),
        n => Err(Error::AmbiguousRoot(n)),
    }
}

/// `(a, Gamma0)` from the sound speed and shock speeds in the rest frame.
pub fn geometry_constants(eta0: f64, v_left: f64, v_right: f64) -> (f64, f64) {
    let a = ((eta0 + v_left) / (eta0 - v_left)) * ((eta0 - v_right) / (eta0 + v_right));
    let gamma0 = -(eta0 + v_left) / (eta0 - v_left);
    (a, gamma0)
}

/// Slopes `(alpha0', beta0', det M)` of the behind invariants at the origin.
#[allow(clippy::too_many_arguments)]
pub fn initial_derivatives(
    eta0: f64,
    a: f64,
    gamma0: f64,
    coeff_left: &JumpCoefficients,
    coeff_right: &JumpCoefficients,
    partials_left: &AheadPartials,
    partials_right: &AheadPartials,
) -> (f64, f64, f64) {
    let (tu, xu) = ((1.0 - 1.0 / gamma0) / eta0, 1.0 / gamma0 + 1.0);
    let (tv, xv) = ((1.0 - a / gamma0) / eta0, a / gamma0 + 1.0);
    let pl = partials_left;
    let pr = partials_right;
    let a0 = coeff_left.m1 * (pl.alpha_t * tu + pl.alpha_x * xu) + coeff_left.m2 * (pl.beta_t * tu + pl.beta_x * xu);
    let b0 = coeff_right.m1 * (pr.alpha_t * tv + pr.alpha_x * xv) + coeff_right.m2 * (pr.beta_t * tv + pr.beta_x * xv);
    let f1 = coeff_left.f;
    let f2 = coeff_right.f;
    let det = 1.0 - a * f1 * f2;
    let alpha = (a0 + f1 * b0) / det;
    let beta = (b0 + a * f2 * a0) / det;
    (alpha, beta, det)
}

/// Fields seen from the frame moving with the behind state.
pub fn normalize_frame(left: &AheadField, right: &AheadField, w0: f64) -> (AheadField, AheadField) {
    (left.boosted(w0), right.boosted(w0))
}

/// Solves the interaction point for the given lab-frame fields and returns
/// the data together with the fields in the rest frame of the behind state.
pub fn interaction_point(
    eos: &EosModel,
    left: &AheadField,
    right: &AheadField,
    tol: f64,
) -> Result<(InteractionPointData, AheadField, AheadField)> {
    let root = solve_interaction_point(eos, &left.eval(0.0, 0.0)?, &right.eval(0.0, 0.0)?, tol)?;
    let w0 = root.behind.w;
    let (nl, nr) = normalize_frame(left, right, w0);
    let behind_state = FluidState {
        rho: root.behind.rho,
        w: 0.0,
    };
    let behind = eos.to_riemann(&behind_state)?;
    let eta0 = eos.sound_speed(root.behind.rho);
    let ahead_left0 = nl.eval(0.0, 0.0)?;
    let ahead_right0 = nr.eval(0.0, 0.0)?;
    let v1 = root.v_left - w0;
    let v2 = root.v_right - w0;
    let (a, gamma0) = geometry_constants(eta0, v1, v2);
    let coeff_left = jump_coefficients(eos, ShockSide::Left, &JumpPair::new(behind, ahead_left0))?;
    let coeff_right = jump_coefficients(eos, ShockSide::Right, &JumpPair::new(behind, ahead_right0))?;
    let (alpha0_prime, beta0_prime, det_m) = initial_derivatives(
        eta0,
        a,
        gamma0,
        &coeff_left,
        &coeff_right,
        &nl.partials(0.0, 0.0)?,
        &nr.partials(0.0, 0.0)?,
    );
    let data = InteractionPointData {
        rho0: root.behind.rho,
        eta0,
        beta0: behind.beta,
        shock_speed_left: v1,
        shock_speed_right: v2,
        a,
        gamma0,
        alpha0_prime,
        beta0_prime,
        det_m,
        frame_boost: w0,
        coeff_left,
        coeff_right,
        ahead_left0,
        ahead_right0,
        margins_left: root.margins_left,
        margins_right: root.margins_right,
    };
    Ok((data, nl, nr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eos() -> EosModel {
        EosModel::polytropic(1.0, 2.0).unwrap()
    }

    fn pairs() -> (RiemannPair, RiemannPair) {
        let e = eos();
        let s = 1.5f64.sqrt();
        (
            e.to_riemann(&FluidState { rho: 1.0, w: s }).unwrap(),
            e.to_riemann(&FluidState { rho: 1.0, w: -s }).unwrap(),
        )
    }

    #[test]
    fn symmetric_collision() {
        let (l, r) = pairs();
        let root = solve_interaction_point(&eos(), &l, &r, 1e-13).unwrap();
        assert_relative_eq!(root.behind.rho, 2.0, epsilon = 1e-12);
        assert!(root.behind.w.abs() < 1e-12);
        assert_relative_eq!(root.v_left, -1.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(root.v_right, 1.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn identical_states_have_no_root() {
        let e = eos();
        let p = e.to_riemann(&FluidState { rho: 1.0, w: 0.0 }).unwrap();
        assert_eq!(solve_interaction_point(&e, &p, &p, 1e-13), Err(Error::NoAdmissibleRoot));
    }

    #[test]
    fn diverging_states_have_no_root() {
        let e = eos();
        let l = e.to_riemann(&FluidState { rho: 1.0, w: -1.0 }).unwrap();
        let r = e.to_riemann(&FluidState { rho: 1.0, w: 1.0 }).unwrap();
        assert_eq!(solve_interaction_point(&e, &l, &r, 1e-13), Err(Error::NoAdmissibleRoot));
    }

    #[test]
    fn symmetric_constants() {
        let s = 1.5f64.sqrt();
        let (a, g) = geometry_constants(2.0, -s, s);
        assert_relative_eq!(g, -0.2404083, epsilon = 1e-7);
        assert_relative_eq!(a, 0.0577962, epsilon = 1e-7);
        assert_relative_eq!(a, g * g, epsilon = 1e-15);
    }

    #[test]
    fn interaction_point_constant_states() {
        let (l, r) = pairs();
        let lf = AheadField::constant(ShockSide::Left, l, 1.0);
        let rf = AheadField::constant(ShockSide::Right, r, 1.0);
        let (d, _, _) = interaction_point(&eos(), &lf, &rf, 1e-13).unwrap();
        assert_relative_eq!(d.beta0, 4.0, epsilon = 1e-12);
        assert_eq!(d.alpha0_prime, 0.0);
        assert_eq!(d.beta0_prime, 0.0);
        assert_relative_eq!(d.det_m, 1.0 - d.a.powi(3), epsilon = 1e-12);
        assert_relative_eq!(d.det_m, 0.9998069, epsilon = 1e-7);
        assert_relative_eq!(d.coeff_left.f * d.coeff_right.f, d.a * d.a, epsilon = 1e-12);
    }

    #[test]
    fn boosted_collision_is_normalized() {
        let e = eos();
        let s = 1.5f64.sqrt();
        let b = 0.3;
        let l = e.to_riemann(&FluidState { rho: 1.0, w: s + b }).unwrap();
        let r = e.to_riemann(&FluidState { rho: 1.0, w: -s + b }).unwrap();
        let lf = AheadField::constant(ShockSide::Left, l, 1.0);
        let rf = AheadField::constant(ShockSide::Right, r, 1.0);
        let (d, nl, _) = interaction_point(&e, &lf, &rf, 1e-13).unwrap();
        assert_relative_eq!(d.frame_boost, b, epsilon = 1e-12);
        assert_relative_eq!(d.shock_speed_left, -s, epsilon = 1e-12);
        let p = nl.eval(0.0, 0.0).unwrap();
        assert_relative_eq!(e.to_fluid(&p).unwrap().w, s, epsilon = 1e-12);
    }
}

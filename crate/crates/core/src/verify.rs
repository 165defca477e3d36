//! A-posteriori checks of a converged solution.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eos::{EosModel, RiemannPair};
use crate::error::{Error, Result};
use crate::grid::{BoundaryFn, Field2};
use crate::jump::{hugoniot_residual, primitive_residual, JumpPair, ShockSide};
use crate::scheme::{init_iterate_with, iterate_from, Problem, Solution};

/// Sup norms of residuals, evaluated at cell centres unless noted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub probes: usize,
    /// `x_u - c_in t_u`.
    pub char_in: f64,
    /// `x_v - c_out t_v`.
    pub char_out: f64,
    /// `d(x_v/c_out)/du - d(x_u/c_in)/dv` by central differences.
    pub integrability: f64,
    /// `x_v - Gamma x_u` at midpoints of the left shock.
    pub b_left: f64,
    /// `x_v - Gamma x_u` at midpoints of the right shock.
    pub b_right: f64,
    /// Jump function at the shock nodes.
    pub rh_left: f64,
    pub rh_right: f64,
    pub jacobian_min: f64,
    pub jacobian_max: f64,
    /// `t_u x_v - t_v x_u` at the origin.
    pub jacobian_origin: f64,
    pub margin_min_left: f64,
    pub margin_min_right: f64,
    pub containment_min: f64,
}

impl ResidualReport {
    pub fn b_identity(&self) -> f64 {
        self.b_left.max(self.b_right)
    }
}

struct Sampler<'a> {
    problem: &'a Problem,
    sol: &'a Solution,
}

impl Sampler<'_> {
    fn uv(&self, kf: f64, sf: f64) -> (f64, f64) {
        let g = &self.problem.grid;
        let u = kf * g.du();
        (u, u * (1.0 - (1.0 - g.a) * sf) / g.a)
    }

    fn field(&self, f: &Field2, u: f64, v: f64) -> Result<f64> {
        self.problem.grid.interp_eval(f, u, v)
    }

    fn speeds(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        let snap = &self.sol.snapshot;
        let p = RiemannPair::new(snap.alpha.value(u), snap.beta.value(v));
        let s = self.problem.eos.char_speeds(&p)?;
        Ok((s.c_in, s.c_out))
    }

    /// `(phi, psi) = (x_u / c_in, x_v / c_out)` at index coordinates.
    fn phi_psi(&self, kf: f64, sf: f64) -> Result<(f64, f64)> {
        let (u, v) = self.uv(kf, sf);
        let kin = &self.sol.snapshot.kin;
        let (ci, co) = self.speeds(u, v)?;
        Ok((self.field(&kin.x_u, u, v)? / ci, self.field(&kin.x_v, u, v)? / co))
    }
}

pub fn residual_suite(problem: &Problem, sol: &Solution) -> Result<ResidualReport> {
    let g = &problem.grid;
    let s = Sampler { problem, sol };
    let kin = &sol.snapshot.kin;
    let time = &sol.eval.time;
    let (ns, a) = (g.nsig as f64, g.a);
    let mut rep = ResidualReport {
        probes: 0,
        char_in: 0.0,
        char_out: 0.0,
        integrability: 0.0,
        b_left: 0.0,
        b_right: 0.0,
        rh_left: 0.0,
        rh_right: 0.0,
        jacobian_min: f64::INFINITY,
        jacobian_max: f64::NEG_INFINITY,
        jacobian_origin: time.t_u.get(0, 0) * kin.x_v.get(0, 0) - time.t_v.get(0, 0) * kin.x_u.get(0, 0),
        margin_min_left: f64::INFINITY,
        margin_min_right: f64::INFINITY,
        containment_min: f64::INFINITY,
    };
    let dk = 0.25;
    let ds = 0.25 / ns;
    for k in 0..g.n {
        for i in 0..g.nsig {
            let kf = k as f64 + 0.5;
            let sf = (i as f64 + 0.5) / ns;
            let (u, v) = s.uv(kf, sf);
            let (ci, co) = s.speeds(u, v)?;
            let xu = s.field(&kin.x_u, u, v)?;
            let xv = s.field(&kin.x_v, u, v)?;
            let tu = s.field(&time.t_u, u, v)?;
            let tv = s.field(&time.t_v, u, v)?;
            rep.char_in = rep.char_in.max((xu - ci * tu).abs());
            rep.char_out = rep.char_out.max((xv - co * tv).abs());
            let jac = tu * xv - tv * xu;
            rep.jacobian_min = rep.jacobian_min.min(jac);
            rep.jacobian_max = rep.jacobian_max.max(jac);
            // derivatives in (u, sigma), then converted to (u, v)
            let (_, psi_kp) = s.phi_psi(kf + dk, sf)?;
            let (_, psi_km) = s.phi_psi(kf - dk, sf)?;
            let (phi_sp, psi_sp) = s.phi_psi(kf, sf + ds)?;
            let (phi_sm, psi_sm) = s.phi_psi(kf, sf - ds)?;
            let h_u = 2.0 * dk * g.du();
            let h_s = 2.0 * ds;
            let sig_u = a * v / (u * u * (1.0 - a));
            let sig_v = -a / (u * (1.0 - a));
            let psi_u = (psi_kp - psi_km) / h_u + sig_u * (psi_sp - psi_sm) / h_s;
            let phi_v = sig_v * (phi_sp - phi_sm) / h_s;
            rep.integrability = rep.integrability.max((psi_u - phi_v).abs());
            rep.probes += 1;
        }
    }
    let tr = &sol.eval.traces;
    let gl = BoundaryFn::not_a_knot(g.u_max(), tr.left.gamma.clone());
    let gr = BoundaryFn::not_a_knot(g.epsilon, tr.right.gamma.clone());
    for k in 0..g.n {
        let u = (k as f64 + 0.5) * g.du();
        let b1 = s.field(&kin.x_v, u, u)? - gl.value(u) * s.field(&kin.x_u, u, u)?;
        let v = (k as f64 + 0.5) * g.epsilon / g.n as f64;
        let b2 = s.field(&kin.x_v, a * v, v)? - gr.value(v) * s.field(&kin.x_u, a * v, v)?;
        rep.b_left = rep.b_left.max(b1.abs());
        rep.b_right = rep.b_right.max(b2.abs());
    }
    let eos = &problem.eos;
    let jump = |behind: &RiemannPair, ahead: &RiemannPair| -> Result<f64> {
        let p = eos.to_fluid(behind)?;
        let m = eos.to_fluid(ahead)?;
        Ok(primitive_residual(eos, &p, &m).0)
    };
    let snap = &sol.snapshot;
    for k in 0..=g.n {
        let u = g.u(k);
        let bl = RiemannPair::new(snap.alpha.values()[k], snap.beta.value(u));
        rep.rh_left = rep.rh_left.max(jump(&bl, &tr.left.ahead[k])?.abs());
        let br = RiemannPair::new(snap.alpha.values()[k], snap.beta.values()[k]);
        rep.rh_right = rep.rh_right.max(jump(&br, &tr.right.ahead[k])?.abs());
    }
    for m in &tr.left.margins {
        rep.margin_min_left = rep.margin_min_left.min(m.0).min(m.1);
    }
    for m in &tr.right.margins {
        rep.margin_min_right = rep.margin_min_right.min(m.0).min(m.1);
    }
    rep.containment_min = tr
        .left
        .containment
        .iter()
        .chain(&tr.right.containment)
        .fold(f64::INFINITY, |m, x| m.min(*x));
    Ok(rep)
}

/// Leading-order behaviour near the origin fitted on the inner part of the
/// domain, `u <= a eps / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    /// Fitted value minus `beta0` for `alpha(u)` and `beta(v)`, larger of the two.
    pub beta0_dev: f64,
    pub alpha0_prime_dev: f64,
    pub beta0_prime_dev: f64,
    /// Fitted `t_v` at the origin minus `1/eta0`.
    pub t_v_dev: f64,
    /// Fitted `t_u` at the origin minus `-1/(eta0 Gamma0)`.
    pub t_u_dev: f64,
    /// Fitted `x_u` at the origin minus `1/Gamma0`.
    pub x_u_dev: f64,
    /// Fitted `x_v` at the origin minus `1`.
    pub x_v_dev: f64,
    /// Sup over inner nodes of the distance to the linear form, for
    /// `alpha`, `beta`, `t`, `x` (largest).
    pub remainder_norm: f64,
    /// `remainder_norm / v_max^2` on the inner region.
    pub remainder_scaled: f64,
    /// Coefficient of determination of a quadratic model for the `x` remainder.
    pub r_squared: f64,
}

fn lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let b = DVector::from_column_slice(rhs);
    let svd = m.svd(true, true);
    svd.solve(&b, 1e-14)
        .map(|x| x.iter().copied().collect())
        .unwrap_or_else(|_| vec![0.0; rows[0].len()])
}

pub fn asymptotic_check(problem: &Problem, sol: &Solution) -> AsymptoticReport {
    let g = &problem.grid;
    let ipd = &problem.ipd;
    let snap = &sol.snapshot;
    let (eta0, g0, b0) = (ipd.eta0, ipd.gamma0, ipd.beta0);
    let u_cut = 0.5 * g.u_max();
    let v_cut = 0.5 * g.epsilon;
    let sc = g.epsilon;

    let fit_1d = |len: f64, vals: &[f64]| -> (f64, f64) {
        let n = vals.len() - 1;
        let h = len / n as f64;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (j, y) in vals.iter().enumerate() {
            let x = j as f64 * h;
            if x <= 0.5 * len + 1e-15 {
                let s = x / sc;
                rows.push(vec![1.0, s, s * s, s * s * s]);
                rhs.push(*y - b0);
            }
        }
        let c = lstsq(&rows, &rhs);
        (b0 + c[0], c[1] / sc)
    };
    let (a_c0, a_c1) = fit_1d(g.u_max(), snap.alpha.values());
    let (b_c0, b_c1) = fit_1d(g.epsilon, snap.beta.values());

    let mut rows = Vec::new();
    let mut t_rhs = Vec::new();
    let mut x_rhs = Vec::new();
    let mut rem: f64 = 0.0;
    let mut quad_rows = Vec::new();
    let mut x_rem = Vec::new();
    for (k, i, u, v) in g.nodes() {
        if u > u_cut * (1.0 + 1e-12) || k == 0 {
            continue;
        }
        let (s, r) = (u / sc, v / sc);
        rows.push(vec![
            s,
            r,
            s * s,
            s * r,
            r * r,
            s * s * s,
            s * s * r,
            s * r * r,
            r * r * r,
        ]);
        let t = sol.eval.time.t.get(k, i);
        let x = snap.kin.x.get(k, i);
        t_rhs.push(t);
        x_rhs.push(x);
        let xr = x - (u / g0 + v);
        let tr = t - (v - u / g0) / eta0;
        let ar = snap.alpha.value(u) - (b0 + ipd.alpha0_prime * u);
        let br = snap.beta.value(v) - (b0 + ipd.beta0_prime * v);
        rem = rem.max(xr.abs()).max(tr.abs()).max(ar.abs()).max(br.abs());
        quad_rows.push(vec![s * s, s * r, r * r]);
        x_rem.push(xr);
    }
    let ct = lstsq(&rows, &t_rhs);
    let cx = lstsq(&rows, &x_rhs);
    let ss_tot: f64 = x_rem.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot <= 1e-300 {
        1.0
    } else {
        let q = lstsq(&quad_rows, &x_rem);
        let ss_res: f64 = quad_rows
            .iter()
            .zip(&x_rem)
            .map(|(row, y)| {
                let f: f64 = row.iter().zip(&q).map(|(a, b)| a * b).sum();
                (y - f).powi(2)
            })
            .sum();
        1.0 - ss_res / ss_tot
    };
    AsymptoticReport {
        beta0_dev: (a_c0 - b0).abs().max((b_c0 - b0).abs()),
        alpha0_prime_dev: (a_c1 - ipd.alpha0_prime).abs(),
        beta0_prime_dev: (b_c1 - ipd.beta0_prime).abs(),
        t_v_dev: (ct[1] / sc - 1.0 / eta0).abs(),
        t_u_dev: (ct[0] / sc + 1.0 / (eta0 * g0)).abs(),
        x_u_dev: (cx[0] / sc - 1.0 / g0).abs(),
        x_v_dev: (cx[1] / sc - 1.0).abs(),
        remainder_norm: rem,
        remainder_scaled: rem / (v_cut * v_cut),
        r_squared,
    }
}

/// Distance between two solutions on the same grid.
pub fn solution_distance(a: &Solution, b: &Solution) -> f64 {
    a.snapshot
        .alpha
        .value_distance(&b.snapshot.alpha)
        .max(a.snapshot.beta.value_distance(&b.snapshot.beta))
        .max(a.snapshot.kin.x.sup_distance(&b.snapshot.kin.x))
}

/// Restarts from `alpha = beta0 + alpha0' u + c u^2` and returns the distance
/// of the new limit from `reference`.
pub fn uniqueness_restart(problem: &Problem, reference: &Solution, c: f64) -> Result<f64> {
    let seed = init_iterate_with(problem, |u| c * u * u, |_| 0.0);
    let other = iterate_from(problem, seed)?;
    let distance = solution_distance(reference, &other);
    if distance > 10.0 * problem.config.tol_iter {
        return Err(Error::UniquenessCheckFailed { distance });
    }
    Ok(distance)
}

/// Every root of `J` in the unknown behind invariant on `[lo, hi]`, found by
/// sampling for sign changes and bisecting each bracket. Independent of the
/// Newton solver; used to cross-check it.
pub fn hugoniot_bisection_roots(
    eos: &EosModel,
    side: ShockSide,
    known_behind: f64,
    ahead: &RiemannPair,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Vec<f64> {
    let j = |x: f64| -> Option<f64> {
        let behind = match side {
            ShockSide::Left => RiemannPair::new(x, known_behind),
            ShockSide::Right => RiemannPair::new(known_behind, x),
        };
        hugoniot_residual(eos, &JumpPair::new(behind, *ahead)).ok()
    };
    let mut roots = Vec::new();
    let step = (hi - lo) / samples as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=samples {
        let x = lo + step * i as f64;
        let Some(fx) = j(x) else {
            prev = None;
            continue;
        };
        if fx == 0.0 {
            roots.push(x);
        } else if let Some((xp, fp)) = prev {
            if fp != 0.0 && fp.signum() != fx.signum() {
                let (mut a, mut b, mut fa) = (xp, x, fp);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    match j(m) {
                        Some(fm) if fm.signum() == fa.signum() => {
                            a = m;
                            fa = fm;
                        }
                        Some(_) => b = m,
                        None => break,
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        prev = Some((x, fx));
    }
    roots
}

//! Fixed-point iteration for the solution behind both shocks.
//!
//! The unknowns are `alpha(u)` on the left shock (the behind `alpha`
//! everywhere, since `alpha` is constant along lines `u = const`),
//! `beta(v)` on the right shock, and `x(u, v)` together with its first and
//! second derivatives. Time follows from `x` by integrating the
//! characteristic relations `x_u = c_in t_u`, `x_v = c_out t_v`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ahead::{AheadField, BoundaryChar};
use crate::eos::{EosModel, RiemannPair, SpeedJet};
use crate::error::{Error, Result};
use crate::grid::{BoundaryFn, Field2, RowStencil, TriGrid};
use crate::jump::{determinism_margins, primitive_residual, shock_speed_fluid, solve_hugoniot, ShockSide};
use crate::origin::{interaction_point, InteractionPointData};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub tol_newton: f64,
    pub tol_iter: f64,
    pub max_iter: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            tol_newton: 1e-12,
            tol_iter: 1e-11,
            max_iter: 200,
        }
    }
}

/// Everything fixed during the iteration, in the rest frame of the behind state.
#[derive(Clone, Debug)]
pub struct Problem {
    pub eos: EosModel,
    pub left: AheadField,
    pub right: AheadField,
    pub ipd: InteractionPointData,
    pub grid: TriGrid,
    pub bchar_left: BoundaryChar,
    pub bchar_right: BoundaryChar,
    pub config: SchemeConfig,
}

impl Problem {
    /// Solves the interaction point for lab-frame fields and sets up the grid.
    pub fn new(
        eos: EosModel,
        left: &AheadField,
        right: &AheadField,
        epsilon: f64,
        n: usize,
        nsig: usize,
        config: SchemeConfig,
    ) -> Result<Self> {
        let (ipd, nl, nr) = interaction_point(&eos, left, right, 1e-13)?;
        let grid = TriGrid::new(epsilon, ipd.a, n, nsig)?;
        let bchar_left = BoundaryChar::new(&eos, &nl)?;
        let bchar_right = BoundaryChar::new(&eos, &nr)?;
        Ok(Self {
            eos,
            left: nl,
            right: nr,
            ipd,
            grid,
            bchar_left,
            bchar_right,
            config,
        })
    }

    /// Same problem on another grid.
    pub fn with_grid(&self, epsilon: f64, n: usize, nsig: usize) -> Result<Self> {
        let mut p = self.clone();
        p.grid = TriGrid::new(epsilon, self.ipd.a, n, nsig)?;
        Ok(p)
    }
}

/// `x` and its derivatives on the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub x: Field2,
    pub x_u: Field2,
    pub x_v: Field2,
    pub x_uu: Field2,
    pub x_uv: Field2,
    pub x_vv: Field2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFields {
    pub t: Field2,
    pub t_u: Field2,
    pub t_v: Field2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateSnapshot {
    pub index: usize,
    /// Behind `alpha` as a function of `u` on `[0, a eps]`.
    pub alpha: BoundaryFn,
    /// Behind `beta` as a function of `v` on `[0, eps]`.
    pub beta: BoundaryFn,
    pub kin: Kinematics,
}

/// Samples along one shock; `param` is `u_k` on the left and `v_k` on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockTrace {
    pub side: ShockSide,
    pub param: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub speed: Vec<f64>,
    pub behind: Vec<RiemannPair>,
    pub ahead: Vec<RiemannPair>,
    pub j_residual: Vec<f64>,
    pub margins: Vec<(f64, f64)>,
    pub containment: Vec<f64>,
    /// `Gamma = x_v / x_u` required along the shock.
    pub gamma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockTraceData {
    pub left: ShockTrace,
    pub right: ShockTrace,
}

/// Per-node invariants, their boundary derivatives and the speed jet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeJet {
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub speed: SpeedJet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub jets: Vec<NodeJet>,
    pub time: TimeFields,
    pub traces: ShockTraceData,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceFields {
    pub mu: Field2,
    pub nu: Field2,
    pub m: Field2,
    pub m_u: Field2,
    pub m_v: Field2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterDiag {
    pub iteration: usize,
    pub sup_alpha: f64,
    pub sup_beta: f64,
    pub sup_x: f64,
    /// `sup |delta alpha''|`.
    pub norm_alpha: f64,
    /// `sup |delta beta''|`.
    pub norm_beta: f64,
    /// Largest sup of the changes of `x_uu`, `x_uv`, `x_vv`.
    pub norm_x: f64,
    /// Largest of all six changes; compared against `tol_iter`.
    pub combined: f64,
    /// Largest of the three sup-norm changes of values.
    pub value_change: f64,
    /// `value_change` relative to the previous iteration.
    pub ratio: f64,
    pub min_margin_left: f64,
    pub min_margin_right: f64,
    pub min_containment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiag {
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterDiag>,
    /// Geometric mean of the last few delta ratios.
    pub spectral_radius_estimate: f64,
    /// Small-`eps` limit of the contraction factor.
    pub spectral_radius_limit: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub snapshot: IterateSnapshot,
    pub eval: Evaluation,
    pub diag: ConvergenceDiag,
}

fn linear_iterate(problem: &Problem, alpha: Vec<f64>, beta: Vec<f64>) -> IterateSnapshot {
    let g = &problem.grid;
    let ipd = &problem.ipd;
    let g0 = ipd.gamma0;
    IterateSnapshot {
        index: 0,
        alpha: BoundaryFn::clamped(g.u_max(), alpha, ipd.alpha0_prime),
        beta: BoundaryFn::clamped(g.epsilon, beta, ipd.beta0_prime),
        kin: Kinematics {
            x: g.field(|u, v| u / g0 + v),
            x_u: g.field(|_, _| 1.0 / g0),
            x_v: g.field(|_, _| 1.0),
            x_uu: g.zeros(),
            x_uv: g.zeros(),
            x_vv: g.zeros(),
        },
    }
}

/// `x0 = u/Gamma0 + v`, `alpha = beta0 + alpha0' u`, `beta = beta0 + beta0' v`.
pub fn init_iterate(problem: &Problem) -> IterateSnapshot {
    init_iterate_with(problem, |_| 0.0, |_| 0.0)
}

/// Initial iterate with `alpha` and `beta` shifted by user bumps, which must
/// vanish to first order at the origin.
pub fn init_iterate_with(
    problem: &Problem,
    alpha_bump: impl Fn(f64) -> f64,
    beta_bump: impl Fn(f64) -> f64,
) -> IterateSnapshot {
    let g = &problem.grid;
    let ipd = &problem.ipd;
    let alpha = (0..=g.n)
        .map(|k| {
            let u = g.u(k);
            ipd.beta0 + ipd.alpha0_prime * u + alpha_bump(u)
        })
        .collect();
    let beta = (0..=g.n)
        .map(|k| {
            let v = g.v_right(k);
            ipd.beta0 + ipd.beta0_prime * v + beta_bump(v)
        })
        .collect();
    linear_iterate(problem, alpha, beta)
}

/// Checks the pinned values at the origin.
pub fn validate_seed(problem: &Problem, snap: &IterateSnapshot) -> Result<()> {
    let ipd = &problem.ipd;
    let g = &problem.grid;
    let tol = 1e-12;
    let checks = [
        ("alpha(0)", snap.alpha.value(0.0), ipd.beta0),
        ("beta(0)", snap.beta.value(0.0), ipd.beta0),
        ("alpha'(0)", snap.alpha.d1(0.0), ipd.alpha0_prime),
        ("beta'(0)", snap.beta.d1(0.0), ipd.beta0_prime),
        ("x(0,0)", snap.kin.x.get(0, 0), 0.0),
        ("x_u(0,0)", snap.kin.x_u.get(0, 0), 1.0 / ipd.gamma0),
        ("x_v(0,0)", snap.kin.x_v.get(0, 0), 1.0),
    ];
    for (name, got, want) in checks {
        if (got - want).abs() > tol * (1.0 + want.abs()) {
            return Err(Error::InadmissibleSeed(format!("{name} = {got}, expected {want}")));
        }
    }
    if snap.kin.x.values.len() != g.num_nodes() {
        return Err(Error::InadmissibleSeed("field size does not match the grid".into()));
    }
    Ok(())
}

fn node_jets(problem: &Problem, snap: &IterateSnapshot) -> Result<Vec<NodeJet>> {
    let g = &problem.grid;
    let cols: Vec<Result<Vec<NodeJet>>> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            let u = g.u(k);
            let alpha = [snap.alpha.values()[k], snap.alpha.d1(u), snap.alpha.d2(u)];
            (0..=g.nsig)
                .map(|i| {
                    let v = g.v(k, i);
                    let beta = if i == 0 {
                        [snap.beta.values()[k], snap.beta.d1(v), snap.beta.d2(v)]
                    } else {
                        [snap.beta.value(v), snap.beta.d1(v), snap.beta.d2(v)]
                    };
                    let speed = problem.eos.speed_jet(&RiemannPair::new(alpha[0], beta[0]))?;
                    Ok(NodeJet { alpha, beta, speed })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(g.num_nodes());
    for c in cols {
        out.extend(c?);
    }
    Ok(out)
}

fn collect_columns(g: &TriGrid, cols: Vec<Vec<f64>>) -> Field2 {
    let mut f = g.zeros();
    for (k, c) in cols.into_iter().enumerate() {
        let s = g.idx(k, 0);
        f.values[s..s + c.len()].copy_from_slice(&c);
    }
    f
}

/// `t`, `t_u`, `t_v` from `x` and the speeds.
pub fn reconstruct_t(problem: &Problem, kin: &Kinematics, jets: &[NodeJet]) -> TimeFields {
    let g = &problem.grid;
    let ns = g.nsig;
    let phi = |k: usize, i: usize| kin.x_u.get(k, i) / jets[g.idx(k, i)].speed.c_in;
    let psi = |k: usize, i: usize| kin.x_v.get(k, i) / jets[g.idx(k, i)].speed.c_out;
    let along_left: Vec<f64> = (0..=g.n).map(|k| phi(k, ns) + psi(k, ns)).collect();
    let left_int = BoundaryFn::not_a_knot(g.u_max(), along_left);
    let cols: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            let tv: Vec<f64> = (0..=ns).map(|i| psi(k, i)).collect();
            let psi_u: Vec<f64> = (0..=ns)
                .map(|i| {
                    let j = &jets[g.idx(k, i)];
                    let c = j.speed.c_out;
                    let dc = j.speed.d_out[0] * j.alpha[1];
                    kin.x_uv.get(k, i) / c - kin.x_v.get(k, i) * dc / (c * c)
                })
                .collect();
            let half = 0.5 * g.dv(k);
            let base = left_int.integral(g.u(k));
            let mut t = vec![0.0; ns + 1];
            let mut tu = vec![0.0; ns + 1];
            t[ns] = base;
            tu[ns] = phi(k, ns);
            for i in (0..ns).rev() {
                t[i] = t[i + 1] + half * (tv[i] + tv[i + 1]);
                tu[i] = tu[i + 1] + half * (psi_u[i] + psi_u[i + 1]);
            }
            (t, tu, tv)
        })
        .collect();
    let mut t = Vec::with_capacity(cols.len());
    let mut t_u = Vec::with_capacity(cols.len());
    let mut t_v = Vec::with_capacity(cols.len());
    for (a, b, c) in cols {
        t.push(a);
        t_u.push(b);
        t_v.push(c);
    }
    TimeFields {
        t: collect_columns(g, t),
        t_u: collect_columns(g, t_u),
        t_v: collect_columns(g, t_v),
    }
}

struct TracePoint {
    t: f64,
    x: f64,
    speed: f64,
    behind: RiemannPair,
    ahead: RiemannPair,
    j: f64,
    margins: (f64, f64),
    containment: f64,
    gamma: f64,
}

const CONTAINMENT_SLACK: f64 = 1e-13;

fn trace_point(
    problem: &Problem,
    side: ShockSide,
    param: f64,
    t: f64,
    x: f64,
    behind: RiemannPair,
) -> Result<TracePoint> {
    let (field, bchar) = match side {
        ShockSide::Left => (&problem.left, &problem.bchar_left),
        ShockSide::Right => (&problem.right, &problem.bchar_right),
    };
    let violated = |margin: f64| Error::ContainmentViolated { side, param, margin };
    let containment = match bchar.contains(t, x) {
        Ok(m) => m,
        Err(Error::HorizonExceeded { .. }) => return Err(violated(f64::NEG_INFINITY)),
        Err(e) => return Err(e),
    };
    if containment < -CONTAINMENT_SLACK * (1.0 + x.abs()) {
        return Err(violated(containment));
    }
    let ahead = field.eval(t, x).map_err(|e| match e {
        Error::HorizonExceeded { .. } => violated(f64::NEG_INFINITY),
        e => e,
    })?;
    let eos = &problem.eos;
    let plus = eos.to_fluid(&behind)?;
    let minus = eos.to_fluid(&ahead)?;
    let (j, _, _) = primitive_residual(eos, &plus, &minus);
    let speed = shock_speed_fluid(&plus, &minus)?;
    let det = determinism_margins(eos, side, &plus, &minus, speed);
    if !det.ok {
        return Err(Error::DeterminismViolated {
            side,
            param,
            lo: det.margins.0,
            hi: det.margins.1,
        });
    }
    let eta = eos.sound_speed(plus.rho);
    let (c_out, c_in) = (plus.w + eta, plus.w - eta);
    let mut gamma = (c_out / c_in) * (speed - c_in) / (c_out - speed);
    if side == ShockSide::Right {
        gamma *= problem.ipd.a;
    }
    Ok(TracePoint {
        t,
        x,
        speed,
        behind,
        ahead,
        j,
        margins: det.margins,
        containment,
        gamma,
    })
}

fn assemble_trace(side: ShockSide, param: Vec<f64>, pts: Vec<TracePoint>) -> ShockTrace {
    ShockTrace {
        side,
        param,
        t: pts.iter().map(|p| p.t).collect(),
        x: pts.iter().map(|p| p.x).collect(),
        speed: pts.iter().map(|p| p.speed).collect(),
        behind: pts.iter().map(|p| p.behind).collect(),
        ahead: pts.iter().map(|p| p.ahead).collect(),
        j_residual: pts.iter().map(|p| p.j).collect(),
        margins: pts.iter().map(|p| p.margins).collect(),
        containment: pts.iter().map(|p| p.containment).collect(),
        gamma: pts.iter().map(|p| p.gamma).collect(),
    }
}

/// Samples both shocks, evaluating the ahead states at the traced positions.
pub fn trace_shocks(problem: &Problem, snap: &IterateSnapshot, time: &TimeFields) -> Result<ShockTraceData> {
    let g = &problem.grid;
    let ns = g.nsig;
    let left: Result<Vec<TracePoint>> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            let u = g.u(k);
            let behind = RiemannPair::new(snap.alpha.values()[k], snap.beta.value(u));
            trace_point(
                problem,
                ShockSide::Left,
                u,
                time.t.get(k, ns),
                snap.kin.x.get(k, ns),
                behind,
            )
        })
        .collect();
    let right: Result<Vec<TracePoint>> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            let behind = RiemannPair::new(snap.alpha.values()[k], snap.beta.values()[k]);
            trace_point(
                problem,
                ShockSide::Right,
                g.v_right(k),
                time.t.get(k, 0),
                snap.kin.x.get(k, 0),
                behind,
            )
        })
        .collect();
    Ok(ShockTraceData {
        left: assemble_trace(ShockSide::Left, (0..=g.n).map(|k| g.u(k)).collect(), left?),
        right: assemble_trace(ShockSide::Right, (0..=g.n).map(|k| g.v_right(k)).collect(), right?),
    })
}

pub fn evaluate(problem: &Problem, snap: &IterateSnapshot) -> Result<Evaluation> {
    let jets = node_jets(problem, snap)?;
    let time = reconstruct_t(problem, &snap.kin, &jets);
    let traces = trace_shocks(problem, snap, &time)?;
    Ok(Evaluation { jets, time, traces })
}

/// Coefficients of `mu = P beta'(v)` and `nu = Q alpha'(u)` with their
/// partials: `[P, P_alpha, P_beta, Q, Q_alpha, Q_beta]`.
pub fn source_coefficients(s: &SpeedJet) -> [f64; 6] {
    let (co, ci) = (s.c_out, s.c_in);
    let d = co - ci;
    let d_a = s.d_out[0] - s.d_in[0];
    let d_b = s.d_out[1] - s.d_in[1];
    // P = co ci_b / (d ci)
    let n1 = co * s.d_in[1];
    let n1_a = s.d_out[0] * s.d_in[1] + co * s.dd_in[1];
    let n1_b = s.d_out[1] * s.d_in[1] + co * s.dd_in[2];
    let e1 = d * ci;
    let e1_a = d_a * ci + d * s.d_in[0];
    let e1_b = d_b * ci + d * s.d_in[1];
    // Q = -ci co_a / (d co)
    let n2 = ci * s.d_out[0];
    let n2_a = s.d_in[0] * s.d_out[0] + ci * s.dd_out[0];
    let n2_b = s.d_in[1] * s.d_out[0] + ci * s.dd_out[1];
    let e2 = d * co;
    let e2_a = d_a * co + d * s.d_out[0];
    let e2_b = d_b * co + d * s.d_out[1];
    [
        n1 / e1,
        (n1_a * e1 - n1 * e1_a) / (e1 * e1),
        (n1_b * e1 - n1 * e1_b) / (e1 * e1),
        -n2 / e2,
        -(n2_a * e2 - n2 * e2_a) / (e2 * e2),
        -(n2_b * e2 - n2 * e2_b) / (e2 * e2),
    ]
}

/// `M = mu x_u + nu x_v` (which equals `x_uv`) and its first partials.
pub fn assemble_sources(problem: &Problem, kin: &Kinematics, jets: &[NodeJet]) -> SourceFields {
    let g = &problem.grid;
    let n = g.num_nodes();
    let vals: Vec<[f64; 5]> = (0..n)
        .into_par_iter()
        .map(|p| {
            let j = &jets[p];
            let [pc, pa, pb, qc, qa, qb] = source_coefficients(&j.speed);
            let [_, a1, a2] = j.alpha;
            let [_, b1, b2] = j.beta;
            let mu = pc * b1;
            let nu = qc * a1;
            let mu_u = pa * a1 * b1;
            let mu_v = pb * b1 * b1 + pc * b2;
            let nu_u = qa * a1 * a1 + qc * a2;
            let nu_v = qb * a1 * b1;
            let (xu, xv) = (kin.x_u.values[p], kin.x_v.values[p]);
            let (xuu, xuv, xvv) = (kin.x_uu.values[p], kin.x_uv.values[p], kin.x_vv.values[p]);
            let m = mu * xu + nu * xv;
            let m_u = mu_u * xu + mu * xuu + nu_u * xv + nu * xuv;
            let m_v = mu_v * xu + mu * xuv + nu_v * xv + nu * xvv;
            [mu, nu, m, m_u, m_v]
        })
        .collect();
    let pick = |c: usize| Field2 {
        n: g.n,
        nsig: g.nsig,
        values: vals.iter().map(|v| v[c]).collect(),
    };
    SourceFields {
        mu: pick(0),
        nu: pick(1),
        m: pick(2),
        m_u: pick(3),
        m_v: pick(4),
    }
}

/// One-dimensional functions along the shocks entering the update of `x`.
struct BoundaryTerms {
    // functions of v on the right shock
    m_r: BoundaryFn,
    mv_r: BoundaryFn,
    colm_r: BoundaryFn,
    colmu_r: BoundaryFn,
    gamma_r: BoundaryFn,
    lambda_r: BoundaryFn,
    phi_r: BoundaryFn,
    // functions of u on the left shock
    m_l: BoundaryFn,
    gamma_l: BoundaryFn,
    lambda_l: BoundaryFn,
    phi_l: BoundaryFn,
    rowm_l: Vec<f64>,
    rowmv_l: Vec<f64>,
}

fn boundary_terms(
    problem: &Problem,
    kin: &Kinematics,
    src: &SourceFields,
    cm: &Field2,
    cmu: &Field2,
    traces: &ShockTraceData,
) -> BoundaryTerms {
    let g = &problem.grid;
    let a = g.a;
    let (lu, lv) = (g.u_max(), g.epsilon);
    let spline_r = |f: &Field2| BoundaryFn::not_a_knot(lv, f.right_trace());
    let m_r = spline_r(&src.m);
    let mv_r = spline_r(&src.m_v);
    let xu_r = spline_r(&kin.x_u);
    let xuu_r = spline_r(&kin.x_uu);
    let colm_r = spline_r(cm);
    let colmu_r = spline_r(cmu);
    let gamma_r = BoundaryFn::not_a_knot(lv, traces.right.gamma.clone());
    let gamma_l = BoundaryFn::not_a_knot(lu, traces.left.gamma.clone());
    let m_l = BoundaryFn::not_a_knot(lu, src.m.left_trace());

    let rows: Vec<(f64, f64)> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            let u = g.u(k);
            let mut st = RowStencil::default();
            g.row_stencil(u, k, &mut st);
            (st.apply(&src.m, m_r.value(u)), st.apply(&src.m_v, mv_r.value(u)))
        })
        .collect();
    let rowm_l: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rowmv_l: Vec<f64> = rows.iter().map(|r| r.1).collect();

    let lambda_l: Vec<f64> = (0..=g.n)
        .map(|k| {
            let u = g.u(k);
            let (g1, g1p) = (traces.left.gamma[k], gamma_l.d1(u));
            let (g2, g2p) = (gamma_r.value(u), gamma_r.d1(u));
            let gam = g2 / g1;
            let gam_p = (g2p * g1 - g2 * g1p) / (g1 * g1);
            gam_p * xu_r.value(u) + gam * a * xuu_r.value(u) + gam * m_r.value(u)
        })
        .collect();
    let lambda_l = BoundaryFn::not_a_knot(lu, lambda_l);
    let phi_l: Vec<f64> = (0..=g.n)
        .map(|k| lambda_l.integral(g.u(k)) + rowm_l[k] / traces.left.gamma[k])
        .collect();
    let phi_l = BoundaryFn::not_a_knot(lu, phi_l);

    let ns = g.nsig;
    let lambda_r: Vec<f64> = (0..=g.n)
        .map(|k| {
            let (v, u) = (g.v_right(k), g.u(k));
            let (g2, g2p) = (traces.right.gamma[k], gamma_r.d1(v));
            let (g1, g1p) = (traces.left.gamma[k], gamma_l.d1(u));
            let gam = g2 / g1;
            let gam_p = g2p / g1 - g2 * a * g1p / (g1 * g1);
            gam_p * kin.x_v.get(k, ns) + gam * a * kin.x_vv.get(k, ns) + gam * a * src.m.get(k, ns)
        })
        .collect();
    let lambda_r = BoundaryFn::not_a_knot(lv, lambda_r);
    let phi_r: Vec<f64> = (0..=g.n)
        .map(|k| lambda_r.integral(g.v_right(k)) + traces.right.gamma[k] * cm.get(k, 0))
        .collect();
    let phi_r = BoundaryFn::not_a_knot(lv, phi_r);

    BoundaryTerms {
        m_r,
        mv_r,
        colm_r,
        colmu_r,
        gamma_r,
        lambda_r,
        phi_r,
        m_l,
        gamma_l,
        lambda_l,
        phi_l,
        rowm_l,
        rowmv_l,
    }
}

/// New `x` and derivatives from the sources of the current iterate.
pub fn update_x(problem: &Problem, src: &SourceFields, kin: &Kinematics, traces: &ShockTraceData) -> Kinematics {
    let g = &problem.grid;
    let a = g.a;
    let g0 = problem.ipd.gamma0;
    let cm = g.cumulative_columns(&src.m);
    let cmu = g.cumulative_columns(&src.m_u);
    let b = boundary_terms(problem, kin, src, &cm, &cmu, traces);
    let ns = g.nsig;
    let cols: Vec<[Vec<f64>; 6]> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            let u = g.u(k);
            let mut st = RowStencil::default();
            let mut out: [Vec<f64>; 6] = Default::default();
            for o in out.iter_mut() {
                o.reserve(ns + 1);
            }
            let g1 = traces.left.gamma[k];
            let g1p = b.gamma_l.d1(u);
            let m_uu = src.m.get(k, ns);
            let xuu_col = b.lambda_l.value(u) - g1p / (g1 * g1) * b.rowm_l[k]
                + (m_uu - a * b.m_r.value(u) + b.rowmv_l[k]) / g1
                - m_uu;
            let phi_l = b.phi_l.value(u);
            let s_l = b.phi_l.integral(u);
            for i in 0..=ns {
                let v = g.v(k, i);
                g.row_stencil(v, k, &mut st);
                let colm_end = b.colm_r.value(v);
                let m_end = b.m_r.value(v);
                let row_cm = st.apply(&cm, colm_end);
                let row_m = st.apply(&src.m, m_end);
                let row_mv = st.apply(&src.m_v, b.mv_r.value(v));
                let (g2, g2p) = (b.gamma_r.value(v), b.gamma_r.d1(v));
                let x = u / g0 + v + s_l + b.phi_r.integral(v) + a * b.colm_r.integral(v) + row_cm;
                let x_u = 1.0 / g0 + phi_l + cm.get(k, i);
                let x_v = 1.0 + b.phi_r.value(v) + row_m;
                let x_uu = xuu_col + cmu.get(k, i);
                let x_vv = b.lambda_r.value(v)
                    + g2p * colm_end
                    + g2 * (m_end - a * b.m_l.value(a * v) + a * b.colmu_r.value(v))
                    - a * m_end
                    + row_mv;
                out[0].push(x);
                out[1].push(x_u);
                out[2].push(x_v);
                out[3].push(x_uu);
                out[4].push(src.m.get(k, i));
                out[5].push(x_vv);
            }
            out
        })
        .collect();
    let mut parts: [Vec<Vec<f64>>; 6] = Default::default();
    for c in cols {
        for (p, v) in parts.iter_mut().zip(c) {
            p.push(v);
        }
    }
    let [x, x_u, x_v, x_uu, x_uv, x_vv] = parts.map(|p| collect_columns(g, p));
    Kinematics {
        x,
        x_u,
        x_v,
        x_uu,
        x_uv,
        x_vv,
    }
}

/// New boundary invariants from the shock relations with the current traces.
pub fn update_invariants(
    problem: &Problem,
    snap: &IterateSnapshot,
    traces: &ShockTraceData,
) -> Result<(BoundaryFn, BoundaryFn)> {
    let g = &problem.grid;
    let ipd = &problem.ipd;
    let tol = problem.config.tol_newton;
    let eos = &problem.eos;
    let alpha: Result<Vec<f64>> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return Ok(ipd.beta0);
            }
            let tr = &traces.left;
            solve_hugoniot(
                eos,
                ShockSide::Left,
                tr.behind[k].beta,
                &tr.ahead[k],
                snap.alpha.values()[k],
                tol,
            )
        })
        .collect();
    let beta: Result<Vec<f64>> = (0..=g.n)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return Ok(ipd.beta0);
            }
            let tr = &traces.right;
            solve_hugoniot(
                eos,
                ShockSide::Right,
                tr.behind[k].alpha,
                &tr.ahead[k],
                snap.beta.values()[k],
                tol,
            )
        })
        .collect();
    Ok((
        BoundaryFn::clamped(g.u_max(), alpha?, ipd.alpha0_prime),
        BoundaryFn::clamped(g.epsilon, beta?, ipd.beta0_prime),
    ))
}

/// One step of the map, given the evaluation of the current iterate.
pub fn advance(problem: &Problem, snap: &IterateSnapshot, eval: &Evaluation) -> Result<IterateSnapshot> {
    let src = assemble_sources(problem, &snap.kin, &eval.jets);
    let kin = update_x(problem, &src, &snap.kin, &eval.traces);
    let (alpha, beta) = update_invariants(problem, snap, &eval.traces)?;
    Ok(IterateSnapshot {
        index: snap.index + 1,
        alpha,
        beta,
        kin,
    })
}

fn min_margin(tr: &ShockTrace) -> f64 {
    tr.margins.iter().fold(f64::INFINITY, |m, p| m.min(p.0).min(p.1))
}

fn deltas(next: &IterateSnapshot, prev: &IterateSnapshot) -> [f64; 6] {
    let k = |a: &Field2, b: &Field2| a.sup_distance(b);
    [
        next.alpha.value_distance(&prev.alpha),
        next.beta.value_distance(&prev.beta),
        k(&next.kin.x, &prev.kin.x),
        next.alpha.d2_distance(&prev.alpha),
        next.beta.d2_distance(&prev.beta),
        k(&next.kin.x_uu, &prev.kin.x_uu)
            .max(k(&next.kin.x_uv, &prev.kin.x_uv))
            .max(k(&next.kin.x_vv, &prev.kin.x_vv)),
    ]
}

/// Iterates from `seed` until every change falls below `tol_iter`.
pub fn iterate_from(problem: &Problem, seed: IterateSnapshot) -> Result<Solution> {
    validate_seed(problem, &seed)?;
    let cfg = problem.config;
    let mut snap = seed;
    let mut eval = evaluate(problem, &snap)?;
    let mut history: Vec<IterDiag> = Vec::new();
    let mut prev_change = f64::NAN;
    for it in 1..=cfg.max_iter {
        let next = advance(problem, &snap, &eval)?;
        let d = deltas(&next, &snap);
        let combined = d.iter().fold(0.0f64, |m, x| m.max(*x));
        let value_change = d[0].max(d[1]).max(d[2]);
        let next_eval = evaluate(problem, &next)?;
        let diag = IterDiag {
            iteration: it,
            sup_alpha: d[0],
            sup_beta: d[1],
            sup_x: d[2],
            norm_alpha: d[3],
            norm_beta: d[4],
            norm_x: d[5],
            combined,
            value_change,
            ratio: value_change / prev_change,
            min_margin_left: min_margin(&next_eval.traces.left),
            min_margin_right: min_margin(&next_eval.traces.right),
            min_containment: next_eval
                .traces
                .left
                .containment
                .iter()
                .chain(&next_eval.traces.right.containment)
                .fold(f64::INFINITY, |m, x| m.min(*x)),
        };
        history.push(diag);
        prev_change = value_change;
        snap = next;
        eval = next_eval;
        if combined <= cfg.tol_iter {
            let diag = convergence_diag(problem, history, true);
            return Ok(Solution {
                snapshot: snap,
                eval,
                diag,
            });
        }
    }
    let last_ratio = history.last().map(|d| d.ratio).unwrap_or(f64::NAN);
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        last_ratio,
    })
}

/// Changes below this are dominated by rounding and excluded from ratio estimates.
pub const RATIO_FLOOR: f64 = 1e-13;

fn convergence_diag(problem: &Problem, history: Vec<IterDiag>, converged: bool) -> ConvergenceDiag {
    let ratios: Vec<f64> = history
        .iter()
        .skip(1)
        .filter(|d| d.value_change > RATIO_FLOOR && d.ratio.is_finite() && d.ratio > 0.0)
        .map(|d| d.ratio)
        .collect();
    let tail = &ratios[ratios.len().saturating_sub(3)..];
    let est = if tail.is_empty() {
        0.0
    } else {
        (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp()
    };
    ConvergenceDiag {
        iterations: history.len(),
        converged,
        history,
        spectral_radius_estimate: est,
        spectral_radius_limit: problem.ipd.a,
    }
}

/// Perturbation of an iterate, stored as node values.
#[derive(Clone)]
struct Direction {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    kin: [Vec<f64>; 6],
}

fn kin_parts(k: &Kinematics) -> [&Field2; 6] {
    [&k.x, &k.x_u, &k.x_v, &k.x_uu, &k.x_uv, &k.x_vv]
}

impl Direction {
    fn value_norm(&self) -> f64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .chain(&self.kin[0])
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn scaled(mut self, s: f64) -> Self {
        let all = self
            .alpha
            .iter_mut()
            .chain(self.beta.iter_mut())
            .chain(self.kin.iter_mut().flatten());
        for x in all {
            *x *= s;
        }
        self
    }

    /// `(a - b) / h`.
    fn between(a: &IterateSnapshot, b: &IterateSnapshot, h: f64) -> Self {
        let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q) / h).collect::<Vec<f64>>();
        let (ka, kb) = (kin_parts(&a.kin), kin_parts(&b.kin));
        Self {
            alpha: d(a.alpha.values(), b.alpha.values()),
            beta: d(a.beta.values(), b.beta.values()),
            kin: std::array::from_fn(|j| d(&ka[j].values, &kb[j].values)),
        }
    }

    fn displace(&self, problem: &Problem, base: &IterateSnapshot, s: f64) -> IterateSnapshot {
        let g = &problem.grid;
        let ipd = &problem.ipd;
        let add = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + s * q).collect::<Vec<f64>>();
        let field = |f: &Field2, y: &[f64]| Field2 {
            n: f.n,
            nsig: f.nsig,
            values: add(&f.values, y),
        };
        let k = &base.kin;
        IterateSnapshot {
            index: base.index,
            alpha: BoundaryFn::clamped(g.u_max(), add(base.alpha.values(), &self.alpha), ipd.alpha0_prime),
            beta: BoundaryFn::clamped(g.epsilon, add(base.beta.values(), &self.beta), ipd.beta0_prime),
            kin: Kinematics {
                x: field(&k.x, &self.kin[0]),
                x_u: field(&k.x_u, &self.kin[1]),
                x_v: field(&k.x_v, &self.kin[2]),
                x_uu: field(&k.x_uu, &self.kin[3]),
                x_uv: field(&k.x_uv, &self.kin[4]),
                x_vv: field(&k.x_vv, &self.kin[5]),
            },
        }
    }
}

/// Step used for the central-difference linearisation of the map.
const LINEARISATION_STEP: f64 = 1e-5;

/// Dominant contraction factor of the map linearised at `fixed`, by power
/// iteration with central differences. Unlike the delta ratios of a run it
/// is not limited by rounding once the iterates have converged.
pub fn linearized_rate(problem: &Problem, fixed: &IterateSnapshot, steps: usize) -> Result<f64> {
    // the displacement of the usual seed excites every mode the run sees
    let mut dir = Direction::between(&init_iterate(problem), fixed, 1.0);
    let h = LINEARISATION_STEP;
    let mut ratios = Vec::with_capacity(steps);
    for _ in 0..steps.max(1) {
        let norm = dir.value_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        dir = dir.scaled(1.0 / norm);
        let image = |s: f64| -> Result<IterateSnapshot> {
            let y = dir.displace(problem, fixed, s);
            let e = evaluate(problem, &y)?;
            advance(problem, &y, &e)
        };
        let next = Direction::between(&image(h)?, &image(-h)?, 2.0 * h);
        ratios.push(next.value_norm());
        dir = next;
    }
    let tail = &ratios[ratios.len().saturating_sub(3)..];
    Ok((tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp())
}

pub fn solve(problem: &Problem) -> Result<Solution> {
    iterate_from(problem, init_iterate(problem))
}

//! CSV exports in the laboratory frame.
//!
//! The solver works in the frame where the fluid between the new shocks is
//! at rest at the origin; `boost` is the velocity of that frame.

use std::fmt::Write as _;
use std::path::Path;

use shockint_core::error::Result as CoreResult;
use shockint_core::scheme::{Problem, ShockTrace, Solution};

use crate::error::CliError;

/// Seventeen significant digits; negative zero is written as zero.
fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn line(out: &mut String, cols: &[f64]) {
    let row: Vec<String> = cols.iter().map(|c| num(*c)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

pub const SOLUTION_HEADER: &str = "u,v,t,x,alpha,beta,rho,w,c_in,c_out";
pub const SHOCK_HEADER: &str = "param,t,x,V,alpha_plus,beta_plus,alpha_minus,beta_minus,J_residual,margin_lo,margin_hi";

/// One row per node, ordered by column index `k` (the node `v = k eps/N`
/// on the right shock starts column `k`), then by `sigma` from the right
/// shock to the left shock. Column 0 collapses to the origin and is written once.
pub fn solution_csv(problem: &Problem, sol: &Solution) -> CoreResult<String> {
    let g = &problem.grid;
    let b = problem.ipd.frame_boost;
    let snap = &sol.snapshot;
    let mut out = String::with_capacity(g.num_nodes() * 240);
    out.push_str(SOLUTION_HEADER);
    out.push('\n');
    for k in 0..=g.n {
        let u = g.u(k);
        let alpha = snap.alpha.values()[k];
        let last = if k == 0 { 0 } else { g.nsig };
        for i in 0..=last {
            let v = g.v(k, i);
            let beta = if i == 0 {
                snap.beta.values()[k]
            } else {
                snap.beta.value(v)
            };
            let pair = shockint_core::eos::RiemannPair::new(alpha, beta);
            let f = problem.eos.to_fluid(&pair)?;
            let s = problem.eos.char_speeds(&pair)?;
            let t = sol.eval.time.t.get(k, i);
            let x = snap.kin.x.get(k, i);
            line(
                &mut out,
                &[
                    u,
                    v,
                    t,
                    x + b * t,
                    alpha + b,
                    beta - b,
                    f.rho,
                    f.w + b,
                    s.c_in + b,
                    s.c_out + b,
                ],
            );
        }
    }
    Ok(out)
}

pub fn shock_csv(trace: &ShockTrace, boost: f64) -> String {
    let mut out = String::new();
    out.push_str(SHOCK_HEADER);
    out.push('\n');
    for k in 0..trace.param.len() {
        let (bh, ah) = (trace.behind[k], trace.ahead[k]);
        line(
            &mut out,
            &[
                trace.param[k],
                trace.t[k],
                trace.x[k] + boost * trace.t[k],
                trace.speed[k] + boost,
                bh.alpha + boost,
                bh.beta - boost,
                ah.alpha + boost,
                ah.beta - boost,
                trace.j_residual[k],
                trace.margins[k].0,
                trace.margins[k].1,
            ],
        );
    }
    out
}

pub fn write_all(dir: &Path, problem: &Problem, sol: &Solution, report_json: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let b = problem.ipd.frame_boost;
    std::fs::write(dir.join("solution.csv"), solution_csv(problem, sol)?)?;
    std::fs::write(dir.join("shock_left.csv"), shock_csv(&sol.eval.traces.left, b))?;
    std::fs::write(dir.join("shock_right.csv"), shock_csv(&sol.eval.traces.right, b))?;
    let mut report = String::from(report_json);
    if !report.ends_with('\n') {
        let _ = writeln!(report);
    }
    std::fs::write(dir.join("report.json"), report)?;
    Ok(())
}

//! Orchestration: interaction point, iteration, verification, exports.

use std::path::PathBuf;

use log::{info, warn};
use serde::Serialize;
use shockint_core::error::Error;
use shockint_core::jump::{determinism_check, JumpPair, ShockSide};
use shockint_core::origin::{interaction_point, InteractionPointData};
use shockint_core::scheme::{linearized_rate, solve, ConvergenceDiag, Problem, Solution};
use shockint_core::verify::{asymptotic_check, residual_suite, uniqueness_restart, AsymptoticReport, ResidualReport};

use crate::config::{EosConfig, GridConfig, RunConfig};
use crate::error::CliError;
use crate::export;

pub const SCHEMA: u32 = 1;
/// Power-iteration steps for the linearised contraction factor.
const RATE_STEPS: usize = 12;
/// Attempts allowed to `auto_eps`, each halving `epsilon`.
const MAX_EPS_HALVINGS: usize = 12;
/// Tolerance of the interaction-point solve.
const ORIGIN_TOL: f64 = 1e-13;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub auto_eps: bool,
    pub refine: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Uniqueness {
    pub seed_bump: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementLevel {
    pub grid: GridConfig,
    pub iterations: usize,
    pub residuals: ResidualReport,
    pub asymptotic_remainder: f64,
}

/// Error reduction factors between consecutive levels.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementRatios {
    pub coarse: GridConfig,
    pub char_in: f64,
    pub integrability: f64,
    pub b_identity: f64,
    /// Ratio of successive differences of the remainder norm; needs three levels.
    pub asymptotic_remainder: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub converged: bool,
    pub iterations: usize,
    pub epsilon: f64,
    pub epsilon_attempts: Vec<f64>,
    pub grid: GridConfig,
    pub eos: EosConfig,
    pub frame_boost: f64,
    pub interaction_point: InteractionPointData,
    pub convergence: ConvergenceDiag,
    pub linearized_rate: f64,
    pub residuals: ResidualReport,
    pub asymptotic: AsymptoticReport,
    pub uniqueness: Option<Uniqueness>,
    pub refinement: Vec<RefinementLevel>,
    pub refinement_ratios: Vec<RefinementRatios>,
}

pub struct RunOutcome {
    pub report: Report,
    pub report_json: String,
    pub problem: Problem,
    pub solution: Solution,
}

fn retry_with_smaller_eps(e: &Error) -> bool {
    matches!(
        e,
        Error::ContainmentViolated { .. }
            | Error::NotConverged { .. }
            | Error::HorizonExceeded { .. }
            | Error::DeterminismViolated { .. }
            | Error::NewtonDiverged { .. }
            | Error::SonicDegeneracy
    )
}

fn solve_at(base: &Problem, eps: f64, grid: GridConfig) -> Result<(Problem, Solution), Error> {
    let p = base.with_grid(eps, grid.n, grid.nsig)?;
    let s = solve(&p)?;
    Ok((p, s))
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let eos = cfg.build_eos()?;
    let (left, right) = cfg.build_ahead(&eos)?;
    let base = Problem::new(
        eos,
        &left,
        &right,
        cfg.epsilon,
        cfg.grid.n,
        cfg.grid.nsig,
        cfg.scheme_config(),
    )?;
    info!(
        "interaction point: rho0 = {:.12}, a = {:.10}, Gamma0 = {:.10}",
        base.ipd.rho0, base.ipd.a, base.ipd.gamma0
    );
    let auto = opts.auto_eps || cfg.flags.auto_eps;
    let mut eps = cfg.epsilon;
    let mut attempts = Vec::new();
    let (problem, solution) = loop {
        attempts.push(eps);
        match solve_at(&base, eps, cfg.grid) {
            Ok(r) => break r,
            Err(e) if auto && retry_with_smaller_eps(&e) && attempts.len() < MAX_EPS_HALVINGS => {
                warn!("epsilon = {eps:e} failed ({e}); halving");
                eps *= 0.5;
            }
            Err(e) => return Err(e.into()),
        }
    };
    info!(
        "converged in {} iterations, contraction estimate {:.6}",
        solution.diag.iterations, solution.diag.spectral_radius_estimate
    );
    let residuals = residual_suite(&problem, &solution)?;
    let asymptotic = asymptotic_check(&problem, &solution);
    let rate = linearized_rate(&problem, &solution.snapshot, RATE_STEPS)?;
    let uniqueness = if cfg.flags.uniqueness {
        let c = 10.0 * problem.config.tol_iter;
        let distance = uniqueness_restart(&problem, &solution, c)?;
        Some(Uniqueness { seed_bump: c, distance })
    } else {
        None
    };

    let mut refinement = vec![RefinementLevel {
        grid: cfg.grid,
        iterations: solution.diag.iterations,
        residuals,
        asymptotic_remainder: asymptotic.remainder_norm,
    }];
    for j in 1..=opts.refine {
        let grid = GridConfig {
            n: cfg.grid.n << j,
            nsig: cfg.grid.nsig << j,
        };
        let (p, s) = solve_at(&base, eps, grid)?;
        info!("refinement level {j}: N = {}, {} iterations", grid.n, s.diag.iterations);
        refinement.push(RefinementLevel {
            grid,
            iterations: s.diag.iterations,
            residuals: residual_suite(&p, &s)?,
            asymptotic_remainder: asymptotic_check(&p, &s).remainder_norm,
        });
    }
    let refinement_ratios = refinement_ratios(&refinement);

    let report = Report {
        schema: SCHEMA,
        converged: solution.diag.converged,
        iterations: solution.diag.iterations,
        epsilon: eps,
        epsilon_attempts: attempts,
        grid: cfg.grid,
        eos: cfg.eos.clone(),
        frame_boost: problem.ipd.frame_boost,
        interaction_point: problem.ipd,
        convergence: solution.diag.clone(),
        linearized_rate: rate,
        residuals,
        asymptotic,
        uniqueness,
        refinement: if opts.refine > 0 { refinement } else { Vec::new() },
        refinement_ratios,
    };
    let report_json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(dir) = opts.out.clone().or_else(|| cfg.output.clone()) {
        export::write_all(&dir, &problem, &solution, &report_json)?;
        info!("wrote exports to {}", dir.display());
    }
    Ok(RunOutcome {
        report,
        report_json,
        problem,
        solution,
    })
}

pub fn refinement_ratios(levels: &[RefinementLevel]) -> Vec<RefinementRatios> {
    levels
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let (c, f) = (&w[0].residuals, &w[1].residuals);
            let asymptotic_remainder = levels.get(j + 2).map(|g| {
                let d1 = (w[0].asymptotic_remainder - w[1].asymptotic_remainder).abs();
                let d2 = (w[1].asymptotic_remainder - g.asymptotic_remainder).abs();
                d1 / d2
            });
            RefinementRatios {
                coarse: w[0].grid,
                char_in: c.char_in / f.char_in,
                integrability: c.integrability / f.integrability,
                b_identity: c.b_identity() / f.b_identity(),
                asymptotic_remainder,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub schema: u32,
    pub interaction_point: InteractionPointData,
    pub determinism_left: bool,
    pub determinism_right: bool,
}

/// Interaction point and determinism at the origin, without iterating.
pub fn check(cfg: &RunConfig) -> Result<CheckReport, CliError> {
    let eos = cfg.build_eos()?;
    let (left, right) = cfg.build_ahead(&eos)?;
    let (ipd, nl, nr) = interaction_point(&eos, &left, &right, ORIGIN_TOL)?;
    let behind = eos.to_riemann(&shockint_core::eos::FluidState { rho: ipd.rho0, w: 0.0 })?;
    let dl = determinism_check(&eos, ShockSide::Left, &JumpPair::new(behind, nl.eval(0.0, 0.0)?))?;
    let dr = determinism_check(&eos, ShockSide::Right, &JumpPair::new(behind, nr.eval(0.0, 0.0)?))?;
    Ok(CheckReport {
        schema: SCHEMA,
        interaction_point: ipd,
        determinism_left: dl.ok,
        determinism_right: dr.ok,
    })
}

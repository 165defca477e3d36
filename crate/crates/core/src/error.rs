use thiserror::Error;

use crate::jump::ShockSide;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("Riemann invariants ({alpha}, {beta}) map outside the admissible density range")]
    OutOfRangeInvariants { alpha: f64, beta: f64 },
    #[error("invalid equation of state: {0}")]
    InvalidEos(String),
    #[error("degenerate jump: density jump is zero")]
    DegenerateJump,
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("singular Jacobian in Newton iteration")]
    SingularJacobian,
    #[error("states are not on the Hugoniot locus (residual {0:e})")]
    NotOnHugoniot(f64),
    #[error("sonic degeneracy: shock speed coincides with a behind characteristic speed")]
    SonicDegeneracy,
    #[error("characteristics focus before the requested horizon (min stretch {0})")]
    CharacteristicFocusing(f64),
    #[error("time {t} exceeds the ahead-field horizon {t_max}")]
    HorizonExceeded { t: f64, t_max: f64 },
    #[error("no admissible interaction state found")]
    NoAdmissibleRoot,
    #[error("{0} distinct admissible interaction states found")]
    AmbiguousRoot(usize),
    #[error("determinism violated on the {side:?} shock at parameter {param} (margins {lo:e}, {hi:e})")]
    DeterminismViolated {
        side: ShockSide,
        param: f64,
        lo: f64,
        hi: f64,
    },
    #[error("bad grid resolution: {0}")]
    BadResolution(String),
    #[error("integration segment leaves the domain: {0}")]
    OutOfRow(String),
    #[error("point ({u}, {v}) lies outside the domain")]
    OutsideDomain { u: f64, v: f64 },
    #[error("{side:?} shock leaves the ahead development at parameter {param} (margin {margin:e})")]
    ContainmentViolated { side: ShockSide, param: f64, margin: f64 },
    #[error("iteration did not converge after {iterations} iterations (last ratio {last_ratio})")]
    NotConverged { iterations: usize, last_ratio: f64 },
    #[error("restart from a perturbed seed ended {distance:e} away from the reference solution")]
    UniquenessCheckFailed { distance: f64 },
    #[error("inadmissible seed: {0}")]
    InadmissibleSeed(String),
}

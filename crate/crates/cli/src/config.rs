//! Run configuration, read from JSON.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use shockint_core::ahead::{ahead_pde_residual, AheadField, Profile, SimpleWave, TanhProfile, WaveFamily};
use shockint_core::eos::{EosModel, FluidState};
use shockint_core::jump::ShockSide;
use shockint_core::scheme::SchemeConfig;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EosConfig {
    /// `p = kappa rho^gamma`.
    Polytropic { kappa: f64, gamma: f64 },
}

fn default_t_max() -> f64 {
    1.0
}

/// State ahead of one shock. `rho` and `w` give the value at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AheadConfig {
    Constant {
        rho: f64,
        w: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
    },
    /// One invariant fixed, the other `base + amp tanh((x - center)/width)`,
    /// with `base` read off the state at the origin.
    SimpleWave {
        rho: f64,
        w: f64,
        family: WaveFamily,
        amp: f64,
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub nsig: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_newton: f64,
    pub tol_iter: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = SchemeConfig::default();
        Self {
            tol_newton: c.tol_newton,
            tol_iter: c.tol_iter,
            max_iter: c.max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    /// Halve `epsilon` until the run succeeds.
    pub auto_eps: bool,
    /// Check the ahead data against the PDE before solving.
    pub validate_ahead: bool,
    /// Rerun from a perturbed seed and compare.
    pub uniqueness: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            auto_eps: false,
            validate_ahead: true,
            uniqueness: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eos: EosConfig,
    pub ahead_left: AheadConfig,
    pub ahead_right: AheadConfig,
    pub epsilon: f64,
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Largest ahead-data PDE residual accepted by `validate_ahead`.
const AHEAD_RESIDUAL_LIMIT: f64 = 1e-8;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let t = &self.tolerances;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(t.tol_newton > 0.0 && t.tol_iter > 0.0 && t.max_iter > 0) {
            return bad("tolerances must be positive".into());
        }
        for (name, a) in [("ahead_left", &self.ahead_left), ("ahead_right", &self.ahead_right)] {
            let (rho, t_max) = match a {
                AheadConfig::Constant { rho, t_max, .. } => (*rho, *t_max),
                AheadConfig::SimpleWave { rho, t_max, width, .. } => {
                    if !(*width > 0.0) {
                        return bad(format!("{name}: width must be positive"));
                    }
                    (*rho, *t_max)
                }
            };
            if !(rho > 0.0) {
                return bad(format!("{name}: density must be positive"));
            }
            if !(t_max > 0.0) {
                return bad(format!("{name}: t_max must be positive"));
            }
        }
        Ok(())
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            tol_newton: self.tolerances.tol_newton,
            tol_iter: self.tolerances.tol_iter,
            max_iter: self.tolerances.max_iter,
        }
    }

    pub fn build_eos(&self) -> Result<EosModel, CliError> {
        match self.eos {
            EosConfig::Polytropic { kappa, gamma } => EosModel::polytropic(kappa, gamma).map_err(CliError::input),
        }
    }

    /// Ahead fields for both shocks, checked against the PDE if requested.
    pub fn build_ahead(&self, eos: &EosModel) -> Result<(AheadField, AheadField), CliError> {
        let left = build_field(eos, ShockSide::Left, &self.ahead_left)?;
        let right = build_field(eos, ShockSide::Right, &self.ahead_right)?;
        if self.flags.validate_ahead {
            for f in [&left, &right] {
                let span = 4.0 * self.epsilon.max(0.05);
                let r = ahead_pde_residual(eos, f, f.t_max().min(span), (-span, span), 16).map_err(CliError::input)?;
                if r > AHEAD_RESIDUAL_LIMIT {
                    return Err(CliError::Config(format!("ahead data violates the PDE: residual {r:e}")));
                }
            }
        }
        Ok((left, right))
    }
}

fn build_field(eos: &EosModel, side: ShockSide, cfg: &AheadConfig) -> Result<AheadField, CliError> {
    match *cfg {
        AheadConfig::Constant { rho, w, t_max } => {
            let pair = eos.to_riemann(&FluidState { rho, w }).map_err(CliError::input)?;
            Ok(AheadField::constant(side, pair, t_max))
        }
        AheadConfig::SimpleWave {
            rho,
            w,
            family,
            amp,
            width,
            center,
            t_max,
        } => {
            let pair = eos.to_riemann(&FluidState { rho, w }).map_err(CliError::input)?;
            let (fixed, base) = match family {
                WaveFamily::Out => (pair.beta, pair.alpha),
                WaveFamily::In => (pair.alpha, pair.beta),
            };
            // shift so that the profile takes the value `base` at x = 0
            let shape = TanhProfile {
                base: 0.0,
                amp,
                width,
                center,
            };
            let offset = base - shape.value(0.0);
            let profile = TanhProfile { base: offset, ..shape };
            let wave =
                SimpleWave::new(eos.clone(), family, fixed, Arc::new(profile), t_max).map_err(CliError::input)?;
            Ok(AheadField::new(side, Arc::new(wave)))
        }
    }
}

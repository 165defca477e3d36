//! Barotropic equations of state and the Riemann-invariant change of variables.
//!
//! The invariants are `alpha = F(rho) + w` and `beta = F(rho) - w` where
//! `F' = eta / rho` and `eta = sqrt(dp/drho)` is the sound speed. The
//! characteristic speeds are `c_out = w + eta` and `c_in = w - eta`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub rho: f64,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannPair {
    pub alpha: f64,
    pub beta: f64,
}

impl RiemannPair {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharSpeeds {
    pub c_out: f64,
    pub c_in: f64,
}

/// Characteristic speeds with their first and second partials in `(alpha, beta)`.
///
/// First partials are stored as `[d/dalpha, d/dbeta]`, second partials as
/// `[d2/dalpha2, d2/dalpha dbeta, d2/dbeta2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedJet {
    pub rho: f64,
    pub w: f64,
    pub eta: f64,
    pub c_out: f64,
    pub c_in: f64,
    pub d_out: [f64; 2],
    pub d_in: [f64; 2],
    pub dd_out: [f64; 3],
    pub dd_in: [f64; 3],
}

/// `p = kappa * rho^gamma` with `gamma > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytropic {
    pub kappa: f64,
    pub gamma: f64,
}

impl Polytropic {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidEos(format!("kappa must be positive, got {kappa}")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidEos(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Self { kappa, gamma })
    }

    fn eta_scale(&self) -> f64 {
        (self.gamma * self.kappa).sqrt()
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Equation of state given by user closures.
///
/// `potential` must satisfy `F' = sqrt(p') / rho`; its additive gauge is free.
/// Missing second derivatives and inverses are computed numerically.
#[derive(Clone)]
pub struct AnalyticEos {
    pressure: ScalarFn,
    dpdrho: ScalarFn,
    d2pdrho2: Option<ScalarFn>,
    potential: ScalarFn,
    inverse_potential: Option<ScalarFn>,
    density_floor: f64,
}

impl fmt::Debug for AnalyticEos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticEos")
            .field("density_floor", &self.density_floor)
            .finish_non_exhaustive()
    }
}

impl AnalyticEos {
    /// Builds the model and checks `p' > 0` and monotonicity of `F` on
    /// samples of `(density_floor, rho_check]`.
    pub fn new(
        pressure: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dpdrho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        potential: impl Fn(f64) -> f64 + Send + Sync + 'static,
        density_floor: f64,
        rho_check: f64,
    ) -> Result<Self> {
        let eos = Self {
            pressure: Arc::new(pressure),
            dpdrho: Arc::new(dpdrho),
            d2pdrho2: None,
            potential: Arc::new(potential),
            inverse_potential: None,
            density_floor: density_floor.max(0.0),
        };
        eos.validate(rho_check)?;
        Ok(eos)
    }

    pub fn with_second_derivative(mut self, d2pdrho2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2pdrho2 = Some(Arc::new(d2pdrho2));
        self
    }

    pub fn with_inverse_potential(mut self, inverse: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.inverse_potential = Some(Arc::new(inverse));
        self
    }

    fn validate(&self, rho_check: f64) -> Result<()> {
        if !(rho_check > self.density_floor) {
            return Err(Error::InvalidEos("check range is empty".into()));
        }
        let n = 64;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=n {
            let rho = self.density_floor + (rho_check - self.density_floor) * i as f64 / n as f64;
            let dp = (self.dpdrho)(rho);
            if !(dp > 0.0 && dp.is_finite()) {
                return Err(Error::InvalidEos(format!("dp/drho = {dp} at rho = {rho}")));
            }
            let f = (self.potential)(rho);
            if !(f > prev) {
                return Err(Error::InvalidEos(format!("potential not increasing at rho = {rho}")));
            }
            prev = f;
        }
        Ok(())
    }

    fn d2p(&self, rho: f64) -> f64 {
        match &self.d2pdrho2 {
            Some(f) => f(rho),
            None => {
                let h = 1e-4 * rho.max(1e-8);
                ((self.dpdrho)(rho + h) - (self.dpdrho)(rho - h)) / (2.0 * h)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum EosModel {
    Polytropic(Polytropic),
    Analytic(AnalyticEos),
}

impl From<Polytropic> for EosModel {
    fn from(p: Polytropic) -> Self {
        EosModel::Polytropic(p)
    }
}

impl From<AnalyticEos> for EosModel {
    fn from(a: AnalyticEos) -> Self {
        EosModel::Analytic(a)
    }
}

const INVERSE_TOL: f64 = 1e-13;

impl EosModel {
    pub fn polytropic(kappa: f64, gamma: f64) -> Result<Self> {
        Polytropic::new(kappa, gamma).map(Self::Polytropic)
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        match self {
            EosModel::Polytropic(p) => p.kappa * rho.powf(p.gamma),
            EosModel::Analytic(a) => (a.pressure)(rho),
        }
    }

    pub fn sound_speed(&self, rho: f64) -> f64 {
        match self {
            EosModel::Polytropic(p) => p.eta_scale() * rho.powf(0.5 * (p.gamma - 1.0)),
            EosModel::Analytic(a) => (a.dpdrho)(rho).sqrt(),
        }
    }

    /// `(eta, d eta/d rho, d2 eta/d rho2)`.
    pub fn sound_speed_derivs(&self, rho: f64) -> (f64, f64, f64) {
        match self {
            EosModel::Polytropic(p) => {
                let eta = self.sound_speed(rho);
                let q = 0.5 * (p.gamma - 1.0);
                (eta, q * eta / rho, q * (q - 1.0) * eta / (rho * rho))
            }
            EosModel::Analytic(a) => {
                let dp = (a.dpdrho)(rho);
                let d2p = a.d2p(rho);
                let eta = dp.sqrt();
                let d1 = d2p / (2.0 * eta);
                let d3 = match &a.d2pdrho2 {
                    Some(f) => {
                        let h = 1e-4 * rho.max(1e-8);
                        (f(rho + h) - f(rho - h)) / (2.0 * h)
                    }
                    None => {
                        let h = 1e-3 * rho.max(1e-8);
                        ((a.dpdrho)(rho + h) - 2.0 * dp + (a.dpdrho)(rho - h)) / (h * h)
                    }
                };
                let d2 = d3 / (2.0 * eta) - d1 * d1 / eta;
                (eta, d1, d2)
            }
        }
    }

    pub fn potential(&self, rho: f64) -> f64 {
        match self {
            EosModel::Polytropic(p) => 2.0 * self.sound_speed(rho) / (p.gamma - 1.0),
            EosModel::Analytic(a) => (a.potential)(rho),
        }
    }

    /// Infimum of the range of `F` over admissible densities.
    pub fn potential_floor(&self) -> f64 {
        match self {
            EosModel::Polytropic(_) => 0.0,
            EosModel::Analytic(a) => {
                let f = (a.potential)(a.density_floor);
                if f.is_finite() {
                    f
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn inverse_potential(&self, s: f64) -> Result<f64> {
        if !(s > self.potential_floor()) || !s.is_finite() {
            return Err(Error::NonPositiveDensity(s));
        }
        match self {
            EosModel::Polytropic(p) => {
                let base = s * (p.gamma - 1.0) / (2.0 * p.eta_scale());
                Ok(base.powf(2.0 / (p.gamma - 1.0)))
            }
            EosModel::Analytic(a) => match &a.inverse_potential {
                Some(inv) => {
                    let rho = inv(s);
                    if rho > a.density_floor && rho.is_finite() {
                        Ok(rho)
                    } else {
                        Err(Error::NonPositiveDensity(rho))
                    }
                }
                None => self.invert_numerically(a, s),
            },
        }
    }

    fn invert_numerically(&self, a: &AnalyticEos, s: f64) -> Result<f64> {
        let f = |rho: f64| (a.potential)(rho) - s;
        let mut lo = if a.density_floor > 0.0 {
            a.density_floor
        } else {
            f64::MIN_POSITIVE
        };
        let mut hi = lo.max(1.0);
        let mut grow = 0;
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 2000 {
                return Err(Error::OutOfRangeInvariants { alpha: s, beta: s });
            }
        }
        let mut rho = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = f(rho);
            if r == 0.0 {
                return Ok(rho);
            }
            if r < 0.0 {
                lo = rho;
            } else {
                hi = rho;
            }
            let slope = self.sound_speed(rho) / rho;
            let mut next = rho - r / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - rho).abs() <= INVERSE_TOL || hi - lo <= INVERSE_TOL {
                return Ok(next);
            }
            rho = next;
        }
        Ok(rho)
    }

    pub fn to_riemann(&self, state: &FluidState) -> Result<RiemannPair> {
        if !(state.rho > 0.0) || !state.rho.is_finite() {
            return Err(Error::NonPositiveDensity(state.rho));
        }
        let f = self.potential(state.rho);
        Ok(RiemannPair {
            alpha: f + state.w,
            beta: f - state.w,
        })
    }

    pub fn to_fluid(&self, pair: &RiemannPair) -> Result<FluidState> {
        let s = 0.5 * (pair.alpha + pair.beta);
        let rho = self.inverse_potential(s).map_err(|_| Error::OutOfRangeInvariants {
            alpha: pair.alpha,
            beta: pair.beta,
        })?;
        Ok(FluidState {
            rho,
            w: 0.5 * (pair.alpha - pair.beta),
        })
    }

    pub fn char_speeds(&self, pair: &RiemannPair) -> Result<CharSpeeds> {
        let st = self.to_fluid(pair)?;
        let eta = self.sound_speed(st.rho);
        Ok(CharSpeeds {
            c_out: st.w + eta,
            c_in: st.w - eta,
        })
    }

    pub fn speed_jet(&self, pair: &RiemannPair) -> Result<SpeedJet> {
        let st = self.to_fluid(pair)?;
        let (eta, d1, d2) = self.sound_speed_derivs(st.rho);
        let r = st.rho;
        // eta as a function of s = (alpha + beta)/2, using d rho/ds = rho/eta
        let e1 = d1 * r / eta;
        let e2 = (r / eta) * (d2 * r / eta + d1 / eta - r * d1 * d1 / (eta * eta));
        let q = 0.25 * e2;
        Ok(SpeedJet {
            rho: r,
            w: st.w,
            eta,
            c_out: st.w + eta,
            c_in: st.w - eta,
            d_out: [0.5 + 0.5 * e1, -0.5 + 0.5 * e1],
            d_in: [0.5 - 0.5 * e1, -0.5 - 0.5 * e1],
            dd_out: [q, q, q],
            dd_in: [-q, -q, -q],
        })
    }
}

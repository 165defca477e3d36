//! Smooth solutions ahead of the two shocks and their boundary characteristics.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eos::{EosModel, RiemannPair};
use crate::error::{Error, Result};
use crate::jump::ShockSide;

/// `(alpha_t, alpha_x, beta_t, beta_x)` at a point.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct AheadPartials {
    pub alpha_t: f64,
    pub alpha_x: f64,
    pub beta_t: f64,
    pub beta_x: f64,
}

/// A classical solution of the barotropic system in Riemann invariants.
pub trait AheadSolution: Send + Sync + fmt::Debug {
    fn eval(&self, t: f64, x: f64) -> Result<RiemannPair>;
    fn partials(&self, t: f64, x: f64) -> Result<AheadPartials>;
    /// Largest time for which the solution is known to be classical.
    fn horizon(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantState {
    pub pair: RiemannPair,
    pub t_max: f64,
}

impl AheadSolution for ConstantState {
    fn eval(&self, _t: f64, _x: f64) -> Result<RiemannPair> {
        Ok(self.pair)
    }
    fn partials(&self, _t: f64, _x: f64) -> Result<AheadPartials> {
        Ok(AheadPartials::default())
    }
    fn horizon(&self) -> f64 {
        self.t_max
    }
}

/// Monotone `C^2` initial profile of the varying invariant of a simple wave.
pub trait Profile: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    /// Closed interval containing every value of the profile.
    fn range(&self) -> (f64, f64);
    /// Interval outside of which the slope is negligible.
    fn support(&self) -> (f64, f64);
}

/// `base + amp * tanh((x - center) / width)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TanhProfile {
    pub base: f64,
    pub amp: f64,
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

impl Profile for TanhProfile {
    fn value(&self, x: f64) -> f64 {
        self.base + self.amp * ((x - self.center) / self.width).tanh()
    }
    fn slope(&self, x: f64) -> f64 {
        let c = ((x - self.center) / self.width).cosh();
        self.amp / (self.width * c * c)
    }
    fn range(&self) -> (f64, f64) {
        (self.base - self.amp.abs(), self.base + self.amp.abs())
    }
    fn support(&self) -> (f64, f64) {
        let w = 40.0 * self.width.abs();
        (self.center - w, self.center + w)
    }
}

/// Which invariant varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveFamily {
    /// `beta` fixed, `alpha` constant along `dx/dt = c_out`.
    Out,
    /// `alpha` fixed, `beta` constant along `dx/dt = c_in`.
    In,
}

const MIN_STRETCH: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct SimpleWave {
    eos: EosModel,
    family: WaveFamily,
    fixed: f64,
    profile: Arc<dyn Profile>,
    t_max: f64,
    speed_range: (f64, f64),
}

impl SimpleWave {
    pub fn new(eos: EosModel, family: WaveFamily, fixed: f64, profile: Arc<dyn Profile>, t_max: f64) -> Result<Self> {
        let mut wave = Self {
            eos,
            family,
            fixed,
            profile,
            t_max,
            speed_range: (0.0, 0.0),
        };
        let (lo, hi) = wave.profile.range();
        let c_lo = wave.speed_and_slope(lo)?.0;
        let c_hi = wave.speed_and_slope(hi)?.0;
        wave.speed_range = (c_lo.min(c_hi), c_lo.max(c_hi));
        let stretch = wave.min_stretch()?;
        if stretch <= MIN_STRETCH {
            return Err(Error::CharacteristicFocusing(stretch));
        }
        Ok(wave)
    }

    pub fn family(&self) -> WaveFamily {
        self.family
    }

    fn pair(&self, value: f64) -> RiemannPair {
        match self.family {
            WaveFamily::Out => RiemannPair::new(value, self.fixed),
            WaveFamily::In => RiemannPair::new(self.fixed, value),
        }
    }

    /// Characteristic speed carrying the profile and its derivative in the
    /// varying invariant.
    fn speed_and_slope(&self, value: f64) -> Result<(f64, f64)> {
        let j = self.eos.speed_jet(&self.pair(value))?;
        Ok(match self.family {
            WaveFamily::Out => (j.c_out, j.d_out[0]),
            WaveFamily::In => (j.c_in, j.d_in[1]),
        })
    }

    /// `min over x0, t in [0, t_max]` of `1 + t d(speed)/dx0`.
    pub fn min_stretch(&self) -> Result<f64> {
        let (a, b) = self.profile.support();
        let n = 8000;
        let mut worst = 0.0f64;
        for i in 0..=n {
            let x0 = a + (b - a) * i as f64 / n as f64;
            let (_, dc) = self.speed_and_slope(self.profile.value(x0))?;
            worst = worst.min(dc * self.profile.slope(x0));
        }
        Ok(1.0 + self.t_max * worst)
    }

    /// Foot `x0` of the characteristic through `(t, x)`.
    fn foot(&self, t: f64, x: f64) -> Result<f64> {
        if t > self.t_max {
            return Err(Error::HorizonExceeded { t, t_max: self.t_max });
        }
        if t == 0.0 {
            return Ok(x);
        }
        let pad = 1e-12 * (1.0 + x.abs());
        let mut lo = x - self.speed_range.1 * t - pad;
        let mut hi = x - self.speed_range.0 * t + pad;
        let g = |x0: f64| -> Result<(f64, f64)> {
            let f = self.profile.value(x0);
            let (c, dc) = self.speed_and_slope(f)?;
            Ok((x0 + c * t - x, 1.0 + t * dc * self.profile.slope(x0)))
        };
        let mut x0 = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (r, dr) = g(x0)?;
            if r == 0.0 {
                return Ok(x0);
            }
            if r < 0.0 {
                lo = x0;
            } else {
                hi = x0;
            }
            let mut next = x0 - r / dr;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x0).abs() <= 1e-15 * (1.0 + x0.abs()) {
                return Ok(next);
            }
            x0 = next;
        }
        Ok(x0)
    }
}

impl AheadSolution for SimpleWave {
    fn eval(&self, t: f64, x: f64) -> Result<RiemannPair> {
        let x0 = self.foot(t, x)?;
        Ok(self.pair(self.profile.value(x0)))
    }

    fn partials(&self, t: f64, x: f64) -> Result<AheadPartials> {
        let x0 = self.foot(t, x)?;
        let f = self.profile.value(x0);
        let df = self.profile.slope(x0);
        let (c, dc) = self.speed_and_slope(f)?;
        let gx = df / (1.0 + t * dc * df);
        let gt = -c * gx;
        Ok(match self.family {
            WaveFamily::Out => AheadPartials {
                alpha_t: gt,
                alpha_x: gx,
                ..Default::default()
            },
            WaveFamily::In => AheadPartials {
                beta_t: gt,
                beta_x: gx,
                ..Default::default()
            },
        })
    }

    fn horizon(&self) -> f64 {
        self.t_max
    }
}

type EvalFn = Arc<dyn Fn(f64, f64) -> RiemannPair + Send + Sync>;
type PartialsFn = Arc<dyn Fn(f64, f64) -> AheadPartials + Send + Sync>;

/// Solution supplied by closures; use [`ahead_pde_residual`] to check it.
#[derive(Clone)]
pub struct AnalyticAhead {
    eval: EvalFn,
    partials: PartialsFn,
    t_max: f64,
}

impl fmt::Debug for AnalyticAhead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticAhead")
            .field("t_max", &self.t_max)
            .finish_non_exhaustive()
    }
}

impl AnalyticAhead {
    pub fn new(
        eval: impl Fn(f64, f64) -> RiemannPair + Send + Sync + 'static,
        partials: impl Fn(f64, f64) -> AheadPartials + Send + Sync + 'static,
        t_max: f64,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            partials: Arc::new(partials),
            t_max,
        }
    }
}

impl AheadSolution for AnalyticAhead {
    fn eval(&self, t: f64, x: f64) -> Result<RiemannPair> {
        if t > self.t_max {
            return Err(Error::HorizonExceeded { t, t_max: self.t_max });
        }
        Ok((self.eval)(t, x))
    }
    fn partials(&self, t: f64, x: f64) -> Result<AheadPartials> {
        if t > self.t_max {
            return Err(Error::HorizonExceeded { t, t_max: self.t_max });
        }
        Ok((self.partials)(t, x))
    }
    fn horizon(&self) -> f64 {
        self.t_max
    }
}

/// Observer moving with velocity `b`: `x' = x - b t`, `w' = w - b`.
#[derive(Clone, Debug)]
struct Boosted {
    inner: Arc<dyn AheadSolution>,
    b: f64,
}

impl AheadSolution for Boosted {
    fn eval(&self, t: f64, x: f64) -> Result<RiemannPair> {
        let p = self.inner.eval(t, x + self.b * t)?;
        Ok(RiemannPair::new(p.alpha - self.b, p.beta + self.b))
    }
    fn partials(&self, t: f64, x: f64) -> Result<AheadPartials> {
        let p = self.inner.partials(t, x + self.b * t)?;
        Ok(AheadPartials {
            alpha_t: p.alpha_t + self.b * p.alpha_x,
            alpha_x: p.alpha_x,
            beta_t: p.beta_t + self.b * p.beta_x,
            beta_x: p.beta_x,
        })
    }
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }
}

/// Reflection `x -> -x`, `w -> -w`, which swaps the invariants.
#[derive(Clone, Debug)]
struct Mirrored {
    inner: Arc<dyn AheadSolution>,
}

impl AheadSolution for Mirrored {
    fn eval(&self, t: f64, x: f64) -> Result<RiemannPair> {
        let p = self.inner.eval(t, -x)?;
        Ok(RiemannPair::new(p.beta, p.alpha))
    }
    fn partials(&self, t: f64, x: f64) -> Result<AheadPartials> {
        let p = self.inner.partials(t, -x)?;
        Ok(AheadPartials {
            alpha_t: p.beta_t,
            alpha_x: -p.beta_x,
            beta_t: p.alpha_t,
            beta_x: -p.alpha_x,
        })
    }
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }
}

/// Ahead solution attached to one shock.
#[derive(Clone, Debug)]
pub struct AheadField {
    pub side: ShockSide,
    solution: Arc<dyn AheadSolution>,
}

impl AheadField {
    pub fn new(side: ShockSide, solution: Arc<dyn AheadSolution>) -> Self {
        Self { side, solution }
    }

    pub fn constant(side: ShockSide, pair: RiemannPair, t_max: f64) -> Self {
        Self::new(side, Arc::new(ConstantState { pair, t_max }))
    }

    pub fn t_max(&self) -> f64 {
        self.solution.horizon()
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<RiemannPair> {
        if t > self.t_max() {
            return Err(Error::HorizonExceeded { t, t_max: self.t_max() });
        }
        self.solution.eval(t, x)
    }

    pub fn partials(&self, t: f64, x: f64) -> Result<AheadPartials> {
        if t > self.t_max() {
            return Err(Error::HorizonExceeded { t, t_max: self.t_max() });
        }
        self.solution.partials(t, x)
    }

    /// The same field seen by an observer moving with velocity `b`.
    pub fn boosted(&self, b: f64) -> Self {
        Self {
            side: self.side,
            solution: Arc::new(Boosted {
                inner: self.solution.clone(),
                b,
            }),
        }
    }

    /// The spatial reflection, attached to the opposite shock.
    pub fn mirrored(&self) -> Self {
        Self {
            side: match self.side {
                ShockSide::Left => ShockSide::Right,
                ShockSide::Right => ShockSide::Left,
            },
            solution: Arc::new(Mirrored {
                inner: self.solution.clone(),
            }),
        }
    }
}

/// Sup of the characteristic-form residuals `alpha_t + c_out alpha_x` and
/// `beta_t + c_in beta_x` over a sample lattice of `[0, t_end] x [x_lo, x_hi]`.
pub fn ahead_pde_residual(
    eos: &EosModel,
    field: &AheadField,
    t_end: f64,
    x_range: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..=samples {
        let t = t_end * i as f64 / samples as f64;
        for j in 0..=samples {
            let x = x_range.0 + (x_range.1 - x_range.0) * j as f64 / samples as f64;
            let p = field.eval(t, x)?;
            let d = field.partials(t, x)?;
            let s = eos.char_speeds(&p)?;
            worst = worst
                .max((d.alpha_t + s.c_out * d.alpha_x).abs())
                .max((d.beta_t + s.c_in * d.beta_x).abs());
        }
    }
    Ok(worst)
}

pub const BOUNDARY_STEPS: usize = 2048;

/// The characteristic through the origin that bounds the ahead development:
/// `dx/dt = c_in` for the left shock and `dx/dt = c_out` for the right one.
#[derive(Clone, Debug)]
pub struct BoundaryChar {
    pub side: ShockSide,
    pub t_max: f64,
    times: Vec<f64>,
    positions: Vec<f64>,
    speeds: Vec<f64>,
}

impl BoundaryChar {
    pub fn new(eos: &EosModel, field: &AheadField) -> Result<Self> {
        let side = field.side;
        let t_max = field.t_max();
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::HorizonExceeded { t: 0.0, t_max });
        }
        let speed = |t: f64, x: f64| -> Result<f64> {
            let s = eos.char_speeds(&field.eval(t.min(t_max), x)?)?;
            Ok(match side {
                ShockSide::Left => s.c_in,
                ShockSide::Right => s.c_out,
            })
        };
        let n = BOUNDARY_STEPS;
        let h = t_max / n as f64;
        let mut times = Vec::with_capacity(n + 1);
        let mut positions = Vec::with_capacity(n + 1);
        let mut speeds = Vec::with_capacity(n + 1);
        let mut x = 0.0;
        for i in 0..=n {
            let t = i as f64 * h;
            let k1 = speed(t, x)?;
            times.push(t);
            positions.push(x);
            speeds.push(k1);
            if i == n {
                break;
            }
            let k2 = speed(t + 0.5 * h, x + 0.5 * h * k1)?;
            let k3 = speed(t + 0.5 * h, x + 0.5 * h * k2)?;
            let k4 = speed(t + h, x + h * k3)?;
            x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
        Ok(Self {
            side,
            t_max,
            times,
            positions,
            speeds,
        })
    }

    /// Position of the boundary characteristic at time `t` (cubic Hermite).
    pub fn position(&self, t: f64) -> Result<f64> {
        if t > self.t_max * (1.0 + 1e-14) || t < 0.0 {
            return Err(Error::HorizonExceeded { t, t_max: self.t_max });
        }
        let n = self.times.len() - 1;
        let h = self.t_max / n as f64;
        let j = ((t / h).floor() as usize).min(n - 1);
        let s = (t - self.times[j]) / h;
        let (p0, p1) = (self.positions[j], self.positions[j + 1]);
        let (m0, m1) = (self.speeds[j] * h, self.speeds[j + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1)
    }

    /// Signed distance to the boundary, non-negative inside the development.
    pub fn contains(&self, t: f64, x: f64) -> Result<f64> {
        let xb = self.position(t)?;
        Ok(match self.side {
            ShockSide::Left => xb - x,
            ShockSide::Right => x - xb,
        })
    }
}

//! Cubic splines on uniform knots `x_j = j h`, `j = 0..=n`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFn {
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    cum: Vec<f64>,
}

/// Tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

impl BoundaryFn {
    /// Not-a-knot spline through `values` on `[0, length]`.
    pub fn not_a_knot(length: f64, values: Vec<f64>) -> Self {
        Self::build(length, values, None)
    }

    /// Spline with prescribed slope at `0` and not-a-knot at the far end.
    pub fn clamped(length: f64, values: Vec<f64>, slope0: f64) -> Self {
        Self::build(length, values, Some(slope0))
    }

    fn build(length: f64, y: Vec<f64>, slope0: Option<f64>) -> Self {
        let n = y.len() - 1;
        assert!(n >= 4, "spline needs at least four intervals");
        let h = length / n as f64;
        let rhs = |j: usize| 6.0 * (y[j + 1] - 2.0 * y[j] + y[j - 1]) / (h * h);
        let mut m = vec![0.0; n + 1];
        // not-a-knot at the far end decouples row n-1
        m[n - 1] = rhs(n - 1) / 6.0;
        match slope0 {
            None => {
                m[1] = rhs(1) / 6.0;
                let k = n - 3;
                let mut d: Vec<f64> = (2..=n - 2).map(rhs).collect();
                d[0] -= m[1];
                d[k - 1] -= m[n - 1];
                let diag = vec![4.0; k];
                let off = vec![1.0; k];
                thomas(&off, &diag, &off, &mut d);
                m[2..=n - 2].copy_from_slice(&d);
                m[0] = 2.0 * m[1] - m[2];
            }
            Some(s) => {
                let k = n - 1;
                let mut d = Vec::with_capacity(k);
                d.push(6.0 * ((y[1] - y[0]) / h - s) / h);
                d.extend((1..=n - 2).map(rhs));
                d[k - 1] -= m[n - 1];
                let mut diag = vec![4.0; k];
                diag[0] = 2.0;
                let off = vec![1.0; k];
                thomas(&off, &diag, &off, &mut d);
                m[0..=n - 2].copy_from_slice(&d);
            }
        }
        m[n] = 2.0 * m[n - 1] - m[n - 2];
        let mut cum = vec![0.0; n + 1];
        let mut out = Self {
            h,
            y,
            m,
            cum: Vec::new(),
        };
        for j in 0..n {
            cum[j + 1] = cum[j] + out.piece_integral(j, h);
        }
        out.cum = cum;
        out
    }

    pub fn intervals(&self) -> usize {
        self.y.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.h * self.intervals() as f64
    }

    pub fn knot(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn second_derivs(&self) -> &[f64] {
        &self.m
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.intervals();
        let j = ((x / self.h).floor().max(0.0) as usize).min(n - 1);
        (j, x - j as f64 * self.h)
    }

    fn slope_coeff(&self, j: usize) -> f64 {
        (self.y[j + 1] - self.y[j]) / self.h - self.h * (2.0 * self.m[j] + self.m[j + 1]) / 6.0
    }

    fn piece_integral(&self, j: usize, t: f64) -> f64 {
        let b = self.slope_coeff(j);
        let dm = self.m[j + 1] - self.m[j];
        t * (self.y[j] + t * (0.5 * b + t * (self.m[j] / 6.0 + t * dm / (24.0 * self.h))))
    }

    pub fn value(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        if t == 0.0 {
            return self.y[j];
        }
        let b = self.slope_coeff(j);
        let dm = self.m[j + 1] - self.m[j];
        self.y[j] + t * (b + t * (0.5 * self.m[j] + t * dm / (6.0 * self.h)))
    }

    pub fn d1(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        let dm = self.m[j + 1] - self.m[j];
        self.slope_coeff(j) + t * (self.m[j] + t * dm / (2.0 * self.h))
    }

    pub fn d2(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        self.m[j] + (self.m[j + 1] - self.m[j]) * t / self.h
    }

    /// `int_0^x`.
    pub fn integral(&self, x: f64) -> f64 {
        let (j, t) = self.locate(x);
        self.cum[j] + self.piece_integral(j, t)
    }

    /// Sup over knots of the difference of second derivatives.
    pub fn d2_distance(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .zip(&other.m)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Sup over knots of the difference of values.
    pub fn value_distance(&self, other: &Self) -> f64 {
        self.y
            .iter()
            .zip(&other.y)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

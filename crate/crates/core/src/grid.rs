//! Discretisation of the characteristic triangle
//! `T_eps = {0 <= u <= a eps, u <= v <= u/a, v <= eps}`.
//!
//! Nodes sit on columns `u_k = k a eps / N`. Column `k` runs from the left
//! shock `v = u_k` (`sigma = 1`) to the right shock `v = u_k / a`
//! (`sigma = 0`) through `v = u_k (1 - (1 - a) sigma) / a`, so the right
//! shock nodes are `v_k = k eps / N`. All columns collapse to the origin at
//! `k = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::spline::BoundaryFn;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriGrid {
    pub epsilon: f64,
    pub a: f64,
    pub n: usize,
    pub nsig: usize,
}

pub const MIN_RESOLUTION: usize = 4;

/// Cubic Lagrange weights on four unit-spaced nodes at local coordinate `s`.
#[inline]
pub fn lagrange4(s: f64) -> [f64; 4] {
    let (s1, s2, s3) = (s - 1.0, s - 2.0, s - 3.0);
    [
        -s1 * s2 * s3 / 6.0,
        s * s2 * s3 / 2.0,
        -s * s1 * s3 / 2.0,
        s * s1 * s2 / 6.0,
    ]
}

/// Start index and weights of the four-point stencil around `pos` on nodes `0..=n`.
#[inline]
pub fn stencil(pos: f64, n: usize) -> (usize, [f64; 4]) {
    let i0 = (pos.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
    (i0, lagrange4(pos - i0 as f64))
}

/// Collected weights of a row integral, see [`TriGrid::row_stencil`].
#[derive(Clone, Debug, Default)]
pub struct RowStencil {
    /// Weight of the value at the right-shock end `(a v, v)`.
    pub end_weight: f64,
    /// `(first node index, weights)` for each crossed column.
    pub terms: Vec<(usize, [f64; 4])>,
}

impl RowStencil {
    #[inline]
    pub fn apply(&self, f: &Field2, end_value: f64) -> f64 {
        let mut s = self.end_weight * end_value;
        for (start, w) in &self.terms {
            let v = &f.values[*start..*start + 4];
            s += w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3];
        }
        s
    }
}

impl TriGrid {
    pub fn new(epsilon: f64, a: f64, n: usize, nsig: usize) -> Result<Self> {
        if n < MIN_RESOLUTION || nsig < MIN_RESOLUTION {
            return Err(Error::BadResolution(format!(
                "need N, Nsig >= {MIN_RESOLUTION}, got {n}, {nsig}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::BadResolution(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::BadResolution(format!("a must lie in (0, 1), got {a}")));
        }
        Ok(Self { epsilon, a, n, nsig })
    }

    pub fn du(&self) -> f64 {
        self.a * self.epsilon / self.n as f64
    }

    pub fn u_max(&self) -> f64 {
        self.a * self.epsilon
    }

    pub fn u(&self, k: usize) -> f64 {
        k as f64 * self.du()
    }

    /// Right-shock node `v_k = u_k / a`.
    pub fn v_right(&self, k: usize) -> f64 {
        k as f64 * self.epsilon / self.n as f64
    }

    pub fn sigma(&self, i: usize) -> f64 {
        i as f64 / self.nsig as f64
    }

    pub fn v(&self, k: usize, i: usize) -> f64 {
        // both shock lines exact
        if i == 0 {
            self.v_right(k)
        } else if i == self.nsig {
            self.u(k)
        } else {
            self.u(k) * (1.0 - (1.0 - self.a) * self.sigma(i)) / self.a
        }
    }

    pub fn idx(&self, k: usize, i: usize) -> usize {
        k * (self.nsig + 1) + i
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.nsig + 1)
    }

    /// Spacing in `v` along column `k`.
    pub fn dv(&self, k: usize) -> f64 {
        self.u(k) * (1.0 - self.a) / (self.a * self.nsig as f64)
    }

    pub fn sigma_of(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        ((1.0 - self.a * v / u) / (1.0 - self.a)).clamp(0.0, 1.0)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let tol = 1e-12 * self.epsilon;
        u >= -tol && u <= self.u_max() + tol && v >= u - tol && self.a * v <= u + tol && v <= self.epsilon + tol
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..=self.n).flat_map(move |k| (0..=self.nsig).map(move |i| (k, i, self.u(k), self.v(k, i))))
    }

    pub fn field(&self, f: impl Fn(f64, f64) -> f64) -> Field2 {
        Field2 {
            n: self.n,
            nsig: self.nsig,
            values: self.nodes().map(|(_, _, u, v)| f(u, v)).collect(),
        }
    }

    pub fn zeros(&self) -> Field2 {
        Field2 {
            n: self.n,
            nsig: self.nsig,
            values: vec![0.0; self.num_nodes()],
        }
    }

    /// Value of `f` on column `k` at `sigma`.
    #[inline]
    pub fn column_value(&self, f: &Field2, k: usize, sigma: f64) -> f64 {
        let (i0, w) = stencil(sigma * self.nsig as f64, self.nsig);
        let base = self.idx(k, i0);
        let v = &f.values[base..base + 4];
        // weights sum to one; interpolating increments keeps constants exact
        v[0] + w[1] * (v[1] - v[0]) + w[2] * (v[2] - v[0]) + w[3] * (v[3] - v[0])
    }

    /// Tensor cubic interpolation in `(u, sigma)`.
    pub fn interp_eval(&self, f: &Field2, u: f64, v: f64) -> Result<f64> {
        if !self.contains(u, v) {
            return Err(Error::OutsideDomain { u, v });
        }
        let sigma = self.sigma_of(u, v);
        let (k0, w) = stencil(u / self.du(), self.n);
        let c: [f64; 4] = std::array::from_fn(|m| self.column_value(f, k0 + m, sigma));
        Ok(c[0] + w[1] * (c[1] - c[0]) + w[2] * (c[2] - c[0]) + w[3] * (c[3] - c[0]))
    }

    /// Cumulative trapezoid along each column from the left shock:
    /// `out(k, i) = int_{u_k}^{v(k, i)} f(u_k, v') dv'`.
    pub fn cumulative_columns(&self, f: &Field2) -> Field2 {
        let mut out = self.zeros();
        for k in 0..=self.n {
            self.cumulative_column_into(f, k, &mut out.values[self.idx(k, 0)..=self.idx(k, self.nsig)]);
        }
        out
    }

    pub fn cumulative_column_into(&self, f: &Field2, k: usize, out: &mut [f64]) {
        let half = 0.5 * self.dv(k);
        let col = f.column(k);
        out[self.nsig] = 0.0;
        for i in (0..self.nsig).rev() {
            out[i] = out[i + 1] + half * (col[i] + col[i + 1]);
        }
    }

    /// Weights of the trapezoid rule for `int_{a v}^{u_k} f(u', v) du'` on the
    /// points `a v` and the columns crossed by the row `v` up to column `k`.
    pub fn row_stencil(&self, v: f64, k: usize, out: &mut RowStencil) {
        out.terms.clear();
        out.end_weight = 0.0;
        let du = self.du();
        let start = self.a * v;
        let j_first = ((start / du).floor() as usize + 1).max(1);
        let j_first = if (j_first as f64 - 1.0) * du > start + 1e-12 * du {
            j_first - 1
        } else {
            j_first
        };
        if j_first > k || self.u(k) <= start + 1e-12 * du {
            return;
        }
        let mut prev = start;
        for j in j_first..=k {
            let uj = self.u(j);
            let next = if j < k { self.u(j + 1) } else { uj };
            let wt = 0.5 * (next - prev);
            if j == j_first {
                out.end_weight = 0.5 * (uj - start);
            }
            let sigma = self.sigma_of(uj, v);
            let (i0, mut w) = stencil(sigma * self.nsig as f64, self.nsig);
            for x in &mut w {
                *x *= wt;
            }
            out.terms.push((self.idx(j, i0), w));
            prev = uj;
        }
    }

    /// `int_{u_a}^{u_b} f(u', v) du'` along a row, trapezoid on the crossed
    /// columns with interpolated end values.
    pub fn integrate_u(&self, f: &Field2, v: f64, u_a: f64, u_b: f64) -> Result<f64> {
        let tol = 1e-12 * self.epsilon;
        let lo = self.a * v;
        let hi = v.min(self.u_max());
        if u_a < lo - tol || u_b > hi + tol || u_a > u_b + tol {
            return Err(Error::OutOfRow(format!(
                "[{u_a}, {u_b}] not inside [{lo}, {hi}] at v = {v}"
            )));
        }
        let du = self.du();
        let mut pts = vec![(u_a, self.interp_eval(f, u_a.max(lo), v)?)];
        let j0 = (u_a / du).floor() as usize + 1;
        let mut j = j0;
        while (j as f64) * du < u_b - 1e-12 * du {
            let uj = self.u(j);
            pts.push((uj, self.column_value(f, j, self.sigma_of(uj, v))));
            j += 1;
        }
        pts.push((u_b, self.interp_eval(f, u_b.min(hi), v)?));
        Ok(pts
            .windows(2)
            .map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1))
            .sum())
    }

    /// `int_{v_a}^{v_b} f(u, v') dv'` along a line of constant `u`. On grid
    /// columns this uses the nodes directly.
    pub fn integrate_v(&self, f: &Field2, u: f64, v_a: f64, v_b: f64) -> Result<f64> {
        let tol = 1e-12 * self.epsilon;
        let lo = u;
        let hi = (u / self.a).min(self.epsilon);
        if v_a < lo - tol || v_b > hi + tol || v_a > v_b + tol {
            return Err(Error::OutOfRow(format!(
                "[{v_a}, {v_b}] not inside [{lo}, {hi}] at u = {u}"
            )));
        }
        if u <= 0.0 {
            return Ok(0.0);
        }
        let ns = self.nsig;
        let v_of = |i: usize| u * (1.0 - (1.0 - self.a) * self.sigma(i)) / self.a;
        let xi = u / self.du();
        let on_column = (xi - xi.round()).abs() < 1e-9;
        let value = |i: usize| -> Result<f64> {
            if on_column {
                Ok(f.get(xi.round() as usize, i))
            } else {
                self.interp_eval(f, u, v_of(i).clamp(lo, hi))
            }
        };
        let mut pts = vec![(v_a, self.interp_eval(f, u, v_a.clamp(lo, hi))?)];
        for i in (0..=ns).rev() {
            let vi = v_of(i);
            if vi > v_a + 1e-12 * self.epsilon && vi < v_b - 1e-12 * self.epsilon {
                pts.push((vi, value(i)?));
            }
        }
        pts.push((v_b, self.interp_eval(f, u, v_b.clamp(lo, hi))?));
        Ok(pts
            .windows(2)
            .map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1))
            .sum())
    }
}

/// Nodal values on a [`TriGrid`], stored column by column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field2 {
    pub n: usize,
    pub nsig: usize,
    pub values: Vec<f64>,
}

impl Field2 {
    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * (self.nsig + 1) + i]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, x: f64) {
        self.values[k * (self.nsig + 1) + i] = x;
    }

    pub fn column(&self, k: usize) -> &[f64] {
        let s = k * (self.nsig + 1);
        &self.values[s..s + self.nsig + 1]
    }

    /// Left-shock samples `f(u_k, u_k)`.
    pub fn left_trace(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.get(k, self.nsig)).collect()
    }

    /// Right-shock samples `f(a v_k, v_k)`.
    pub fn right_trace(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.get(k, 0)).collect()
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, a| acc.max(a.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g() -> TriGrid {
        TriGrid::new(0.2, 0.5, 8, 8).unwrap()
    }

    #[test]
    fn node_geometry() {
        let g = TriGrid::new(0.1, 0.5, 4, 4).unwrap();
        assert_relative_eq!(g.u(4), 0.05);
        assert_relative_eq!(g.v(4, 0), 0.1);
        assert_relative_eq!(g.v(4, 4), 0.05);
        assert_relative_eq!(g.v(4, 2), 0.075);
        assert_eq!(g.v(0, 3), 0.0);
        for (_, _, u, v) in g.nodes() {
            assert!(g.contains(u, v));
        }
        assert!(TriGrid::new(0.1, 0.5, 3, 8).is_err());
    }

    #[test]
    fn row_integrals() {
        let g = TriGrid::new(0.2, 0.5, 16, 8).unwrap();
        let one = g.field(|_, _| 1.0);
        let lin = g.field(|u, _| u);
        let sq = g.field(|u, _| u * u);
        assert_relative_eq!(g.integrate_u(&one, 0.1, 0.05, 0.1).unwrap(), 0.05, epsilon = 1e-15);
        assert_relative_eq!(g.integrate_u(&lin, 0.1, 0.05, 0.1).unwrap(), 0.00375, epsilon = 1e-15);
        let e = (g.integrate_u(&sq, 0.1, 0.05, 0.1).unwrap() - 7.0 / 24000.0).abs();
        assert!(e < 5e-7, "{e}");
        assert!(matches!(g.integrate_u(&one, 0.1, 0.0, 0.1), Err(Error::OutOfRow(_))));
    }

    #[test]
    fn column_integrals() {
        let g = g();
        let f = g.field(|u, v| u * v);
        assert_relative_eq!(g.integrate_v(&f, 0.05, 0.05, 0.1).unwrap(), 1.875e-4, epsilon = 1e-16);
        let c = g.cumulative_columns(&f);
        assert_relative_eq!(c.get(4, 0), 1.875e-4, epsilon = 1e-16);
    }

    #[test]
    fn row_stencil_matches_integrate_u() {
        let g = TriGrid::new(0.3, 0.3, 16, 12).unwrap();
        let f = g.field(|u, v| (3.0 * u).sin() + v * v + u * v);
        let mut st = RowStencil::default();
        for (k, i, u, v) in g.nodes() {
            g.row_stencil(v, k, &mut st);
            let end = g.interp_eval(&f, g.a * v, v).unwrap();
            let a = st.apply(&f, end);
            let b = if u > g.a * v {
                g.integrate_u(&f, v, g.a * v, u).unwrap()
            } else {
                0.0
            };
            assert!((a - b).abs() < 1e-13, "node ({k}, {i}): {a} vs {b}");
        }
    }

    #[test]
    fn interpolation_is_exact_for_affine_and_fourth_order() {
        let g = TriGrid::new(0.1, 0.4, 16, 16).unwrap();
        let f = g.field(|u, v| 1.0 + 2.0 * u - 3.0 * v);
        let p = g.interp_eval(&f, 0.013, 0.021).unwrap();
        assert_relative_eq!(p, 1.0 + 0.026 - 0.063, epsilon = 1e-14);
        let err = |n: usize| {
            let g = TriGrid::new(0.1, 0.4, n, n).unwrap();
            let f = g.field(|u, v| u.sin() * v.cos() + (20.0 * v).sin());
            let mut worst = 0.0f64;
            for p in 1..40 {
                for q in 1..40 {
                    let u = 0.04 * p as f64 / 40.0;
                    let v = u * (1.0 + 1.5 * q as f64 / 40.0);
                    let e = g.interp_eval(&f, u, v).unwrap() - (u.sin() * v.cos() + (20.0 * v).sin());
                    worst = worst.max(e.abs());
                }
            }
            worst
        };
        let r = err(16) / err(32);
        assert!(r > 12.0, "ratio {r}");
        assert!(matches!(
            g.interp_eval(&f, 0.03, 0.02),
            Err(Error::OutsideDomain { .. })
        ));
    }
}

//! Uniform axes, finite differences and small interpolation helpers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform axis `x_i = start + i * step`, `i < n`. A periodic axis has period `n * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    /// `n` nodes on `[a, b]`, endpoints included.
    pub fn closed(a: f64, b: f64, n: usize) -> Axis {
        assert!(n >= 2, "closed axis needs two nodes");
        Axis { start: a, step: (b - a) / (n - 1) as f64, n, periodic: false }
    }

    /// `n` nodes on the period `[a, a + length)`.
    pub fn periodic(a: f64, length: f64, n: usize) -> Axis {
        Axis { start: a, step: length / n as f64, n, periodic: true }
    }

    /// Cell centres of `n` periodic cells on `[0, length)`.
    pub fn periodic_centres(length: f64, n: usize) -> Axis {
        let h = length / n as f64;
        Axis { start: 0.5 * h, step: h, n, periodic: true }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.n - 1)
    }

    pub fn period(&self) -> f64 {
        self.step * self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i)).collect()
    }

    pub fn same_nodes(&self, other: &Axis) -> bool {
        self.n == other.n
            && self.periodic == other.periodic
            && (self.start - other.start).abs() <= 1e-12 * (1.0 + self.start.abs())
            && (self.step - other.step).abs() <= 1e-12 * self.step.abs()
    }
}

/// Second-order derivative of the strided line `f[off + k * stride]`, `k < n`.
/// Centered inside, one-sided at the ends unless periodic.
pub fn diff_line(f: &[f64], off: usize, stride: usize, n: usize, h: f64, periodic: bool, out: &mut [f64]) {
    let g = |k: usize| f[off + k * stride];
    let inv = 1.0 / (2.0 * h);
    if periodic {
        for k in 0..n {
            let kp = if k + 1 == n { 0 } else { k + 1 };
            let km = if k == 0 { n - 1 } else { k - 1 };
            out[off + k * stride] = (g(kp) - g(km)) * inv;
        }
        return;
    }
    out[off] = (-3.0 * g(0) + 4.0 * g(1) - g(2)) * inv;
    for k in 1..n - 1 {
        out[off + k * stride] = (g(k + 1) - g(k - 1)) * inv;
    }
    out[off + (n - 1) * stride] = (3.0 * g(n - 1) - 4.0 * g(n - 2) + g(n - 3)) * inv;
}

/// Derivative along `axis` of a row-major array with the given `shape`.
pub fn diff_axis(f: &[f64], shape: &[usize], axis: usize, h: f64, periodic: bool) -> Result<Vec<f64>> {
    let n = shape[axis];
    if n < 3 && !(periodic && n >= 2) {
        return Err(Error::GridTooCoarse(format!("axis {axis} has {n} points, need 3")));
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; f.len()];
    for o in 0..outer {
        for inner in 0..stride {
            let off = o * n * stride + inner;
            diff_line(f, off, stride, n, h, periodic, &mut out);
        }
    }
    Ok(out)
}

/// Second-order derivative weights on nonuniform nodes at node `k` (three-point stencil).
pub fn nonuniform_diff_weights(x: &[f64], k: usize) -> ([usize; 3], [f64; 3]) {
    let n = x.len();
    let idx = if k == 0 {
        [0, 1, 2]
    } else if k == n - 1 {
        [n - 3, n - 2, n - 1]
    } else {
        [k - 1, k, k + 1]
    };
    let w = lagrange_deriv_weights(&[x[idx[0]], x[idx[1]], x[idx[2]]], x[k]);
    (idx, w)
}

/// Derivative at `x` of the quadratic through three nodes.
pub fn lagrange_deriv_weights(n: &[f64; 3], x: f64) -> [f64; 3] {
    let [a, b, c] = *n;
    [((x - b) + (x - c)) / ((a - b) * (a - c)), ((x - a) + (x - c)) / ((b - a) * (b - c)), ((x - a) + (x - b)) / ((c - a) * (c - b))]
}

/// Lagrange weights of the quadratic through three nodes.
pub fn lagrange3(n: &[f64; 3], x: f64) -> [f64; 3] {
    let [a, b, c] = *n;
    [(x - b) * (x - c) / ((a - b) * (a - c)), (x - a) * (x - c) / ((b - a) * (b - c)), (x - a) * (x - b) / ((c - a) * (c - b))]
}

/// Lagrange interpolation weights of the polynomial through `nodes`, evaluated at `x`.
pub fn lagrange_weights(nodes: &[f64], x: f64, out: &mut [f64]) {
    let q = nodes.len();
    for (i, w) in out.iter_mut().enumerate().take(q) {
        let mut v = 1.0;
        for j in 0..q {
            if j != i {
                v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        *w = v;
    }
}

/// First-derivative weights at `x` for arbitrary distinct nodes (Fornberg's recursion).
pub fn fd_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    // c[j][k]: weight of node j for the k-th derivative, k <= 1
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Fourth-order centered first derivative along a periodic strided line.
pub fn diff_periodic4(f: &[f64], off: usize, stride: usize, n: usize, h: f64, out: &mut [f64]) {
    let g = |k: isize| f[off + (k.rem_euclid(n as isize) as usize) * stride];
    let inv = 1.0 / (12.0 * h);
    for k in 0..n as isize {
        out[off + k as usize * stride] = (g(k - 2) - 8.0 * g(k - 1) + 8.0 * g(k + 1) - g(k + 2)) * inv;
    }
}

/// Cubic Lagrange weights and derivative weights on four uniform nodes `0,1,2,3` at offset `s`
/// (in units of the spacing).
pub fn lagrange4_uniform(s: f64) -> ([f64; 4], [f64; 4]) {
    let w = [-(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0, s * (s - 2.0) * (s - 3.0) / 2.0, -s * (s - 1.0) * (s - 3.0) / 2.0, s * (s - 1.0) * (s - 2.0) / 6.0];
    let d = [
        -((s - 2.0) * (s - 3.0) + (s - 1.0) * (s - 3.0) + (s - 1.0) * (s - 2.0)) / 6.0,
        ((s - 2.0) * (s - 3.0) + s * (s - 3.0) + s * (s - 2.0)) / 2.0,
        -((s - 1.0) * (s - 3.0) + s * (s - 3.0) + s * (s - 1.0)) / 2.0,
        ((s - 1.0) * (s - 2.0) + s * (s - 2.0) + s * (s - 1.0)) / 6.0,
    ];
    (w, d)
}

/// Four-node cubic stencil on a closed uniform axis: first index and offset for `x`.
/// Returns `None` when `x` lies outside the axis by more than rounding.
pub fn cubic_stencil(axis: &Axis, x: f64) -> Option<(usize, f64)> {
    let r = (x - axis.start) / axis.step;
    let last = (axis.n - 1) as f64;
    if r < -1e-9 || r > last + 1e-9 {
        return None;
    }
    let n = axis.n;
    if n < 4 {
        return None;
    }
    let cell = (r.floor().max(0.0) as usize).min(n - 2);
    let first = cell.saturating_sub(1).min(n - 4);
    Some((first, r - first as f64))
}

/// Trapezoid weights on a closed uniform axis (periodic: equal weights).
pub fn trapezoid_weights(axis: &Axis) -> Vec<f64> {
    let mut w = vec![axis.step; axis.n];
    if !axis.periodic && axis.n > 1 {
        w[0] *= 0.5;
        w[axis.n - 1] *= 0.5;
    }
    if axis.n == 1 {
        w[0] = 1.0;
    }
    w
}

/// Fourth-order derivative along `axis` of a row-major array: five-point stencils, shifted
/// one-sided near the ends unless periodic.
pub fn diff_axis4(f: &[f64], shape: &[usize], axis: usize, h: f64, periodic: bool) -> Result<Vec<f64>> {
    let n = shape[axis];
    if n < 5 {
        return Err(Error::GridTooCoarse(format!("fourth-order differences need 5 points, got {n}")));
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let nodes: Vec<f64> = (0..5).map(|i| i as f64).collect();
    let shifted: Vec<Vec<f64>> = (0..5).map(|j| fd_weights(&nodes, j as f64)).collect();
    let centred = &shifted[2];
    let mut out = vec![0.0; f.len()];
    let inv = 1.0 / h;
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            let g = |k: usize| f[base + k * stride];
            for k in 0..n {
                let mut d = 0.0;
                if periodic {
                    for (m, &w) in centred.iter().enumerate() {
                        d += w * g((k + n + m - 2) % n);
                    }
                } else {
                    let first = k.saturating_sub(2).min(n - 5);
                    let w = &shifted[k - first];
                    for m in 0..5 {
                        d += w[m] * g(first + m);
                    }
                }
                out[base + k * stride] = d * inv;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_is_exact_for_quadratics() {
        let ax = Axis::closed(0.0, 1.0, 11);
        let f: Vec<f64> = ax.points().iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let d = diff_axis(&f, &[11], 0, ax.step, false).unwrap();
        for (i, x) in ax.points().iter().enumerate() {
            assert!((d[i] - (6.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_weights_reproduce_cubics() {
        for &s in &[0.0, 0.3, 1.0, 1.7, 2.5, 3.0] {
            let (w, d) = lagrange4_uniform(s);
            let f = |x: f64| x * x * x - 2.0 * x + 1.0;
            let v: f64 = (0..4).map(|k| w[k] * f(k as f64)).sum();
            let dv: f64 = (0..4).map(|k| d[k] * f(k as f64)).sum();
            assert!((v - f(s)).abs() < 1e-12);
            assert!((dv - (3.0 * s * s - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn fornberg_weights_match_three_point_formula() {
        let x = [0.0, 0.1, 0.3];
        let w = fd_weights(&x, 0.1);
        let r = lagrange_deriv_weights(&x, 0.1);
        for k in 0..3 {
            assert!((w[k] - r[k]).abs() < 1e-12);
        }
        let x5 = [0.0, 0.2, 0.5, 0.9, 1.4];
        let w5 = fd_weights(&x5, 0.5);
        let d: f64 = x5.iter().zip(&w5).map(|(x, w)| w * x.powi(4)).sum();
        assert!((d - 4.0 * 0.125).abs() < 1e-10);
    }

    #[test]
    fn node_weights_are_exact() {
        let (w, _) = lagrange4_uniform(0.0);
        assert_eq!(w, [1.0, 0.0, 0.0, 0.0]);
        let w3 = lagrange3(&[-0.5, 0.0, 0.5], 0.0);
        assert_eq!(w3, [0.0, 1.0, 0.0]);
    }
}

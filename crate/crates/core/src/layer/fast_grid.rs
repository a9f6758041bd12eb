//! Stretched grid for the fast variable X on [0, X_max] and monotone cubic interpolation on it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Nodes X_k = c s_k / (1 - s_k) with s uniform on [0, X_max / (c + X_max)]; dense near X = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastGrid {
    pub x_max: f64,
    pub stretch: f64,
    pub nodes: Vec<f64>,
    /// Trapezoid weights for the integral over [0, X_max]; the tail beyond is dropped.
    pub weights: Vec<f64>,
    ds: f64,
}

/// Interpolation in X between fast nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InterpKind {
    /// Monotone piecewise cubic (Fritsch-Butland slopes).
    Monotone,
    /// C1 cubic Hermite with three-point slopes.
    #[default]
    Hermite,
}

pub const DEFAULT_X_MAX: f64 = 24.0;

impl FastGrid {
    pub fn new(x_max: f64, intervals: usize, stretch: f64) -> Result<FastGrid> {
        if !(x_max > 0.0) || intervals < 4 || !(stretch > 0.0) {
            return Err(Error::InvalidInput(format!("fast grid: x_max = {x_max}, intervals = {intervals}, stretch = {stretch}")));
        }
        let s_max = x_max / (stretch + x_max);
        let ds = s_max / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|k| {
                let s = k as f64 * ds;
                stretch * s / (1.0 - s)
            })
            .collect();
        nodes[0] = 0.0;
        nodes[intervals] = x_max;
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for k in 0..n - 1 {
            let h = nodes[k + 1] - nodes[k];
            weights[k] += 0.5 * h;
            weights[k + 1] += 0.5 * h;
        }
        Ok(FastGrid { x_max, stretch, nodes, weights, ds })
    }

    pub fn default_grid() -> FastGrid {
        FastGrid::new(DEFAULT_X_MAX, 384, 4.0).expect("valid default")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tail mass beyond X_max for the reference decay e^{-X}.
    pub fn tail_estimate(&self) -> f64 {
        (-self.x_max).exp()
    }

    /// Interval k with nodes[k] <= x <= nodes[k+1]; `None` beyond X_max or below 0.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= 0.0) || x > self.x_max {
            return None;
        }
        let s = x / (self.stretch + x);
        let n = self.nodes.len();
        let mut k = ((s / self.ds).floor() as usize).min(n - 2);
        while k > 0 && self.nodes[k] > x {
            k -= 1;
        }
        while k + 2 < n && self.nodes[k + 1] < x {
            k += 1;
        }
        Some(k)
    }

    /// Nearest node index.
    pub fn nearest(&self, x: f64) -> usize {
        match self.locate(x.clamp(0.0, self.x_max)) {
            Some(k) => {
                if x - self.nodes[k] <= self.nodes[k + 1] - x {
                    k
                } else {
                    k + 1
                }
            }
            None => self.nodes.len() - 1,
        }
    }

    /// Integral of nodal values over [0, X_max].
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Backward cumulative integral: out[k] = integral of f from X_k to X_max (trapezoid).
    pub fn integrate_from(&self, f: &[f64], out: &mut [f64]) {
        let n = self.nodes.len();
        out[n - 1] = 0.0;
        for k in (0..n - 1).rev() {
            out[k] = out[k + 1] + 0.5 * (self.nodes[k + 1] - self.nodes[k]) * (f[k] + f[k + 1]);
        }
    }

    /// Second-order derivative of nodal values at node k.
    pub fn derivative_at(&self, f: &[f64], k: usize) -> f64 {
        let (idx, w) = crate::grid::nonuniform_diff_weights(&self.nodes, k);
        w[0] * f[idx[0]] + w[1] * f[idx[1]] + w[2] * f[idx[2]]
    }

    /// Monotone piecewise cubic (Fritsch-Carlson / Fritsch-Butland slopes) of nodal values
    /// `f(k)`, evaluated at `x`; zero beyond X_max.
    pub fn pchip(&self, x: f64, f: impl Fn(usize) -> f64) -> f64 {
        let k = match self.locate(x) {
            Some(k) => k,
            None => return 0.0,
        };
        let xs = &self.nodes;
        let h = xs[k + 1] - xs[k];
        let (fk, fk1) = (f(k), f(k + 1));
        if x == xs[k] {
            return fk;
        }
        let dk = self.pchip_slope(k, &f);
        let dk1 = self.pchip_slope(k + 1, &f);
        let t = (x - xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * fk + h10 * h * dk + h01 * fk1 + h11 * h * dk1
    }

    /// C1 cubic Hermite of nodal values `f(k)` with second-order three-point nodal slopes;
    /// zero beyond X_max. Not shape preserving, but its slopes match the nodal difference
    /// quotients used elsewhere.
    pub fn hermite(&self, x: f64, f: impl Fn(usize) -> f64) -> f64 {
        let k = match self.locate(x) {
            Some(k) => k,
            None => return 0.0,
        };
        let xs = &self.nodes;
        let (fk, fk1) = (f(k), f(k + 1));
        if x == xs[k] {
            return fk;
        }
        let slope = |j: usize| {
            let (idx, w) = crate::grid::nonuniform_diff_weights(xs, j);
            w[0] * f(idx[0]) + w[1] * f(idx[1]) + w[2] * f(idx[2])
        };
        let h = xs[k + 1] - xs[k];
        let (dk, dk1) = (slope(k), slope(k + 1));
        let t = (x - xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * fk + (t3 - 2.0 * t2 + t) * h * dk + (-2.0 * t3 + 3.0 * t2) * fk1 + (t3 - t2) * h * dk1
    }

    /// Weights of `hermite` at `x` as (node, weight) pairs; `None` beyond X_max.
    pub fn hermite_stencil(&self, x: f64) -> Option<Vec<(usize, f64)>> {
        let k = self.locate(x)?;
        let xs = &self.nodes;
        if x == xs[k] {
            return Some(vec![(k, 1.0)]);
        }
        let h = xs[k + 1] - xs[k];
        let t = (x - xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let mut out = vec![(k, 2.0 * t3 - 3.0 * t2 + 1.0), (k + 1, -2.0 * t3 + 3.0 * t2)];
        for (j, c) in [(k, (t3 - 2.0 * t2 + t) * h), (k + 1, (t3 - t2) * h)] {
            let (idx, w) = crate::grid::nonuniform_diff_weights(xs, j);
            for m in 0..3 {
                out.push((idx[m], c * w[m]));
            }
        }
        Some(out)
    }

    /// Interpolation of nodal values with the chosen scheme.
    pub fn interp(&self, kind: InterpKind, x: f64, f: impl Fn(usize) -> f64) -> f64 {
        match kind {
            InterpKind::Monotone => self.pchip(x, f),
            InterpKind::Hermite => self.hermite(x, f),
        }
    }

    fn pchip_slope(&self, k: usize, f: &impl Fn(usize) -> f64) -> f64 {
        let xs = &self.nodes;
        let n = xs.len();
        let delta = |j: usize| (f(j + 1) - f(j)) / (xs[j + 1] - xs[j]);
        let hh = |j: usize| xs[j + 1] - xs[j];
        if k == 0 || k == n - 1 {
            // three-point end formula with shape-preserving limits
            let (j0, j1) = if k == 0 { (0, 1) } else { (n - 2, n - 3) };
            let (h0, h1) = (hh(j0), hh(j1));
            let (d0, d1) = (delta(j0), delta(j1));
            let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if d.signum() != d0.signum() {
                d = 0.0;
            } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
                d = 3.0 * d0;
            }
            return d;
        }
        let (d0, d1) = (delta(k - 1), delta(k));
        if d0 * d1 <= 0.0 {
            return 0.0;
        }
        let (h0, h1) = (hh(k - 1), hh(k));
        let w1 = 2.0 * h1 + h0;
        let w2 = h1 + 2.0 * h0;
        (w1 + w2) / (w1 / d0 + w2 / d1)
    }
}

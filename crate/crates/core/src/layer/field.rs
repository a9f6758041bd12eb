//! Grid functions for profiles: regular parts U(t, x) and layer parts U(t, x, X).

use super::fast_grid::{FastGrid, InterpKind};
use super::transport::time_weights;
use crate::error::{Error, Result};
use crate::grid::{cubic_stencil, lagrange4_uniform, Axis};

/// Shared discretisation of profile fields: periodic x1, slow x2 on [0, H] (a single node
/// means wall-collapsed), fast X, and the stored snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    pub x1: Axis,
    pub x2: Axis,
    pub fast: FastGrid,
    pub times: Vec<f64>,
}

impl ProfileGrid {
    pub fn new(x1: Axis, x2: Axis, fast: FastGrid, times: Vec<f64>) -> Result<ProfileGrid> {
        if !x1.periodic {
            return Err(Error::InvalidInput("x1 axis must be periodic".into()));
        }
        if x2.n > 1 && (x2.start != 0.0 || x2.n < 4) {
            return Err(Error::InvalidInput("slow x2 axis must start at the wall and hold at least 4 nodes".into()));
        }
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
            return Err(Error::InvalidInput("snapshot times must be increasing and nonnegative".into()));
        }
        Ok(ProfileGrid { x1, x2, fast, times })
    }

    /// The same grid restricted to the wall (x2 = 0).
    pub fn collapsed(&self) -> ProfileGrid {
        ProfileGrid { x1: self.x1, x2: Axis { start: 0.0, step: 1.0, n: 1, periodic: false }, fast: self.fast.clone(), times: self.times.clone() }
    }

    pub fn is_collapsed(&self) -> bool {
        self.x2.n == 1
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    pub fn slice_len(&self) -> usize {
        self.x1.n * self.x2.n * self.fast.len()
    }

    pub fn regular_slice_len(&self) -> usize {
        self.x1.n * self.x2.n
    }
}

/// Regular part, layout `[t][x1][x2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularField {
    pub times: Vec<f64>,
    pub x1: Axis,
    pub x2: Axis,
    pub data: Vec<f64>,
}

impl RegularField {
    pub fn zeros(grid: &ProfileGrid) -> RegularField {
        RegularField { times: grid.times.clone(), x1: grid.x1, x2: grid.x2, data: vec![0.0; grid.times.len() * grid.regular_slice_len()] }
    }

    pub fn slice_len(&self) -> usize {
        self.x1.n * self.x2.n
    }

    pub fn slice(&self, it: usize) -> &[f64] {
        let n = self.slice_len();
        &self.data[it * n..(it + 1) * n]
    }

    pub fn slice_mut(&mut self, it: usize) -> &mut [f64] {
        let n = self.slice_len();
        &mut self.data[it * n..(it + 1) * n]
    }

    #[inline]
    pub fn at(&self, it: usize, i1: usize, i2: usize) -> f64 {
        self.data[(it * self.x1.n + i1) * self.x2.n + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Value at an arbitrary time and x2 (cubic in both).
    pub fn eval_t(&self, t: f64, i1: usize, x2: f64) -> Result<f64> {
        let (first, w, _) = time_weights(&self.times, t)?;
        let mut v = 0.0;
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                v += wj * self.eval_x2(first + j, i1, x2)?.0;
            }
        }
        Ok(v)
    }

    /// Slice at an arbitrary time.
    pub fn slice_at(&self, t: f64, out: &mut [f64]) -> Result<()> {
        super::transport::interpolate_in_time(&self.times, &self.data, self.slice_len(), t, out)
    }

    /// Value and x2-derivative at (it, i1, x2) by cubic interpolation along x2.
    pub fn eval_x2(&self, it: usize, i1: usize, x2: f64) -> Result<(f64, f64)> {
        if self.x2.n == 1 {
            return Ok((self.at(it, i1, 0), 0.0));
        }
        let (j, s) = cubic_stencil(&self.x2, x2).ok_or_else(|| Error::InvalidInput(format!("x2 = {x2} outside the slow grid")))?;
        let (w, d) = lagrange4_uniform(s);
        let mut v = 0.0;
        let mut dv = 0.0;
        for a in 0..4 {
            let f = self.at(it, i1, j + a);
            v += w[a] * f;
            dv += d[a] * f;
        }
        Ok((v, dv / self.x2.step))
    }
}

/// Layer part, layout `[t][x1][x2][X]`, decaying in X.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPart {
    pub times: Vec<f64>,
    pub x1: Axis,
    pub x2: Axis,
    pub fast: FastGrid,
    pub data: Vec<f64>,
}

pub const DECAY_RATIO: f64 = 1e-8;

impl LayerPart {
    pub fn zeros(grid: &ProfileGrid) -> LayerPart {
        LayerPart { times: grid.times.clone(), x1: grid.x1, x2: grid.x2, fast: grid.fast.clone(), data: vec![0.0; grid.times.len() * grid.slice_len()] }
    }

    pub fn grid(&self) -> ProfileGrid {
        ProfileGrid { x1: self.x1, x2: self.x2, fast: self.fast.clone(), times: self.times.clone() }
    }

    pub fn nx(&self) -> usize {
        self.fast.len()
    }

    pub fn slice_len(&self) -> usize {
        self.x1.n * self.x2.n * self.fast.len()
    }

    pub fn slice(&self, it: usize) -> &[f64] {
        let n = self.slice_len();
        &self.data[it * n..(it + 1) * n]
    }

    pub fn slice_mut(&mut self, it: usize) -> &mut [f64] {
        let n = self.slice_len();
        &mut self.data[it * n..(it + 1) * n]
    }

    #[inline]
    pub fn offset(&self, it: usize, i1: usize, i2: usize) -> usize {
        ((it * self.x1.n + i1) * self.x2.n + i2) * self.fast.len()
    }

    #[inline]
    pub fn at(&self, it: usize, i1: usize, i2: usize, ix: usize) -> f64 {
        self.data[self.offset(it, i1, i2) + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// max |U(X_max)| relative to max |U| (zero for a zero field).
    pub fn tail_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let nx = self.nx();
        let tail = self.data.chunks(nx).fold(0.0f64, |acc, line| acc.max(line[nx - 1].abs()));
        tail / m
    }

    pub fn check_decay(&self) -> Result<()> {
        let r = self.tail_ratio();
        if r > DECAY_RATIO {
            return Err(Error::DecayLost { tail: r, bound: DECAY_RATIO });
        }
        Ok(())
    }

    /// Value at (it, i1, x2, X): cubic interpolation in x2, monotone cubic in X, zero beyond X_max.
    pub fn eval(&self, it: usize, i1: usize, x2: f64, xf: f64) -> Result<f64> {
        if xf > self.fast.x_max {
            return Ok(0.0);
        }
        if self.x2.n == 1 {
            let off = self.offset(it, i1, 0);
            return Ok(self.fast.pchip(xf, |k| self.data[off + k]));
        }
        let (j, s) = cubic_stencil(&self.x2, x2).ok_or_else(|| Error::InvalidInput(format!("x2 = {x2} outside the slow grid")))?;
        let (w, _) = lagrange4_uniform(s);
        let mut v = 0.0;
        for a in 0..4 {
            if w[a] == 0.0 {
                continue;
            }
            let off = self.offset(it, i1, j + a);
            v += w[a] * self.fast.pchip(xf, |k| self.data[off + k]);
        }
        Ok(v)
    }

    /// Slice at an arbitrary time.
    pub fn slice_at(&self, t: f64, out: &mut [f64]) -> Result<()> {
        super::transport::interpolate_in_time(&self.times, &self.data, self.slice_len(), t, out)
    }

    /// Value at an arbitrary time (cubic in time across snapshots) with the chosen X interpolation.
    pub fn eval_t(&self, t: f64, i1: usize, x2: f64, xf: f64, kind: InterpKind) -> Result<f64> {
        if xf > self.fast.x_max {
            return Ok(0.0);
        }
        let (first, w, _) = time_weights(&self.times, t)?;
        let mut v = 0.0;
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                v += wj * self.eval_kind(first + j, i1, x2, xf, kind)?;
            }
        }
        Ok(v)
    }

    /// Value at a stored time with the chosen X interpolation.
    pub fn eval_kind(&self, it: usize, i1: usize, x2: f64, xf: f64, kind: InterpKind) -> Result<f64> {
        if xf > self.fast.x_max {
            return Ok(0.0);
        }
        if self.x2.n == 1 {
            let off = self.offset(it, i1, 0);
            return Ok(self.fast.interp(kind, xf, |k| self.data[off + k]));
        }
        let (j, s) = cubic_stencil(&self.x2, x2).ok_or_else(|| Error::InvalidInput(format!("x2 = {x2} outside the slow grid")))?;
        let (w, _) = lagrange4_uniform(s);
        let mut v = 0.0;
        for a in 0..4 {
            if w[a] == 0.0 {
                continue;
            }
            let off = self.offset(it, i1, j + a);
            v += w[a] * self.fast.interp(kind, xf, |k| self.data[off + k]);
        }
        Ok(v)
    }

    /// Applies `f` at every stored (t, x1, x2, X) node.
    pub fn fill(&mut self, f: impl Fn(f64, f64, f64, f64) -> f64) {
        let nx = self.nx();
        for it in 0..self.times.len() {
            for i1 in 0..self.x1.n {
                for i2 in 0..self.x2.n {
                    let off = self.offset(it, i1, i2);
                    for k in 0..nx {
                        self.data[off + k] = f(self.times[it], self.x1.at(i1), self.x2.at(i2), self.fast.nodes[k]);
                    }
                }
            }
        }
    }
}

/// U = regular part + layer part, for one scalar component.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerField {
    pub regular: RegularField,
    pub layer: LayerPart,
}

impl LayerField {
    pub fn zeros(grid: &ProfileGrid) -> LayerField {
        LayerField { regular: RegularField::zeros(grid), layer: LayerPart::zeros(grid) }
    }

    /// Splits a total field sampled on the layer grid: regular = value at X_max.
    pub fn split(total: &LayerPart) -> LayerField {
        let nx = total.nx();
        let mut regular = RegularField { times: total.times.clone(), x1: total.x1, x2: total.x2, data: vec![0.0; total.data.len() / nx] };
        let mut layer = total.clone();
        for (line, r) in layer.data.chunks_mut(nx).zip(regular.data.iter_mut()) {
            *r = line[nx - 1];
            for v in line.iter_mut() {
                *v -= *r;
            }
        }
        LayerField { regular, layer }
    }
}

/// Order-j unknowns of the cascade: V^j = (tangential, normal) velocity and pressure profiles,
/// the entropy layer W~^j and the regular entropy corrector W-bar^{j+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    pub order: usize,
    pub vt: LayerField,
    pub vd: LayerField,
    pub p: LayerField,
    pub w_tilde: LayerPart,
    pub w_bar_next: RegularField,
}

impl ProfileSet {
    pub fn zeros(order: usize, grid: &ProfileGrid) -> ProfileSet {
        ProfileSet {
            order,
            vt: LayerField::zeros(grid),
            vd: LayerField::zeros(grid),
            p: LayerField::zeros(grid),
            w_tilde: LayerPart::zeros(grid),
            w_bar_next: RegularField::zeros(grid),
        }
    }

    /// max |(Id - P0) U~| = max over the layer parts of v_d and p.
    pub fn nonpolarized_mass(&self) -> f64 {
        self.vd.layer.max_abs().max(self.p.layer.max_abs())
    }

    pub fn times(&self) -> &[f64] {
        &self.w_tilde.times
    }
}

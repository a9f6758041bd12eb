//! eps-conormal norms on grid functions and empirical checks of the Sobolev, Gagliardo-Nirenberg
//! and Moser inequalities.
//!
//! Grid functions live on a `SpaceTimeGrid` over (0, T) x strip. Derivatives are second-order
//! centred differences (one-sided at non-periodic ends). Time weight is e^{-lambda t}.

use crate::eos::SpaceTimeGrid;
use crate::error::{Error, Result};
use crate::grid::{diff_axis, trapezoid_weights};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn psi(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for r <= 1, 1 for r >= 2.
fn step(r: f64) -> f64 {
    let a = psi(r - 1.0);
    let b = psi(2.0 - r);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Cutoff of the normal conormal field: h(r) = r on [0, 1], 1 on [2, inf), and
/// (1 - beta) r + beta in between with the exp(-1/x) step beta. Odd extension below 0.
pub fn cutoff(r: f64) -> f64 {
    if r < 0.0 {
        return -cutoff(-r);
    }
    let b = step(r);
    (1.0 - b) * r + b
}

/// Z0 = d_t, Z1 = d_1, Z2 = h(x2) d_2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorFieldBasis {
    pub d: usize,
}

impl Default for VectorFieldBasis {
    fn default() -> Self {
        VectorFieldBasis { d: 2 }
    }
}

impl VectorFieldBasis {
    pub fn new(d: usize) -> Result<VectorFieldBasis> {
        if d != 2 {
            return Err(Error::InvalidInput(format!("only d = 2 is supported, got {d}")));
        }
        Ok(VectorFieldBasis { d })
    }

    pub fn h(&self, r: f64) -> f64 {
        cutoff(r)
    }
}

/// Scalar grid function, layout `[t][x1][x2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: SpaceTimeGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64, f64) -> f64) -> ScalarField {
        let mut data = vec![0.0; grid.len()];
        for it in 0..grid.t.n {
            for i1 in 0..grid.x1.n {
                for i2 in 0..grid.x2.n {
                    data[grid.index(it, i1, i2)] = f(grid.t.at(it), grid.x1.at(i1), grid.x2.at(i2));
                }
            }
        }
        ScalarField { grid, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormParams {
    pub m: usize,
    pub lambda: f64,
    pub t: f64,
    pub eps: f64,
}

impl NormParams {
    pub fn new(m: usize, lambda: f64, t: f64, eps: f64) -> Result<NormParams> {
        let p = NormParams { m, lambda, t, eps };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::InvalidInput(format!("lambda = {} must be >= 1", self.lambda)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidInput(format!("eps = {} outside (0, 1]", self.eps)));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidInput("time horizon must be positive".into()));
        }
        Ok(())
    }

    fn check_grid(&self, g: &SpaceTimeGrid) -> Result<()> {
        self.validate()?;
        if g.t.start.abs() > 1e-12 || (g.t.end() - self.t).abs() > 1e-9 * self.t.max(1.0) {
            return Err(Error::InvalidInput(format!("grid covers t in [{}, {}], expected [0, {}]", g.t.start, g.t.end(), self.t)));
        }
        Ok(())
    }
}

fn check_resolution(g: &SpaceTimeGrid, alpha: [usize; 3]) -> Result<()> {
    for (a, axis, name) in [(alpha[0], &g.t, "t"), (alpha[1], &g.x1, "x1"), (alpha[2], &g.x2, "x2")] {
        if a > 0 && axis.n < 2 * a + 1 {
            return Err(Error::GridTooCoarse(format!("{a} derivatives along {name} need {} points, got {}", 2 * a + 1, axis.n)));
        }
    }
    Ok(())
}

fn z_axis(g: &SpaceTimeGrid, f: &[f64], axis: usize) -> Result<Vec<f64>> {
    let shape = g.shape();
    match axis {
        0 => diff_axis(f, &shape, 0, g.t.step, false),
        1 => diff_axis(f, &shape, 1, g.x1.step, true),
        _ => {
            let mut d = diff_axis(f, &shape, 2, g.x2.step, false)?;
            let h: Vec<f64> = (0..g.x2.n).map(|i| cutoff(g.x2.at(i))).collect();
            for (k, v) in d.iter_mut().enumerate() {
                *v *= h[k % g.x2.n];
            }
            Ok(d)
        }
    }
}

fn eps_dn(g: &SpaceTimeGrid, f: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut d = diff_axis(f, &g.shape(), 2, g.x2.step, false)?;
    d.iter_mut().for_each(|v| *v *= eps);
    Ok(d)
}

/// Z^alpha u = Z0^a0 Z1^a1 Z2^a2 u.
pub fn apply_z(_basis: &VectorFieldBasis, alpha: [usize; 3], u: &ScalarField) -> Result<ScalarField> {
    check_resolution(&u.grid, alpha)?;
    let mut f = u.data.clone();
    for axis in [2, 1, 0] {
        for _ in 0..alpha[axis] {
            f = z_axis(&u.grid, &f, axis)?;
        }
    }
    Ok(ScalarField { grid: u.grid, data: f })
}

/// Calls `visit(alpha, Z^alpha u)` for every |alpha| <= max_l, a2 outermost.
fn for_each_z(u: &ScalarField, max_l: usize, mut visit: impl FnMut([usize; 3], &[f64]) -> Result<()>) -> Result<()> {
    let g = &u.grid;
    let mut f2 = u.data.clone();
    for a2 in 0..=max_l {
        if a2 > 0 {
            check_resolution(g, [0, 0, a2])?;
            f2 = z_axis(g, &f2, 2)?;
        }
        let mut f1 = f2.clone();
        for a1 in 0..=max_l - a2 {
            if a1 > 0 {
                check_resolution(g, [0, a1, 0])?;
                f1 = z_axis(g, &f1, 1)?;
            }
            let mut f0 = f1.clone();
            for a0 in 0..=max_l - a2 - a1 {
                if a0 > 0 {
                    check_resolution(g, [a0, 0, 0])?;
                    f0 = z_axis(g, &f0, 0)?;
                }
                visit([a0, a1, a2], &f0)?;
            }
        }
    }
    Ok(())
}

/// Quadrature weights of integral over (0, T) x strip of e^{-2 lambda t} |f|^2.
struct Quadrature {
    wt: Vec<f64>,
    w1: f64,
    w2: Vec<f64>,
}

impl Quadrature {
    fn new(g: &SpaceTimeGrid, lambda: f64, power: f64) -> Quadrature {
        let mut wt = if g.t.n > 1 { trapezoid_weights(&g.t) } else { vec![1.0] };
        for (it, w) in wt.iter_mut().enumerate() {
            *w *= (-power * lambda * g.t.at(it)).exp();
        }
        Quadrature { wt, w1: g.x1.step, w2: trapezoid_weights(&g.x2) }
    }

    fn integrate(&self, g: &SpaceTimeGrid, f: impl Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for it in 0..g.t.n {
            for i1 in 0..g.x1.n {
                for i2 in 0..g.x2.n {
                    acc += self.wt[it] * self.w1 * self.w2[i2] * f(g.index(it, i1, i2));
                }
            }
        }
        acc
    }
}

/// table[k][l] = sum_{|alpha| = l} integral e^{-2 lambda t} |(eps d_2)^k Z^alpha u|^2, for
/// 2k + l <= m (k = 0 only when `ladder` is false).
fn square_table(u: &ScalarField, m: usize, lambda: f64, eps: f64, ladder: bool) -> Result<Vec<Vec<f64>>> {
    let g = u.grid;
    let q = Quadrature::new(&g, lambda, 2.0);
    let kmax = if ladder { m / 2 } else { 0 };
    let mut table = vec![vec![0.0; m + 1]; kmax + 1];
    for_each_z(u, m, |alpha, f| {
        let l = alpha.iter().sum::<usize>();
        table[0][l] += q.integrate(&g, |i| f[i] * f[i]);
        let mut fk = f.to_vec();
        for k in 1..=kmax {
            if 2 * k + l > m {
                break;
            }
            fk = eps_dn(&g, &fk, eps)?;
            table[k][l] += q.integrate(&g, |i| fk[i] * fk[i]);
        }
        Ok(())
    })?;
    Ok(table)
}

/// |u|_{m,lambda,T} = sum_{k <= m} lambda^{m-k} ||e^{-lambda t} Z^k u||_{L2}.
pub fn weighted_norm(u: &ScalarField, p: &NormParams) -> Result<f64> {
    p.check_grid(&u.grid)?;
    let t = square_table(u, p.m, p.lambda, p.eps, false)?;
    Ok((0..=p.m).map(|l| p.lambda.powi((p.m - l) as i32) * t[0][l].sqrt()).sum())
}

/// |u|^E = sum_{2k + l <= m} lambda^{m-2k-l} ||e^{-lambda t} (eps d_2)^k Z^l u||_{L2}.
pub fn norm_e(u: &ScalarField, p: &NormParams) -> Result<f64> {
    p.check_grid(&u.grid)?;
    let t = square_table(u, p.m, p.lambda, p.eps, true)?;
    let mut s = 0.0;
    for (k, row) in t.iter().enumerate() {
        for (l, &v) in row.iter().enumerate() {
            if 2 * k + l <= p.m {
                s += p.lambda.powi((p.m - 2 * k - l) as i32) * v.sqrt();
            }
        }
    }
    Ok(s)
}

/// |u|^N = |u|_{m,lambda,T} + |eps d_2 u|_{m,lambda,T}.
pub fn norm_n(u: &ScalarField, p: &NormParams) -> Result<f64> {
    let du = ScalarField { grid: u.grid, data: eps_dn(&u.grid, &u.data, p.eps)? };
    Ok(weighted_norm(u, p)? + weighted_norm(&du, p)?)
}

/// |u|^A = |u|_{m,lambda,T} + sum_{l <= m-2} lambda^{m-2-l} ||e^{-lambda t} eps d_2 Z^l u||_{L2}.
pub fn norm_a(u: &ScalarField, p: &NormParams) -> Result<f64> {
    let base = weighted_norm(u, p)?;
    if p.m < 2 {
        return Ok(base);
    }
    let t = square_table(u, p.m, p.lambda, p.eps, true)?;
    let extra: f64 = (0..=p.m - 2).map(|l| p.lambda.powi((p.m - 2 - l) as i32) * t[1][l].sqrt()).sum();
    Ok(base + extra)
}

/// (||u||*, ||u||_Lip):
///   ||u||* = sum_{|alpha| <= 2} |Z^alpha u|_inf + sum_{|alpha| <= 1} |Z^alpha eps d_2 u|_inf,
///   ||u||_Lip = sum_{|alpha| <= 1} |Z^alpha u|_inf + |eps d_2 u|_inf.
pub fn norm_star(u: &ScalarField, p: &NormParams) -> Result<(f64, f64)> {
    p.check_grid(&u.grid)?;
    let sup = |f: &[f64]| f.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut star = 0.0;
    let mut lip = 0.0;
    for_each_z(u, 2, |alpha, f| {
        let s = sup(f);
        star += s;
        if alpha.iter().sum::<usize>() <= 1 {
            lip += s;
        }
        Ok(())
    })?;
    let du = ScalarField { grid: u.grid, data: eps_dn(&u.grid, &u.data, p.eps)? };
    lip += sup(&du.data);
    for_each_z(&du, 1, |_, f| {
        star += sup(f);
        Ok(())
    })?;
    Ok((star, lip))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub norm: String,
    pub m: usize,
    pub lambda: f64,
    pub eps: f64,
    pub value: f64,
    pub grid_id: String,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormReport {
    pub rows: Vec<NormRow>,
}

impl NormReport {
    /// Every norm of `u` at `p`.
    pub fn compute(u: &ScalarField, p: &NormParams, grid_id: &str) -> Result<NormReport> {
        let (star, lip) = norm_star(u, p)?;
        let vals = [("weighted", weighted_norm(u, p)?), ("N", norm_n(u, p)?), ("E", norm_e(u, p)?), ("A", norm_a(u, p)?), ("star", star), ("lip", lip)];
        Ok(NormReport {
            rows: vals.iter().map(|&(n, v)| NormRow { norm: n.to_string(), m: p.m, lambda: p.lambda, eps: p.eps, value: v, grid_id: grid_id.to_string(), horizon: p.t }).collect(),
        })
    }

    pub fn get(&self, norm: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.norm == norm).map(|r| r.value)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport {
    /// (eps, sqrt(eps) ||u||* / (T e^{lambda T} |u|^E), same without sqrt(eps)).
    pub rows: Vec<(f64, f64, f64)>,
    pub spread: f64,
    pub spread_control: f64,
    /// Largest relative change of the ratio under one refinement.
    pub refinement_change: f64,
    pub pass: bool,
}

fn spread(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(0.0, f64::max);
    let min = v.fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else {
        max / min
    }
}

/// Sobolev embedding ratio over an eps sweep. `family(eps, level)` returns the family member
/// sampled at resolution level 0 (base) or 1 (refined).
pub fn check_sobolev_embedding(family: impl Fn(f64, usize) -> Result<ScalarField>, eps_list: &[f64], m: usize, lambda: f64, t: f64) -> Result<SobolevReport> {
    if 2 * m <= 2 + 10 {
        return Err(Error::InvalidInput(format!("the embedding needs m > d/2 + 5, got m = {m}")));
    }
    let mut rows = Vec::new();
    let mut change: f64 = 0.0;
    for &eps in eps_list {
        let p = NormParams::new(m, lambda, t, eps)?;
        let mut r = [0.0; 2];
        for (level, out) in r.iter_mut().enumerate() {
            let u = family(eps, level)?;
            let (star, _) = norm_star(&u, &p)?;
            let e = norm_e(&u, &p)?;
            *out = if e > 0.0 { star / (t * (lambda * t).exp() * e) } else { 0.0 };
        }
        if r[0] > 0.0 {
            change = change.max((r[0] - r[1]).abs() / r[0]);
        }
        rows.push((eps, eps.sqrt() * r[0], r[0]));
    }
    let s = spread(rows.iter().map(|r| r.1));
    let sc = spread(rows.iter().map(|r| r.2));
    Ok(SobolevReport { rows, spread: s, spread_control: sc, refinement_change: change, pass: s <= 2.0 && change <= 0.1 })
}

/// Empirical constants across resolution levels and lambdas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    /// (level, lambda, lhs, rhs, lhs / rhs).
    pub rows: Vec<(usize, f64, f64, f64, f64)>,
    pub spread: f64,
    pub pass: bool,
}

fn finish(rows: Vec<(usize, f64, f64, f64, f64)>) -> InequalityReport {
    let nonzero: Vec<f64> = rows.iter().filter(|r| r.3 > 0.0).map(|r| r.4).collect();
    let s = if nonzero.is_empty() { 1.0 } else { spread(nonzero.iter().copied()) };
    InequalityReport { rows, spread: s, pass: s <= 2.0 }
}

/// lambda^{k-l} |e^{-(2/p) lambda t} Z^l u|_{L^p} <= C ||u||_inf^{1-k/m} |u|_{m,lambda,T}^{k/m}, p = 2m/k.
pub fn check_gagliardo_nirenberg(levels: &[ScalarField], k: usize, l: usize, m: usize, lambdas: &[f64], t: f64) -> Result<InequalityReport> {
    if !(l <= k && k <= m && k >= 1) {
        return Err(Error::InvalidInput(format!("need 1 <= k, l <= k <= m; got k = {k}, l = {l}, m = {m}")));
    }
    let pexp = 2.0 * m as f64 / k as f64;
    let mut rows = Vec::new();
    for (level, u) in levels.iter().enumerate() {
        for &lambda in lambdas {
            let p = NormParams::new(m, lambda, t, 1.0)?;
            p.check_grid(&u.grid)?;
            let g = u.grid;
            let mut sq = vec![0.0; g.len()];
            for_each_z(u, l, |alpha, f| {
                if alpha.iter().sum::<usize>() == l {
                    for (s, &v) in sq.iter_mut().zip(f) {
                        *s += v * v;
                    }
                }
                Ok(())
            })?;
            let q = Quadrature::new(&g, lambda, 2.0);
            let lp = q.integrate(&g, |i| sq[i].powf(pexp / 2.0)).powf(1.0 / pexp);
            let lhs = lambda.powi((k - l) as i32) * lp;
            let rhs = u.max_abs().powf(1.0 - k as f64 / m as f64) * weighted_norm(u, &p)?.powf(k as f64 / m as f64);
            rows.push((level, lambda, lhs, rhs, if rhs > 0.0 { lhs / rhs } else { 0.0 }));
        }
    }
    Ok(finish(rows))
}

/// |F(g)|_{m,lambda,T} <= C |g|_{m,lambda,T} under ||g||_inf <= r_bound.
pub fn check_moser(f: impl Fn(f64) -> f64, levels: &[ScalarField], m: usize, lambdas: &[f64], t: f64, r_bound: f64) -> Result<InequalityReport> {
    if f(0.0).abs() > 1e-14 {
        return Err(Error::InvalidInput("Moser check needs F(0) = 0".into()));
    }
    let mut rows = Vec::new();
    for (level, g) in levels.iter().enumerate() {
        if g.max_abs() > r_bound {
            return Err(Error::InvalidInput(format!("||g||_inf = {} exceeds R = {r_bound}", g.max_abs())));
        }
        let fg = g.map(&f);
        for &lambda in lambdas {
            let p = NormParams::new(m, lambda, t, 1.0)?;
            let lhs = weighted_norm(&fg, &p)?;
            let rhs = weighted_norm(g, &p)?;
            rows.push((level, lambda, lhs, rhs, if rhs > 0.0 { lhs / rhs } else { 0.0 }));
        }
    }
    Ok(finish(rows))
}

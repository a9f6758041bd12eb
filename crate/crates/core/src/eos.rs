//! Equation of state, symmetrizer and flux matrices, the projector on ker L_d,
//! and pointwise evaluation of the Euler residual in (v, p, s) variables.
//!
//! Closure: rho = p^(1/gamma) exp(-s/gamma), so p = rho^gamma exp(s) and alpha = 1/(gamma p).

use crate::error::{Error, Result};
use crate::grid::{diff_axis, diff_axis4, Axis};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const DEFAULT_P_MIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosModel {
    pub gamma: f64,
    pub p_min: f64,
}

impl Default for EosModel {
    fn default() -> Self {
        EosModel { gamma: 1.4, p_min: DEFAULT_P_MIN }
    }
}

impl EosModel {
    pub fn new(gamma: f64) -> Result<EosModel> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(EosModel { gamma, p_min: DEFAULT_P_MIN })
    }

    pub fn check(&self, p: f64) -> Result<()> {
        if p > self.p_min && p.is_finite() {
            Ok(())
        } else {
            Err(Error::Admissibility { p, p_min: self.p_min })
        }
    }

    pub fn rho(&self, p: f64, s: f64) -> Result<f64> {
        self.check(p)?;
        Ok(self.rho_unchecked(p, s))
    }

    #[inline]
    pub(crate) fn rho_unchecked(&self, p: f64, s: f64) -> f64 {
        (p.ln() / self.gamma - s / self.gamma).exp()
    }

    /// d rho / d p.
    pub fn drho_dp(&self, p: f64, s: f64) -> Result<f64> {
        Ok(self.rho(p, s)? / (self.gamma * p))
    }

    /// d rho / d s.
    pub fn drho_ds(&self, p: f64, s: f64) -> Result<f64> {
        Ok(-self.rho(p, s)? / self.gamma)
    }

    /// alpha = rho_p / rho.
    pub fn alpha(&self, p: f64, _s: f64) -> Result<f64> {
        self.check(p)?;
        Ok(1.0 / (self.gamma * p))
    }

    pub fn pressure(&self, rho: f64, s: f64) -> f64 {
        rho.powf(self.gamma) * s.exp()
    }

    pub fn entropy(&self, p: f64, rho: f64) -> f64 {
        (p / rho.powf(self.gamma)).ln()
    }

    pub fn sound_speed(&self, p: f64, rho: f64) -> f64 {
        (self.gamma * p / rho).sqrt()
    }
}

/// u = (v, p, s) with `v.len() = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub v: Vec<f64>,
    pub p: f64,
    pub s: f64,
}

impl StateVector {
    pub fn new(v: Vec<f64>, p: f64, s: f64) -> StateVector {
        StateVector { v, p, s }
    }
    pub fn dim(&self) -> usize {
        self.v.len()
    }
    pub fn tangential(&self) -> &[f64] {
        &self.v[..self.v.len() - 1]
    }
    pub fn normal(&self) -> f64 {
        self.v[self.v.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Symmetrizer,
    Flux,
    SymmetricFlux,
    Projector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub kind: MatrixKind,
    pub entries: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.entries * DVector::from_column_slice(x)).iter().copied().collect()
    }
    /// Numerical rank via singular values relative to the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.entries.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * smax).count()
    }
    pub fn kernel_dim(&self, rel_tol: f64) -> usize {
        self.size() - self.rank(rel_tol)
    }
}

/// S(u) = diag(rho I_d, alpha, 1).
pub fn symmetrizer(model: &EosModel, u: &StateVector) -> Result<OperatorMatrix> {
    let d = u.dim();
    let rho = model.rho(u.p, u.s)?;
    let alpha = model.alpha(u.p, u.s)?;
    let mut m = DMatrix::zeros(d + 2, d + 2);
    for i in 0..d {
        m[(i, i)] = rho;
    }
    m[(d, d)] = alpha;
    m[(d + 1, d + 1)] = 1.0;
    Ok(OperatorMatrix { kind: MatrixKind::Symmetrizer, entries: m })
}

fn check_direction(xi: &[f64]) -> Result<()> {
    if xi.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidInput("direction xi must be nonzero".into()));
    }
    Ok(())
}

/// M(u, xi) = [[0, xi / rho], [xi^T / alpha, 0]] with zero entropy row and column.
pub fn flux_matrix(model: &EosModel, u: &StateVector, xi: &[f64]) -> Result<OperatorMatrix> {
    let d = u.dim();
    if xi.len() != d {
        return Err(Error::InvalidInput(format!("xi has {} components, state has d = {d}", xi.len())));
    }
    check_direction(xi)?;
    let rho = model.rho(u.p, u.s)?;
    let alpha = model.alpha(u.p, u.s)?;
    let mut m = DMatrix::zeros(d + 2, d + 2);
    for i in 0..d {
        m[(i, d)] = xi[i] / rho;
        m[(d, i)] = xi[i] / alpha;
    }
    Ok(OperatorMatrix { kind: MatrixKind::Flux, entries: m })
}

/// L(xi) = S(u) M(u, xi) = [[0, xi], [xi^T, 0]] (plus the zero entropy slot); independent of u.
pub fn symmetric_flux(xi: &[f64]) -> Result<OperatorMatrix> {
    check_direction(xi)?;
    let d = xi.len();
    let mut m = DMatrix::zeros(d + 2, d + 2);
    for i in 0..d {
        m[(i, d)] = xi[i];
        m[(d, i)] = xi[i];
    }
    Ok(OperatorMatrix { kind: MatrixKind::SymmetricFlux, entries: m })
}

/// Orthogonal projector on ker L(e_d): diag(I_{d-1}, 0, 0, 1).
pub fn projector_p0(d: usize) -> Result<OperatorMatrix> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let mut m = DMatrix::zeros(d + 2, d + 2);
    for i in 0..d - 1 {
        m[(i, i)] = 1.0;
    }
    m[(d + 1, d + 1)] = 1.0;
    Ok(OperatorMatrix { kind: MatrixKind::Projector, entries: m })
}

/// Tensor grid (t, x1, x2); x1 periodic, x2 closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub t: Axis,
    pub x1: Axis,
    pub x2: Axis,
}

impl SpaceTimeGrid {
    pub fn shape(&self) -> [usize; 3] {
        [self.t.n, self.x1.n, self.x2.n]
    }
    pub fn len(&self) -> usize {
        self.t.n * self.x1.n * self.x2.n
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    #[inline]
    pub fn index(&self, it: usize, i1: usize, i2: usize) -> usize {
        (it * self.x1.n + i1) * self.x2.n + i2
    }
}

pub const V1: usize = 0;
pub const V2: usize = 1;
pub const P: usize = 2;
pub const S: usize = 3;
pub const COMPONENT_NAMES: [&str; 4] = ["v1", "v2", "p", "s"];

/// Fields (v1, v2, p, s) sampled on a space-time grid, layout `[t][x1][x2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub grid: SpaceTimeGrid,
    pub comps: [Vec<f64>; 4],
}

impl StateField {
    pub fn zeros(grid: SpaceTimeGrid) -> StateField {
        let n = grid.len();
        StateField { grid, comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64, f64) -> [f64; 4]) -> StateField {
        let mut out = StateField::zeros(grid);
        for it in 0..grid.t.n {
            for i1 in 0..grid.x1.n {
                for i2 in 0..grid.x2.n {
                    let u = f(grid.t.at(it), grid.x1.at(i1), grid.x2.at(i2));
                    let k = grid.index(it, i1, i2);
                    for c in 0..4 {
                        out.comps[c][k] = u[c];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, &x| m.max(x.abs()))
    }
}

/// Euler residual at one point from values and first derivatives:
/// (X_v v + grad p / rho, X_v p + div v / alpha, X_v s).
#[inline]
pub fn residual_point(model: &EosModel, u: &[f64; 4], dt: &[f64; 4], d1: &[f64; 4], d2: &[f64; 4]) -> Result<[f64; 4]> {
    model.check(u[P])?;
    let rho = model.rho_unchecked(u[P], u[S]);
    let inv_alpha = model.gamma * u[P];
    let (a, b) = (u[V1], u[V2]);
    let adv = |c: usize| dt[c] + a * d1[c] + b * d2[c];
    Ok([adv(V1) + d1[P] / rho, adv(V2) + d2[P] / rho, adv(P) + inv_alpha * (d1[V1] + d2[V2]), adv(S)])
}

/// Pointwise Euler residual of a sampled field, second-order centered differences
/// (one-sided at the t and x2 edges, periodic in x1).
pub fn euler_residual(model: &EosModel, u: &StateField) -> Result<StateField> {
    residual_with(model, u, diff_axis)
}

/// `euler_residual` with fourth-order five-point differences on every axis.
pub fn euler_residual4(model: &EosModel, u: &StateField) -> Result<StateField> {
    residual_with(model, u, diff_axis4)
}

type AxisDiff = fn(&[f64], &[usize], usize, f64, bool) -> Result<Vec<f64>>;

fn residual_with(model: &EosModel, u: &StateField, diff: AxisDiff) -> Result<StateField> {
    let g = u.grid;
    let shape = g.shape();
    if shape.iter().any(|&n| n < 5) {
        return Err(Error::GridTooCoarse(format!("need at least 5 points per axis, got {shape:?}")));
    }
    let mut dt = Vec::with_capacity(4);
    let mut d1 = Vec::with_capacity(4);
    let mut d2 = Vec::with_capacity(4);
    for c in 0..4 {
        dt.push(diff(&u.comps[c], &shape, 0, g.t.step, false)?);
        d1.push(diff(&u.comps[c], &shape, 1, g.x1.step, true)?);
        d2.push(diff(&u.comps[c], &shape, 2, g.x2.step, false)?);
    }
    let mut out = StateField::zeros(g);
    for k in 0..g.len() {
        let val = [u.comps[0][k], u.comps[1][k], u.comps[2][k], u.comps[3][k]];
        let r = residual_point(model, &val, &[dt[0][k], dt[1][k], dt[2][k], dt[3][k]], &[d1[0][k], d1[1][k], d1[2][k], d1[3][k]], &[d2[0][k], d2[1][k], d2[2][k], d2[3][k]])?;
        for c in 0..4 {
            out.comps[c][k] = r[c];
        }
    }
    Ok(out)
}

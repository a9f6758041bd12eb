//! Semi-Lagrangian solver for totally characteristic transport of layer profiles,
//!
//!   d_t U + a(t,x).grad_x U + b(t,x) X d_X U + c(t,x) U = f(t,x,X),
//!
//! RK2 feet, tensor Lagrange interpolation (6 points in periodic x1, 4 in x2 and X),
//! trapezoidal integration of source and reaction along the characteristic.
//! Stencils are shifted inward at x2 = 0 and X = 0, so no boundary values are read there.

use super::field::{LayerPart, ProfileGrid};
use crate::error::{Error, Result};
use crate::grid::lagrange_weights;

pub type Vec2 = [f64; 2];

/// Coefficients (a, b, c) at (t, x).
pub trait TransportCoeffs {
    fn coeffs(&self, t: f64, x: Vec2) -> Result<(Vec2, f64, f64)>;
}

/// Source values on the full grid at time t.
pub trait LayerSource {
    fn at(&self, t: f64, out: &mut [f64]) -> Result<()>;
}

/// Source stored at snapshot times, cubic in time between them.
pub struct SnapshotSource<'a> {
    pub part: &'a LayerPart,
}

impl LayerSource for SnapshotSource<'_> {
    fn at(&self, t: f64, out: &mut [f64]) -> Result<()> {
        interpolate_in_time(&self.part.times, &self.part.data, self.part.slice_len(), t, out)
    }
}

/// Source computed by a closure.
pub struct FnSource<F: Fn(f64, &mut [f64]) -> Result<()>>(pub F);

impl<F: Fn(f64, &mut [f64]) -> Result<()>> LayerSource for FnSource<F> {
    fn at(&self, t: f64, out: &mut [f64]) -> Result<()> {
        (self.0)(t, out)
    }
}

/// Window of (up to) four snapshots around `t` and their Lagrange weights (value, d/dt).
pub fn time_weights(times: &[f64], t: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
    let nt = times.len();
    let tol = 1e-12 * (1.0 + t.abs());
    if t < times[0] - tol || t > times[nt - 1] + tol {
        return Err(Error::InvalidInput(format!("time {t} outside stored range [{}, {}]", times[0], times[nt - 1])));
    }
    let q = nt.min(4);
    if let Some(k) = times.iter().position(|&s| (s - t).abs() <= tol) {
        let first = k.saturating_sub(1).min(nt - q);
        let nodes = &times[first..first + q];
        let mut w = vec![0.0; q];
        w[k - first] = 1.0;
        let dw = if q > 1 { crate::grid::fd_weights(nodes, times[k]) } else { vec![0.0] };
        return Ok((first, w, dw));
    }
    let mut k = 0;
    while k + 2 < nt && times[k + 1] < t {
        k += 1;
    }
    let first = k.saturating_sub(1).min(nt - q);
    let nodes = &times[first..first + q];
    let mut w = vec![0.0; q];
    lagrange_weights(nodes, t, &mut w);
    Ok((first, w, crate::grid::fd_weights(nodes, t)))
}

/// Interpolation in time of stacked snapshots of length `n`.
pub fn interpolate_in_time(times: &[f64], data: &[f64], n: usize, t: f64, out: &mut [f64]) -> Result<()> {
    let (first, w, _) = time_weights(times, t)?;
    if w.iter().filter(|&&x| x != 0.0).count() == 1 {
        let j = w.iter().position(|&x| x != 0.0).unwrap_or(0);
        if w[j] == 1.0 {
            out[..n].copy_from_slice(&data[(first + j) * n..(first + j + 1) * n]);
            return Ok(());
        }
    }
    out[..n].fill(0.0);
    for (j, &wj) in w.iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        let src = &data[(first + j) * n..(first + j + 1) * n];
        for (o, s) in out[..n].iter_mut().zip(src) {
            *o += wj * s;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportOptions {
    pub dt_max: f64,
    /// Value returned for any read outside the grid below x2 = 0 or X = 0. The stencils never
    /// touch such nodes; planting NaN here confirms it.
    pub ghost: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { dt_max: 0.003125, ghost: 0.0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    idx: [isize; 6],
    w: [f64; 6],
    len: usize,
}

impl Stencil {
    fn identity(j: isize) -> Stencil {
        Stencil { idx: [j, 0, 0, 0, 0, 0], w: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], len: 1 }
    }
    fn empty() -> Stencil {
        Stencil { idx: [0; 6], w: [0.0; 6], len: 0 }
    }
}

fn uniform_stencil(r: f64, n: usize, q: usize, periodic: bool) -> Stencil {
    let j0 = r.floor();
    if r == j0 {
        let j = j0 as isize;
        return Stencil::identity(if periodic { j.rem_euclid(n as isize) } else { j });
    }
    let mut first = j0 as isize - (q as isize / 2) + 1;
    if !periodic {
        first = first.clamp(0, n as isize - q as isize);
    }
    let mut nodes = [0.0; 6];
    let mut s = Stencil::empty();
    s.len = q;
    for a in 0..q {
        nodes[a] = (first + a as isize) as f64;
        s.idx[a] = if periodic { (first + a as isize).rem_euclid(n as isize) } else { first + a as isize };
    }
    lagrange_weights(&nodes[..q], r, &mut s.w[..q]);
    s
}

fn fast_stencil(nodes: &[f64], xf: f64) -> Stencil {
    let n = nodes.len();
    let k = match nodes.binary_search_by(|v| v.partial_cmp(&xf).unwrap_or(std::cmp::Ordering::Less)) {
        Ok(k) => return Stencil::identity(k as isize),
        Err(k) => k.saturating_sub(1).min(n - 2),
    };
    let first = k.saturating_sub(1).min(n - 4);
    let mut s = Stencil::empty();
    s.len = 4;
    for a in 0..4 {
        s.idx[a] = (first + a) as isize;
    }
    lagrange_weights(&nodes[first..first + 4], xf, &mut s.w[..4]);
    s
}

/// Solves from `t_start` (where `init` holds) and stores the solution at every grid time.
/// On a wall-collapsed grid the normal velocity is ignored and x2 = 0 throughout.
pub fn solve_transport(
    grid: &ProfileGrid,
    coeffs: &dyn TransportCoeffs,
    init: &[f64],
    source: Option<&dyn LayerSource>,
    t_start: f64,
    opts: TransportOptions,
) -> Result<LayerPart> {
    let n = grid.slice_len();
    if init.len() != n {
        return Err(Error::InvalidInput(format!("initial data has {} values, grid needs {n}", init.len())));
    }
    if grid.times[0] < t_start - 1e-14 {
        return Err(Error::InvalidInput("output times precede the start time".into()));
    }
    if !(opts.dt_max > 0.0) {
        return Err(Error::InvalidInput("dt_max must be positive".into()));
    }
    if !grid.is_collapsed() && grid.x2.n < 4 {
        return Err(Error::GridTooCoarse("transport needs at least 4 slow x2 nodes".into()));
    }
    if grid.fast.len() < 4 {
        return Err(Error::GridTooCoarse("transport needs at least 4 fast nodes".into()));
    }
    let mut out = LayerPart::zeros(grid);
    let mut u = init.to_vec();
    let mut unew = vec![0.0; n];
    let mut f_old = vec![0.0; n];
    let mut f_new = vec![0.0; n];
    let mut t = t_start;
    if let Some(s) = source {
        s.at(t, &mut f_old)?;
    }
    for (it, &t_out) in grid.times.iter().enumerate() {
        let span = t_out - t;
        if span > 1e-14 {
            let steps = (span / opts.dt_max - 1e-9).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for s in 0..steps {
                let t_next = if s + 1 == steps { t_out } else { t + dt };
                if let Some(src) = source {
                    src.at(t_next, &mut f_new)?;
                }
                step(grid, coeffs, &u, &mut unew, source.map(|_| (&f_old[..], &f_new[..])), t, t_next - t, opts.ghost)?;
                std::mem::swap(&mut u, &mut unew);
                std::mem::swap(&mut f_old, &mut f_new);
                t = t_next;
            }
        }
        out.slice_mut(it).copy_from_slice(&u);
    }
    Ok(out)
}

#[inline]
fn read(data: &[f64], n2: usize, nx: usize, i1: usize, i2: isize, k: isize, ghost: f64) -> f64 {
    if i2 < 0 || k < 0 || i2 >= n2 as isize || k >= nx as isize {
        return ghost;
    }
    data[(i1 * n2 + i2 as usize) * nx + k as usize]
}

#[allow(clippy::too_many_arguments)]
fn step(grid: &ProfileGrid, coeffs: &dyn TransportCoeffs, u: &[f64], unew: &mut [f64], src: Option<(&[f64], &[f64])>, t: f64, dt: f64, ghost: f64) -> Result<()> {
    let (n1, n2, nx) = (grid.x1.n, grid.x2.n, grid.fast.len());
    let collapsed = grid.is_collapsed();
    let nodes = &grid.fast.nodes;
    let xmax = grid.fast.x_max;
    let mut xw: Vec<Stencil> = vec![Stencil::empty(); nx];
    let mut a2_prev = f64::NAN;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let x = [grid.x1.at(i1), if collapsed { 0.0 } else { grid.x2.at(i2) }];
            let (mut a_end, _, c_end) = coeffs.coeffs(t + dt, x)?;
            if collapsed {
                a_end[1] = 0.0;
            }
            let xm = [x[0] - 0.5 * dt * a_end[0], (x[1] - 0.5 * dt * a_end[1]).max(0.0)];
            let (mut a_mid, b_mid, _) = coeffs.coeffs(t + 0.5 * dt, xm)?;
            if collapsed {
                a_mid[1] = 0.0;
            }
            if i2 > 0 {
                let grad = (a_mid[1] - a2_prev).abs() / grid.x2.step;
                if dt * grad > 0.5 {
                    return Err(Error::Cfl(format!("dt |d a2 / d x2| = {} exceeds 0.5", dt * grad)));
                }
            }
            a2_prev = a_mid[1];
            let foot = [x[0] - dt * a_mid[0], if collapsed { 0.0 } else { (x[1] - dt * a_mid[1]).clamp(0.0, grid.x2.end()) }];
            let c_foot = coeffs.coeffs(t, foot)?.2;
            let sigma = (-dt * b_mid).exp();
            let s1 = uniform_stencil((foot[0] - grid.x1.start) / grid.x1.step, n1, 6.min(n1), true);
            let s2 = if collapsed { Stencil::identity(0) } else { uniform_stencil(foot[1] / grid.x2.step, n2, 4, false) };
            for (k, w) in xw.iter_mut().enumerate() {
                *w = if sigma == 1.0 {
                    Stencil::identity(k as isize)
                } else {
                    let xf = nodes[k] * sigma;
                    if xf > xmax {
                        Stencil::empty()
                    } else {
                        fast_stencil(nodes, xf)
                    }
                };
            }
            let base = (i1 * n2 + i2) * nx;
            let damp_foot = 1.0 - 0.5 * dt * c_foot;
            let damp_end = 1.0 / (1.0 + 0.5 * dt * c_end);
            for k in 0..nx {
                let sx = &xw[k];
                let mut val = 0.0;
                let mut fval = 0.0;
                for a in 0..s1.len {
                    let j1 = s1.idx[a] as usize;
                    for b in 0..s2.len {
                        let wab = s1.w[a] * s2.w[b];
                        for c in 0..sx.len {
                            let w = wab * sx.w[c];
                            val += w * read(u, n2, nx, j1, s2.idx[b], sx.idx[c], ghost);
                            if let Some((f_old, _)) = src {
                                fval += w * read(f_old, n2, nx, j1, s2.idx[b], sx.idx[c], ghost);
                            }
                        }
                    }
                }
                let fn_here = src.map(|(_, f_new)| f_new[base + k]).unwrap_or(0.0);
                unew[base + k] = (val * damp_foot + 0.5 * dt * (fn_here + fval)) * damp_end;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_have_unit_sum() {
        for &r in &[0.0, 0.2, 3.5, 7.9, 8.0, 0.01] {
            let s = uniform_stencil(r, 9, 6, true);
            let sum: f64 = s.w[..s.len].iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            let s = uniform_stencil(r, 9, 4, false);
            let sum: f64 = s.w[..s.len].iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            assert!(s.idx[..s.len].iter().all(|&i| (0..9).contains(&i)));
        }
    }

    #[test]
    fn fast_stencil_stays_inside() {
        let nodes: Vec<f64> = (0..10).map(|k| (k * k) as f64 * 0.1).collect();
        for &x in &[0.0, 0.05, 0.4, 7.0, 8.1] {
            let s = fast_stencil(&nodes, x);
            assert!(s.idx[..s.len].iter().all(|&i| (0..10).contains(&i)));
            let v: f64 = (0..s.len).map(|a| s.w[a] * nodes[s.idx[a] as usize]).sum();
            assert!((v - x).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_time_interpolation_is_exact_for_cubics() {
        let times = [0.0, 0.1, 0.25, 0.3, 0.5];
        let data: Vec<f64> = times.iter().map(|t| t * t * t - t).collect();
        let mut out = [0.0];
        interpolate_in_time(&times, &data, 1, 0.2, &mut out).unwrap();
        assert!((out[0] - (0.008 - 0.2)).abs() < 1e-14);
        let (first, _, dw) = time_weights(&times, 0.2).unwrap();
        let d: f64 = dw.iter().enumerate().map(|(j, w)| w * data[first + j]).sum();
        assert!((d - (3.0 * 0.04 - 1.0)).abs() < 1e-12);
    }
}

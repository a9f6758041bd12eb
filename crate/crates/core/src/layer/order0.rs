//! Leading-order layer profiles: the entropy layer, the tangential-velocity layer and
//! polarization of the order-0 set.

use super::field::{LayerPart, ProfileGrid, ProfileSet, RegularField};
use super::transport::{solve_transport, FnSource, LayerSource, TransportCoeffs, TransportOptions, Vec2};
use crate::eos::EosModel;
use crate::error::{Error, Result};
use crate::grid::diff_periodic4;
use crate::ground_state::{normal_flat_factor, FlatFactor, GroundState};

pub const FLAT_DELTA: f64 = 1e-3;

/// Transport coefficients along the ground state: a = v0, b = v0_d / x_d and, optionally,
/// the reaction c = d_1 v0_1.
pub struct GroundCoeffs<'a> {
    pub gs: &'a GroundState,
    pub flat: FlatFactor,
    pub reaction: bool,
}

impl<'a> GroundCoeffs<'a> {
    pub fn new(gs: &'a GroundState, reaction: bool) -> Result<Self> {
        Ok(GroundCoeffs { gs, flat: normal_flat_factor(gs, FLAT_DELTA)?, reaction })
    }
}

impl TransportCoeffs for GroundCoeffs<'_> {
    fn coeffs(&self, t: f64, x: Vec2) -> Result<(Vec2, f64, f64)> {
        let v = self.gs.velocity(t, x)?;
        let b = self.flat.eval(t, x)?;
        let c = if self.reaction { self.gs.jacobian(t, x)?[0][0] } else { 0.0 };
        Ok((v, b, c))
    }
}

/// Samples `f(x1, x2, X)` on one time slice of the grid.
pub fn sample_layer(grid: &ProfileGrid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let nx = grid.fast.len();
    let mut out = vec![0.0; grid.slice_len()];
    for i1 in 0..grid.x1.n {
        for i2 in 0..grid.x2.n {
            let off = (i1 * grid.x2.n + i2) * nx;
            for k in 0..nx {
                out[off + k] = f(grid.x1.at(i1), grid.x2.at(i2), grid.fast.nodes[k]);
            }
        }
    }
    out
}

fn check_initial_decay(grid: &ProfileGrid, init: &[f64]) -> Result<()> {
    let nx = grid.fast.len();
    let m = init.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if m == 0.0 {
        return Ok(());
    }
    let tail = init.chunks(nx).fold(0.0f64, |a, l| a.max(l[nx - 1].abs())) / m;
    if tail > super::field::DECAY_RATIO {
        return Err(Error::DecayLost { tail, bound: super::field::DECAY_RATIO });
    }
    Ok(())
}

/// Entropy layer: (d_t + v0.grad + v0_flat X d_X) W = 0 from W(0) = init, no boundary data.
pub fn solve_entropy_layer(gs: &GroundState, init: &[f64], grid: &ProfileGrid, opts: TransportOptions) -> Result<LayerPart> {
    check_initial_decay(grid, init)?;
    let coeffs = GroundCoeffs::new(gs, false)?;
    let w = solve_transport(grid, &coeffs, init, None, 0.0, opts)?;
    w.check_decay()?;
    Ok(w)
}

/// Regular velocity corrector (tangential and normal components).
#[derive(Debug, Clone, Copy)]
pub struct RegularVelocity<'a> {
    pub v1: &'a RegularField,
    pub v2: &'a RegularField,
}

/// X_{v0} V_1 + V . grad v0_1 on the slow grid at time t.
fn regular_forcing_bracket(gs: &GroundState, vb: RegularVelocity, t: f64, out: &mut [f64]) -> Result<()> {
    let (x1, x2) = (vb.v1.x1, vb.v1.x2);
    let n = x1.n * x2.n;
    let (first, w, dw) = super::transport::time_weights(&vb.v1.times, t)?;
    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    let mut dtv1 = vec![0.0; n];
    for j in 0..w.len() {
        let a = vb.v1.slice(first + j);
        let b = vb.v2.slice(first + j);
        for i in 0..n {
            v1[i] += w[j] * a[i];
            v2[i] += w[j] * b[i];
            dtv1[i] += dw[j] * a[i];
        }
    }
    let mut d1v1 = vec![0.0; n];
    for i2 in 0..x2.n {
        diff_periodic4(&v1, i2, x2.n, x1.n, x1.step, &mut d1v1);
    }
    let tmp = RegularField { times: vec![t], x1, x2, data: v1.clone() };
    for i1 in 0..x1.n {
        for i2 in 0..x2.n {
            let k = i1 * x2.n + i2;
            let x = [x1.at(i1), x2.at(i2)];
            let v0 = gs.velocity(t, x)?;
            let j = gs.jacobian(t, x)?;
            let d2v1 = if x2.n > 1 { tmp.eval_x2(0, i1, x[1])?.1 } else { 0.0 };
            out[k] = dtv1[k] + v0[0] * d1v1[k] + v0[1] * d2v1 + v1[k] * j[0][0] + v2[k] * j[0][1];
        }
    }
    Ok(())
}

/// X_{v0} v0_1 / x_d: quotient above the flat threshold, linear bridge below.
fn accel_flat(gs: &GroundState, t: f64, x: Vec2) -> Result<f64> {
    if gs.is_analytic() {
        let a = gs.acceleration(t, x)?[0];
        if a == 0.0 {
            return Ok(0.0);
        }
    }
    let d = FLAT_DELTA;
    if x[1] >= d {
        return Ok(gs.acceleration(t, x)?[0] / x[1]);
    }
    let a0 = gs.acceleration(t, [x[0], 0.0])?[0];
    let a1 = gs.acceleration(t, [x[0], d])?[0];
    let a2 = gs.acceleration(t, [x[0], 2.0 * d])?[0];
    let at_wall = (-3.0 * a0 + 4.0 * a1 - a2) / (2.0 * d);
    Ok(at_wall + (x[1] / d) * (a1 / d - at_wall))
}

/// Tangential-velocity layer:
///   (d_t + v0.grad + v0_flat X d_X + d_1 v0_1) V~ = -(1 - rho_bar / rho(W)) (X_{v0} V_1 + V . grad v0_1 + X phi),
/// with rho_bar = rho(p0, w0), rho(W) = rho(p0, w0 + W~) and phi = X_{v0} v0_1 / x_d.
pub fn solve_tangential_layer(
    gs: &GroundState,
    eos: &EosModel,
    w_tilde: &LayerPart,
    v_bar: Option<RegularVelocity>,
    init: &[f64],
    grid: &ProfileGrid,
    opts: TransportOptions,
) -> Result<LayerPart> {
    check_initial_decay(grid, init)?;
    if w_tilde.x2.n != grid.x2.n || w_tilde.fast.len() != grid.fast.len() || !w_tilde.x1.same_nodes(&grid.x1) {
        return Err(Error::InvalidInput("entropy layer lives on a different grid".into()));
    }
    let coeffs = GroundCoeffs::new(gs, true)?;
    let (n1, n2, nx) = (grid.x1.n, grid.x2.n, grid.fast.len());
    // phi identically zero for closed-form (pro) ground states
    let mut phi_zero = true;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for &t in &[0.0, *grid.times.last().unwrap_or(&0.0)] {
                if accel_flat(gs, t, [grid.x1.at(i1), grid.x2.at(i2)])? != 0.0 {
                    phi_zero = false;
                }
            }
        }
    }
    let has_source = v_bar.is_some() || !phi_zero;
    let src = FnSource(|t: f64, out: &mut [f64]| -> Result<()> {
        let mut bracket = vec![0.0; n1 * n2];
        if let Some(vb) = v_bar {
            regular_forcing_bracket(gs, vb, t, &mut bracket)?;
        }
        let mut w = vec![0.0; w_tilde.slice_len()];
        w_tilde.slice_at(t, &mut w)?;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let x = [grid.x1.at(i1), grid.x2.at(i2)];
                let p0 = gs.pressure(t, x);
                let w0 = gs.entropy(t, x);
                let rho_bar = eos.rho(p0, w0)?;
                let phi = if phi_zero { 0.0 } else { accel_flat(gs, t, x)? };
                let off = (i1 * n2 + i2) * nx;
                for k in 0..nx {
                    let rho_w = eos.rho(p0, w0 + w[off + k])?;
                    out[off + k] = -(1.0 - rho_bar / rho_w) * (bracket[i1 * n2 + i2] + grid.fast.nodes[k] * phi);
                }
            }
        }
        Ok(())
    });
    let source: Option<&dyn LayerSource> = if has_source { Some(&src) } else { None };
    let v = solve_transport(grid, &coeffs, init, source, 0.0, opts)?;
    v.check_decay()?;
    Ok(v)
}

/// Enforces (Id - P0) U~0 = 0: the layer parts of v_d and p become exactly zero. Any mass above
/// `tol` is reported instead of removed.
pub fn polarize_leading(ps: &ProfileSet, tol: f64) -> Result<ProfileSet> {
    if ps.order != 0 {
        return Err(Error::InvalidInput(format!("polarization applies to order 0, got {}", ps.order)));
    }
    let m = ps.nonpolarized_mass();
    if m > tol {
        return Err(Error::Polarization { max_violation: m });
    }
    let mut out = ps.clone();
    out.vd.layer.data.iter_mut().for_each(|x| *x = 0.0);
    out.p.layer.data.iter_mut().for_each(|x| *x = 0.0);
    Ok(out)
}

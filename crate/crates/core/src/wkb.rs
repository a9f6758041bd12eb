//! Truncated WKB approximate solutions: building the profiles, assembling u_a^eps on a grid,
//! and the residual, polarization and reduction checks.

use crate::eos::{euler_residual4, EosModel, SpaceTimeGrid, StateField, P, S, V1, V2};
use crate::error::{Error, Result};
use crate::grid::{cubic_stencil, diff_axis, lagrange4_uniform, trapezoid_weights, Axis};
use crate::ground_state::GroundState;
use crate::layer::cascade::{expansion_terms, solve_order_one, ExtractionOptions, OrderOneInit, TermField};
use crate::layer::field::{LayerField, LayerPart, ProfileGrid, ProfileSet, RegularField};
use crate::layer::order0::{polarize_leading, sample_layer, solve_entropy_layer, solve_tangential_layer, RegularVelocity};
use crate::layer::regular::{solve_regular_corrector, RegularForcing, RegularOptions};
use crate::layer::transport::TransportOptions;
use crate::layer::{FastGrid, InterpKind};
use serde::{Deserialize, Serialize};

/// Discretization of the profile equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub n1: usize,
    /// Slow x2 intervals on [0, height].
    pub n2: usize,
    pub height: f64,
    pub x_max: f64,
    pub intervals: usize,
    pub stretch: f64,
    pub t_final: f64,
    /// Stored time levels (including t = 0).
    pub snapshots: usize,
    pub transport: TransportOptions,
    pub regular: RegularOptions,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            n1: 256,
            n2: 16,
            height: 1.0,
            x_max: 24.0,
            intervals: 384,
            stretch: 4.0,
            t_final: 0.2,
            snapshots: 9,
            transport: TransportOptions::default(),
            regular: RegularOptions::default(),
        }
    }
}

impl ProfileConfig {
    pub fn grid(&self, period: f64) -> Result<ProfileGrid> {
        if self.snapshots < 4 || !(self.t_final > 0.0) {
            return Err(Error::InvalidInput("need at least 4 snapshots and t_final > 0".into()));
        }
        let fast = FastGrid::new(self.x_max, self.intervals, self.stretch)?;
        let dt = self.t_final / (self.snapshots - 1) as f64;
        let times = (0..self.snapshots).map(|i| i as f64 * dt).collect();
        ProfileGrid::new(Axis::periodic(0.0, period, self.n1), Axis::closed(0.0, self.height, self.n2 + 1), fast, times)
    }
}

/// Initial layer data.
///   W~0 = amp_w exp(-(X/ell)^2) sin x1,
///   V~0_1 = amp_v (1 - 2 (X/ell)^2) exp(-(X/ell)^2) cos x1,
///   V-bar0_1 = amp_vbar sin x1 exp(-x2), V-bar0_2 = P-bar0 = W-bar1 = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerSetup {
    pub amp_w: f64,
    pub amp_v: f64,
    pub ell: f64,
    pub amp_vbar: f64,
}

impl Default for LayerSetup {
    fn default() -> Self {
        LayerSetup { amp_w: 0.5, amp_v: 0.5, ell: 2.0, amp_vbar: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct WkbExpansion {
    pub gs: GroundState,
    pub eos: EosModel,
    pub profiles: Vec<ProfileSet>,
    pub n: usize,
    pub interp: InterpKind,
    /// Relative fit residual of the source extraction (0 for n = 0).
    pub fit_residual: f64,
}

impl WkbExpansion {
    /// Solves the profile cascade up to order `n` (0 or 1).
    pub fn build(gs: &GroundState, eos: &EosModel, setup: &LayerSetup, n: usize, cfg: &ProfileConfig) -> Result<WkbExpansion> {
        if n > 1 {
            return Err(Error::InvalidInput(format!("truncation order {n} not supported (0 or 1)")));
        }
        let grid = cfg.grid(gs.period)?;
        let ps0 = build_order_zero(gs, eos, setup, &grid, cfg).map_err(|e| e.at_stage("order 0"))?;
        let mut profiles = vec![ps0];
        let mut fit_residual = 0.0;
        if n == 1 {
            let xopts = ExtractionOptions::for_grid(&grid);
            let rep = solve_order_one(gs, eos, &profiles[0], &grid, &OrderOneInit::default(), cfg.transport, cfg.regular, &xopts)?;
            fit_residual = rep.fit_residual;
            profiles.push(rep.profiles);
        }
        Ok(WkbExpansion { gs: gs.clone(), eos: *eos, profiles, n, interp: InterpKind::Hermite, fit_residual })
    }

    /// Same expansion truncated at a lower order.
    pub fn truncated(&self, n: usize) -> Result<WkbExpansion> {
        if n > self.n {
            return Err(Error::InvalidInput(format!("cannot raise truncation {} to {n}", self.n)));
        }
        let mut out = self.clone();
        out.profiles.truncate(n + 1);
        out.n = n;
        Ok(out)
    }

    /// Same expansion with every layer part set to zero.
    pub fn without_layers(&self) -> WkbExpansion {
        let mut out = self.clone();
        for ps in &mut out.profiles {
            for f in [&mut ps.vt.layer, &mut ps.vd.layer, &mut ps.p.layer, &mut ps.w_tilde] {
                f.data.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        out
    }

    /// Same expansion with every profile set to zero.
    pub fn zeroed(&self) -> WkbExpansion {
        let mut out = self.without_layers();
        for ps in &mut out.profiles {
            for f in [&mut ps.vt.regular, &mut ps.vd.regular, &mut ps.p.regular, &mut ps.w_bar_next] {
                f.data.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        out
    }

    pub fn times(&self) -> &[f64] {
        self.profiles[0].times()
    }
}

fn build_order_zero(gs: &GroundState, eos: &EosModel, setup: &LayerSetup, grid: &ProfileGrid, cfg: &ProfileConfig) -> Result<ProfileSet> {
    let ell = setup.ell;
    if !(ell > 0.0) {
        return Err(Error::InvalidInput("layer width must be positive".into()));
    }
    let w_init = sample_layer(grid, |x1, _, xf| setup.amp_w * (-(xf / ell).powi(2)).exp() * x1.sin());
    let w_tilde = solve_entropy_layer(gs, &w_init, grid, cfg.transport)?;
    let (v1, v2, p, w_next) = if setup.amp_vbar != 0.0 {
        let a = setup.amp_vbar;
        let sol = solve_regular_corrector(gs, eos, |x1, x2| [a * x1.sin() * (-x2).exp(), 0.0, 0.0, 0.0], grid, RegularForcing::default(), cfg.regular)?;
        (sol.v1, sol.v2, sol.p, sol.w)
    } else {
        let z = RegularField::zeros(grid);
        (z.clone(), z.clone(), z.clone(), z)
    };
    let v_init = sample_layer(grid, |x1, _, xf| {
        let r = (xf / ell).powi(2);
        setup.amp_v * (1.0 - 2.0 * r) * (-r).exp() * x1.cos()
    });
    let vbar = if setup.amp_vbar != 0.0 { Some(RegularVelocity { v1: &v1, v2: &v2 }) } else { None };
    let vt_layer = solve_tangential_layer(gs, eos, &w_tilde, vbar, &v_init, grid, cfg.transport)?;
    let wall = grid.collapsed();
    let ps = ProfileSet {
        order: 0,
        vt: LayerField { regular: v1, layer: vt_layer },
        vd: LayerField { regular: v2, layer: LayerPart::zeros(&wall) },
        p: LayerField { regular: p, layer: LayerPart::zeros(&wall) },
        w_tilde,
        w_bar_next: w_next,
    };
    polarize_leading(&ps, 0.0)
}

/// Assembles u_a^eps = (v0 + eps V_a, p0 + ..., s0 + W_a) with X = x2 / eps on `grid`.
/// The grid x1 nodes must be the profile x1 nodes.
pub fn assemble(exp: &WkbExpansion, eps: f64, grid: &SpaceTimeGrid) -> Result<StateField> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} outside (0, 1]")));
    }
    if grid.x2.step > eps / 8.0 * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!("dx2 = {} does not resolve eps = {eps} (need dx2 <= eps/8)", grid.x2.step)));
    }
    let ps0 = &exp.profiles[0];
    if !grid.x1.same_nodes(&ps0.w_tilde.x1) {
        return Err(Error::InvalidInput("assembly grid x1 nodes differ from the profile x1 nodes".into()));
    }
    let terms = expansion_terms(&exp.profiles[..=exp.n]);
    let fast = &ps0.w_tilde.fast;
    let (n1, n2) = (grid.x1.n, grid.x2.n);
    let mut out = StateField::zeros(*grid);
    let mut bufs: Vec<Vec<f64>> = terms
        .iter()
        .map(|t| match t.field {
            TermField::Layer(l) => vec![0.0; l.slice_len()],
            TermField::Regular(r) => vec![0.0; r.slice_len()],
        })
        .collect();
    for it in 0..grid.t.n {
        let t = grid.t.at(it);
        for (term, buf) in terms.iter().zip(bufs.iter_mut()) {
            match term.field {
                TermField::Layer(l) => l.slice_at(t, buf)?,
                TermField::Regular(r) => r.slice_at(t, buf)?,
            }
        }
        for i2 in 0..n2 {
            let x2 = grid.x2.at(i2);
            let xf = x2 / eps;
            let xst = if xf <= fast.x_max {
                match exp.interp {
                    InterpKind::Hermite => fast.hermite_stencil(xf),
                    InterpKind::Monotone => None,
                }
            } else {
                None
            };
            for i1 in 0..n1 {
                let k = grid.index(it, i1, i2);
                let x = [grid.x1.at(i1), x2];
                let v = exp.gs.velocity(t, x)?;
                out.comps[V1][k] = v[0];
                out.comps[V2][k] = v[1];
                out.comps[P][k] = exp.gs.pressure(t, x);
                out.comps[S][k] = exp.gs.entropy(t, x);
            }
            for (term, buf) in terms.iter().zip(bufs.iter()) {
                let coef = eps.powi(term.power);
                let c = term.comp;
                match term.field {
                    TermField::Regular(r) => {
                        let (j, w, q) = x2_weights(&r.x2, x2)?;
                        for i1 in 0..n1 {
                            let mut v = 0.0;
                            for a in 0..q {
                                v += w[a] * buf[i1 * r.x2.n + j + a];
                            }
                            out.comps[c][grid.index(it, i1, i2)] += coef * v;
                        }
                    }
                    TermField::Layer(l) => {
                        if xf > fast.x_max {
                            continue;
                        }
                        let (j, w, q) = x2_weights(&l.x2, x2)?;
                        let nx = l.nx();
                        for i1 in 0..n1 {
                            let mut v = 0.0;
                            for a in 0..q {
                                let off = (i1 * l.x2.n + j + a) * nx;
                                let line = &buf[off..off + nx];
                                v += w[a]
                                    * match &xst {
                                        Some(st) => st.iter().map(|&(m, wm)| wm * line[m]).sum::<f64>(),
                                        None => fast.interp(exp.interp, xf, |m| line[m]),
                                    };
                            }
                            out.comps[c][grid.index(it, i1, i2)] += coef * v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn x2_weights(axis: &Axis, x2: f64) -> Result<(usize, [f64; 4], usize)> {
    if axis.n == 1 {
        return Ok((0, [1.0, 0.0, 0.0, 0.0], 1));
    }
    let (j, s) = cubic_stencil(axis, x2).ok_or_else(|| Error::InvalidInput(format!("x2 = {x2} outside the slow grid")))?;
    Ok((j, lagrange4_uniform(s).0, 4))
}

/// Grid rule of the residual sweep: dx2 = eps / refine on [0, height], `levels` time levels
/// spaced dx2 and centred at `t_center`, x1 on the profile nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub height: f64,
    pub refine: f64,
    pub t_center: f64,
    pub levels: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid { height: 1.0, refine: 16.0, t_center: 0.15, levels: 5 }
    }
}

impl SweepGrid {
    pub fn grid(&self, x1: Axis, eps: f64) -> Result<SpaceTimeGrid> {
        if self.levels < 5 || !(self.refine >= 8.0) {
            return Err(Error::InvalidInput("sweep grid needs >= 5 time levels and refine >= 8".into()));
        }
        let n2 = (self.height * self.refine / eps).round() as usize;
        let h = self.height / n2 as f64;
        let half = (self.levels - 1) as f64 / 2.0;
        Ok(SpaceTimeGrid { t: Axis { start: self.t_center - half * h, step: h, n: self.levels, periodic: false }, x1, x2: Axis::closed(0.0, self.height, n2 + 1) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub grid_id: String,
    pub l2: f64,
    pub linf: f64,
    pub l2_comp: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub rows: Vec<SweepRow>,
    /// Rows of the refined grid rule, when requested.
    pub refined: Vec<SweepRow>,
    pub slope_l2: Option<(f64, f64)>,
    pub slope_linf: Option<(f64, f64)>,
    /// Largest relative L2 change under one refinement.
    pub refinement_change: Option<f64>,
    /// Every residual below round-off: nothing to fit.
    pub exact: bool,
}

impl SweepReport {
    pub fn grid_independent(&self, tol: f64) -> bool {
        self.refinement_change.is_some_and(|c| c < tol)
    }
}

/// Residual norms of one assembled field: L2 in space, RMS over the time levels.
pub fn residual_norms(exp: &WkbExpansion, eps: f64, grid: &SpaceTimeGrid, grid_id: &str) -> Result<SweepRow> {
    let u = assemble(exp, eps, grid)?;
    let r = euler_residual4(&exp.eos, &u)?;
    let w2 = trapezoid_weights(&grid.x2);
    let (nt, n1, n2) = (grid.t.n, grid.x1.n, grid.x2.n);
    let mut l2c = [0.0; 4];
    let mut linf: f64 = 0.0;
    for c in 0..4 {
        let mut acc = 0.0;
        for it in 0..nt {
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    let v = r.comps[c][grid.index(it, i1, i2)];
                    acc += w2[i2] * v * v;
                    linf = linf.max(v.abs());
                }
            }
        }
        l2c[c] = acc * grid.x1.step / nt as f64;
    }
    let l2 = l2c.iter().sum::<f64>().sqrt();
    Ok(SweepRow { eps, grid_id: grid_id.to_string(), l2, linf, l2_comp: l2c.map(f64::sqrt) })
}

/// Residual of u_a^eps over `eps_list`, log-log slopes, and optionally the same sweep at twice
/// the normal resolution.
pub fn residual_sweep(exp: &WkbExpansion, eps_list: &[f64], rule: &SweepGrid, refinement_check: bool) -> Result<SweepReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidInput("residual sweep needs at least 3 eps values".into()));
    }
    let x1 = exp.profiles[0].w_tilde.x1;
    let mut rows = Vec::new();
    let mut refined = Vec::new();
    let fine = SweepGrid { refine: 2.0 * rule.refine, ..*rule };
    for &eps in eps_list {
        rows.push(residual_norms(exp, eps, &rule.grid(x1, eps)?, &format!("dx2=eps/{}", rule.refine))?);
        if refinement_check {
            refined.push(residual_norms(exp, eps, &fine.grid(x1, eps)?, &format!("dx2=eps/{}", fine.refine))?);
        }
    }
    let exact = rows.iter().all(|r| r.l2 <= 1e-12);
    let fit = |f: &dyn Fn(&SweepRow) -> f64| -> Option<(f64, f64)> {
        if exact {
            return None;
        }
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, f(r))).collect();
        fit_loglog_slope(&pairs).ok()
    };
    let slope_l2 = fit(&|r| r.l2);
    let slope_linf = fit(&|r| r.linf);
    let refinement_change =
        if refinement_check { Some(rows.iter().zip(&refined).map(|(a, b)| if a.l2 > 0.0 { (a.l2 - b.l2).abs() / a.l2 } else { 0.0 }).fold(0.0, f64::max)) } else { None };
    Ok(SweepReport { n: exp.n, rows, refined, slope_l2, slope_linf, refinement_change, exact })
}

/// Least-squares line through (log eps, log value): (slope, r^2).
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!("slope fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(&(e, v)) = pairs.iter().find(|&&(e, v)| !(v > 0.0) || !(e > 0.0)) {
        return Err(Error::InvalidInput(format!("non-positive pair ({e}, {v}) in slope fit")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("slope fit needs distinct eps".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationReport {
    pub max_violation: f64,
    pub pass: bool,
}

/// max |(Id - P0) U~0|: the v_d and p layer parts of the order-0 set.
pub fn check_polarization(exp: &WkbExpansion, tol: f64) -> PolarizationReport {
    let m = exp.profiles[0].nonpolarized_mass();
    PolarizationReport { max_violation: m, pass: m <= tol }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// (eps, ||K1(u_a) - K1(u0)||_inf / eps).
    pub rows: Vec<(f64, f64)>,
    /// max / min of the ratio over the sweep.
    pub spread: f64,
    pub pass: bool,
}

/// K1(u) = S(u) X_{v} v0 + L(d_x) v0 = (rho(u) (d_t v0 + v.grad v0), div v0, 0), compared
/// with its value at u0 so that (pro)-type contributions independent of the layer cancel.
pub fn check_nonsingular_reduction(exp: &WkbExpansion, eps_list: &[f64], rule: &SweepGrid) -> Result<ReductionReport> {
    let x1 = exp.profiles[0].w_tilde.x1;
    let gs = &exp.gs;
    let mut rows = Vec::new();
    for &eps in eps_list {
        let grid = rule.grid(x1, eps)?;
        let u = assemble(exp, eps, &grid)?;
        let mut m: f64 = 0.0;
        for it in 0..grid.t.n {
            let t = grid.t.at(it);
            for i1 in 0..grid.x1.n {
                for i2 in 0..grid.x2.n {
                    let k = grid.index(it, i1, i2);
                    let x = [grid.x1.at(i1), grid.x2.at(i2)];
                    let v0 = gs.velocity(t, x)?;
                    let j = gs.jacobian(t, x)?;
                    let dtv = gs.dt_velocity(t, x)?;
                    let (p0, s0) = (gs.pressure(t, x), gs.entropy(t, x));
                    let rho0 = exp.eos.rho(p0, s0)?;
                    let rho = exp.eos.rho(u.comps[P][k], u.comps[S][k])?;
                    let v = [u.comps[V1][k], u.comps[V2][k]];
                    for c in 0..2 {
                        let xa = dtv[c] + v[0] * j[c][0] + v[1] * j[c][1];
                        let x0 = dtv[c] + v0[0] * j[c][0] + v0[1] * j[c][1];
                        m = m.max((rho * xa - rho0 * x0).abs());
                    }
                }
            }
        }
        rows.push((eps, m / eps));
    }
    let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let spread = if max == 0.0 { 1.0 } else { max / min };
    Ok(ReductionReport { rows, spread, pass: spread <= 2.0 })
}

/// Discrete H1 distance over (time window) x strip: centred differences, trapezoid quadrature.
pub fn h1_distance(a: &StateField, b: &StateField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::InvalidInput("H1 distance of fields on different grids".into()));
    }
    let g = a.grid;
    let shape = g.shape();
    let wt = if g.t.n > 1 { trapezoid_weights(&g.t) } else { vec![1.0] };
    let w2 = trapezoid_weights(&g.x2);
    let mut acc = 0.0;
    for c in 0..4 {
        let d: Vec<f64> = a.comps[c].iter().zip(&b.comps[c]).map(|(x, y)| x - y).collect();
        let mut parts = vec![d.clone()];
        if g.t.n >= 3 {
            parts.push(diff_axis(&d, &shape, 0, g.t.step, false)?);
        }
        parts.push(diff_axis(&d, &shape, 1, g.x1.step, true)?);
        parts.push(diff_axis(&d, &shape, 2, g.x2.step, false)?);
        for f in &parts {
            for it in 0..g.t.n {
                for i1 in 0..g.x1.n {
                    for i2 in 0..g.x2.n {
                        let v = f[g.index(it, i1, i2)];
                        acc += wt[it] * w2[i2] * g.x1.step * v * v;
                    }
                }
            }
        }
    }
    Ok(acc.sqrt())
}

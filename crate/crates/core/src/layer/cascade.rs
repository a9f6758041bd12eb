//! Order j = 1 of the profile cascade. The sources are not written out symbolically: the Euler
//! residual of the partial expansion is evaluated at several small eps and fitted by a polynomial
//! in eps, pointwise; the eps^j coefficient is the source.
//!
//! Inner evaluation sits at x2 = eps X on the fast nodes with
//! d_2 = d_{x2} + eps^{-1} d_X; outer evaluation drops the layer parts and sits on slow nodes.

use super::fast_grid::FastGrid;
use super::field::{LayerField, LayerPart, ProfileGrid, ProfileSet, RegularField};
use super::order0::GroundCoeffs;
use super::regular::{solve_regular_corrector, RegularForcing, RegularOptions};
use super::transport::{solve_transport, time_weights, SnapshotSource, TransportOptions};
use crate::eos::{residual_point, EosModel, P, S, V1, V2};
use crate::error::{Error, Result};
use crate::grid::{cubic_stencil, diff_periodic4, fd_weights, lagrange4_uniform, Axis};
use crate::ground_state::GroundState;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub enum TermField<'a> {
    Layer(&'a LayerPart),
    Regular(&'a RegularField),
}

/// eps^power * field, added to component `comp` (v1, v2, p, s).
#[derive(Debug, Clone, Copy)]
pub struct Term<'a> {
    pub comp: usize,
    pub power: i32,
    pub field: TermField<'a>,
}

/// Terms of the truncated expansion: at order j the velocity and pressure profiles carry
/// eps^{j+1}, the entropy layer eps^j and the regular entropy corrector eps^{j+1}.
/// Identically zero fields are skipped.
pub fn expansion_terms(sets: &[ProfileSet]) -> Vec<Term<'_>> {
    let mut out = Vec::new();
    for ps in sets {
        let j = ps.order as i32;
        for (comp, f) in [(V1, &ps.vt), (V2, &ps.vd), (P, &ps.p)] {
            if !f.regular.is_zero() {
                out.push(Term { comp, power: j + 1, field: TermField::Regular(&f.regular) });
            }
            if !f.layer.is_zero() {
                out.push(Term { comp, power: j + 1, field: TermField::Layer(&f.layer) });
            }
        }
        if !ps.w_tilde.is_zero() {
            out.push(Term { comp: S, power: j, field: TermField::Layer(&ps.w_tilde) });
        }
        if !ps.w_bar_next.is_zero() {
            out.push(Term { comp: S, power: j + 1, field: TermField::Regular(&ps.w_bar_next) });
        }
    }
    out
}

/// A truncated expansion ready for pointwise residual evaluation.
pub struct PartialExpansion<'a> {
    pub gs: &'a GroundState,
    pub eos: &'a EosModel,
    pub terms: Vec<Term<'a>>,
    pub x1: Axis,
    pub times: Vec<f64>,
    pub fast: FastGrid,
    fast_dw: Vec<(usize, Vec<f64>)>,
}

fn fast_diff_stencils(fast: &FastGrid) -> Vec<(usize, Vec<f64>)> {
    let n = fast.len();
    let q = n.min(5);
    (0..n)
        .map(|k| {
            let first = k.saturating_sub(q / 2).min(n - q);
            (first, fd_weights(&fast.nodes[first..first + q], fast.nodes[k]))
        })
        .collect()
}

impl<'a> PartialExpansion<'a> {
    pub fn new(gs: &'a GroundState, eos: &'a EosModel, terms: Vec<Term<'a>>, grid: &ProfileGrid) -> Result<Self> {
        for t in &terms {
            let (x1, times, fast) = match t.field {
                TermField::Layer(l) => (l.x1, &l.times, Some(&l.fast)),
                TermField::Regular(r) => (r.x1, &r.times, None),
            };
            if !x1.same_nodes(&grid.x1) || times.len() != grid.times.len() || times.iter().zip(&grid.times).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(Error::InvalidInput("expansion terms live on different x1 or time grids".into()));
            }
            if let Some(f) = fast {
                if f.nodes != grid.fast.nodes {
                    return Err(Error::InvalidInput("expansion terms live on different fast grids".into()));
                }
            }
        }
        Ok(PartialExpansion { gs, eos, terms, x1: grid.x1, times: grid.times.clone(), fast: grid.fast.clone(), fast_dw: fast_diff_stencils(&grid.fast) })
    }
}

/// Values and first derivatives of (v1, v2, p, s) along x1 at one (t, x2, X).
pub struct LineState {
    pub val: [Vec<f64>; 4],
    pub dt: [Vec<f64>; 4],
    pub d1: [Vec<f64>; 4],
    pub d2: [Vec<f64>; 4],
}

fn x2_weights(axis: &Axis, x2: f64) -> Result<(usize, [f64; 4], [f64; 4], usize)> {
    if axis.n == 1 {
        return Ok((0, [1.0, 0.0, 0.0, 0.0], [0.0; 4], 1));
    }
    let (j, s) = cubic_stencil(axis, x2).ok_or_else(|| Error::InvalidInput(format!("x2 = {x2} outside the slow grid")))?;
    let (w, d) = lagrange4_uniform(s);
    let inv = 1.0 / axis.step;
    Ok((j, w, [d[0] * inv, d[1] * inv, d[2] * inv, d[3] * inv], 4))
}

impl PartialExpansion<'_> {
    /// Evaluates the expansion along x1 at snapshot `it`, height `x2` and fast node `k`
    /// (`None`: layer parts dropped). `d2` uses d_{x2} + eps^{-1} d_X.
    pub fn eval_line(&self, it: usize, x2: f64, k: Option<usize>, eps: f64) -> Result<LineState> {
        let n1 = self.x1.n;
        let z = || [vec![0.0; n1], vec![0.0; n1], vec![0.0; n1], vec![0.0; n1]];
        let mut st = LineState { val: z(), dt: z(), d1: z(), d2: z() };
        let t = self.times[it];
        let (tfirst, tw, tdw) = time_weights(&self.times, t)?;
        let mut line = vec![0.0; n1];
        let mut dline = vec![0.0; n1];
        for term in &self.terms {
            let coef = eps.powi(term.power);
            let c = term.comp;
            match term.field {
                TermField::Regular(f) => {
                    let (j, w, dw, q) = x2_weights(&f.x2, x2)?;
                    for i1 in 0..n1 {
                        let mut v = 0.0;
                        let mut dx2 = 0.0;
                        let mut dtv = 0.0;
                        for a in 0..q {
                            v += w[a] * f.at(it, i1, j + a);
                            dx2 += dw[a] * f.at(it, i1, j + a);
                            for (b, &wt) in tdw.iter().enumerate() {
                                dtv += wt * w[a] * f.at(tfirst + b, i1, j + a);
                            }
                        }
                        line[i1] = v;
                        st.val[c][i1] += coef * v;
                        st.dt[c][i1] += coef * dtv;
                        st.d2[c][i1] += coef * dx2;
                    }
                }
                TermField::Layer(f) => {
                    let k = match k {
                        Some(k) => k,
                        None => continue,
                    };
                    let (j, w, dw, q) = x2_weights(&f.x2, x2)?;
                    let (xf, xw) = &self.fast_dw[k];
                    for i1 in 0..n1 {
                        let mut v = 0.0;
                        let mut dx2 = 0.0;
                        let mut dxf = 0.0;
                        let mut dtv = 0.0;
                        for a in 0..q {
                            let off = f.offset(it, i1, j + a);
                            let fv = f.data[off + k];
                            v += w[a] * fv;
                            dx2 += dw[a] * fv;
                            let mut dd = 0.0;
                            for (m, &wm) in xw.iter().enumerate() {
                                dd += wm * f.data[off + xf + m];
                            }
                            dxf += w[a] * dd;
                            for (b, &wt) in tdw.iter().enumerate() {
                                dtv += wt * w[a] * f.data[f.offset(tfirst + b, i1, j + a) + k];
                            }
                        }
                        line[i1] = v;
                        st.val[c][i1] += coef * v;
                        st.dt[c][i1] += coef * dtv;
                        st.d2[c][i1] += coef * (dx2 + dxf / eps);
                    }
                }
            }
            if n1 >= 5 {
                diff_periodic4(&line, 0, 1, n1, self.x1.step, &mut dline);
                for i1 in 0..n1 {
                    st.d1[c][i1] += coef * dline[i1];
                }
            }
        }
        let _ = tw;
        for i1 in 0..n1 {
            let x = [self.x1.at(i1), x2];
            let v = self.gs.velocity(t, x)?;
            let jac = self.gs.jacobian(t, x)?;
            let dtv = self.gs.dt_velocity(t, x)?;
            for c in 0..2 {
                st.val[c][i1] += v[c];
                st.dt[c][i1] += dtv[c];
                st.d1[c][i1] += jac[c][0];
                st.d2[c][i1] += jac[c][1];
            }
            let gp = self.gs.p0.grad();
            st.val[P][i1] += self.gs.pressure(t, x);
            st.dt[P][i1] += gp[0];
            st.d1[P][i1] += gp[1];
            st.d2[P][i1] += gp[2];
            let gw = self.gs.s0.grad();
            st.val[S][i1] += self.gs.entropy(t, x);
            st.dt[S][i1] += gw[0];
            st.d1[S][i1] += gw[1];
            st.d2[S][i1] += gw[2];
        }
        Ok(st)
    }

    /// Euler residual along x1 from `eval_line`.
    pub fn residual_line(&self, it: usize, x2: f64, k: Option<usize>, eps: f64) -> Result<[Vec<f64>; 4]> {
        let st = self.eval_line(it, x2, k, eps)?;
        let n1 = self.x1.n;
        let mut out = [vec![0.0; n1], vec![0.0; n1], vec![0.0; n1], vec![0.0; n1]];
        for i1 in 0..n1 {
            let g = |a: &[Vec<f64>; 4]| [a[0][i1], a[1][i1], a[2][i1], a[3][i1]];
            let r = residual_point(self.eos, &g(&st.val), &g(&st.dt), &g(&st.d1), &g(&st.d2))?;
            for c in 0..4 {
                out[c][i1] = r[c];
            }
        }
        Ok(out)
    }
}

/// eps samples and fit degree for the polynomial extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionOptions {
    pub eps: Vec<f64>,
    pub degree: usize,
    /// Maximum relative fit residual accepted.
    pub fit_tol: f64,
}

impl ExtractionOptions {
    /// Eight geometric samples on [eps_max / 4, eps_max] with eps_max X_max inside the first
    /// slow cell, so every sample sees the same cubic piece in x2. Degree 5.
    pub fn for_grid(grid: &ProfileGrid) -> ExtractionOptions {
        let cell = if grid.is_collapsed() { 1.0 } else { grid.x2.step };
        let eps_max = 0.9 * cell / grid.fast.x_max;
        let m = 8;
        let eps = (0..m).map(|i| eps_max * 0.25f64.powf(i as f64 / (m - 1) as f64)).collect();
        ExtractionOptions { eps, degree: 5, fit_tol: 1e-6 }
    }
}

/// Least-squares projector for the scaled Vandermonde system.
struct Fit {
    proj: DMatrix<f64>,
    vand: DMatrix<f64>,
    scale: f64,
}

impl Fit {
    fn new(opts: &ExtractionOptions, min_order: usize) -> Result<Fit> {
        let m = opts.eps.len();
        let d = opts.degree;
        if m < d + 1 || m < min_order + 2 {
            return Err(Error::Fit(format!("{m} eps samples cannot determine degree {d} / order {min_order}")));
        }
        if opts.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Fit("eps samples must lie in (0, 1]".into()));
        }
        let mut sorted = opts.eps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        if sorted.windows(2).any(|w| w[1] - w[0] <= 1e-12 * w[1]) {
            return Err(Error::Fit("eps samples must be distinct".into()));
        }
        let scale = sorted[m - 1];
        let vand = DMatrix::from_fn(m, d + 1, |i, j| (opts.eps[i] / scale).powi(j as i32));
        let svd = vand.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 0.0) || smax / smin > 1e10 {
            return Err(Error::Fit(format!("ill-conditioned eps Vandermonde, condition number {:.3e}", smax / smin)));
        }
        let proj = svd.pseudo_inverse(1e-14).map_err(|e| Error::Fit(e.to_string()))?;
        Ok(Fit { proj, vand, scale })
    }

    /// Coefficients of eps^j (unscaled), the largest absolute fit residual and max |y|.
    fn coefficients(&self, y: &[f64]) -> (Vec<f64>, f64, f64) {
        let m = y.len();
        let d = self.proj.nrows();
        let mut c = vec![0.0; d];
        for j in 0..d {
            let mut s = 0.0;
            for i in 0..m {
                s += self.proj[(j, i)] * y[i];
            }
            c[j] = s;
        }
        let mut res: f64 = 0.0;
        let mut ymax: f64 = 0.0;
        for i in 0..m {
            let mut f = 0.0;
            for j in 0..d {
                f += self.vand[(i, j)] * c[j];
            }
            res = res.max((f - y[i]).abs());
            ymax = ymax.max(y[i].abs());
        }
        for (j, cj) in c.iter_mut().enumerate() {
            *cj /= self.scale.powi(j as i32);
        }
        (c, res, ymax)
    }
}

/// Extracted eps^j coefficient fields of the residual, for each requested order.
#[derive(Debug, Clone)]
pub struct InnerCoefficients {
    pub orders: Vec<usize>,
    /// `fields[o][c]`: component c of the coefficient of eps^{orders[o]}, on the wall-collapsed grid.
    pub fields: Vec<[LayerPart; 4]>,
    /// Largest fit residual relative to the largest sample.
    pub fit_residual: f64,
}

#[derive(Debug, Clone)]
pub struct OuterCoefficients {
    pub orders: Vec<usize>,
    pub fields: Vec<[RegularField; 4]>,
    pub fit_residual: f64,
}

/// Inner extraction on (t, x1, X) with x2 = eps X.
pub fn extract_inner(exp: &PartialExpansion, orders: &[usize], opts: &ExtractionOptions) -> Result<InnerCoefficients> {
    let fit = Fit::new(opts, orders.iter().copied().max().unwrap_or(0))?;
    if orders.iter().any(|&o| o > opts.degree) {
        return Err(Error::Fit("requested order exceeds the fit degree".into()));
    }
    let collapsed = ProfileGrid { x1: exp.x1, x2: Axis { start: 0.0, step: 1.0, n: 1, periodic: false }, fast: exp.fast.clone(), times: exp.times.clone() };
    let mut fields: Vec<[LayerPart; 4]> = orders.iter().map(|_| std::array::from_fn(|_| LayerPart::zeros(&collapsed))).collect();
    let n1 = exp.x1.n;
    let nx = exp.fast.len();
    let m = opts.eps.len();
    let mut fit_res: f64 = 0.0;
    let mut y_scale: f64 = 0.0;
    let mut samples = vec![[vec![0.0; n1], vec![0.0; n1], vec![0.0; n1], vec![0.0; n1]]; m];
    let mut y = vec![0.0; m];
    for it in 0..exp.times.len() {
        for k in 0..nx {
            for (s, &eps) in opts.eps.iter().enumerate() {
                samples[s] = exp.residual_line(it, eps * exp.fast.nodes[k], Some(k), eps)?;
            }
            for c in 0..4 {
                for i1 in 0..n1 {
                    for s in 0..m {
                        y[s] = samples[s][c][i1];
                    }
                    let (coef, r, ym) = fit.coefficients(&y);
                    fit_res = fit_res.max(r);
                    y_scale = y_scale.max(ym);
                    for (o, &ord) in orders.iter().enumerate() {
                        let off = fields[o][c].offset(it, i1, 0);
                        fields[o][c].data[off + k] = coef[ord];
                    }
                }
            }
        }
    }
    let fit_residual = if y_scale > 0.0 { fit_res / y_scale } else { 0.0 };
    Ok(InnerCoefficients { orders: orders.to_vec(), fields, fit_residual })
}

/// Outer extraction on the slow nodes, layer parts dropped.
pub fn extract_outer(exp: &PartialExpansion, x2: Axis, orders: &[usize], opts: &ExtractionOptions) -> Result<OuterCoefficients> {
    let fit = Fit::new(opts, orders.iter().copied().max().unwrap_or(0))?;
    let grid = ProfileGrid { x1: exp.x1, x2, fast: exp.fast.clone(), times: exp.times.clone() };
    let mut fields: Vec<[RegularField; 4]> = orders.iter().map(|_| std::array::from_fn(|_| RegularField::zeros(&grid))).collect();
    let n1 = exp.x1.n;
    let m = opts.eps.len();
    let mut fit_res: f64 = 0.0;
    let mut y_scale: f64 = 0.0;
    let mut samples = vec![[vec![0.0; n1], vec![0.0; n1], vec![0.0; n1], vec![0.0; n1]]; m];
    let mut y = vec![0.0; m];
    for it in 0..exp.times.len() {
        for i2 in 0..x2.n {
            for (s, &eps) in opts.eps.iter().enumerate() {
                samples[s] = exp.residual_line(it, x2.at(i2), None, eps)?;
            }
            for c in 0..4 {
                for i1 in 0..n1 {
                    for s in 0..m {
                        y[s] = samples[s][c][i1];
                    }
                    let (coef, r, ym) = fit.coefficients(&y);
                    fit_res = fit_res.max(r);
                    y_scale = y_scale.max(ym);
                    for (o, &ord) in orders.iter().enumerate() {
                        let n2 = x2.n;
                        fields[o][c].data[(it * n1 + i1) * n2 + i2] = coef[ord];
                    }
                }
            }
        }
    }
    let fit_residual = if y_scale > 0.0 { fit_res / y_scale } else { 0.0 };
    Ok(OuterCoefficients { orders: orders.to_vec(), fields, fit_residual })
}

/// Source fields of S^j: the eps^j coefficient in the layer (inner) and away from it (outer).
#[derive(Debug, Clone)]
pub struct CascadeSource {
    pub order: usize,
    pub inner: [LayerPart; 4],
    pub outer: [RegularField; 4],
    pub fit_residual: f64,
}

pub fn extract_cascade_source(j: usize, exp: &PartialExpansion, slow_x2: Axis, opts: &ExtractionOptions) -> Result<CascadeSource> {
    let inner = extract_inner(exp, &[j], opts)?;
    let outer = extract_outer(exp, slow_x2, &[j], opts)?;
    let fit_residual = inner.fit_residual.max(outer.fit_residual);
    if fit_residual > opts.fit_tol {
        return Err(Error::Fit(format!("relative fit residual {fit_residual:.3e} exceeds {:.1e}", opts.fit_tol)));
    }
    let [inner] = <[[LayerPart; 4]; 1]>::try_from(inner.fields).map_err(|_| Error::Fit("missing inner order".into()))?;
    let [outer] = <[[RegularField; 4]; 1]>::try_from(outer.fields).map_err(|_| Error::Fit("missing outer order".into()))?;
    Ok(CascadeSource { order: j, inner, outer, fit_residual })
}

/// Layer part of a coefficient field: value minus its value at X_max.
pub fn layer_part(f: &LayerPart) -> LayerPart {
    LayerField::split(f).layer
}

/// (Id - P0) U~^j from L_d d_X (Id - P0) U~^j = -source:
/// V~_d(X) = integral_X^inf source_p, P~(X) = integral_X^inf source_{v_d} (L_d^{-1} swaps the two slots).
/// The source is given as (v1, v2, p, s); its P0 slots (v1, s) must vanish to `tol`.
pub fn integrate_nonpolarized(j: usize, source: &[LayerPart; 4], tol: f64) -> Result<(LayerPart, LayerPart)> {
    if j == 0 {
        return Err(Error::InvalidInput("the nonpolarized step starts at order 1".into()));
    }
    let p0_mass = source[V1].max_abs().max(source[S].max_abs());
    if p0_mass > tol {
        return Err(Error::SourceNotNonpolarized { max: p0_mass });
    }
    let nx = source[V2].nx();
    let mut vd = source[P].clone();
    let mut p = source[V2].clone();
    let fast = source[V2].fast.clone();
    for (out, src) in [(&mut vd, &source[P]), (&mut p, &source[V2])] {
        for (o, s) in out.data.chunks_mut(nx).zip(src.data.chunks(nx)) {
            fast.integrate_from(s, o);
        }
    }
    vd.check_decay().map_err(|e| e.at_stage("integrate_nonpolarized v_d"))?;
    p.check_decay().map_err(|e| e.at_stage("integrate_nonpolarized p"))?;
    Ok((vd, p))
}

/// Prescribed initial data of the polarized order-1 components, on the wall-collapsed grid,
/// and optionally a (v_d, p) pair that cannot be prescribed and is only compared.
#[derive(Debug, Clone, Default)]
pub struct OrderOneInit {
    pub w_tilde: Option<Vec<f64>>,
    pub vt_tilde: Option<Vec<f64>>,
    pub nonpolarized: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct OrderOneReport {
    pub profiles: ProfileSet,
    pub fit_residual: f64,
    /// max |E1| of the tangential row layer part: how well order 0 solves its own equation.
    pub order0_consistency: f64,
    /// Mismatch between a supplied nonpolarized initial value and the computed one.
    pub ignored_init_conflict: Option<f64>,
}

/// Lift of wall data into the interior for the initial regular normal velocity.
const LIFT_SCALE: f64 = 0.25;

/// Solves S^1: (Id - P0) U~1 by integration, (V-bar^1, P-bar^1, W-bar^2) by the linearized
/// Euler solve, W~1 and V~1_t by wall transport with extracted sources.
#[allow(clippy::too_many_arguments)]
pub fn solve_order_one(
    gs: &GroundState,
    eos: &EosModel,
    ps0: &ProfileSet,
    grid: &ProfileGrid,
    init: &OrderOneInit,
    topts: TransportOptions,
    ropts: RegularOptions,
    xopts: &ExtractionOptions,
) -> Result<OrderOneReport> {
    if ps0.order != 0 {
        return Err(Error::InvalidInput("solve_order_one needs the order-0 set".into()));
    }
    let wall = grid.collapsed();
    let (n1, nx, nt) = (grid.x1.n, grid.fast.len(), grid.times.len());
    let zero_regular = RegularField::zeros(grid);
    let mut ps1 = ProfileSet {
        order: 1,
        vt: LayerField { regular: zero_regular.clone(), layer: LayerPart::zeros(&wall) },
        vd: LayerField { regular: zero_regular.clone(), layer: LayerPart::zeros(&wall) },
        p: LayerField { regular: zero_regular.clone(), layer: LayerPart::zeros(&wall) },
        w_tilde: LayerPart::zeros(&wall),
        w_bar_next: zero_regular,
    };
    let mut fit_residual: f64 = 0.0;

    // stage 1: nonpolarized layer from the eps^1 coefficient of the order-0 residual
    let src1 = {
        let exp = PartialExpansion::new(gs, eos, expansion_terms(std::slice::from_ref(ps0)), grid)?;
        extract_inner(&exp, &[1], xopts).map_err(|e| e.at_stage("order 1, stage 1 extraction"))?
    };
    fit_residual = fit_residual.max(src1.fit_residual);
    let e1 = &src1.fields[0];
    let order0_consistency = layer_part(&e1[V1]).max_abs();
    let mut sym = [LayerPart::zeros(&wall), layer_part(&e1[V2]), layer_part(&e1[P]), LayerPart::zeros(&wall)];
    for it in 0..nt {
        let t = grid.times[it];
        for i1 in 0..n1 {
            let x = [grid.x1.at(i1), 0.0];
            let p0 = gs.pressure(t, x);
            let w0 = gs.entropy(t, x);
            let alpha = eos.alpha(p0, w0)?;
            let off = sym[V2].offset(it, i1, 0);
            for k in 0..nx {
                let w = ps0.w_tilde.eval(it, i1, 0.0, grid.fast.nodes[k])?;
                sym[V2].data[off + k] *= eos.rho(p0, w0 + w)?;
                sym[P].data[off + k] *= alpha;
            }
        }
    }
    let (vd1, p1) = integrate_nonpolarized(1, &sym, 0.0).map_err(|e| e.at_stage("order 1, stage 1"))?;
    let ignored_init_conflict = init.nonpolarized.as_ref().map(|(a, b)| {
        let da = a.iter().zip(vd1.slice(0)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let db = b.iter().zip(p1.slice(0)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        da.max(db)
    });
    ps1.vd.layer = vd1;
    ps1.p.layer = p1;

    // stage 2: regular order-1 corrector with wall data -V~1_d(X = 0)
    {
        let mut wall_data = RegularField { times: grid.times.clone(), x1: grid.x1, x2: wall.x2, data: vec![0.0; nt * n1] };
        for it in 0..nt {
            for i1 in 0..n1 {
                wall_data.data[it * n1 + i1] = -ps1.vd.layer.at(it, i1, 0, 0);
            }
        }
        let outer = {
            let mut terms = expansion_terms(std::slice::from_ref(ps0));
            terms.extend(expansion_terms(std::slice::from_ref(&ps1)));
            let exp = PartialExpansion::new(gs, eos, terms, grid)?;
            extract_outer(&exp, grid.x2, &[2], xopts).map_err(|e| e.at_stage("order 1, stage 2 extraction"))?
        };
        fit_residual = fit_residual.max(outer.fit_residual);
        let mut g = outer.fields.into_iter().next().ok_or_else(|| Error::Fit("missing outer order".into()))?;
        for f in g.iter_mut() {
            f.data.iter_mut().for_each(|x| *x = -*x);
        }
        let forcing = RegularForcing { source: Some([&g[0], &g[1], &g[2], &g[3]]), wall: Some(&wall_data) };
        let b0: Vec<f64> = (0..n1).map(|i1| wall_data.data[i1]).collect();
        let x1 = grid.x1;
        let sol = solve_regular_corrector(
            gs,
            eos,
            |xa, xb| {
                let i1 = ((xa - x1.start) / x1.step).round() as usize % x1.n;
                [0.0, b0[i1] * (-xb / LIFT_SCALE).exp(), 0.0, 0.0]
            },
            grid,
            forcing,
            ropts,
        )
        .map_err(|e| e.at_stage("order 1, stage 2"))?;
        ps1.vt.regular = sol.v1;
        ps1.vd.regular = sol.v2;
        ps1.p.regular = sol.p;
        ps1.w_bar_next = sol.w;
    }

    // stage 3: entropy layer W~1 from the eps^1 coefficient of the s row
    {
        let src = {
            let mut terms = expansion_terms(std::slice::from_ref(ps0));
            terms.extend(expansion_terms(std::slice::from_ref(&ps1)));
            let exp = PartialExpansion::new(gs, eos, terms, grid)?;
            extract_inner(&exp, &[1], xopts).map_err(|e| e.at_stage("order 1, stage 3 extraction"))?
        };
        fit_residual = fit_residual.max(src.fit_residual);
        let mut f = layer_part(&src.fields[0][S]);
        f.data.iter_mut().for_each(|x| *x = -*x);
        let coeffs = GroundCoeffs::new(gs, false)?;
        let w0 = init.w_tilde.clone().unwrap_or_else(|| vec![0.0; wall.slice_len()]);
        let w = solve_transport(&wall, &coeffs, &w0, Some(&SnapshotSource { part: &f }), 0.0, topts).map_err(|e| e.at_stage("order 1, stage 3"))?;
        w.check_decay().map_err(|e| e.at_stage("order 1, stage 3"))?;
        ps1.w_tilde = w;
    }

    // stage 4: tangential layer V~1_t from the eps^2 coefficient of the v1 row
    {
        let src = {
            let mut terms = expansion_terms(std::slice::from_ref(ps0));
            terms.extend(expansion_terms(std::slice::from_ref(&ps1)));
            let exp = PartialExpansion::new(gs, eos, terms, grid)?;
            extract_inner(&exp, &[2], xopts).map_err(|e| e.at_stage("order 1, stage 4 extraction"))?
        };
        fit_residual = fit_residual.max(src.fit_residual);
        let mut f = layer_part(&src.fields[0][V1]);
        f.data.iter_mut().for_each(|x| *x = -*x);
        let coeffs = GroundCoeffs::new(gs, true)?;
        let v0 = init.vt_tilde.clone().unwrap_or_else(|| vec![0.0; wall.slice_len()]);
        let v = solve_transport(&wall, &coeffs, &v0, Some(&SnapshotSource { part: &f }), 0.0, topts).map_err(|e| e.at_stage("order 1, stage 4"))?;
        v.check_decay().map_err(|e| e.at_stage("order 1, stage 4"))?;
        ps1.vt.layer = v;
    }

    Ok(OrderOneReport { profiles: ps1, fit_residual, order0_consistency, ignored_init_conflict })
}

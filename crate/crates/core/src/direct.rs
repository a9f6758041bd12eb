//! Direct finite-volume solve of the 2-D Euler equations on the periodic strip with a reflecting
//! wall at x2 = 0 and zero-gradient outflow at x2 = H. MUSCL-Hancock, minmod slopes on primitive
//! variables, HLLC fluxes.

use crate::eos::{EosModel, SpaceTimeGrid, StateField, P, S, V1, V2};
use crate::error::{Error, Result};
use crate::grid::{lagrange_weights, trapezoid_weights, Axis};
use crate::wkb::{assemble, fit_loglog_slope, h1_distance, WkbExpansion};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimGrid {
    pub n1: usize,
    pub length: f64,
    pub n2: usize,
    pub height: f64,
    pub cfl: f64,
    pub t_final: f64,
}

pub const CFL_MAX: f64 = 0.45;

impl SimGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 4 || self.n2 < 2 || !(self.length > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidInput(format!("simulation grid {} x {} on {} x {}", self.n1, self.n2, self.length, self.height)));
        }
        if !(self.cfl > 0.0 && self.cfl <= CFL_MAX) {
            return Err(Error::Cfl(format!("CFL number {} outside (0, {CFL_MAX}]", self.cfl)));
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidInput("final time must be non-negative".into()));
        }
        Ok(())
    }

    pub fn dx1(&self) -> f64 {
        self.length / self.n1 as f64
    }

    pub fn dx2(&self) -> f64 {
        self.height / self.n2 as f64
    }

    /// Cell centres along x1: i dx1 (cells straddle the profile nodes).
    pub fn x1_axis(&self) -> Axis {
        Axis::periodic(0.0, self.length, self.n1)
    }

    /// Cell centres along x2: (j + 1/2) dx2.
    pub fn x2_axis(&self) -> Axis {
        Axis { start: 0.5 * self.dx2(), step: self.dx2(), n: self.n2, periodic: false }
    }

    /// Rejects grids that do not resolve a layer of width eps.
    pub fn check_resolves(&self, eps: f64) -> Result<()> {
        if self.dx2() > eps / 8.0 * (1.0 + 1e-12) {
            return Err(Error::GridTooCoarse(format!("dx2 = {} > eps/8 for eps = {eps}", self.dx2())));
        }
        Ok(())
    }
}

/// Cell averages of (rho, rho v1, rho v2, rho E), layout `[x1][x2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservativeState {
    pub n1: usize,
    pub n2: usize,
    pub u: Vec<[f64; 4]>,
}

/// Primitive (rho, v1, v2, p).
pub type Primitive = [f64; 4];

fn total_energy(gamma: f64, w: &Primitive) -> f64 {
    w[3] / (gamma - 1.0) + 0.5 * w[0] * (w[1] * w[1] + w[2] * w[2])
}

pub fn to_conservative(gamma: f64, w: &Primitive) -> [f64; 4] {
    [w[0], w[0] * w[1], w[0] * w[2], total_energy(gamma, w)]
}

pub fn to_primitive(gamma: f64, u: &[f64; 4]) -> Primitive {
    let rho = u[0];
    let v1 = u[1] / rho;
    let v2 = u[2] / rho;
    [rho, v1, v2, (gamma - 1.0) * (u[3] - 0.5 * rho * (v1 * v1 + v2 * v2))]
}

impl ConservativeState {
    pub fn from_primitive(sim: &SimGrid, eos: &EosModel, f: impl Fn(f64, f64) -> Primitive) -> Result<ConservativeState> {
        sim.validate()?;
        let (x1, x2) = (sim.x1_axis(), sim.x2_axis());
        let mut u = Vec::with_capacity(sim.n1 * sim.n2);
        for i in 0..sim.n1 {
            for j in 0..sim.n2 {
                let w = f(x1.at(i), x2.at(j));
                if !(w[0] > 0.0 && w[0].is_finite()) {
                    return Err(Error::Positivity { i, j, rho: w[0], p: w[3] });
                }
                eos.check(w[3])?;
                u.push(to_conservative(eos.gamma, &w));
            }
        }
        Ok(ConservativeState { n1: sim.n1, n2: sim.n2, u })
    }

    pub fn primitive(&self, eos: &EosModel, i: usize, j: usize) -> Primitive {
        to_primitive(eos.gamma, &self.u[i * self.n2 + j])
    }

    pub fn mass(&self, sim: &SimGrid) -> f64 {
        self.u.iter().map(|c| c[0]).sum::<f64>() * sim.dx1() * sim.dx2()
    }

    /// (v1, v2, p, s) with s = ln(p / rho^gamma).
    pub fn to_pvs(&self, eos: &EosModel, i: usize, j: usize) -> [f64; 4] {
        let w = self.primitive(eos, i, j);
        [w[1], w[2], w[3], eos.entropy(w[3], w[0])]
    }
}

/// Cell-centre values of u_a^eps(0, .) converted to conservative variables.
pub fn init_from_wkb(exp: &WkbExpansion, eps: f64, sim: &SimGrid) -> Result<ConservativeState> {
    sim.validate()?;
    sim.check_resolves(eps)?;
    let t0 = Axis { start: 0.0, step: 1.0, n: 1, periodic: false };
    let wall = assemble(exp, eps, &SpaceTimeGrid { t: t0, x1: sim.x1_axis(), x2: Axis { start: 0.0, step: sim.dx2(), n: 1, periodic: false } })?;
    let vmax = wall.comps[V1].iter().fold(1.0f64, |m, &x| m.max(x.abs()));
    let wall_v2 = wall.comps[V2].iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if wall_v2 > 1e-12 * vmax {
        return Err(Error::WallCondition { defect: wall_v2 });
    }
    let grid = SpaceTimeGrid { t: t0, x1: sim.x1_axis(), x2: sim.x2_axis() };
    let ua = assemble(exp, eps, &grid)?;
    let eos = exp.eos;
    ConservativeState::from_primitive(sim, &eos, |x1, x2| {
        let i = ((x1 / sim.dx1()).round() as usize) % sim.n1;
        let j = ((x2 / sim.dx2() - 0.5).round() as usize).min(sim.n2 - 1);
        let k = grid.index(0, i, j);
        let (p, s) = (ua.comps[P][k], ua.comps[S][k]);
        [eos.rho_unchecked(p, s), ua.comps[V1][k], ua.comps[V2][k], p]
    })
    .map_err(|e| e.at_stage("init_from_wkb"))
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Physical flux along the normal slot `n` (1 for x1, 2 for x2).
fn phys_flux(gamma: f64, w: &Primitive, n: usize) -> [f64; 4] {
    let vn = w[n];
    let e = total_energy(gamma, w);
    let mut f = [w[0] * vn, w[0] * w[1] * vn, w[0] * w[2] * vn, (e + w[3]) * vn];
    f[n] += w[3];
    f
}

/// HLLC flux between primitive states along normal slot `n`.
pub fn hllc(gamma: f64, l: &Primitive, r: &Primitive, n: usize) -> [f64; 4] {
    let cl = (gamma * l[3] / l[0]).sqrt();
    let cr = (gamma * r[3] / r[0]).sqrt();
    let (ul, ur) = (l[n], r[n]);
    let sl = (ul - cl).min(ur - cr);
    let sr = (ul + cl).max(ur + cr);
    if sl >= 0.0 {
        return phys_flux(gamma, l, n);
    }
    if sr <= 0.0 {
        return phys_flux(gamma, r, n);
    }
    let den = l[0] * (sl - ul) - r[0] * (sr - ur);
    let ss = (r[3] - l[3] + l[0] * ul * (sl - ul) - r[0] * ur * (sr - ur)) / den;
    let star = |w: &Primitive, s: f64| -> [f64; 4] {
        let un = w[n];
        let fac = w[0] * (s - un) / (s - ss);
        let e = total_energy(gamma, w);
        let mut us = [fac, fac * w[1], fac * w[2], fac * (e / w[0] + (ss - un) * (ss + w[3] / (w[0] * (s - un))))];
        us[n] = fac * ss;
        us
    };
    if ss >= 0.0 {
        let f = phys_flux(gamma, l, n);
        let u = to_conservative(gamma, l);
        let us = star(l, sl);
        std::array::from_fn(|k| f[k] + sl * (us[k] - u[k]))
    } else {
        let f = phys_flux(gamma, r, n);
        let u = to_conservative(gamma, r);
        let us = star(r, sr);
        std::array::from_fn(|k| f[k] + sr * (us[k] - u[k]))
    }
}

fn admissible(w: &Primitive, p_min: f64) -> bool {
    w[0] > 0.0 && w[3] > p_min && w.iter().all(|x| x.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// t axis = output times, x1 / x2 = cell centres.
    pub grid: SpaceTimeGrid,
    pub states: Vec<ConservativeState>,
    pub steps: usize,
    /// |M(t) - M(0) + outflow| / M(0), maximum over the run.
    pub mass_defect: f64,
    /// max |v2| in the wall-adjacent cells / max |v|.
    pub wall_ratio: f64,
    /// Largest per-step max |U^{n+1} - U^n| / max |U^n|.
    pub max_step_change: f64,
}

impl Trajectory {
    /// (v1, v2, p, s) at the stored times.
    pub fn to_state_field(&self, eos: &EosModel) -> StateField {
        let g = self.grid;
        let mut out = StateField::zeros(g);
        for (it, st) in self.states.iter().enumerate() {
            for i in 0..g.x1.n {
                for j in 0..g.x2.n {
                    let q = st.to_pvs(eos, i, j);
                    let k = g.index(it, i, j);
                    for c in 0..4 {
                        out.comps[c][k] = q[c];
                    }
                }
            }
        }
        out
    }
}

struct Stepper<'a> {
    sim: &'a SimGrid,
    eos: &'a EosModel,
}

impl Stepper<'_> {
    fn dt(&self, w: &[Primitive]) -> Result<f64> {
        let g = self.eos.gamma;
        let mut s: f64 = 0.0;
        for q in w {
            let c = (g * q[3] / q[0]).sqrt();
            s = s.max((q[1].abs() + c) / self.sim.dx1() + (q[2].abs() + c) / self.sim.dx2());
        }
        let dt = self.sim.cfl / s;
        if !(dt.is_finite() && dt > 1e-14) {
            return Err(Error::Cfl(format!("time step {dt} from max wave speed sum {s}")));
        }
        Ok(dt)
    }

    /// One MUSCL-Hancock step; returns the mass leaving through the top.
    fn step(&self, st: &mut ConservativeState, dt: f64) -> Result<f64> {
        let (n1, n2) = (st.n1, st.n2);
        let g = self.eos.gamma;
        let p_min = self.eos.p_min;
        let (h1, h2) = (self.sim.dx1(), self.sim.dx2());
        let idx = |i: usize, j: usize| i * n2 + j;
        let w: Vec<Primitive> = st.u.iter().map(|u| to_primitive(g, u)).collect();
        let mirror = |q: &Primitive| [q[0], q[1], -q[2], q[3]];
        let mut s1 = vec![[0.0; 4]; n1 * n2];
        let mut s2 = vec![[0.0; 4]; n1 * n2];
        for i in 0..n1 {
            let ip = (i + 1) % n1;
            let im = (i + n1 - 1) % n1;
            for j in 0..n2 {
                let q = &w[idx(i, j)];
                let below = if j == 0 { mirror(q) } else { w[idx(i, j - 1)] };
                let above = if j + 1 == n2 { *q } else { w[idx(i, j + 1)] };
                for k in 0..4 {
                    s1[idx(i, j)][k] = minmod(q[k] - w[idx(im, j)][k], w[idx(ip, j)][k] - q[k]);
                    s2[idx(i, j)][k] = minmod(q[k] - below[k], above[k] - q[k]);
                }
            }
        }
        // half-step predictor in primitive form
        let mut wh = w.clone();
        for c in 0..n1 * n2 {
            let q = &w[c];
            let (a, b) = (&s1[c], &s2[c]);
            let (r1, r2) = (0.5 * dt / h1, 0.5 * dt / h2);
            wh[c][0] -= r1 * (q[1] * a[0] + q[0] * a[1]) + r2 * (q[2] * b[0] + q[0] * b[2]);
            wh[c][1] -= r1 * (q[1] * a[1] + a[3] / q[0]) + r2 * (q[2] * b[1]);
            wh[c][2] -= r1 * (q[1] * a[2]) + r2 * (q[2] * b[2] + b[3] / q[0]);
            wh[c][3] -= r1 * (q[1] * a[3] + g * q[3] * a[1]) + r2 * (q[2] * b[3] + g * q[3] * b[2]);
        }
        let face = |c: usize, slope: &[[f64; 4]], sign: f64| -> Primitive {
            let f: Primitive = std::array::from_fn(|k| wh[c][k] + sign * 0.5 * slope[c][k]);
            if admissible(&f, p_min) {
                f
            } else if admissible(&wh[c], p_min) {
                wh[c]
            } else {
                w[c]
            }
        };
        let mut du = vec![[0.0; 4]; n1 * n2];
        // x1 faces i + 1/2
        for i in 0..n1 {
            let ip = (i + 1) % n1;
            for j in 0..n2 {
                let l = face(idx(i, j), &s1, 1.0);
                let r = face(idx(ip, j), &s1, -1.0);
                let f = hllc(g, &l, &r, 1);
                for k in 0..4 {
                    du[idx(i, j)][k] -= dt / h1 * f[k];
                    du[idx(ip, j)][k] += dt / h1 * f[k];
                }
            }
        }
        // x2 faces: wall, interior, top
        let mut outflow = 0.0;
        for i in 0..n1 {
            let inner = face(idx(i, 0), &s2, -1.0);
            let fw = hllc(g, &mirror(&inner), &inner, 2);
            du[idx(i, 0)][2] += dt / h2 * fw[2];
            for j in 0..n2 - 1 {
                let l = face(idx(i, j), &s2, 1.0);
                let r = face(idx(i, j + 1), &s2, -1.0);
                let f = hllc(g, &l, &r, 2);
                for k in 0..4 {
                    du[idx(i, j)][k] -= dt / h2 * f[k];
                    du[idx(i, j + 1)][k] += dt / h2 * f[k];
                }
            }
            let top = face(idx(i, n2 - 1), &s2, 1.0);
            let ft = hllc(g, &top, &top, 2);
            for k in 0..4 {
                du[idx(i, n2 - 1)][k] -= dt / h2 * ft[k];
            }
            outflow += dt * h1 * ft[0];
        }
        for (c, (cell, d)) in st.u.iter_mut().zip(&du).enumerate() {
            for k in 0..4 {
                cell[k] += d[k];
            }
            let q = to_primitive(g, cell);
            if !admissible(&q, p_min) {
                return Err(Error::Positivity { i: c / n2, j: c % n2, rho: q[0], p: q[3] });
            }
        }
        Ok(outflow)
    }
}

/// Advances `state` to `sim.t_final`, storing it at `n_out` uniform times (including 0).
pub fn run(state: &ConservativeState, sim: &SimGrid, eos: &EosModel, n_out: usize) -> Result<Trajectory> {
    sim.validate()?;
    if state.n1 != sim.n1 || state.n2 != sim.n2 {
        return Err(Error::InvalidInput("state and simulation grid differ".into()));
    }
    if n_out < 2 {
        return Err(Error::InvalidInput("need at least 2 output times".into()));
    }
    let stepper = Stepper { sim, eos };
    let dt_out = sim.t_final / (n_out - 1) as f64;
    let mut st = state.clone();
    let m0 = st.mass(sim);
    let mut outflow = 0.0;
    let mut states = vec![st.clone()];
    let mut t = 0.0;
    let mut steps = 0;
    let mut mass_defect: f64 = 0.0;
    let mut wall_ratio: f64 = 0.0;
    let mut max_change: f64 = 0.0;
    for k in 1..n_out {
        let t_next = k as f64 * dt_out;
        while t < t_next - 1e-14 * t_next.max(1.0) {
            let w: Vec<Primitive> = st.u.iter().map(|u| to_primitive(eos.gamma, u)).collect();
            let dt = stepper.dt(&w)?.min(t_next - t);
            let before = st.u.clone();
            outflow += stepper.step(&mut st, dt).map_err(|e| e.at_stage(&format!("direct step {steps} at t = {t:.5}")))?;
            t += dt;
            steps += 1;
            let scale = before.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, &x| m.max(x.abs()));
            let ch = st.u.iter().zip(&before).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0f64, f64::max);
            max_change = max_change.max(ch / scale);
            mass_defect = mass_defect.max((st.mass(sim) - m0 + outflow).abs() / m0);
            let mut vmax: f64 = 0.0;
            let mut wall: f64 = 0.0;
            for i in 0..st.n1 {
                for j in 0..st.n2 {
                    let q = st.primitive(eos, i, j);
                    vmax = vmax.max(q[1].hypot(q[2]));
                    if j == 0 {
                        wall = wall.max(q[2].abs());
                    }
                }
            }
            if vmax > 0.0 {
                wall_ratio = wall_ratio.max(wall / vmax);
            }
        }
        t = t_next;
        states.push(st.clone());
    }
    let grid = SpaceTimeGrid { t: Axis::closed(0.0, sim.t_final, n_out), x1: sim.x1_axis(), x2: sim.x2_axis() };
    Ok(Trajectory { grid, states, steps, mass_defect, wall_ratio, max_step_change: max_change })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub eps: f64,
    pub h1: f64,
    /// (t, L2 distance at t).
    pub l2: Vec<(f64, f64)>,
}

/// H1 distance between the direct solution and u_a^eps on the trajectory grid.
pub fn compare_h1(traj: &Trajectory, exp: &WkbExpansion, eps: f64) -> Result<DistanceReport> {
    let ua = assemble(exp, eps, &traj.grid)?;
    let ud = traj.to_state_field(&exp.eos);
    distance(&ud, &ua, eps)
}

fn distance(a: &StateField, b: &StateField, eps: f64) -> Result<DistanceReport> {
    let g = a.grid;
    let h1 = h1_distance(a, b)?;
    let w2 = trapezoid_weights(&g.x2);
    let mut l2 = Vec::new();
    for it in 0..g.t.n {
        let mut acc = 0.0;
        for c in 0..4 {
            for i1 in 0..g.x1.n {
                for i2 in 0..g.x2.n {
                    let k = g.index(it, i1, i2);
                    let d = a.comps[c][k] - b.comps[c][k];
                    acc += g.x1.step * w2[i2] * d * d;
                }
            }
        }
        l2.push((g.t.at(it), acc.sqrt()));
    }
    Ok(DistanceReport { eps, h1, l2 })
}

/// Restricts a trajectory on a grid refined by 2 in both directions onto the coarse cells:
/// even fine columns along x1, cubic interpolation to the coarse centres along x2.
fn restrict(fine: &Trajectory, coarse: &SimGrid) -> Result<Trajectory> {
    let (n1, n2) = (coarse.n1, coarse.n2);
    let ff = fine.states.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    if ff.n1 != 2 * n1 || ff.n2 != 2 * n2 || n2 < 2 {
        return Err(Error::InvalidInput("fine trajectory is not a factor-2 refinement".into()));
    }
    let fn2 = 2 * n2;
    // coarse centre j sits on the fine face between cells 2j and 2j + 1
    let stencils: Vec<([usize; 4], [f64; 4])> = (0..n2)
        .map(|j| {
            let lo = (2 * j).saturating_sub(1).min(fn2 - 4);
            let nodes: Vec<f64> = (lo..lo + 4).map(|k| k as f64).collect();
            let mut w = [0.0; 4];
            lagrange_weights(&nodes, 2.0 * j as f64 + 0.5, &mut w);
            ([lo, lo + 1, lo + 2, lo + 3], w)
        })
        .collect();
    let states = fine
        .states
        .iter()
        .map(|s| {
            let mut u = Vec::with_capacity(n1 * n2);
            for i in 0..n1 {
                for (idx, w) in &stencils {
                    let mut acc = [0.0; 4];
                    for (&jj, &wj) in idx.iter().zip(w) {
                        let c = s.u[2 * i * fn2 + jj];
                        for k in 0..4 {
                            acc[k] += wj * c[k];
                        }
                    }
                    u.push(acc);
                }
            }
            ConservativeState { n1, n2, u }
        })
        .collect();
    let grid = SpaceTimeGrid { t: fine.grid.t, x1: coarse.x1_axis(), x2: coarse.x2_axis() };
    Ok(Trajectory { grid, states, ..fine.clone() })
}

/// Trigonometric interpolation of periodic samples (even count) to the midpoints between them.
fn trig_midpoint_weights(n: usize) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .map(|d| {
            let th = (d as f64 + 0.5) * h;
            (1.0 + 2.0 * (1..n / 2).map(|k| (k as f64 * th).cos()).sum::<f64>()) / n as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityRule {
    /// dx2 = eps / refine.
    pub refine: f64,
    pub height: f64,
    pub cfl: f64,
    pub t_final: f64,
    pub n_out: usize,
}

impl Default for StabilityRule {
    fn default() -> Self {
        StabilityRule { refine: 8.0, height: 1.0, cfl: 0.4, t_final: 0.2, n_out: 5 }
    }
}

impl StabilityRule {
    pub fn sim(&self, n1: usize, length: f64, eps: f64) -> SimGrid {
        SimGrid { n1, length, n2: (self.height * self.refine / eps).round() as usize, height: self.height, cfl: self.cfl, t_final: self.t_final }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub eps: f64,
    pub h1: f64,
    /// eps^{-1} h1.
    pub h1_rescaled: f64,
    pub h1_refined: Option<f64>,
    pub mass_defect: f64,
    pub wall_ratio: f64,
    pub steps: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub slope: Option<(f64, f64)>,
    pub monotone: bool,
    pub refinement_change: Option<f64>,
}

/// Direct solves from u_a^eps(0) over `eps_list`; H1 distance to u_a^eps on (0, T).
pub fn stability_sweep(exp: &WkbExpansion, eps_list: &[f64], rule: &StabilityRule, refinement_check: bool) -> Result<StabilityReport> {
    let x1 = exp.profiles[0].w_tilde.x1;
    let mut rows = Vec::new();
    for &eps in eps_list {
        let sim = rule.sim(x1.n, x1.period(), eps);
        let member = || -> Result<StabilityRow> {
            let st = init_from_wkb(exp, eps, &sim)?;
            let traj = run(&st, &sim, &exp.eos, rule.n_out)?;
            let d = compare_h1(&traj, exp, eps)?;
            let h1_refined = if refinement_check {
                let fine = SimGrid { n1: 2 * sim.n1, n2: 2 * sim.n2, ..sim };
                let sf = fine_init(exp, eps, &fine)?;
                let tf = run(&sf, &fine, &exp.eos, rule.n_out)?;
                Some(compare_h1(&restrict(&tf, &sim)?, exp, eps)?.h1)
            } else {
                None
            };
            Ok(StabilityRow { eps, h1: d.h1, h1_rescaled: d.h1 / eps, h1_refined, mass_defect: traj.mass_defect, wall_ratio: traj.wall_ratio, steps: traj.steps, failure: None })
        };
        rows.push(member().unwrap_or_else(|e| StabilityRow {
            eps,
            h1: f64::NAN,
            h1_rescaled: f64::NAN,
            h1_refined: None,
            mass_defect: f64::NAN,
            wall_ratio: f64::NAN,
            steps: 0,
            failure: Some(e.to_string()),
        }));
    }
    let ok: Vec<&StabilityRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let slope = if ok.len() >= 3 { fit_loglog_slope(&ok.iter().map(|r| (r.eps, r.h1)).collect::<Vec<_>>()).ok() } else { None };
    let mut sorted = ok.clone();
    sorted.sort_by(|a, b| b.eps.partial_cmp(&a.eps).unwrap_or(std::cmp::Ordering::Equal));
    let monotone = ok.len() == rows.len() && sorted.windows(2).all(|w| w[1].h1 < w[0].h1);
    let refinement_change = if refinement_check {
        ok.iter().map(|r| r.h1_refined.map(|f| (f - r.h1).abs() / r.h1)).collect::<Option<Vec<f64>>>().map(|v| v.into_iter().fold(0.0, f64::max))
    } else {
        None
    };
    Ok(StabilityReport { rows, slope, monotone, refinement_change })
}

/// Initial data on a grid whose x1 cells are twice as fine as the profile nodes: odd cells take
/// the trigonometric interpolant of the primitive variables along x1.
fn fine_init(exp: &WkbExpansion, eps: f64, fine: &SimGrid) -> Result<ConservativeState> {
    let cn1 = fine.n1 / 2;
    if !fine.n1.is_multiple_of(2) || !cn1.is_multiple_of(2) {
        return Err(Error::InvalidInput("refined x1 count must be a multiple of 4".into()));
    }
    let eos = exp.eos;
    let c = init_from_wkb(exp, eps, &SimGrid { n1: cn1, ..*fine })?;
    let n2 = fine.n2;
    let w = trig_midpoint_weights(cn1);
    let mut u = vec![[0.0; 4]; fine.n1 * n2];
    let mut line = vec![[0.0; 4]; cn1];
    for j in 0..n2 {
        for (i, q) in line.iter_mut().enumerate() {
            *q = c.primitive(&eos, i, j);
        }
        for i in 0..cn1 {
            u[2 * i * n2 + j] = c.u[i * n2 + j];
            let mut q = [0.0; 4];
            for (jj, src) in line.iter().enumerate() {
                let wd = w[(i + cn1 - jj) % cn1];
                for k in 0..4 {
                    q[k] += wd * src[k];
                }
            }
            if !admissible(&q, eos.p_min) {
                return Err(Error::Positivity { i: 2 * i + 1, j, rho: q[0], p: q[3] });
            }
            u[(2 * i + 1) * n2 + j] = to_conservative(eos.gamma, &q);
        }
    }
    Ok(ConservativeState { n1: fine.n1, n2, u })
}

/// Exact solution of the 1-D Riemann problem at x / t = xi, primitive (rho, u, p).
pub fn exact_riemann(gamma: f64, l: [f64; 3], r: [f64; 3], xi: f64) -> Result<[f64; 3]> {
    let (rl, ul, pl) = (l[0], l[1], l[2]);
    let (rr, ur, pr) = (r[0], r[1], r[2]);
    let cl = (gamma * pl / rl).sqrt();
    let cr = (gamma * pr / rr).sqrt();
    let g1 = (gamma - 1.0) / (2.0 * gamma);
    if 2.0 * (cl + cr) / (gamma - 1.0) <= ur - ul {
        return Err(Error::InvalidInput("Riemann data generate vacuum".into()));
    }
    let fk = |p: f64, rk: f64, pk: f64, ck: f64| -> (f64, f64) {
        if p > pk {
            let a = 2.0 / ((gamma + 1.0) * rk);
            let b = (gamma - 1.0) / (gamma + 1.0) * pk;
            let q = (a / (p + b)).sqrt();
            ((p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (p + b)))
        } else {
            let pr = p / pk;
            (2.0 * ck / (gamma - 1.0) * (pr.powf(g1) - 1.0), pr.powf(-(gamma + 1.0) / (2.0 * gamma)) / (rk * ck))
        }
    };
    let mut p = (0.5 * (pl + pr) - 0.125 * (ur - ul) * (rl + rr) * (cl + cr)).max(1e-8);
    for _ in 0..100 {
        let (f1, d1) = fk(p, rl, pl, cl);
        let (f2, d2) = fk(p, rr, pr, cr);
        let dp = (f1 + f2 + ur - ul) / (d1 + d2);
        let pn = (p - dp).max(1e-10);
        let done = (pn - p).abs() <= 1e-14 * 0.5 * (pn + p);
        p = pn;
        if done {
            break;
        }
    }
    let us = 0.5 * (ul + ur) + 0.5 * (fk(p, rr, pr, cr).0 - fk(p, rl, pl, cl).0);
    let gr = (gamma - 1.0) / (gamma + 1.0);
    if xi <= us {
        if p > pl {
            let sl = ul - cl * ((gamma + 1.0) / (2.0 * gamma) * p / pl + g1).sqrt();
            if xi <= sl {
                return Ok([rl, ul, pl]);
            }
            return Ok([rl * (p / pl + gr) / (gr * p / pl + 1.0), us, p]);
        }
        let shl = ul - cl;
        let cs = cl * (p / pl).powf(g1);
        if xi <= shl {
            return Ok([rl, ul, pl]);
        }
        if xi >= us - cs {
            return Ok([rl * (p / pl).powf(1.0 / gamma), us, p]);
        }
        let c = 2.0 / (gamma + 1.0) * (cl + 0.5 * (gamma - 1.0) * (ul - xi));
        let u = 2.0 / (gamma + 1.0) * (cl + 0.5 * (gamma - 1.0) * ul + xi);
        return Ok([rl * (c / cl).powf(2.0 / (gamma - 1.0)), u, pl * (c / cl).powf(1.0 / g1)]);
    }
    if p > pr {
        let sr = ur + cr * ((gamma + 1.0) / (2.0 * gamma) * p / pr + g1).sqrt();
        if xi >= sr {
            return Ok([rr, ur, pr]);
        }
        return Ok([rr * (p / pr + gr) / (gr * p / pr + 1.0), us, p]);
    }
    let shr = ur + cr;
    let cs = cr * (p / pr).powf(g1);
    if xi >= shr {
        return Ok([rr, ur, pr]);
    }
    if xi <= us + cs {
        return Ok([rr * (p / pr).powf(1.0 / gamma), us, p]);
    }
    let c = 2.0 / (gamma + 1.0) * (cr - 0.5 * (gamma - 1.0) * (ur - xi));
    let u = 2.0 / (gamma + 1.0) * (-cr + 0.5 * (gamma - 1.0) * ur + xi);
    Ok([rr * (c / cr).powf(2.0 / (gamma - 1.0)), u, pr * (c / cr).powf(1.0 / g1)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanityReport {
    pub shear_drift_per_step: f64,
    pub sod_l1_relative: f64,
    pub sod_mass_defect: f64,
}

/// Steady shear drift, wall-parallel Sod tube against the exact solution (L = 1, t = 0.1) and
/// mass conservation.
pub fn sanity_checks(eos: &EosModel, sod_n1: usize, shear_steps: usize) -> Result<SanityReport> {
    let g = eos.gamma;
    // steady shear v = (x2, 0), p = 1, s = 0
    let sim = SimGrid { n1: 32, length: 2.0 * std::f64::consts::PI, n2: 32, height: 1.0, cfl: 0.4, t_final: 0.0 };
    let st = ConservativeState::from_primitive(&sim, eos, |_, x2| [eos.rho_unchecked(1.0, 0.0), x2, 0.0, 1.0])?;
    let w: Vec<Primitive> = st.u.iter().map(|u| to_primitive(g, u)).collect();
    let stepper = Stepper { sim: &sim, eos };
    let dt = stepper.dt(&w)?;
    let mut s = st.clone();
    let mut drift: f64 = 0.0;
    let scale = st.u.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, &x| m.max(x.abs()));
    for _ in 0..shear_steps {
        let before = s.u.clone();
        stepper.step(&mut s, dt)?;
        let ch = s.u.iter().zip(&before).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0f64, f64::max);
        drift = drift.max(ch / scale);
    }
    // Sod along x1 with the discontinuity on the face x0 (and its periodic image at 0)
    let sim = SimGrid { n1: sod_n1, length: 1.0, n2: 4, height: 1.0, cfl: 0.4, t_final: 0.1 };
    let x0 = 0.5 + 0.5 * sim.dx1();
    let left = [1.0, 0.0, 1.0];
    let right = [0.125, 0.0, 0.1];
    let st = ConservativeState::from_primitive(&sim, eos, |x1, _| {
        let q = if x1 < x0 && x1 > 0.5 * sim.dx1() { left } else { right };
        [q[0], q[1], 0.0, q[2]]
    })?;
    let traj = run(&st, &sim, eos, 2)?;
    let fin = &traj.states[1];
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..sim.n1 {
        let x = sim.x1_axis().at(i);
        if !(0.25..=0.75).contains(&x) {
            continue;
        }
        let exact = exact_riemann(g, left, right, (x - x0) / sim.t_final)?[0];
        for j in 0..sim.n2 {
            num += (fin.primitive(eos, i, j)[0] - exact).abs();
            den += exact.abs();
        }
    }
    Ok(SanityReport { shear_drift_per_step: drift, sod_l1_relative: num / den, sod_mass_defect: traj.mass_defect })
}

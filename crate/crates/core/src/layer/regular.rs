//! Regular corrector: the Euler system linearized about the ground state,
//!
//!   d_t V + v0.grad V + V.grad v0 + grad P / rho_bar = g_v,
//!   d_t P + v0.grad P + V.grad p0 + gamma p0 div V + gamma P div v0 = g_p,
//!   d_t W + v0.grad W + V.grad w0 = g_w,
//!
//! with V_d = b on the wall and zero-gradient outflow at the top. SSP-RK2 in time,
//! second-order one-sided differences with local Lax-Friedrichs splitting in space.

use super::field::{ProfileGrid, RegularField};
use crate::eos::EosModel;
use crate::error::{Error, Result};
use crate::grid::{trapezoid_weights, Axis};
use crate::ground_state::GroundState;

/// Forcing stored on the slow grid: sources (v1, v2, p, w) and wall data for V_d
/// (a wall-collapsed field). Interpolated cubically in time and x2.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegularForcing<'a> {
    pub source: Option<[&'a RegularField; 4]>,
    pub wall: Option<&'a RegularField>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularOptions {
    /// Internal x2 resolution = slow spacing / refine.
    pub refine: usize,
    pub cfl: f64,
}

impl Default for RegularOptions {
    fn default() -> Self {
        RegularOptions { refine: 4, cfl: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularSolution {
    pub v1: RegularField,
    pub v2: RegularField,
    pub p: RegularField,
    pub w: RegularField,
    /// (t, E) with E = 1/2 integral of rho_bar |V|^2 + alpha P^2 + W^2 over the strip.
    pub energy: Vec<(f64, f64)>,
    pub steps: usize,
}

impl RegularSolution {
    pub fn components(&self) -> [&RegularField; 4] {
        [&self.v1, &self.v2, &self.p, &self.w]
    }
}

struct Background {
    v: Vec<[f64; 2]>,
    jac: Vec<[[f64; 2]; 2]>,
    rho: Vec<f64>,
    gp: Vec<f64>,
    grad_p: [f64; 2],
    grad_w: [f64; 2],
}

struct Solver<'a> {
    gs: &'a GroundState,
    eos: &'a EosModel,
    x1: Axis,
    x2: Axis,
    forcing: RegularForcing<'a>,
    bg_static: Option<Background>,
}

impl Solver<'_> {
    fn n(&self) -> usize {
        self.x1.n * self.x2.n
    }

    fn background(&self, t: f64) -> Result<Background> {
        let (n1, n2) = (self.x1.n, self.x2.n);
        let mut bg = Background {
            v: Vec::with_capacity(n1 * n2),
            jac: Vec::with_capacity(n1 * n2),
            rho: Vec::with_capacity(n1 * n2),
            gp: Vec::with_capacity(n1 * n2),
            grad_p: [self.gs.p0.c1, self.gs.p0.c2],
            grad_w: [self.gs.s0.c1, self.gs.s0.c2],
        };
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let x = [self.x1.at(i1), self.x2.at(i2)];
                bg.v.push(self.gs.velocity(t, x)?);
                bg.jac.push(self.gs.jacobian(t, x)?);
                let p0 = self.gs.pressure(t, x);
                bg.rho.push(self.eos.rho(p0, self.gs.entropy(t, x))?);
                bg.gp.push(self.eos.gamma * p0);
            }
        }
        Ok(bg)
    }

    fn background_at(&self, t: f64) -> Result<std::borrow::Cow<'_, Background>> {
        match &self.bg_static {
            Some(b) => Ok(std::borrow::Cow::Borrowed(b)),
            None => Ok(std::borrow::Cow::Owned(self.background(t)?)),
        }
    }

    /// Wall data b(t, x1) for V_d.
    fn wall(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.x1.n];
        if let Some(w) = self.forcing.wall {
            w.slice_at(t, &mut out)?;
        }
        Ok(out)
    }

    fn sources(&self, t: f64) -> Result<Option<[Vec<f64>; 4]>> {
        let src = match self.forcing.source {
            Some(s) => s,
            None => return Ok(None),
        };
        let (n1, n2) = (self.x1.n, self.x2.n);
        let mut out: [Vec<f64>; 4] = Default::default();
        for c in 0..4 {
            let f = src[c];
            let mut slow = vec![0.0; f.slice_len()];
            f.slice_at(t, &mut slow)?;
            let tmp = RegularField { times: vec![t], x1: f.x1, x2: f.x2, data: slow };
            let mut v = vec![0.0; n1 * n2];
            for i1 in 0..n1 {
                for i2 in 0..n2 {
                    v[i1 * n2 + i2] = tmp.eval_x2(0, i1, self.x2.at(i2).min(f.x2.end()))?.0;
                }
            }
            out[c] = v;
        }
        Ok(Some(out))
    }

    #[inline]
    fn get(&self, u: &[Vec<f64>; 4], c: usize, i1: isize, i2: isize, wall: &[f64]) -> f64 {
        let n1 = self.x1.n as isize;
        let n2 = self.x2.n as isize;
        let j1 = i1.rem_euclid(n1) as usize;
        if i2 < 0 {
            let m = (-i2) as usize;
            let v = u[c][j1 * self.x2.n + m];
            if c == 1 {
                return 2.0 * wall[j1] - v;
            }
            return v;
        }
        let j2 = if i2 >= n2 { (n2 - 1) as usize } else { i2 as usize };
        u[c][j1 * self.x2.n + j2]
    }

    fn rhs(&self, t: f64, u: &[Vec<f64>; 4], out: &mut [Vec<f64>; 4]) -> Result<()> {
        let bg = self.background_at(t)?;
        let wall = self.wall(t)?;
        let src = self.sources(t)?;
        let (n1, n2) = (self.x1.n, self.x2.n);
        let (h1, h2) = (self.x1.step, self.x2.step);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let k = i1 * n2 + i2;
                let (a, b) = (i1 as isize, i2 as isize);
                let mut dc1 = [0.0; 4];
                let mut dd1 = [0.0; 4];
                let mut dc2 = [0.0; 4];
                let mut dd2 = [0.0; 4];
                for c in 0..4 {
                    let g1 = |o: isize| self.get(u, c, a + o, b, &wall);
                    let dp = (-3.0 * g1(0) + 4.0 * g1(1) - g1(2)) / (2.0 * h1);
                    let dm = (3.0 * g1(0) - 4.0 * g1(-1) + g1(-2)) / (2.0 * h1);
                    dc1[c] = 0.5 * (dp + dm);
                    dd1[c] = 0.5 * (dp - dm);
                    let g2 = |o: isize| self.get(u, c, a, b + o, &wall);
                    let dp = (-3.0 * g2(0) + 4.0 * g2(1) - g2(2)) / (2.0 * h2);
                    let dm = (3.0 * g2(0) - 4.0 * g2(-1) + g2(-2)) / (2.0 * h2);
                    dc2[c] = 0.5 * (dp + dm);
                    dd2[c] = 0.5 * (dp - dm);
                }
                let v = bg.v[k];
                let j = bg.jac[k];
                let rho = bg.rho[k];
                let gp = bg.gp[k];
                let cs = (gp / rho).sqrt();
                let s1 = v[0].abs() + cs;
                let s2 = v[1].abs() + cs;
                let uu = [u[0][k], u[1][k], u[2][k], u[3][k]];
                let div0 = j[0][0] + j[1][1];
                let mut r = [
                    -(v[0] * dc1[0] + dc1[2] / rho) - v[1] * dc2[0] - (uu[0] * j[0][0] + uu[1] * j[0][1]),
                    -v[0] * dc1[1] - (v[1] * dc2[1] + dc2[2] / rho) - (uu[0] * j[1][0] + uu[1] * j[1][1]),
                    -(v[0] * dc1[2] + gp * dc1[0]) - (v[1] * dc2[2] + gp * dc2[1]) - (uu[0] * bg.grad_p[0] + uu[1] * bg.grad_p[1]) - self.eos.gamma * uu[2] * div0,
                    -v[0] * dc1[3] - v[1] * dc2[3] - (uu[0] * bg.grad_w[0] + uu[1] * bg.grad_w[1]),
                ];
                for c in 0..4 {
                    r[c] += s1 * dd1[c] + s2 * dd2[c];
                    if let Some(s) = &src {
                        r[c] += s[c][k];
                    }
                    out[c][k] = r[c];
                }
            }
        }
        Ok(())
    }

    fn enforce_wall(&self, t: f64, u: &mut [Vec<f64>; 4]) -> Result<()> {
        let wall = self.wall(t)?;
        for i1 in 0..self.x1.n {
            u[1][i1 * self.x2.n] = wall[i1];
        }
        Ok(())
    }

    fn energy(&self, t: f64, u: &[Vec<f64>; 4]) -> Result<f64> {
        let bg = self.background_at(t)?;
        let w1 = trapezoid_weights(&self.x1);
        let w2 = trapezoid_weights(&self.x2);
        let mut e = 0.0;
        for i1 in 0..self.x1.n {
            for i2 in 0..self.x2.n {
                let k = i1 * self.x2.n + i2;
                let dens = bg.rho[k] * (u[0][k] * u[0][k] + u[1][k] * u[1][k]) + u[2][k] * u[2][k] / bg.gp[k] + u[3][k] * u[3][k];
                e += 0.5 * w1[i1] * w2[i2] * dens;
            }
        }
        Ok(e)
    }

    fn dt_bound(&self, t: f64) -> Result<f64> {
        let bg = self.background_at(t)?;
        let mut m: f64 = 0.0;
        for k in 0..self.n() {
            let cs = (bg.gp[k] / bg.rho[k]).sqrt();
            m = m.max((bg.v[k][0].abs() + cs) / self.x1.step + (bg.v[k][1].abs() + cs) / self.x2.step);
        }
        Ok(1.0 / m)
    }
}

impl Clone for Background {
    fn clone(&self) -> Self {
        Background { v: self.v.clone(), jac: self.jac.clone(), rho: self.rho.clone(), gp: self.gp.clone(), grad_p: self.grad_p, grad_w: self.grad_w }
    }
}

/// Solves for (V, P, W) from `init(x1, x2) = [V1, V2, P, W]` at t = 0 and stores the solution on
/// the slow nodes at the grid times.
pub fn solve_regular_corrector(
    gs: &GroundState,
    eos: &EosModel,
    init: impl Fn(f64, f64) -> [f64; 4],
    grid: &ProfileGrid,
    forcing: RegularForcing,
    opts: RegularOptions,
) -> Result<RegularSolution> {
    if grid.is_collapsed() || grid.x2.n < 4 {
        return Err(Error::GridTooCoarse("regular corrector needs a slow x2 axis with at least 4 nodes".into()));
    }
    if opts.refine == 0 || !(opts.cfl > 0.0 && opts.cfl <= 0.45) {
        return Err(Error::InvalidInput(format!("refine = {}, cfl = {}", opts.refine, opts.cfl)));
    }
    if grid.x1.n < 5 {
        return Err(Error::GridTooCoarse("regular corrector needs at least 5 x1 nodes".into()));
    }
    let x2 = Axis { start: 0.0, step: grid.x2.step / opts.refine as f64, n: (grid.x2.n - 1) * opts.refine + 1, periodic: false };
    let mut solver = Solver { gs, eos, x1: grid.x1, x2, forcing, bg_static: None };
    if gs.is_shear() {
        solver.bg_static = Some(solver.background(0.0)?);
    }
    let n2 = x2.n;
    let n = grid.x1.n * n2;
    let mut u: [Vec<f64>; 4] = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i1 in 0..grid.x1.n {
        for i2 in 0..n2 {
            let v = init(grid.x1.at(i1), x2.at(i2));
            for c in 0..4 {
                u[c][i1 * n2 + i2] = v[c];
            }
        }
    }
    let wall0 = solver.wall(0.0)?;
    let defect = (0..grid.x1.n).map(|i1| (u[1][i1 * n2] - wall0[i1]).abs()).fold(0.0, f64::max);
    if defect > 1e-12 {
        return Err(Error::InvalidInput(format!("incompatible initial data: V_d - b = {defect} on the wall at t = 0")));
    }
    let mut fields = [RegularField::zeros(grid), RegularField::zeros(grid), RegularField::zeros(grid), RegularField::zeros(grid)];
    let mut energy = Vec::new();
    let mut t = 0.0;
    let mut steps = 0;
    let mut k1: [Vec<f64>; 4] = u.clone();
    let mut u1: [Vec<f64>; 4] = u.clone();
    for (it, &t_out) in grid.times.iter().enumerate() {
        while t_out - t > 1e-14 {
            let dt_cfl = opts.cfl * solver.dt_bound(t)?;
            let remaining = t_out - t;
            let nsteps = (remaining / dt_cfl - 1e-9).ceil().max(1.0);
            let dt = remaining / nsteps;
            solver.rhs(t, &u, &mut k1)?;
            for c in 0..4 {
                for i in 0..n {
                    u1[c][i] = u[c][i] + dt * k1[c][i];
                }
            }
            solver.enforce_wall(t + dt, &mut u1)?;
            solver.rhs(t + dt, &u1, &mut k1)?;
            for c in 0..4 {
                for i in 0..n {
                    u[c][i] = 0.5 * u[c][i] + 0.5 * (u1[c][i] + dt * k1[c][i]);
                }
            }
            t = if nsteps <= 1.0 { t_out } else { t + dt };
            solver.enforce_wall(t, &mut u)?;
            steps += 1;
            if u.iter().any(|c| c.iter().any(|x| !x.is_finite())) {
                return Err(Error::Cfl(format!("regular corrector blew up at t = {t}")));
            }
        }
        energy.push((t_out, solver.energy(t_out, &u)?));
        for c in 0..4 {
            let slice = fields[c].slice_mut(it);
            for i1 in 0..grid.x1.n {
                for i2 in 0..grid.x2.n {
                    slice[i1 * grid.x2.n + i2] = u[c][i1 * n2 + i2 * opts.refine];
                }
            }
        }
    }
    let [v1, v2, p, w] = fields;
    Ok(RegularSolution { v1, v2, p, w, energy, steps })
}

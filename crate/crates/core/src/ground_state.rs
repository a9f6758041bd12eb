//! Ground states u0 = (v0, p0, s0) built from a nilpotent initial velocity by the
//! characteristic method v(t, x + t h(x)) = h(x), and checks of (pro) / (cond).

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type Vec2 = [f64; 2];
/// `m[i][j] = d h_i / d x_j`.
pub type Mat2 = [[f64; 2]; 2];

/// Polynomial with coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Poly {
        Poly { coeffs }
    }
    pub fn identity() -> Poly {
        Poly { coeffs: vec![0.0, 1.0] }
    }
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
    pub fn derivative(&self) -> Poly {
        Poly { coeffs: self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect() }
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

type VecFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
type JacFn = Arc<dyn Fn(Vec2) -> Mat2 + Send + Sync>;

/// Initial velocity h with its Jacobian.
#[derive(Clone)]
pub enum InitialVelocity {
    /// h = (x2, 0).
    Shear,
    /// h = (a, F(a)) with a constant along the characteristics of d1 a + F'(a) d2 a = 0,
    /// a = a_init on {x1 = 0} and a = 0 on the wall.
    Recipe {
        a_init: Poly,
        f: Poly,
    },
    Custom {
        name: String,
        h: VecFn,
        jac: JacFn,
    },
}

impl std::fmt::Debug for InitialVelocity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialVelocity::Shear => write!(f, "Shear"),
            InitialVelocity::Recipe { a_init, f: ff } => write!(f, "Recipe({:?}, {:?})", a_init.coeffs, ff.coeffs),
            InitialVelocity::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

pub fn build_shear_initial() -> InitialVelocity {
    InitialVelocity::Shear
}

pub fn build_recipe_initial(a_init: Poly, f: Poly) -> Result<InitialVelocity> {
    if a_init.eval(0.0) != 0.0 {
        return Err(Error::InvalidInput(format!("a_init(0) = {} must vanish", a_init.eval(0.0))));
    }
    if f.eval(0.0) != 0.0 {
        return Err(Error::InvalidInput(format!("F(0) = {} must vanish", f.eval(0.0))));
    }
    let fp = f.derivative();
    for k in 0..=200 {
        let r = 4.0 * k as f64 / 200.0;
        let y = a_init.eval(r);
        if !(fp.eval(y) > 0.0) {
            return Err(Error::InvalidInput(format!("F'({y}) = {} is not positive", fp.eval(y))));
        }
    }
    Ok(InitialVelocity::Recipe { a_init, f })
}

impl InitialVelocity {
    pub fn custom(name: &str, h: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static, jac: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        InitialVelocity::Custom { name: name.to_string(), h: Arc::new(h), jac: Arc::new(jac) }
    }

    /// Characteristic label r with r + F'(a_init(r)) x1 = x2, or `None` on the wall-fed side.
    fn recipe_label(a_init: &Poly, f: &Poly, x: Vec2) -> Option<(f64, f64)> {
        let fp = f.derivative();
        let fpp = fp.derivative();
        let da = a_init.derivative();
        let slope0 = fp.eval(0.0);
        if x[1] <= slope0 * x[0] {
            return None;
        }
        let mut r = (x[1] - slope0 * x[0]).max(0.0);
        let mut gp = 1.0;
        for _ in 0..60 {
            let a = a_init.eval(r);
            let g = r + fp.eval(a) * x[0] - x[1];
            gp = 1.0 + fpp.eval(a) * da.eval(r) * x[0];
            if gp.abs() < 1e-14 {
                break;
            }
            let step = g / gp;
            r -= step;
            if step.abs() <= 1e-15 * (1.0 + r.abs()) {
                break;
            }
        }
        Some((r, gp))
    }

    pub fn h(&self, x: Vec2) -> Vec2 {
        match self {
            InitialVelocity::Shear => [x[1], 0.0],
            InitialVelocity::Recipe { a_init, f } => match Self::recipe_label(a_init, f, x) {
                None => [0.0, 0.0],
                Some((r, _)) => {
                    let a = a_init.eval(r);
                    [a, f.eval(a)]
                }
            },
            InitialVelocity::Custom { h, .. } => h(x),
        }
    }

    pub fn jacobian(&self, x: Vec2) -> Mat2 {
        match self {
            InitialVelocity::Shear => [[0.0, 1.0], [0.0, 0.0]],
            InitialVelocity::Recipe { a_init, f } => match Self::recipe_label(a_init, f, x) {
                None => [[0.0, 0.0], [0.0, 0.0]],
                Some((r, gp)) => {
                    let a = a_init.eval(r);
                    let fpa = f.derivative().eval(a);
                    let dar = a_init.derivative().eval(r);
                    let ga = [-fpa * dar / gp, dar / gp];
                    [[ga[0], ga[1]], [fpa * ga[0], fpa * ga[1]]]
                }
            },
            InitialVelocity::Custom { jac, .. } => jac(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NilpotentReport {
    pub max_trace: f64,
    pub max_det: f64,
    pub pass: bool,
}

/// For d = 2, h' is nilpotent iff its trace and determinant vanish.
pub fn check_nilpotent(h: &InitialVelocity, points: &[Vec2], tol: f64) -> NilpotentReport {
    let mut max_trace: f64 = 0.0;
    let mut max_det: f64 = 0.0;
    for &x in points {
        let j = h.jacobian(x);
        max_trace = max_trace.max((j[0][0] + j[1][1]).abs());
        max_det = max_det.max((j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs());
    }
    NilpotentReport { max_trace, max_det, pass: max_trace <= tol && max_det <= tol }
}

fn spectral_norm(m: &Mat2) -> f64 {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + c;
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

/// Foot of the characteristic through `(t, x)`: xi with xi + t h(xi) = x, and the iteration count.
pub fn characteristic_foot(h: &InitialVelocity, t: f64, x: Vec2, newton_tol: f64, max_iter: usize) -> Result<(Vec2, usize)> {
    let resid = |xi: Vec2| {
        let hv = h.h(xi);
        [xi[0] + t * hv[0] - x[0], xi[1] + t * hv[1] - x[1]]
    };
    let norm = |g: Vec2| g[0].hypot(g[1]);
    let mut xi = x;
    let mut g = resid(xi);
    for it in 0..=max_iter {
        if norm(g) <= newton_tol {
            return Ok((xi, it));
        }
        if it == max_iter {
            break;
        }
        let jh = h.jacobian(xi);
        let j = [[1.0 + t * jh[0][0], t * jh[0][1]], [t * jh[1][0], 1.0 + t * jh[1][1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-12 {
            return Err(Error::LifespanExceeded { t, x1: x[0], x2: x[1], reason: format!("singular Jacobian, det = {det}") });
        }
        let d = [(j[1][1] * g[0] - j[0][1] * g[1]) / det, (-j[1][0] * g[0] + j[0][0] * g[1]) / det];
        let mut lam = 1.0;
        loop {
            let trial = [xi[0] - lam * d[0], xi[1] - lam * d[1]];
            let gt = resid(trial);
            if norm(gt) < norm(g) || lam < 1e-4 {
                xi = trial;
                g = gt;
                break;
            }
            lam *= 0.5;
        }
    }
    Err(Error::LifespanExceeded { t, x1: x[0], x2: x[1], reason: format!("Newton did not converge, residual {}", norm(g)) })
}

/// v(t, x) = h(xi) where xi + t h(xi) = x.
pub fn solve_burgers(h: &InitialVelocity, t: f64, x: Vec2, newton_tol: f64, max_iter: usize) -> Result<Vec2> {
    if let InitialVelocity::Shear = h {
        return Ok([x[1], 0.0]);
    }
    let (xi, _) = characteristic_foot(h, t, x, newton_tol, max_iter)?;
    Ok(h.h(xi))
}

/// Half of the first time at which |t h'| reaches 1/2 on the samples; `cap` when h' vanishes.
pub fn estimate_lifespan(h: &InitialVelocity, samples: &[Vec2], cap: f64) -> f64 {
    let m = samples.iter().map(|&x| spectral_norm(&h.jacobian(x))).fold(0.0, f64::max);
    if m <= 0.0 {
        cap
    } else {
        (0.5 * (0.5 / m)).min(cap)
    }
}

/// Space-time affine scalar c0 + ct t + c1 x1 + c2 x2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineScalar {
    pub c0: f64,
    pub ct: f64,
    pub c1: f64,
    pub c2: f64,
}

impl AffineScalar {
    pub fn constant(c: f64) -> AffineScalar {
        AffineScalar { c0: c, ct: 0.0, c1: 0.0, c2: 0.0 }
    }
    pub fn eval(&self, t: f64, x: Vec2) -> f64 {
        self.c0 + self.ct * t + self.c1 * x[0] + self.c2 * x[1]
    }
    /// (d_t, d_1, d_2).
    pub fn grad(&self) -> [f64; 3] {
        [self.ct, self.c1, self.c2]
    }
    pub fn is_constant(&self) -> bool {
        self.ct == 0.0 && self.c1 == 0.0 && self.c2 == 0.0
    }
}

type FieldFn = Arc<dyn Fn(f64, Vec2) -> Vec2 + Send + Sync>;

#[derive(Clone)]
pub enum GroundKind {
    Characteristic(InitialVelocity),
    /// v = (x2 + a t, 0): tangential wall acceleration a, violates (cond) when a != 0.
    Accelerated {
        a: f64,
    },
    /// Arbitrary velocity field (derivatives by differencing); not necessarily an Euler solution.
    Synthetic {
        name: String,
        v: FieldFn,
    },
}

impl std::fmt::Debug for GroundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroundKind::Characteristic(h) => write!(f, "Characteristic({h:?})"),
            GroundKind::Accelerated { a } => write!(f, "Accelerated({a})"),
            GroundKind::Synthetic { name, .. } => write!(f, "Synthetic({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub kind: GroundKind,
    pub p0: AffineScalar,
    pub s0: AffineScalar,
    /// Tangential period.
    pub period: f64,
    /// Validity time.
    pub t0: f64,
    pub newton_tol: f64,
}

const FD_STEP: f64 = 1e-4;
const LIFESPAN_CAP: f64 = 1.0;

impl GroundState {
    /// Shear flow v0 = (x2, 0) with constant p0, s0 on the strip of period `period`.
    pub fn shear(p0: f64, s0: f64, period: f64) -> GroundState {
        let h = build_shear_initial();
        let samples = sample_box(period, 1.0, 9);
        GroundState {
            t0: estimate_lifespan(&h, &samples, LIFESPAN_CAP),
            kind: GroundKind::Characteristic(h),
            p0: AffineScalar::constant(p0),
            s0: AffineScalar::constant(s0),
            period,
            newton_tol: 1e-13,
        }
    }

    /// Ground state from an initial velocity; T0 sampled on `[0, width] x [0, 1]`.
    pub fn from_initial(h: InitialVelocity, p0: f64, s0: f64, period: f64, width: f64) -> GroundState {
        let samples = sample_box(width, 1.0, 33);
        GroundState {
            t0: estimate_lifespan(&h, &samples, LIFESPAN_CAP),
            kind: GroundKind::Characteristic(h),
            p0: AffineScalar::constant(p0),
            s0: AffineScalar::constant(s0),
            period,
            newton_tol: 1e-13,
        }
    }

    pub fn accelerated(a: f64, p0: f64, s0: f64, period: f64) -> GroundState {
        GroundState { kind: GroundKind::Accelerated { a }, p0: AffineScalar::constant(p0), s0: AffineScalar::constant(s0), period, t0: 0.25, newton_tol: 1e-13 }
    }

    pub fn synthetic(name: &str, v: impl Fn(f64, Vec2) -> Vec2 + Send + Sync + 'static, p0: f64, s0: f64, period: f64, t0: f64) -> GroundState {
        GroundState {
            kind: GroundKind::Synthetic { name: name.to_string(), v: Arc::new(v) },
            p0: AffineScalar::constant(p0),
            s0: AffineScalar::constant(s0),
            period,
            t0,
            newton_tol: 1e-13,
        }
    }

    pub fn is_shear(&self) -> bool {
        matches!(self.kind, GroundKind::Characteristic(InitialVelocity::Shear))
    }

    /// Whether derivatives are exact closed forms (no differencing).
    pub fn is_analytic(&self) -> bool {
        matches!(self.kind, GroundKind::Characteristic(InitialVelocity::Shear) | GroundKind::Accelerated { .. })
    }

    pub fn velocity(&self, t: f64, x: Vec2) -> Result<Vec2> {
        match &self.kind {
            GroundKind::Characteristic(h) => solve_burgers(h, t, x, self.newton_tol, 50),
            GroundKind::Accelerated { a } => Ok([x[1] + a * t, 0.0]),
            GroundKind::Synthetic { v, .. } => Ok(v(t, x)),
        }
    }

    /// `j[i][k] = d v_i / d x_k`.
    pub fn jacobian(&self, t: f64, x: Vec2) -> Result<Mat2> {
        match &self.kind {
            GroundKind::Characteristic(InitialVelocity::Shear) | GroundKind::Accelerated { .. } => Ok([[0.0, 1.0], [0.0, 0.0]]),
            GroundKind::Characteristic(h) => {
                let (xi, _) = characteristic_foot(h, t, x, self.newton_tol, 50)?;
                let jh = h.jacobian(xi);
                let m = [[1.0 + t * jh[0][0], t * jh[0][1]], [t * jh[1][0], 1.0 + t * jh[1][1]]];
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
                let mut j = [[0.0; 2]; 2];
                for i in 0..2 {
                    for k in 0..2 {
                        j[i][k] = jh[i][0] * inv[0][k] + jh[i][1] * inv[1][k];
                    }
                }
                Ok(j)
            }
            GroundKind::Synthetic { .. } => self.jacobian_fd(t, x),
        }
    }

    pub fn dt_velocity(&self, t: f64, x: Vec2) -> Result<Vec2> {
        match &self.kind {
            GroundKind::Accelerated { a } => Ok([*a, 0.0]),
            GroundKind::Characteristic(InitialVelocity::Shear) => Ok([0.0, 0.0]),
            GroundKind::Characteristic(_) => {
                let v = self.velocity(t, x)?;
                let j = self.jacobian(t, x)?;
                Ok([-(j[0][0] * v[0] + j[0][1] * v[1]), -(j[1][0] * v[0] + j[1][1] * v[1])])
            }
            GroundKind::Synthetic { .. } => {
                let a = self.velocity(t + FD_STEP, x)?;
                let b = self.velocity(t - FD_STEP, x)?;
                Ok([(a[0] - b[0]) / (2.0 * FD_STEP), (a[1] - b[1]) / (2.0 * FD_STEP)])
            }
        }
    }

    fn jacobian_fd(&self, t: f64, x: Vec2) -> Result<Mat2> {
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += FD_STEP;
            xm[k] -= FD_STEP;
            let a = self.velocity(t, xp)?;
            let b = self.velocity(t, xm)?;
            for i in 0..2 {
                j[i][k] = (a[i] - b[i]) / (2.0 * FD_STEP);
            }
        }
        Ok(j)
    }

    /// Material acceleration X_{v0} v0.
    pub fn acceleration(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let v = self.velocity(t, x)?;
        let j = self.jacobian(t, x)?;
        let d = self.dt_velocity(t, x)?;
        Ok([d[0] + j[0][0] * v[0] + j[0][1] * v[1], d[1] + j[1][0] * v[0] + j[1][1] * v[1]])
    }

    /// Analytic normal-flat factor v0_d / x_d when available.
    pub fn flat_analytic(&self, t: f64, x: Vec2) -> Option<f64> {
        let _ = (t, x);
        match &self.kind {
            GroundKind::Characteristic(InitialVelocity::Shear) | GroundKind::Accelerated { .. } => Some(0.0),
            _ => None,
        }
    }

    pub fn pressure(&self, t: f64, x: Vec2) -> f64 {
        self.p0.eval(t, x)
    }

    pub fn entropy(&self, t: f64, x: Vec2) -> f64 {
        self.s0.eval(t, x)
    }
}

/// Uniform `n x n` samples of `[0, w] x [0, h]`.
pub fn sample_box(w: f64, h: f64, n: usize) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push([w * i as f64 / (n - 1) as f64, h * j as f64 / (n - 1) as f64]);
        }
    }
    out
}

/// Seeded random (t, x) samples in `[0, t_max] x [0, w] x [0, h]`.
pub fn random_points(seed: u64, n: usize, t_max: f64, w: f64, h: f64) -> Vec<(f64, Vec2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.random::<f64>() * t_max, [rng.random::<f64>() * w, rng.random::<f64>() * h])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProReport {
    /// max |X_{v0} v0|
    pub accel_defect: f64,
    /// max |div v0|
    pub div_defect: f64,
    /// max |grad_{t,x} p0|
    pub grad_p_defect: f64,
    pub allowance: f64,
    pub pass: bool,
}

/// Brute-force derivatives of v0 by centered differences of point evaluations.
fn fd_derivatives(gs: &GroundState, t: f64, x: Vec2) -> Result<(Vec2, Vec2, Mat2)> {
    let v = gs.velocity(t, x)?;
    let a = gs.velocity(t + FD_STEP, x)?;
    let b = gs.velocity((t - FD_STEP).max(0.0), x)?;
    let dtt = t + FD_STEP - (t - FD_STEP).max(0.0);
    let dt = [(a[0] - b[0]) / dtt, (a[1] - b[1]) / dtt];
    let j = gs.jacobian_fd(t, x)?;
    Ok((v, dt, j))
}

/// (pro): X_{v0} v0 = 0, div v0 = 0 and grad_{t,x} p0 = 0 on the sample points.
/// Closed-form ground states are checked analytically; others by differencing with an allowance of 1e-6.
pub fn verify_pro(gs: &GroundState, points: &[(f64, Vec2)], tol: f64) -> Result<ProReport> {
    let mut acc: f64 = 0.0;
    let mut div: f64 = 0.0;
    let allowance = if gs.is_analytic() { 0.0 } else { 1e-6 };
    for &(t, x) in points {
        let (v, dt, j) = if gs.is_analytic() { (gs.velocity(t, x)?, gs.dt_velocity(t, x)?, gs.jacobian(t, x)?) } else { fd_derivatives(gs, t, x)? };
        let a = [dt[0] + j[0][0] * v[0] + j[0][1] * v[1], dt[1] + j[1][0] * v[0] + j[1][1] * v[1]];
        acc = acc.max(a[0].hypot(a[1]));
        div = div.max((j[0][0] + j[1][1]).abs());
    }
    let g = gs.p0.grad();
    let gp = if points.is_empty() { 0.0 } else { (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt() };
    let lim = tol + allowance;
    Ok(ProReport { accel_defect: acc, div_defect: div, grad_p_defect: gp, allowance, pass: acc <= lim && div <= lim && gp <= lim })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondReport {
    /// max |X_{v0} v0| on the wall
    pub accel_defect: f64,
    /// max |X_{v0} p0| on the wall
    pub pressure_defect: f64,
    pub pass: bool,
}

/// (cond): X_{v0} v0 = 0 and X_{v0} p0 = 0 on the wall only.
pub fn verify_cond(gs: &GroundState, wall_points: &[(f64, f64)], tol: f64) -> Result<CondReport> {
    let mut acc: f64 = 0.0;
    let mut pd: f64 = 0.0;
    let allowance = if gs.is_analytic() { 0.0 } else { 1e-6 };
    for &(t, x1) in wall_points {
        let x = [x1, 0.0];
        let (v, dt, j) = if gs.is_analytic() { (gs.velocity(t, x)?, gs.dt_velocity(t, x)?, gs.jacobian(t, x)?) } else { fd_derivatives(gs, t, x)? };
        let a = [dt[0] + j[0][0] * v[0] + j[0][1] * v[1], dt[1] + j[1][0] * v[0] + j[1][1] * v[1]];
        acc = acc.max(a[0].hypot(a[1]));
        let g = gs.p0.grad();
        pd = pd.max((g[0] + v[0] * g[1] + v[1] * g[2]).abs());
    }
    let lim = tol + allowance;
    Ok(CondReport { accel_defect: acc, pressure_defect: pd, pass: acc <= lim && pd <= lim })
}

/// v0_d / x_d: closed form when available, otherwise the quotient above `delta` and a linear
/// bridge to a one-sided wall derivative below it.
#[derive(Clone)]
pub struct FlatFactor {
    gs: GroundState,
    pub delta: f64,
}

impl FlatFactor {
    pub fn eval(&self, t: f64, x: Vec2) -> Result<f64> {
        if let Some(v) = self.gs.flat_analytic(t, x) {
            return Ok(v);
        }
        let d = self.delta;
        if x[1] >= d {
            return Ok(self.gs.velocity(t, x)?[1] / x[1]);
        }
        let v1 = self.gs.velocity(t, [x[0], d])?[1];
        let v2 = self.gs.velocity(t, [x[0], 2.0 * d])?[1];
        let v0 = self.gs.velocity(t, [x[0], 0.0])?[1];
        let at_wall = (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * d);
        let at_delta = v1 / d;
        Ok(at_wall + (x[1] / d) * (at_delta - at_wall))
    }
}

pub fn normal_flat_factor(gs: &GroundState, delta: f64) -> Result<FlatFactor> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    for k in 0..16 {
        let x1 = gs.period * k as f64 / 16.0;
        for &t in &[0.0, 0.5 * gs.t0] {
            let v = gs.velocity(t, [x1, 0.0])?;
            if v[1].abs() > 1e-10 {
                return Err(Error::WallCondition { defect: v[1].abs() });
            }
        }
    }
    Ok(FlatFactor { gs: gs.clone(), delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_jacobian_is_nilpotent() {
        let j = build_shear_initial().jacobian([0.3, 0.7]);
        let sq = [[j[0][0] * j[0][0] + j[0][1] * j[1][0], j[0][0] * j[0][1] + j[0][1] * j[1][1]], [j[1][0] * j[0][0] + j[1][1] * j[1][0], j[1][0] * j[0][1] + j[1][1] * j[1][1]]];
        assert_eq!(sq, [[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn poly_eval_and_derivative() {
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative().eval(2.0), 14.0);
    }

    #[test]
    fn shear_lifespan_is_quarter() {
        let gs = GroundState::shear(1.0, 0.0, std::f64::consts::TAU);
        assert!((gs.t0 - 0.25).abs() < 1e-15);
    }
}

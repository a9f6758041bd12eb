//! Python module `ebl`: equation of state, ground states, WKB expansions, residual sweeps,
//! direct-solver checks and field files. Arrays cross the boundary as flat lists plus a shape.

use ebl_core::direct;
use ebl_core::eos;
use ebl_core::ground_state;
use ebl_core::io::FlatField;
use ebl_core::wkb;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: ebl_core::Error) -> PyErr {
    match e {
        ebl_core::Error::InvalidInput(_) | ebl_core::Error::GridTooCoarse(_) | ebl_core::Error::Admissibility { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct EosModel {
    inner: eos::EosModel,
}

#[pymethods]
impl EosModel {
    #[new]
    #[pyo3(signature = (gamma = 1.4))]
    fn new(gamma: f64) -> PyResult<Self> {
        Ok(EosModel { inner: eos::EosModel::new(gamma).map_err(err)? })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    fn rho(&self, p: f64, s: f64) -> PyResult<f64> {
        self.inner.rho(p, s).map_err(err)
    }

    fn alpha(&self, p: f64, s: f64) -> PyResult<f64> {
        self.inner.alpha(p, s).map_err(err)
    }

    fn entropy(&self, p: f64, rho: f64) -> f64 {
        self.inner.entropy(p, rho)
    }

    fn __repr__(&self) -> String {
        format!("EosModel(gamma={})", self.inner.gamma)
    }
}

#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct GroundState {
    inner: ground_state::GroundState,
}

#[pymethods]
impl GroundState {
    #[staticmethod]
    #[pyo3(signature = (p0 = 1.0, s0 = 0.0, period = std::f64::consts::TAU))]
    fn shear(p0: f64, s0: f64, period: f64) -> Self {
        GroundState { inner: ground_state::GroundState::shear(p0, s0, period) }
    }

    /// v = (x2 + a t, 0); violates the wall conditions for a != 0.
    #[staticmethod]
    #[pyo3(signature = (a, p0 = 1.0, s0 = 0.0, period = std::f64::consts::TAU))]
    fn accelerated(a: f64, p0: f64, s0: f64, period: f64) -> Self {
        GroundState { inner: ground_state::GroundState::accelerated(a, p0, s0, period) }
    }

    #[getter]
    fn lifespan(&self) -> f64 {
        self.inner.t0
    }

    fn velocity(&self, t: f64, x1: f64, x2: f64) -> PyResult<(f64, f64)> {
        let v = self.inner.velocity(t, [x1, x2]).map_err(err)?;
        Ok((v[0], v[1]))
    }

    /// (accel, div, grad p) defects at seeded random points and the pass flag.
    #[pyo3(signature = (tol = 1e-10, seed = 0, n = 200))]
    fn verify_pro(&self, tol: f64, seed: u64, n: usize) -> PyResult<(f64, f64, f64, bool)> {
        let pts = ground_state::random_points(seed, n, 0.25 * self.inner.t0.min(0.8), self.inner.period, 1.0);
        let r = ground_state::verify_pro(&self.inner, &pts, tol).map_err(err)?;
        Ok((r.accel_defect, r.div_defect, r.grad_p_defect, r.pass))
    }
}

/// Sampled field with axes (component, t, x1, x2); components v1, v2, p, s.
#[pyclass(frozen)]
struct StateField {
    inner: eos::StateField,
}

const COMPONENTS: [&str; 4] = ["v1", "v2", "p", "s"];

#[pymethods]
impl StateField {
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        let g = self.inner.grid;
        (g.t.n, g.x1.n, g.x2.n)
    }

    fn axes(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let g = self.inner.grid;
        (g.t.points(), g.x1.points(), g.x2.points())
    }

    /// Flat row-major (t, x1, x2) values of one component.
    fn component(&self, name: &str) -> PyResult<Vec<f64>> {
        let c = COMPONENTS.iter().position(|&n| n == name).ok_or_else(|| PyValueError::new_err(format!("unknown component {name}")))?;
        Ok(self.inner.comps[c].clone())
    }

    fn at(&self, name: &str, it: usize, i1: usize, i2: usize) -> PyResult<f64> {
        let c = COMPONENTS.iter().position(|&n| n == name).ok_or_else(|| PyValueError::new_err(format!("unknown component {name}")))?;
        let g = self.inner.grid;
        if it >= g.t.n || i1 >= g.x1.n || i2 >= g.x2.n {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.comps[c][g.index(it, i1, i2)])
    }

    fn write(&self, path: &str) -> PyResult<()> {
        FlatField::from_state(&self.inner).write(std::path::Path::new(path)).map_err(err)
    }
}

#[pyclass(frozen)]
struct WkbExpansion {
    inner: wkb::WkbExpansion,
}

fn sweep_grid(refine: f64, t_center: f64, levels: usize) -> wkb::SweepGrid {
    wkb::SweepGrid { refine, t_center, levels, ..Default::default() }
}

#[pymethods]
impl WkbExpansion {
    /// Builds the profiles of order <= `order` on a periodic strip.
    #[new]
    #[pyo3(signature = (ground_state, eos, order = 1, n1 = 256, n2 = 16, intervals = 384, amp_w = 0.5, amp_v = 0.5, ell = 2.0, amp_vbar = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        ground_state: &GroundState,
        eos: &EosModel,
        order: usize,
        n1: usize,
        n2: usize,
        intervals: usize,
        amp_w: f64,
        amp_v: f64,
        ell: f64,
        amp_vbar: f64,
    ) -> PyResult<Self> {
        let cfg = wkb::ProfileConfig { n1, n2, intervals, ..Default::default() };
        let setup = wkb::LayerSetup { amp_w, amp_v, ell, amp_vbar };
        let gs = ground_state.inner.clone();
        let e = eos.inner;
        let inner = py.detach(|| wkb::WkbExpansion::build(&gs, &e, &setup, order, &cfg)).map_err(err)?;
        Ok(WkbExpansion { inner })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn fit_residual(&self) -> f64 {
        self.inner.fit_residual
    }

    fn truncated(&self, order: usize) -> PyResult<WkbExpansion> {
        Ok(WkbExpansion { inner: self.inner.truncated(order).map_err(err)? })
    }

    fn zeroed(&self) -> WkbExpansion {
        WkbExpansion { inner: self.inner.zeroed() }
    }

    /// u_a^eps on the sweep window: dx2 = eps / refine, `levels` times centred at `t_center`.
    #[pyo3(signature = (eps, refine = 16.0, t_center = 0.15, levels = 5))]
    fn assemble(&self, eps: f64, refine: f64, t_center: f64, levels: usize) -> PyResult<StateField> {
        let g = sweep_grid(refine, t_center, levels).grid(self.inner.profiles[0].w_tilde.x1, eps).map_err(err)?;
        Ok(StateField { inner: wkb::assemble(&self.inner, eps, &g).map_err(err)? })
    }

    /// Max polarization violation of the order-0 layer and the pass flag at `tol`.
    #[pyo3(signature = (tol = 0.0))]
    fn check_polarization(&self, tol: f64) -> (f64, bool) {
        let r = wkb::check_polarization(&self.inner, tol);
        (r.max_violation, r.pass)
    }

    /// Residual sweep; returns a dict with `rows` [(eps, l2, linf)], `slope`, `r2`,
    /// `refinement_change` and `exact`.
    #[pyo3(signature = (eps, refine = 16.0, refinement_check = false))]
    fn residual_sweep<'py>(&self, py: Python<'py>, eps: Vec<f64>, refine: f64, refinement_check: bool) -> PyResult<Bound<'py, PyDict>> {
        let rule = sweep_grid(refine, 0.15, 5);
        let r = py.detach(|| wkb::residual_sweep(&self.inner, &eps, &rule, refinement_check)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("rows", r.rows.iter().map(|x| (x.eps, x.l2, x.linf)).collect::<Vec<_>>())?;
        d.set_item("slope", r.slope_l2.map(|x| x.0))?;
        d.set_item("r2", r.slope_l2.map(|x| x.1))?;
        d.set_item("refinement_change", r.refinement_change)?;
        d.set_item("exact", r.exact)?;
        Ok(d)
    }

    /// H1 distance between a direct solve started from u_a^eps(0) and u_a^eps.
    #[pyo3(signature = (eps, refine = 8.0, t_final = 0.2, n_out = 5))]
    fn direct_distance(&self, py: Python<'_>, eps: f64, refine: f64, t_final: f64, n_out: usize) -> PyResult<f64> {
        let rule = direct::StabilityRule { refine, t_final, n_out, ..Default::default() };
        let exp = &self.inner;
        py.detach(|| {
            let sim = rule.sim(exp.profiles[0].w_tilde.x1.n, exp.gs.period, eps);
            let init = direct::init_from_wkb(exp, eps, &sim)?;
            let traj = direct::run(&init, &sim, &exp.eos, rule.n_out)?;
            Ok(direct::compare_h1(&traj, exp, eps)?.h1)
        })
        .map_err(err)
    }
}

/// Least-squares slope and r^2 of log y against log x.
#[pyfunction]
fn fit_loglog_slope(pairs: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    wkb::fit_loglog_slope(&pairs).map_err(err)
}

/// Steady-shear drift, Sod relative L1 error and mass defect of the direct solver.
#[pyfunction]
#[pyo3(signature = (gamma = 1.4, sod_n1 = 400, shear_steps = 20))]
fn sanity_checks(py: Python<'_>, gamma: f64, sod_n1: usize, shear_steps: usize) -> PyResult<(f64, f64, f64)> {
    let e = eos::EosModel::new(gamma).map_err(err)?;
    let r = py.detach(|| direct::sanity_checks(&e, sod_n1, shear_steps)).map_err(err)?;
    Ok((r.shear_drift_per_step, r.sod_l1_relative, r.sod_mass_defect))
}

/// Reads a flat binary field file: (axes, flat data).
#[pyfunction]
fn read_field(path: &str) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let f = FlatField::read(std::path::Path::new(path)).map_err(err)?;
    Ok((f.axes, f.data))
}

#[pymodule]
fn ebl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<EosModel>()?;
    m.add_class::<GroundState>()?;
    m.add_class::<StateField>()?;
    m.add_class::<WkbExpansion>()?;
    m.add_function(wrap_pyfunction!(fit_loglog_slope, m)?)?;
    m.add_function(wrap_pyfunction!(sanity_checks, m)?)?;
    m.add_function(wrap_pyfunction!(read_field, m)?)?;
    Ok(())
}

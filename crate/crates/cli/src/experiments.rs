//! One function per experiment kind. Each writes its artifacts into the run directory and
//! registers its checks.

use crate::config::{ExperimentConfig, GroundKindName};
use crate::report::{Check, Run};
use ebl_core::direct::{compare_h1, init_from_wkb, run, sanity_checks, stability_sweep};
use ebl_core::eos::{SpaceTimeGrid, V2};
use ebl_core::grid::Axis;
use ebl_core::ground_state::*;
use ebl_core::io::{fmt, FlatField};
use ebl_core::norms::*;
use ebl_core::wkb::*;
use ebl_core::{Error, Result};

fn s(x: f64) -> String {
    fmt(x)
}

fn stage<T>(r: Result<T>, name: &str) -> Result<T> {
    r.map_err(|e| e.at_stage(name))
}

/// Expansions built once per run.
pub struct Cache {
    main: Option<WkbExpansion>,
}

impl Cache {
    pub fn new() -> Cache {
        Cache { main: None }
    }

    /// The expansion on `cfg.profiles` at the highest order any requested experiment needs.
    fn expansion(&mut self, cfg: &ExperimentConfig, n: usize) -> Result<WkbExpansion> {
        let need = n.max(if cfg.experiment == crate::config::Experiment::All { cfg.order.max(cfg.sweep.order) } else { n });
        if self.main.as_ref().is_none_or(|e| e.n < n) {
            let gs = cfg.ground_state()?;
            let exp = stage(WkbExpansion::build(&gs, &cfg.eos()?, &cfg.layer, need, &cfg.profiles), "layer_profiles")?;
            self.main = Some(exp);
        }
        self.main.as_ref().expect("built above").truncated(n)
    }
}

impl Default for Cache {
    fn default() -> Self {
        Cache::new()
    }
}

pub fn ground_state(cfg: &ExperimentConfig, out: &mut Run) -> Result<()> {
    let gs = cfg.ground_state()?;
    let g = &cfg.ground_state;
    let width = if g.kind == GroundKindName::Recipe { g.recipe_width } else { g.period };
    let tol = if gs.is_analytic() { 1e-10 } else { 1e-8 };
    let t_max = 0.25 * gs.t0.min(0.8);
    let pts = random_points(cfg.seed, 200, t_max, width, 1.0);
    let pro = stage(verify_pro(&gs, &pts, tol), "ground_state")?;
    let wall: Vec<(f64, f64)> = (0..32).map(|k| (t_max * k as f64 / 32.0, width * k as f64 / 32.0)).collect();
    let cond = stage(verify_cond(&gs, &wall, tol), "ground_state")?;
    let mut rows = vec![
        vec!["lifespan".into(), s(gs.t0)],
        vec!["pro_accel_defect".into(), s(pro.accel_defect)],
        vec!["pro_div_defect".into(), s(pro.div_defect)],
        vec!["pro_grad_p_defect".into(), s(pro.grad_p_defect)],
        vec!["cond_accel_defect".into(), s(cond.accel_defect)],
        vec!["cond_pressure_defect".into(), s(cond.pressure_defect)],
    ];
    let h = match g.kind {
        GroundKindName::Shear => Some(build_shear_initial()),
        GroundKindName::Recipe => Some(build_recipe_initial(Poly::new(g.recipe_a.clone()), Poly::new(g.recipe_f.clone()))?),
        GroundKindName::Accelerated => None,
    };
    if let Some(h) = &h {
        let nil = check_nilpotent(h, &sample_box(width, 1.0, 17), 1e-10);
        rows.push(vec!["nilpotent_trace".into(), s(nil.max_trace)]);
        rows.push(vec!["nilpotent_det".into(), s(nil.max_det)]);
        out.check(Check::flag("ground-state/nilpotent", nil.pass));
    }
    out.csv("ground_state.csv", "ground-state defects", &["quantity", "value"], &rows)?;
    out.check(Check::at_most("ground-state/pro", pro.accel_defect.max(pro.div_defect).max(pro.grad_p_defect), tol * pro.allowance.max(1.0)));
    out.check(Check::at_most("ground-state/cond", cond.accel_defect.max(cond.pressure_defect), tol));
    Ok(())
}

pub fn layer(cfg: &ExperimentConfig, cache: &mut Cache, out: &mut Run) -> Result<()> {
    let exp = cache.expansion(cfg, cfg.order)?;
    let mut rows = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for ps in &exp.profiles {
        let j = ps.order;
        let parts = [("w_tilde", &ps.w_tilde), ("vt_layer", &ps.vt.layer), ("vd_layer", &ps.vd.layer), ("p_layer", &ps.p.layer)];
        for (name, f) in parts {
            out.field(&format!("{name}_{j}.bin"), &format!("order-{j} {name} profile (t, x1, x2, X)"), &FlatField::from_layer(f))?;
            rows.push(vec![j.to_string(), name.into(), s(f.max_abs()), s(f.tail_ratio())]);
            worst_tail = worst_tail.max(f.tail_ratio());
        }
        let regular = [("vt_regular", &ps.vt.regular), ("vd_regular", &ps.vd.regular), ("p_regular", &ps.p.regular), ("w_bar_next", &ps.w_bar_next)];
        for (name, f) in regular {
            out.field(&format!("{name}_{j}.bin"), &format!("order-{j} {name} (t, x1, x2)"), &FlatField::from_regular(f))?;
            rows.push(vec![j.to_string(), name.into(), s(f.max_abs()), "nan".into()]);
        }
    }
    out.csv("layer_summary.csv", "profile magnitudes and decay tails", &["order", "part", "max_abs", "tail_ratio"], &rows)?;
    let pol = check_polarization(&exp, 0.0);
    out.check(Check::at_most("layer/polarization", pol.max_violation, 0.0));
    out.check(Check::at_most("layer/decay-tail", worst_tail, 1e-8));
    if exp.n == 1 {
        out.check(Check::at_most("layer/order-one-fit-residual", exp.fit_residual, 1e-3));
    }
    Ok(())
}

pub fn assemble_run(cfg: &ExperimentConfig, cache: &mut Cache, out: &mut Run) -> Result<()> {
    let exp = cache.expansion(cfg, cfg.order)?;
    let eps = cfg.assemble.eps;
    let grid = stage(cfg.sweep.grid.grid(exp.profiles[0].w_tilde.x1, eps), "wkb_assembler")?;
    let ua = stage(assemble(&exp, eps, &grid), "wkb_assembler")?;
    out.field("ua.bin", &format!("assembled approximate solution at eps = {} (comp, t, x1, x2)", fmt(eps)), &FlatField::from_state(&ua))?;
    let it = grid.t.n / 2;
    let rows: Vec<Vec<String>> = (0..grid.x2.n)
        .map(|i2| {
            let k = grid.index(it, 0, i2);
            let mut r = vec![s(grid.x2.at(i2))];
            r.extend((0..4).map(|c| s(ua.comps[c][k])));
            r
        })
        .collect();
    out.csv("ua_profile.csv", "normal profile of the assembled solution at x1 = 0, central time", &["x2", "v1", "v2", "p", "s"], &rows)?;
    let mut wall: f64 = 0.0;
    for t in 0..grid.t.n {
        for i1 in 0..grid.x1.n {
            wall = wall.max(ua.comps[V2][grid.index(t, i1, 0)].abs());
        }
    }
    out.check(Check::at_most("assemble/wall-normal-velocity", wall, 0.0));
    let red = stage(check_nonsingular_reduction(&exp.truncated(0)?, &cfg.sweep.eps, &cfg.sweep.grid), "wkb_assembler")?;
    let rows: Vec<Vec<String>> = red.rows.iter().map(|&(e, r)| vec![s(e), s(r)]).collect();
    out.csv("reduction.csv", "sup |K1(u_a) - K1(u0)| / eps per eps", &["eps", "k1_over_eps"], &rows)?;
    out.check(Check::at_most("assemble/reduction-spread", red.spread, 2.0));
    Ok(())
}

fn sweep_rows(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let mut v = vec!["eps".to_string(), s(r.eps), r.grid_id.clone(), s(r.l2), s(r.linf)];
            v.extend(r.l2_comp.iter().map(|&x| s(x)));
            v.push("nan".into());
            v
        })
        .collect()
}

fn slope_row(l2: Option<(f64, f64)>, linf: Option<(f64, f64)>) -> Vec<String> {
    let (a, r2) = l2.unwrap_or((f64::NAN, f64::NAN));
    let b = linf.map_or(f64::NAN, |x| x.0);
    let mut v = vec!["slope".to_string(), "nan".into(), "fit".into(), s(a), s(b)];
    v.extend(std::iter::repeat_n("nan".to_string(), 4));
    v.push(s(r2));
    v
}

const SWEEP_HEADER: [&str; 10] = ["kind", "eps", "grid_id", "l2", "linf", "l2_v1", "l2_v2", "l2_p", "l2_s", "r2"];

pub fn residual_sweep_run(cfg: &ExperimentConfig, cache: &mut Cache, out: &mut Run) -> Result<()> {
    let exp = cache.expansion(cfg, cfg.sweep.order)?;
    let r = stage(residual_sweep(&exp, &cfg.sweep.eps, &cfg.sweep.grid, cfg.sweep.refinement_check), "wkb_assembler")?;
    let mut rows = sweep_rows(&r.rows);
    rows.push(slope_row(r.slope_l2, r.slope_linf));
    out.csv("residual_sweep.csv", &format!("Euler residual of the order-{} expansion per eps, with log-log slope", r.n), &SWEEP_HEADER, &rows)?;
    if !r.refined.is_empty() {
        let fine: Vec<(f64, f64)> = r.refined.iter().map(|x| (x.eps, x.l2)).collect();
        let mut rows = sweep_rows(&r.refined);
        rows.push(slope_row(fit_loglog_slope(&fine).ok(), None));
        out.csv("residual_sweep_refined.csv", "same sweep under one grid refinement", &SWEEP_HEADER, &rows)?;
    }
    let target = 1.5 + r.n as f64;
    let (slope, r2) = r.slope_l2.unwrap_or((f64::NAN, f64::NAN));
    out.check(Check::within(&format!("residual-sweep/slope-n{}", r.n), slope, target - 0.3, target + 0.3));
    out.check(Check::at_least("residual-sweep/r2", r2, 0.98));
    if cfg.sweep.refinement_check {
        out.check(Check::below("residual-sweep/refinement-change", r.refinement_change.unwrap_or(f64::NAN), 0.1));
    }
    Ok(())
}

pub fn norms(cfg: &ExperimentConfig, out: &mut Run) -> Result<()> {
    let n = &cfg.norms;
    let strip = |nt: usize, n1: usize, n2: usize, h: f64| SpaceTimeGrid {
        t: Axis::closed(0.0, n.horizon, nt),
        x1: Axis::periodic(0.0, std::f64::consts::TAU, n1),
        x2: Axis::closed(0.0, h, n2 + 1),
    };
    let family = |e: f64, level: usize| -> Result<ScalarField> {
        let n2 = (n.height * n.refine * 2f64.powi(level as i32) / e).round() as usize;
        Ok(ScalarField::from_fn(strip(n.nt, n.n1, n2, n.height), |_, x1, x2| (-x2 / e).exp() * x1.sin()))
    };
    let sob = stage(check_sobolev_embedding(family, &n.eps, n.m, n.lambda, n.horizon), "conormal_norms")?;
    let rows: Vec<Vec<String>> = sob.rows.iter().map(|&(e, a, b)| vec![s(e), s(a), s(b)]).collect();
    out.csv("sobolev.csv", "embedding ratio with and without the sqrt(eps) factor", &["eps", "ratio", "ratio_without_sqrt_eps"], &rows)?;
    out.check(Check::at_most("norms/sobolev-spread", sob.spread, 2.0));
    out.check(Check::at_least("norms/sobolev-control-spread", sob.spread_control, 4.0));

    let levels: Vec<ScalarField> = n.levels.iter().map(|&k| ScalarField::from_fn(strip(k / 2 + 1, k, k, 1.0), |_, x1, _| x1.sin())).collect();
    let moser = stage(check_moser(|g| g * g, &levels, 2, &n.lambdas, n.horizon, 1.0), "conormal_norms")?;
    let levels: Vec<ScalarField> = n.levels.iter().map(|&k| ScalarField::from_fn(strip(k / 2 + 1, k, k, 1.0), |t, x1, x2| (-t).exp() * x1.sin() * (-x2).exp())).collect();
    let gn = stage(check_gagliardo_nirenberg(&levels, 2, 1, 4, &n.lambdas, n.horizon), "conormal_norms")?;
    for (name, rep) in [("moser", &moser), ("gagliardo_nirenberg", &gn)] {
        let rows: Vec<Vec<String>> = rep.rows.iter().map(|&(l, lam, a, b, c)| vec![n.levels[l].to_string(), s(lam), s(a), s(b), s(c)]).collect();
        out.csv(&format!("{name}.csv"), &format!("{name} inequality sides per resolution and lambda"), &["n", "lambda", "lhs", "rhs", "ratio"], &rows)?;
    }
    out.check(Check::at_most("norms/moser-spread", moser.spread, 2.0));
    out.check(Check::at_most("norms/gagliardo-nirenberg-spread", gn.spread, 2.0));

    let e = n.report_eps;
    let u = family(e, 0)?;
    let p = NormParams::new(n.report_m, 1.0, n.horizon, e)?;
    let rep = stage(NormReport::compute(&u, &p, &format!("dx2=eps/{}", n.refine)), "conormal_norms")?;
    let rows: Vec<Vec<String>> = rep.rows.iter().map(|r| vec![r.norm.clone(), r.m.to_string(), s(r.lambda), s(r.eps), s(r.value), r.grid_id.clone(), s(r.horizon)]).collect();
    out.csv("norms.csv", "every norm of the layer family member at report_eps", &["norm", "m", "lambda", "eps", "value", "grid_id", "horizon"], &rows)?;
    Ok(())
}

pub fn stability(cfg: &ExperimentConfig, out: &mut Run) -> Result<()> {
    let st = &cfg.stability;
    let eos = cfg.eos()?;
    let san = stage(sanity_checks(&eos, st.sod_n1, st.shear_steps), "direct_solver")?;
    let rows = vec![
        vec!["shear_drift_per_step".into(), s(san.shear_drift_per_step)],
        vec!["sod_l1_relative".into(), s(san.sod_l1_relative)],
        vec!["sod_mass_defect".into(), s(san.sod_mass_defect)],
    ];
    out.csv("sanity.csv", "direct-solver sanity checks", &["quantity", "value"], &rows)?;
    out.check(Check::at_most("stability/shear-drift", san.shear_drift_per_step, 1e-8));
    out.check(Check::at_most("stability/sod-l1", san.sod_l1_relative, 0.02));
    out.check(Check::at_most("stability/sod-mass", san.sod_mass_defect, 1e-10));

    let profiles = ProfileConfig { n1: st.n1, ..cfg.profiles.clone() };
    let exp = stage(WkbExpansion::build(&cfg.ground_state()?, &eos, &cfg.layer, st.order, &profiles), "layer_profiles")?;
    let r = stage(stability_sweep(&exp, &st.eps, &st.rule, st.refinement_check), "direct_solver")?;
    let mut rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|x| {
            vec![
                "eps".into(),
                s(x.eps),
                s(x.h1),
                s(x.h1_rescaled),
                s(x.h1_refined.unwrap_or(f64::NAN)),
                s(x.mass_defect),
                s(x.wall_ratio),
                x.steps.to_string(),
                x.failure.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let (slope, r2) = r.slope.unwrap_or((f64::NAN, f64::NAN));
    rows.push(vec!["slope".into(), "nan".into(), s(slope), s(r2), "nan".into(), "nan".into(), "nan".into(), "0".into(), String::new()]);
    let header = ["kind", "eps", "h1", "h1_rescaled", "h1_refined", "mass_defect", "wall_ratio", "steps", "failure"];
    out.csv("stability.csv", "H1 distance between the direct solve and the expansion per eps", &header, &rows)?;
    out.check(Check::flag("stability/all-runs-completed", r.rows.iter().all(|x| x.failure.is_none())));
    out.check(Check::flag("stability/monotone", r.monotone));
    out.check(Check::at_least("stability/slope", slope, 0.4));
    out.check(Check::at_most("stability/mass-defect", r.rows.iter().map(|x| x.mass_defect).fold(0.0, f64::max), 1e-10));
    out.check(Check::at_most("stability/wall-ratio", r.rows.iter().map(|x| x.wall_ratio).fold(0.0, f64::max), 1e-3));
    if st.refinement_check {
        out.check(Check::below("stability/refinement-change", r.refinement_change.unwrap_or(f64::NAN), 0.15));
    }

    // snapshot dump at the largest eps
    let eps = st.eps.iter().cloned().fold(0.0, f64::max);
    let sim = st.rule.sim(st.n1, exp.gs.period, eps);
    let init = stage(init_from_wkb(&exp, eps, &sim), "direct_solver")?;
    let traj = stage(run(&init, &sim, &eos, st.rule.n_out), "direct_solver")?;
    let d = compare_h1(&traj, &exp, eps)?;
    if (d.h1 - r.rows.iter().find(|x| x.eps == eps).map_or(d.h1, |x| x.h1)).abs() > 1e-12 * d.h1.max(1e-300) {
        return Err(Error::InvalidInput("snapshot run does not reproduce the sweep".into()));
    }
    out.field("direct_snapshots.bin", &format!("direct solve (v1, v2, p, s) at eps = {} (comp, t, x1, x2)", fmt(eps)), &FlatField::from_trajectory(&traj, &eos))?;
    let rows: Vec<Vec<String>> = d.l2.iter().map(|&(t, v)| vec![s(t), s(v)]).collect();
    out.csv("direct_l2.csv", "L2 distance to the expansion per output time at the largest eps", &["t", "l2"], &rows)?;
    Ok(())
}

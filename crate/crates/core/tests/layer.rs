mod common;

use ebl_core::eos::{EosModel, P, S, V1, V2};
use ebl_core::grid::Axis;
use ebl_core::ground_state::GroundState;
use ebl_core::layer::cascade::{expansion_terms, extract_inner, extract_outer, Term, TermField};
use ebl_core::layer::order0::sample_layer;
use ebl_core::layer::*;
use ebl_core::Error;
use std::f64::consts::TAU;

fn grid(n1: usize, n2: usize, x_max: f64, intervals: usize, nt: usize, t_final: f64) -> ProfileGrid {
    let times = (0..nt).map(|i| t_final * i as f64 / (nt - 1) as f64).collect();
    ProfileGrid::new(Axis::periodic(0.0, TAU, n1), Axis::closed(0.0, 1.0, n2 + 1), FastGrid::new(x_max, intervals, 4.0).unwrap(), times).unwrap()
}

fn shear() -> GroundState {
    GroundState::shear(1.0, 0.0, TAU)
}

fn max_error(f: &LayerPart, exact: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
    let mut e: f64 = 0.0;
    for (it, &t) in f.times.iter().enumerate() {
        for i1 in 0..f.x1.n {
            for i2 in 0..f.x2.n {
                for k in 0..f.fast.len() {
                    e = e.max((f.at(it, i1, i2, k) - exact(t, f.x1.at(i1), f.x2.at(i2), f.fast.nodes[k])).abs());
                }
            }
        }
    }
    e
}

#[test]
fn zero_entropy_data_stays_zero() {
    let g = grid(16, 4, 8.0, 32, 5, 0.2);
    let w = solve_entropy_layer(&shear(), &vec![0.0; g.slice_len()], &g, TransportOptions::default()).unwrap();
    assert!(w.is_zero());
}

#[test]
fn shear_entropy_layer_matches_characteristics() {
    let mut errs = Vec::new();
    for s in [1usize, 2, 4] {
        let g = grid(16 * s, 4 * s, 8.0, 32 * s, 5, 0.2);
        let init = sample_layer(&g, |x1, _, x| (-x * x).exp() * x1.sin());
        let w = solve_entropy_layer(&shear(), &init, &g, TransportOptions { dt_max: 0.05 / s as f64, ..Default::default() }).unwrap();
        errs.push(max_error(&w, |t, x1, x2, x| (-x * x).exp() * (x1 - t * x2).sin()));
    }
    assert!(errs[2] < 1e-7, "{errs:?}");
    // the interpolation is of higher than second order
    for o in common::observed_order(&errs) {
        assert!(o >= 1.8, "order {o}, errors {errs:?}");
    }
}

#[test]
fn normal_compression_scales_the_fast_variable() {
    let c = 0.8;
    let gs = GroundState::synthetic("compression", move |_, x| [0.0, c * x[1]], 1.0, 0.0, TAU, 0.25);
    let g = grid(8, 4, 10.0, 160, 5, 0.2);
    let init = sample_layer(&g, |_, _, x| (-x * x).exp());
    let w = solve_entropy_layer(&gs, &init, &g, TransportOptions::default()).unwrap();
    let e = max_error(&w, |t, _, _, x| {
        let y = x * (-c * t).exp();
        (-y * y).exp()
    });
    assert!(e < 1e-4, "error {e}");
}

#[test]
fn entropy_data_must_decay() {
    let g = grid(8, 4, 8.0, 32, 5, 0.2);
    let init = sample_layer(&g, |_, _, x| (-0.1 * x).exp());
    assert!(matches!(solve_entropy_layer(&shear(), &init, &g, TransportOptions::default()), Err(Error::DecayLost { .. })));
}

#[test]
fn tangential_layer_without_forcing_is_transported() {
    let eos = EosModel::new(1.4).unwrap();
    let g = grid(32, 8, 12.0, 96, 5, 0.2);
    let w = solve_entropy_layer(&shear(), &sample_layer(&g, |x1, _, x| 0.5 * (-x * x).exp() * x1.sin()), &g, TransportOptions::default()).unwrap();
    let zero = solve_tangential_layer(&shear(), &eos, &w, None, &vec![0.0; g.slice_len()], &g, TransportOptions::default()).unwrap();
    assert!(zero.is_zero());
    let prof = |x: f64| {
        let y = (x / 2.0).powi(2);
        (1.0 - 2.0 * y) * (-y).exp()
    };
    let init = sample_layer(&g, |x1, _, x| 0.5 * prof(x) * x1.cos());
    let v = solve_tangential_layer(&shear(), &eos, &w, None, &init, &g, TransportOptions::default()).unwrap();
    let e = max_error(&v, |t, x1, x2, x| 0.5 * prof(x) * (x1 - t * x2).cos());
    assert!(e < 1e-5, "error {e}");
}

#[test]
fn tangential_layer_with_regular_forcing_matches_characteristic_quadrature() {
    // forcing -(1 - rho_bar/rho(W)) (V1_t + x2 d1 V1 + V2) along x1 - t x2 = const, integrated by Simpson
    let eos = EosModel::new(1.4).unwrap();
    let g = grid(64, 8, 8.0, 64, 9, 0.2);
    let wfun = |t: f64, x1: f64, x2: f64, x: f64| 0.5 * (-x * x).exp() * (x1 - t * x2).sin();
    let w = solve_entropy_layer(&shear(), &sample_layer(&g, |x1, x2, x| wfun(0.0, x1, x2, x)), &g, TransportOptions::default()).unwrap();
    // manufactured regular velocity V1 = t cos x1, V2 = 0
    let mut v1 = RegularField::zeros(&g);
    for (it, &t) in g.times.iter().enumerate() {
        for i1 in 0..g.x1.n {
            for i2 in 0..g.x2.n {
                v1.data[(it * g.x1.n + i1) * g.x2.n + i2] = t * g.x1.at(i1).cos();
            }
        }
    }
    let v2 = RegularField::zeros(&g);
    let v = solve_tangential_layer(&shear(), &eos, &w, Some(RegularVelocity { v1: &v1, v2: &v2 }), &vec![0.0; g.slice_len()], &g, TransportOptions::default()).unwrap();
    let forcing = |t: f64, x1: f64, x2: f64, x: f64| {
        let rho_w = eos.rho(1.0, wfun(t, x1, x2, x)).unwrap();
        let bracket = x1.cos() - x2 * t * x1.sin();
        -(1.0 - 1.0 / rho_w) * bracket
    };
    let exact = |t: f64, x1: f64, x2: f64, x: f64| {
        let n = 200;
        let h = t / n as f64;
        (0..=n)
            .map(|k| {
                let s = k as f64 * h;
                let wgt = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                wgt * forcing(s, x1 - (t - s) * x2, x2, x)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let e = max_error(&v, exact);
    let scale = v.max_abs();
    assert!(scale > 1e-3);
    assert!(e < 1e-3 * scale, "error {e}, scale {scale}");
}

#[test]
fn regular_corrector_examples() {
    let eos = EosModel::new(1.4).unwrap();
    let g = grid(32, 16, 8.0, 16, 5, 0.2);
    let r = solve_regular_corrector(&shear(), &eos, |_, _| [0.0; 4], &g, RegularForcing::default(), RegularOptions::default()).unwrap();
    assert!(r.components().iter().all(|f| f.is_zero()));
    let r = solve_regular_corrector(&shear(), &eos, |_, _| [0.0, 0.0, 0.0, 0.7], &g, RegularForcing::default(), RegularOptions::default()).unwrap();
    assert!(r.v1.is_zero() && r.v2.is_zero() && r.p.is_zero());
    assert!(r.w.data.iter().all(|&x| (x - 0.7).abs() < 1e-13));
    let r = solve_regular_corrector(&shear(), &eos, |x1, x2| [x1.sin() * (-x2).exp(), 0.0, 0.0, 0.0], &g, RegularForcing::default(), RegularOptions::default()).unwrap();
    let e0 = r.energy[0].1;
    assert!(e0 > 0.0);
    for &(t, e) in &r.energy {
        assert!(e <= e0 * (2.0 * t).exp() * (1.0 + 1e-9), "E({t}) = {e}, E(0) = {e0}");
    }
}

#[test]
fn regular_corrector_rejects_incompatible_wall_data() {
    let eos = EosModel::new(1.4).unwrap();
    let g = grid(32, 16, 8.0, 16, 5, 0.2);
    let r = solve_regular_corrector(&shear(), &eos, |_, _| [0.0, 1.0, 0.0, 0.0], &g, RegularForcing::default(), RegularOptions::default());
    assert!(r.is_err());
}

fn order0_set(g: &ProfileGrid) -> ProfileSet {
    let eos = EosModel::new(1.4).unwrap();
    let mut ps = ProfileSet::zeros(0, g);
    ps.w_tilde = solve_entropy_layer(&shear(), &sample_layer(g, |x1, _, x| 0.5 * (-x * x).exp() * x1.sin()), g, TransportOptions::default()).unwrap();
    ps.vt.layer = solve_tangential_layer(&shear(), &eos, &ps.w_tilde, None, &sample_layer(g, |x1, _, x| 0.5 * (-x * x).exp() * x1.cos()), g, TransportOptions::default()).unwrap();
    ps
}

#[test]
fn polarization_examples() {
    let g = grid(16, 4, 8.0, 32, 5, 0.2);
    let ps = order0_set(&g);
    let out = polarize_leading(&ps, 0.0).unwrap();
    assert_eq!(out.vt, ps.vt);
    assert_eq!(out.w_tilde, ps.w_tilde);
    assert_eq!(out.nonpolarized_mass(), 0.0);
    let again = polarize_leading(&out, 0.0).unwrap();
    assert_eq!(again.vd, out.vd);
    assert_eq!(again.p, out.p);
    let mut noisy = ps.clone();
    let n = noisy.vd.layer.data.len();
    for (k, x) in noisy.vd.layer.data.iter_mut().enumerate() {
        *x = 1e-3 * ((k as f64) / n as f64 * 37.0).sin();
    }
    match polarize_leading(&noisy, 1e-6) {
        Err(Error::Polarization { max_violation }) => assert!((max_violation - 1e-3).abs() < 1e-5),
        other => panic!("expected a polarization error, got {other:?}"),
    }
}

#[test]
fn nonpolarized_integration() {
    let g = grid(8, 4, 24.0, 384, 4, 0.1).collapsed();
    let zero: [LayerPart; 4] = std::array::from_fn(|_| LayerPart::zeros(&g));
    let (vd, p) = integrate_nonpolarized(1, &zero, 0.0).unwrap();
    assert!(vd.is_zero() && p.is_zero());
    let mut src: [LayerPart; 4] = std::array::from_fn(|_| LayerPart::zeros(&g));
    src[V2].fill(|_, _, _, x| (-x).exp());
    let (vd, p) = integrate_nonpolarized(1, &src, 0.0).unwrap();
    assert!(vd.is_zero());
    let nodes = &g.fast.nodes;
    let e = (0..nodes.len()).map(|k| (p.at(0, 0, 0, k) - (-nodes[k]).exp()).abs()).fold(0.0, f64::max);
    assert!(e < 1e-4, "error {e}");
    // d_X of the output is minus the swapped source
    let d = (1..nodes.len() - 1).map(|k| (g.fast.derivative_at(&p.slice(0)[..nodes.len()], k) + (-nodes[k]).exp()).abs()).fold(0.0, f64::max);
    assert!(d < 1e-4, "derivative mismatch {d}");
    let mut bad = zero.clone();
    bad[S].fill(|_, _, _, x| 1e-3 * (-x).exp());
    assert!(matches!(integrate_nonpolarized(1, &bad, 1e-6), Err(Error::SourceNotNonpolarized { .. })));
    assert!(integrate_nonpolarized(0, &src, 0.0).is_err());
}

fn regular(g: &ProfileGrid, f: impl Fn(f64, f64, f64) -> f64) -> RegularField {
    let mut r = RegularField::zeros(g);
    for (it, &t) in g.times.iter().enumerate() {
        for i1 in 0..g.x1.n {
            for i2 in 0..g.x2.n {
                r.data[(it * g.x1.n + i1) * g.x2.n + i2] = f(t, g.x1.at(i1), g.x2.at(i2));
            }
        }
    }
    r
}

#[test]
fn extraction_of_exact_ground_state_is_zero() {
    let eos = EosModel::new(1.4).unwrap();
    let gs = shear();
    let g = grid(32, 8, 8.0, 32, 5, 0.2);
    let ps = ProfileSet::zeros(0, &g);
    let exp = cascade::PartialExpansion::new(&gs, &eos, expansion_terms(std::slice::from_ref(&ps)), &g).unwrap();
    let o = ExtractionOptions::for_grid(&g);
    let inner = extract_inner(&exp, &[0, 1, 2], &o).unwrap();
    assert!(inner.fields.iter().flatten().all(|f| f.max_abs() <= 1e-8));
    let outer = extract_outer(&exp, g.x2, &[1, 2], &o).unwrap();
    assert!(outer.fields.iter().flatten().all(|f| f.max_abs() <= 1e-8));
}

#[test]
fn extraction_recovers_planted_coefficients() {
    // s = eps t sin x1 and v1 = x2 + eps^2 t^2 cos x1 on the shear state:
    // A_s = sin x1 + x2 t cos x1, B_v1 = 2 t cos x1 - x2 t^2 sin x1
    let eos = EosModel::new(1.4).unwrap();
    let gs = shear();
    let g = grid(128, 8, 8.0, 16, 5, 0.2);
    let f = regular(&g, |t, x1, _| t * x1.sin());
    let h = regular(&g, |t, x1, _| t * t * x1.cos());
    let terms = || vec![Term { comp: S, power: 1, field: TermField::Regular(&f) }, Term { comp: V1, power: 2, field: TermField::Regular(&h) }];
    let exp = cascade::PartialExpansion::new(&gs, &eos, terms(), &g).unwrap();
    let o = ExtractionOptions::for_grid(&g);
    let c = extract_outer(&exp, g.x2, &[1, 2], &o).unwrap();
    assert!(c.fit_residual < 1e-8);
    let a = regular(&g, |t, x1, x2| x1.sin() + x2 * t * x1.cos());
    let b = regular(&g, |t, x1, x2| 2.0 * t * x1.cos() - x2 * t * t * x1.sin());
    let err = |u: &RegularField, v: &RegularField| u.data.iter().zip(&v.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err(&c.fields[0][S], &a) < 1e-6, "{}", err(&c.fields[0][S], &a));
    assert!(err(&c.fields[1][V1], &b) < 1e-6, "{}", err(&c.fields[1][V1], &b));
    assert!(c.fields[0][V1].max_abs() < 1e-6 && c.fields[1][S].max_abs() < 1e-6);
    assert!(c.fields[0][V2].max_abs() < 1e-8 && c.fields[0][P].max_abs() < 1e-8);
    // twice as many eps samples on the same interval
    let lo = o.eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = o.eps.iter().cloned().fold(0.0, f64::max);
    let dense = ExtractionOptions { eps: (0..16).map(|i| hi * (lo / hi).powf(i as f64 / 15.0)).collect(), ..o.clone() };
    let d = extract_outer(&exp, g.x2, &[1, 2], &dense).unwrap();
    for ord in 0..2 {
        for comp in 0..4 {
            assert!(err(&c.fields[ord][comp], &d.fields[ord][comp]) < 1e-6);
        }
    }
}

#[test]
fn extraction_rejects_bad_samples() {
    let eos = EosModel::new(1.4).unwrap();
    let gs = shear();
    let g = grid(16, 4, 8.0, 16, 5, 0.2);
    let ps = ProfileSet::zeros(0, &g);
    let exp = cascade::PartialExpansion::new(&gs, &eos, expansion_terms(std::slice::from_ref(&ps)), &g).unwrap();
    let few = ExtractionOptions { eps: vec![0.01, 0.02], degree: 5, fit_tol: 1e-6 };
    assert!(matches!(extract_inner(&exp, &[1], &few), Err(Error::Fit(_))));
    let dup = ExtractionOptions { eps: vec![0.01; 8], degree: 5, fit_tol: 1e-6 };
    assert!(matches!(extract_inner(&exp, &[1], &dup), Err(Error::Fit(_))));
}

#[test]
fn order_one_from_zero_profiles_is_zero() {
    let eos = EosModel::new(1.4).unwrap();
    let gs = shear();
    let g = grid(16, 8, 8.0, 32, 5, 0.2);
    let ps0 = ProfileSet::zeros(0, &g);
    let wall = g.collapsed();
    let init = OrderOneInit { nonpolarized: Some((vec![1e-3; wall.slice_len()], vec![0.0; wall.slice_len()])), ..Default::default() };
    let r = solve_order_one(&gs, &eos, &ps0, &g, &init, TransportOptions::default(), RegularOptions::default(), &ExtractionOptions::for_grid(&g)).unwrap();
    let p = &r.profiles;
    assert!(p.w_tilde.is_zero() && p.vt.layer.is_zero() && p.vd.layer.is_zero() && p.p.layer.is_zero());
    assert!(p.vt.regular.is_zero() && p.vd.regular.is_zero() && p.p.regular.is_zero() && p.w_bar_next.is_zero());
    // the nonpolarized part cannot be prescribed: the supplied value is ignored and its conflict reported
    assert!((r.ignored_init_conflict.unwrap() - 1e-3).abs() < 1e-15);
}

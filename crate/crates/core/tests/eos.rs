#![allow(clippy::needless_range_loop)]

mod common;

use common::strip;
use ebl_core::eos::*;
use ebl_core::Error;

fn model(g: f64) -> EosModel {
    EosModel::new(g).unwrap()
}

#[test]
fn density_examples() {
    assert_eq!(model(1.4).rho(1.0, 0.0).unwrap(), 1.0);
    assert!((model(2.0).rho(4.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn alpha_matches_difference_of_log_density() {
    let m = model(1.4);
    assert!((m.alpha(1.0, 0.0).unwrap() - 1.0 / 1.4).abs() < 1e-15);
    for &(p, s) in &[(1.0, 0.0), (0.3, 0.7), (5.0, -1.2)] {
        let h = 1e-6 * p;
        let fd = (m.rho(p + h, s).unwrap().ln() - m.rho(p - h, s).unwrap().ln()) / (2.0 * h);
        assert!((fd - m.alpha(p, s).unwrap()).abs() < 1e-8 * fd.abs());
    }
}

#[test]
fn pressure_below_floor_is_rejected() {
    let m = model(1.4);
    assert!(matches!(m.rho(0.0, 0.0), Err(Error::Admissibility { .. })));
    assert!(matches!(m.rho(1e-9, 0.0), Err(Error::Admissibility { .. })));
    assert!(matches!(m.alpha(-1.0, 0.0), Err(Error::Admissibility { .. })));
    assert!(EosModel::new(1.0).is_err());
}

#[test]
fn symmetrizer_examples() {
    // gamma = 2, p = 1/2, s = ln p gives rho = 1 and alpha = 1
    let s = symmetrizer(&model(2.0), &StateVector::new(vec![0.3, -0.2], 0.5, 0.5f64.ln())).unwrap();
    assert!((s.entries.clone() - nalgebra::DMatrix::identity(4, 4)).abs().max() < 1e-14);
    let s = symmetrizer(&model(1.4), &StateVector::new(vec![0.0, 0.0], 1.0, 0.0)).unwrap();
    let diag = [1.0, 1.0, 1.0 / 1.4, 1.0];
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { diag[i] } else { 0.0 };
            assert!((s.entries[(i, j)] - want).abs() < 1e-15);
        }
    }
}

#[test]
fn flux_kernel_and_symmetry() {
    let m = model(1.4);
    let u = StateVector::new(vec![0.4, 0.1], 1.3, 0.2);
    let mm = flux_matrix(&m, &u, &[0.0, 1.0]).unwrap();
    assert_eq!(mm.kernel_dim(1e-12), 2);
    let s = symmetrizer(&m, &u).unwrap();
    let l = &s.entries * &flux_matrix(&m, &u, &[0.3, -0.8]).unwrap().entries;
    assert!((l.clone() - l.transpose()).abs().max() < 1e-14);
    assert!((l - symmetric_flux(&[0.3, -0.8]).unwrap().entries).abs().max() < 1e-14);
    let a = flux_matrix(&m, &u, &[0.3, 0.5]).unwrap().entries;
    let b = flux_matrix(&m, &u, &[0.6, 1.0]).unwrap().entries;
    assert!((b - 2.0 * a).abs().max() < 1e-15);
    assert!(flux_matrix(&m, &u, &[0.0, 0.0]).is_err());
    assert!(flux_matrix(&m, &u, &[1.0]).is_err());
}

#[test]
fn projector_examples() {
    let p = projector_p0(2).unwrap();
    let diag = [1.0, 0.0, 0.0, 1.0];
    for i in 0..4 {
        assert_eq!(p.entries[(i, i)], diag[i]);
    }
    let l = symmetric_flux(&[0.0, 1.0]).unwrap();
    let pl = &p.entries * &l.entries;
    assert_eq!(pl.abs().max(), 0.0);
    for d in 1..5 {
        let p = projector_p0(d).unwrap();
        let c = nalgebra::DMatrix::<f64>::identity(d + 2, d + 2) - &p.entries;
        let c = OperatorMatrix { kind: MatrixKind::Projector, entries: c };
        assert_eq!(c.rank(1e-12), 2);
        assert!((&p.entries * &p.entries - &p.entries).abs().max() == 0.0);
    }
    assert!(projector_p0(0).is_err());
}

#[test]
fn residual_vanishes_on_constant_state() {
    let g = strip(0.2, 5, 16, 1.0, 9);
    let u = StateField::from_fn(g, |_, _, _| [0.3, 0.0, 1.7, 0.4]);
    let r = euler_residual(&model(1.4), &u).unwrap();
    assert!(r.max_abs() < 1e-14);
}

#[test]
fn residual_is_exact_on_linear_shear() {
    for n in [9, 17, 33] {
        let g = strip(0.2, 5, 16, 1.0, n);
        let u = StateField::from_fn(g, |_, _, x2| [x2, 0.0, 1.0, 0.0]);
        let r = euler_residual(&model(1.4), &u).unwrap();
        let h = g.x2.step;
        assert!(r.max_abs() <= 5.0 * h * h);
    }
}

#[test]
fn residual_converges_at_second_order() {
    // parallel shear f(x2) = x2^2 carrying the entropy sin(x1 - t x2^2): an exact solution
    let mut errs = Vec::new();
    for k in 0..4 {
        let n = 16 << k;
        let g = strip(0.4, n / 4 + 1, n, 1.0, n / 4 + 1);
        let u = StateField::from_fn(g, |t, x1, x2| [x2 * x2, 0.0, 1.0, 0.1 * (x1 - t * x2 * x2).sin()]);
        errs.push(euler_residual(&model(1.4), &u).unwrap().max_abs());
    }
    for o in common::observed_order(&errs) {
        assert!((1.8..=2.2).contains(&o), "order {o}, errors {errs:?}");
    }
    let g = strip(0.4, 17, 64, 1.0, 17);
    let u = StateField::from_fn(g, |t, x1, x2| [x2 * x2, 0.0, 1.0, 0.1 * (x1 - t * x2 * x2).sin()]);
    let r4 = euler_residual4(&model(1.4), &u).unwrap().max_abs();
    assert!(r4 < 0.1 * euler_residual(&model(1.4), &u).unwrap().max_abs());
}

#[test]
fn residual_detects_non_solution() {
    let g = strip(0.2, 5, 32, 1.0, 17);
    let u = StateField::from_fn(g, |_, x1, x2| [x2, 0.0, 1.0 + 0.5 * x1.sin(), 0.0]);
    assert!(euler_residual(&model(1.4), &u).unwrap().max_abs() > 0.1);
}

#[test]
fn residual_rejects_tiny_grids_and_bad_pressure() {
    let g = strip(0.2, 3, 16, 1.0, 9);
    assert!(matches!(euler_residual(&model(1.4), &StateField::zeros(g)), Err(Error::GridTooCoarse(_))));
    let g = strip(0.2, 5, 16, 1.0, 9);
    assert!(matches!(euler_residual(&model(1.4), &StateField::zeros(g)), Err(Error::Admissibility { .. })));
}

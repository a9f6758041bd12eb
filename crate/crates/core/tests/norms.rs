mod common;

use common::strip;
use ebl_core::eos::SpaceTimeGrid;
use ebl_core::grid::Axis;
use ebl_core::norms::*;

fn unit_box(nt: usize, n1: usize, n2: usize) -> SpaceTimeGrid {
    SpaceTimeGrid { t: Axis::closed(0.0, 1.0, nt), x1: Axis::periodic(0.0, 1.0, n1), x2: Axis::closed(0.0, 1.0, n2) }
}

fn basis() -> VectorFieldBasis {
    VectorFieldBasis::new(2).unwrap()
}

#[test]
fn cutoff_shape() {
    for &r in &[0.0, 0.3, 1.0] {
        assert_eq!(cutoff(r), r);
    }
    for &r in &[2.0, 2.5, 10.0] {
        assert_eq!(cutoff(r), 1.0);
    }
    assert_eq!(cutoff(-0.5), -0.5);
    assert!((1.0..=2.0).all_between(|r| cutoff(r) >= 1.0 - 1e-12 && cutoff(r) <= 1.3));
    assert!(VectorFieldBasis::new(3).is_err());
}

trait AllBetween {
    fn all_between(self, f: impl Fn(f64) -> bool) -> bool;
}

impl AllBetween for std::ops::RangeInclusive<f64> {
    fn all_between(self, f: impl Fn(f64) -> bool) -> bool {
        (0..=200).all(|i| f(self.start() + (self.end() - self.start()) * i as f64 / 200.0))
    }
}

#[test]
fn vector_fields_on_simple_functions() {
    let g = unit_box(9, 16, 17);
    let one = ScalarField::from_fn(g, |_, _, _| 1.0);
    for alpha in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [0, 0, 2]] {
        assert!(apply_z(&basis(), alpha, &one).unwrap().max_abs() < 1e-13);
    }
    let lin = ScalarField::from_fn(g, |_, _, x2| x2);
    let z = apply_z(&basis(), [0, 0, 1], &lin).unwrap();
    assert!(z.data.iter().zip(&lin.data).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn conormal_derivative_of_layer_is_uniformly_bounded() {
    for k in 2..=6 {
        let eps = 2f64.powi(-k);
        let n2 = (64.0 / eps) as usize + 1;
        let g = unit_box(3, 4, n2);
        let u = ScalarField::from_fn(g, |_, _, x2| (-x2 / eps).exp());
        let z = apply_z(&basis(), [0, 0, 1], &u).unwrap().max_abs();
        assert!(z <= (-1.0f64).exp() * 1.01, "eps = {eps}: {z}");
        let d = ScalarField { grid: g, data: ebl_core::grid::diff_axis(&u.data, &g.shape(), 2, g.x2.step, false).unwrap() };
        assert!((d.max_abs() * eps - 1.0).abs() < 0.01);
    }
}

#[test]
fn weighted_norm_examples() {
    let g = unit_box(201, 8, 9);
    let zero = ScalarField::from_fn(g, |_, _, _| 0.0);
    assert_eq!(weighted_norm(&zero, &NormParams::new(2, 1.0, 1.0, 0.5).unwrap()).unwrap(), 0.0);
    let one = ScalarField::from_fn(g, |_, _, _| 1.0);
    let n0 = weighted_norm(&one, &NormParams::new(0, 1.0, 1.0, 1.0).unwrap()).unwrap();
    let exact = ((1.0 - (-2.0f64).exp()) / 2.0).sqrt();
    assert!((n0 - exact).abs() < 1e-4, "{n0} vs {exact}");
    for &lambda in &[1.0, 2.0, 3.5] {
        let a = weighted_norm(&one, &NormParams::new(2, lambda, 1.0, 1.0).unwrap()).unwrap();
        let b = weighted_norm(&one, &NormParams::new(3, lambda, 1.0, 1.0).unwrap()).unwrap();
        assert!((b - lambda * a).abs() < 1e-12 * b);
    }
}

#[test]
fn norm_parameters_are_validated() {
    assert!(NormParams::new(2, 0.5, 1.0, 0.5).is_err());
    assert!(NormParams::new(2, 1.0, 1.0, 0.0).is_err());
    assert!(NormParams::new(2, 1.0, 0.0, 0.5).is_err());
    let g = unit_box(9, 4, 5);
    let u = ScalarField::from_fn(g, |_, _, _| 1.0);
    assert!(weighted_norm(&u, &NormParams::new(0, 1.0, 2.0, 0.5).unwrap()).is_err());
    let coarse = unit_box(3, 4, 5);
    assert!(weighted_norm(&ScalarField::from_fn(coarse, |_, _, _| 1.0), &NormParams::new(3, 1.0, 1.0, 0.5).unwrap()).is_err());
}

#[test]
fn energy_norm_examples() {
    let g = strip(1.0, 33, 16, 1.0, 33);
    let flat = ScalarField::from_fn(g, |t, x1, _| (1.0 + t) * x1.sin());
    let p = NormParams::new(2, 2.0, 1.0, 0.25).unwrap();
    assert!((norm_e(&flat, &p).unwrap() - weighted_norm(&flat, &p).unwrap()).abs() < 1e-12);
    // (eps d_2) u = -u: the k = 1 rung adds the m = 0 norm
    let eps = 0.125;
    let g = strip(1.0, 17, 16, 1.0, 1025);
    let layer = ScalarField::from_fn(g, |_, _, x2| (-x2 / eps).exp());
    let p = NormParams::new(2, 2.0, 1.0, eps).unwrap();
    let extra = norm_e(&layer, &p).unwrap() - weighted_norm(&layer, &p).unwrap();
    let base = weighted_norm(&layer, &NormParams::new(0, 2.0, 1.0, eps).unwrap()).unwrap();
    assert!((extra - base).abs() < 1e-3 * base, "{extra} vs {base}");
    // weights shrink with eps
    let u = ScalarField::from_fn(strip(1.0, 17, 16, 1.0, 65), |_, _, x2| (-x2).exp());
    let a = norm_e(&u, &NormParams::new(2, 1.0, 1.0, 0.5).unwrap()).unwrap();
    let b = norm_e(&u, &NormParams::new(2, 1.0, 1.0, 0.25).unwrap()).unwrap();
    assert!(b < a);
    assert!(norm_n(&u, &NormParams::new(2, 1.0, 1.0, 0.25).unwrap()).unwrap() > weighted_norm(&u, &NormParams::new(2, 1.0, 1.0, 0.25).unwrap()).unwrap());
    assert!(norm_a(&u, &NormParams::new(2, 1.0, 1.0, 0.25).unwrap()).unwrap() > 0.0);
}

#[test]
fn sup_norm_examples() {
    let g = strip(1.0, 9, 16, 1.0, 17);
    let c = ScalarField::from_fn(g, |_, _, _| -2.5);
    let p = NormParams::new(2, 1.0, 1.0, 0.5).unwrap();
    let (star, lip) = norm_star(&c, &p).unwrap();
    assert!((star - 2.5).abs() < 1e-12 && (lip - 2.5).abs() < 1e-12);
    let mut layer = Vec::new();
    let mut osc = Vec::new();
    for k in 2..=5 {
        let eps = 2f64.powi(-k);
        let g = strip(1.0, 5, 8, 1.0, (32.0 / eps) as usize + 1);
        let u = ScalarField::from_fn(g, |_, _, x2| (-x2 / eps).exp());
        layer.push(norm_star(&u, &NormParams::new(2, 1.0, 1.0, eps).unwrap()).unwrap().0);
        let kk = 1usize << k;
        let g = strip(1.0, 5, 32 * kk, 1.0, 5);
        let u = ScalarField::from_fn(g, |_, x1, _| (x1 * kk as f64).sin());
        osc.push(norm_star(&u, &NormParams::new(2, 1.0, 1.0, eps).unwrap()).unwrap().0 * eps * eps);
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread(&layer) < 1.5, "{layer:?}");
    assert!(spread(&osc) < 1.5, "{osc:?}");
}

#[test]
fn norm_report_csv() {
    let g = strip(1.0, 9, 16, 1.0, 17);
    let u = ScalarField::from_fn(g, |t, x1, x2| (-t).exp() * x1.sin() * (-x2).exp());
    let r = NormReport::compute(&u, &NormParams::new(2, 1.0, 1.0, 0.5).unwrap(), "g0").unwrap();
    assert_eq!(r.rows.len(), 6);
    assert!(r.get("E").unwrap() >= r.get("weighted").unwrap());
    let dir = tempdir();
    let path = dir.join("norms.csv");
    r.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("norm,m,lambda,eps,value,grid_id,horizon"));
    assert_eq!(text.lines().count(), 7);
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("ebl-norms-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn sobolev_ratio_for_constant_vanishes_like_sqrt_eps() {
    let fam = |_: f64, lvl: usize| -> ebl_core::Result<ScalarField> {
        let n = 17 + 16 * lvl;
        Ok(ScalarField::from_fn(strip(1.0, 17, 17, 1.0, n), |_, _, _| 1.0))
    };
    let r = check_sobolev_embedding(fam, &[0.25, 0.0625], 7, 1.0, 1.0).unwrap();
    let ratio = r.rows[1].1 / r.rows[0].1;
    assert!((ratio - 0.5).abs() < 1e-9, "{ratio}");
    assert!(check_sobolev_embedding(fam, &[0.25], 6, 1.0, 1.0).is_err());
}

#[test]
fn moser_and_gagliardo_nirenberg_trivial_cases() {
    let g = strip(1.0, 17, 32, 1.0, 9);
    let zero = ScalarField::from_fn(g, |_, _, _| 0.0);
    let r = check_moser(|x| x * x, std::slice::from_ref(&zero), 2, &[1.0], 1.0, 1.0).unwrap();
    assert!(r.rows.iter().all(|row| row.2 == 0.0 && row.3 == 0.0));
    assert!(check_moser(|x| x + 1.0, std::slice::from_ref(&zero), 2, &[1.0], 1.0, 1.0).is_err());
    let levels: Vec<ScalarField> = [32usize, 64].iter().map(|&n| ScalarField::from_fn(strip(1.0, n / 2 + 1, n, 1.0, n / 4 + 1), |_, x1, _| x1.sin())).collect();
    let r = check_moser(|x| x * x, &levels, 2, &[1.0, 2.0, 4.0], 1.0, 1.0).unwrap();
    assert!(r.pass, "{r:?}");
    let levels: Vec<ScalarField> =
        [32usize, 64].iter().map(|&n| ScalarField::from_fn(strip(1.0, n / 2 + 1, n, 1.0, n / 4 + 1), |t, x1, x2| (-t).exp() * x1.sin() * (-x2).exp())).collect();
    // k = m, l = 0: lambda^m ||u|| against |u|_m, bounded by 1 and refinement-stable
    let r = check_gagliardo_nirenberg(&levels, 2, 0, 2, &[1.0, 2.0, 4.0], 1.0).unwrap();
    assert!(r.rows.iter().all(|row| row.4 <= 1.0 + 1e-12), "{r:?}");
    for (a, b) in r.rows[..3].iter().zip(&r.rows[3..]) {
        assert!((a.4 - b.4).abs() < 0.05 * a.4);
    }
    assert!(check_gagliardo_nirenberg(&levels, 3, 0, 2, &[1.0], 1.0).is_err());
}

use ebl_core::direct::{to_conservative, to_primitive};
use ebl_core::eos::{symmetrizer, EosModel, SpaceTimeGrid, StateVector};
use ebl_core::grid::Axis;
use ebl_core::io::FlatField;
use ebl_core::norms::{weighted_norm, NormParams, ScalarField};
use ebl_core::wkb::fit_loglog_slope;
use proptest::prelude::*;
use std::io::Cursor;

fn small_grid() -> SpaceTimeGrid {
    SpaceTimeGrid { t: Axis::closed(0.0, 1.0, 9), x1: Axis::periodic(0.0, 1.0, 8), x2: Axis::closed(0.0, 1.0, 9) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrizer_is_positive(p in 1e-6f64..1e3, s in -3.0f64..3.0, v1 in -5.0f64..5.0, v2 in -5.0f64..5.0) {
        let eos = EosModel::new(1.4).unwrap();
        let m = symmetrizer(&eos, &StateVector::new(vec![v1, v2], p, s)).unwrap();
        let e = m.entries.clone().symmetric_eigen().eigenvalues;
        prop_assert!(e.iter().all(|&x| x > 0.0));
        prop_assert_eq!(m.entries.clone(), m.entries.transpose());
    }

    #[test]
    fn density_pressure_consistency(p in 1e-6f64..1e3, s in -3.0f64..3.0, gamma in 1.05f64..3.0) {
        let eos = EosModel::new(gamma).unwrap();
        let rho = eos.rho(p, s).unwrap();
        prop_assert!((eos.pressure(rho, s) - p).abs() <= 1e-10 * p);
        prop_assert!((eos.entropy(p, rho) - s).abs() <= 1e-10);
        let alpha = eos.alpha(p, s).unwrap();
        prop_assert!((alpha * gamma * p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conservative_round_trip(rho in 1e-3f64..1e2, v1 in -10.0f64..10.0, v2 in -10.0f64..10.0, p in 1e-3f64..1e2) {
        let w = [rho, v1, v2, p];
        let back = to_primitive(1.4, &to_conservative(1.4, &w));
        for k in 0..4 {
            prop_assert!((back[k] - w[k]).abs() <= 1e-9 * (1.0 + w[k].abs()));
        }
    }

    #[test]
    fn weighted_norm_is_a_seminorm(a in -3.0f64..3.0, k in 1usize..4, c in -2.0f64..2.0, m in 0usize..3, lambda in 1.0f64..4.0) {
        let g = small_grid();
        let u = ScalarField::from_fn(g, |t, x1, x2| (t + 1.0) * (std::f64::consts::TAU * k as f64 * x1).sin() * x2);
        let v = ScalarField::from_fn(g, |t, _, x2| c * (x2 - t).cos());
        let p = NormParams::new(m, lambda, 1.0, 0.5).unwrap();
        let nu = weighted_norm(&u, &p).unwrap();
        let nv = weighted_norm(&v, &p).unwrap();
        let au = u.map(|x| a * x);
        prop_assert!((weighted_norm(&au, &p).unwrap() - a.abs() * nu).abs() <= 1e-9 * (1.0 + nu));
        let sum = ScalarField { grid: g, data: u.data.iter().zip(&v.data).map(|(x, y)| x + y).collect() };
        prop_assert!(weighted_norm(&sum, &p).unwrap() <= (nu + nv) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn slope_is_scale_invariant(q in 0.5f64..3.0, c in 1e-3f64..1e3) {
        let pairs: Vec<(f64, f64)> = (2..7).map(|k| { let e = 2f64.powi(-k); (e, c * e.powf(q)) }).collect();
        let (s, r2) = fit_loglog_slope(&pairs).unwrap();
        prop_assert!((s - q).abs() < 1e-10);
        prop_assert!(r2 > 1.0 - 1e-10);
    }

    #[test]
    fn flat_field_round_trip(dims in proptest::collection::vec(1usize..5, 1..4), seed in any::<u64>()) {
        let axes: Vec<Vec<f64>> = dims.iter().map(|&n| (0..n).map(|i| i as f64 * 0.5).collect()).collect();
        let n: usize = dims.iter().product();
        let data: Vec<f64> = (0..n).map(|i| ((seed.wrapping_add(i as u64)) as f64).sin()).collect();
        let f = FlatField::new(axes, data).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        prop_assert_eq!(FlatField::read_from(&mut Cursor::new(buf)).unwrap(), f);
    }
}

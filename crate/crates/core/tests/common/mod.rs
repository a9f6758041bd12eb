#![allow(dead_code)]

use ebl_core::eos::SpaceTimeGrid;
use ebl_core::grid::Axis;
use std::f64::consts::TAU;

pub fn strip(t: f64, nt: usize, n1: usize, h: f64, n2: usize) -> SpaceTimeGrid {
    SpaceTimeGrid { t: Axis::closed(0.0, t, nt), x1: Axis::periodic(0.0, TAU, n1), x2: Axis::closed(0.0, h, n2) }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn observed_order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

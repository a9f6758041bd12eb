use ebl_core::eos::{SpaceTimeGrid, StateField};
use ebl_core::grid::Axis;
use ebl_core::io::*;
use std::io::Cursor;

#[test]
fn state_field_round_trip() {
    let g = SpaceTimeGrid { t: Axis::closed(0.0, 1.0, 3), x1: Axis::periodic(0.0, 1.0, 4), x2: Axis::closed(0.0, 2.0, 5) };
    let f = StateField::from_fn(g, |t, x1, x2| [t, x1, x2, t * x1 - x2]);
    let flat = FlatField::from_state(&f);
    assert_eq!(flat.shape(), vec![4, 3, 4, 5]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.bin");
    flat.write(&path).unwrap();
    let back = FlatField::read(&path).unwrap();
    assert_eq!(back, flat);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"EBLFIELD");
    assert_eq!(bytes.len(), 16 + 4 * 8 + 8 * (4 + 3 + 4 + 5) + 8 * 240);
}

#[test]
fn bad_files_rejected() {
    let flat = FlatField::new(vec![vec![0.0, 1.0]], vec![3.0, 4.0]).unwrap();
    let mut buf = Vec::new();
    flat.write_to(&mut buf).unwrap();
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(FlatField::read_from(&mut Cursor::new(bad)).is_err());
    let mut bad = buf.clone();
    bad[8] = 2;
    assert!(FlatField::read_from(&mut Cursor::new(bad)).is_err());
    assert!(FlatField::read_from(&mut Cursor::new(&buf[..buf.len() - 1])).is_err());
    assert!(FlatField::new(vec![vec![0.0]], vec![1.0, 2.0]).is_err());
}

#[test]
fn csv_helpers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_csv(&path, &["a", "b"], &[vec![fmt(0.5), fmt(f64::NAN)]]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n5e-1,nan\n");
    assert_eq!(fmt(0.1).parse::<f64>().unwrap(), 0.1);
}

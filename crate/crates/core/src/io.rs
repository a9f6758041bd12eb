//! Flat binary field files and CSV helpers.
//!
//! Layout (little-endian): 8-byte magic `EBLFIELD`, u32 version, u32 rank, rank x u64 axis
//! lengths, the node coordinates of every axis as f64, then the row-major f64 payload.

use crate::direct::Trajectory;
use crate::eos::{EosModel, StateField};
use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::layer::{LayerPart, RegularField};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"EBLFIELD";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FlatField {
    pub axes: Vec<Vec<f64>>,
    pub data: Vec<f64>,
}

fn nodes(a: &Axis) -> Vec<f64> {
    a.points()
}

impl FlatField {
    pub fn new(axes: Vec<Vec<f64>>, data: Vec<f64>) -> Result<FlatField> {
        let n: usize = axes.iter().map(Vec::len).product();
        if axes.is_empty() || n != data.len() {
            return Err(Error::InvalidInput(format!("payload of {} values for axes of total size {n}", data.len())));
        }
        Ok(FlatField { axes, data })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Axes (t, x1, x2, X).
    pub fn from_layer(f: &LayerPart) -> FlatField {
        FlatField { axes: vec![f.times.clone(), nodes(&f.x1), nodes(&f.x2), f.fast.nodes.clone()], data: f.data.clone() }
    }

    /// Axes (t, x1, x2).
    pub fn from_regular(f: &RegularField) -> FlatField {
        FlatField { axes: vec![f.times.clone(), nodes(&f.x1), nodes(&f.x2)], data: f.data.clone() }
    }

    /// Axes (component, t, x1, x2); components (v1, v2, p, s).
    pub fn from_state(f: &StateField) -> FlatField {
        let g = f.grid;
        let data = f.comps.iter().flat_map(|c| c.iter().copied()).collect();
        FlatField { axes: vec![vec![0.0, 1.0, 2.0, 3.0], nodes(&g.t), nodes(&g.x1), nodes(&g.x2)], data }
    }

    pub fn from_trajectory(t: &Trajectory, eos: &EosModel) -> FlatField {
        FlatField::from_state(&t.to_state_field(eos))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.axes.len() as u32).to_le_bytes())?;
        for a in &self.axes {
            w.write_all(&(a.len() as u64).to_le_bytes())?;
        }
        for x in self.axes.iter().flatten().chain(&self.data) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<FlatField> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Io("not a field file (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Io(format!("unsupported field file version {version}")));
        }
        r.read_exact(&mut b4)?;
        let rank = u32::from_le_bytes(b4) as usize;
        if rank == 0 || rank > 16 {
            return Err(Error::Io(format!("bad rank {rank}")));
        }
        let mut b8 = [0u8; 8];
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut b8)?;
            dims.push(u64::from_le_bytes(b8) as usize);
        }
        let mut read_vec = |n: usize| -> Result<Vec<f64>> {
            let mut bytes = vec![0u8; n.checked_mul(8).ok_or_else(|| Error::Io("size overflow".into()))?];
            r.read_exact(&mut bytes)?;
            Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
        };
        let axes = dims.iter().map(|&n| read_vec(n)).collect::<Result<Vec<_>>>()?;
        let total = dims.iter().try_fold(1usize, |a, &n| a.checked_mul(n)).ok_or_else(|| Error::Io("size overflow".into()))?;
        let data = read_vec(total)?;
        Ok(FlatField { axes, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<FlatField> {
        FlatField::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Writes a header and rows of already-formatted fields.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation, `nan` for missing values.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:e}")
    }
}

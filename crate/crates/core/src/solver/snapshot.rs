//! `.flow` snapshot files.
//!
//! Layout: an 8-byte little-endian header length `n`, `n` bytes of JSON
//! header, then `rho`, `u`, `v`, `p` as little-endian `f64` arrays in the
//! order and shapes listed in the header.

use super::{FlowState, SolverError};
use crate::fields::{ScalarField, VectorField, WallTrace};
use crate::geometry::Grid;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const FORMAT: &str = "viscous-limit.flow";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldShape {
    pub name: String,
    /// `[rows, columns]`, row-major.
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub nx: usize,
    pub ny: usize,
    pub length_x: f64,
    pub length_y: f64,
    pub stretch: f64,
    pub y_faces: Vec<f64>,
    pub time: f64,
    pub nu: f64,
    pub step: usize,
    pub fields: Vec<FieldShape>,
}

impl SnapshotHeader {
    fn new(grid: &Grid, state: &FlowState) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let shape = |name: &str, rows: usize| FieldShape {
            name: name.to_string(),
            shape: [rows, nx],
        };
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            nx,
            ny,
            length_x: grid.domain.length_x,
            length_y: grid.domain.length_y,
            stretch: grid.stretch,
            y_faces: grid.y_faces.clone(),
            time: state.time,
            nu: state.viscosity,
            step: state.step_index,
            fields: vec![shape("rho", ny), shape("u", ny), shape("v", ny + 1), shape("p", ny)],
        }
    }
}

pub fn write_snapshot(path: &Path, grid: &Grid, state: &FlowState) -> Result<(), SolverError> {
    let header =
        serde_json::to_vec(&SnapshotHeader::new(grid, state)).map_err(|e| SolverError::Snapshot(e.to_string()))?;
    let mut buf = Vec::with_capacity(8 + header.len() + 8 * (4 * grid.n_cells() + grid.nx));
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    for arr in [&state.rho.values, &state.vel.u, &state.vel.v, &state.pressure.values] {
        for x in arr.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, FlowState), SolverError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| SolverError::Snapshot(format!("{}: {m}", path.display()));
    if bytes.len() < 8 {
        return Err(bad("truncated header length"));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let body = bytes.get(8..8 + n).ok_or_else(|| bad("truncated header"))?;
    let header: SnapshotHeader = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(bad("unknown format"));
    }
    let mut data = bytes[8 + n..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = |len: usize| -> Result<Vec<f64>, SolverError> {
        let v: Vec<f64> = data.by_ref().take(len).collect();
        if v.len() == len {
            Ok(v)
        } else {
            Err(bad("truncated data"))
        }
    };
    let (nx, ny) = (header.nx, header.ny);
    let rho = take(nx * ny)?;
    let u = take(nx * ny)?;
    let v = take(nx * (ny + 1))?;
    let p = take(nx * ny)?;
    let scalar = |values| ScalarField {
        nx,
        ny,
        values,
        wall: None,
    };
    let state = FlowState {
        rho: scalar(rho),
        vel: VectorField {
            nx,
            ny,
            u,
            v,
            trace: WallTrace::zeros(nx),
        },
        pressure: scalar(p),
        time: header.time,
        viscosity: header.nu,
        step_index: header.step,
    };
    Ok((header, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn round_trip() {
        let g = Grid::new(Domain::new(2.0, 1.0).unwrap(), 6, 5, 1.5).unwrap();
        let mut st = FlowState::rest(&g, ScalarField::from_fn(&g, |x, y| 1.0 + x * y), 0.03);
        st.vel = VectorField::from_fn_no_slip(&g, |x, y| (x.sin() * y, y * (1.0 - y) * x.cos()));
        st.pressure = ScalarField::from_fn(&g, |x, y| x - y);
        st.time = 0.125;
        st.step_index = 7;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.flow");
        write_snapshot(&path, &g, &st).unwrap();
        let (h, back) = read_snapshot(&path).unwrap();
        assert_eq!(h.y_faces, g.y_faces);
        assert_eq!(h.fields[2].shape, [6, 6]);
        assert_eq!(back, st);
        let len = std::fs::metadata(&path).unwrap().len() as usize;
        let header_len = serde_json::to_vec(&h).unwrap().len();
        assert_eq!(len, 8 + header_len + 8 * (30 * 3 + 36));
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.flow");
        std::fs::write(&path, [1u8, 0, 0]).unwrap();
        assert!(read_snapshot(&path).is_err());
    }
}

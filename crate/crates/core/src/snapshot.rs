//! The "FVX1" field snapshot: a little-endian binary file holding one
//! time level of a field plus enough grid metadata to rebuild its grid.
//!
//! Layout: magic `FVX1`, u32 version, u8 system tag, u8 ndim, u32 per
//! dimension, u32 component count, f64 time, component-major cell values
//! (row-major, `i` fastest, no halo), f64 grid metadata, u32 CRC32 of all
//! preceding bytes. Metadata is `x_min, x_max[, y_min, y_max]` on Cartesian
//! grids and the node array `(nx + 1)(ny + 1) x 3` scaled by the radius on
//! the sphere.

use std::path::Path;
use std::sync::Arc;

use crate::binary::{check_crc, Reader};
use crate::diagnostics::{coarsen, relative_error};
use crate::equations::norm;
use crate::error::{Error, Result};
use crate::grid::{Grid, Grid1D, Grid2D, SphereGrid};
use crate::state::{State, System};

pub const MAGIC: &[u8; 4] = b"FVX1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum GridMeta {
    Line { x_min: f64, x_max: f64 },
    Plane { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    Sphere { vertices: Vec<[f64; 3]> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub system: System,
    pub dims: (usize, usize),
    pub time: f64,
    pub cells: Vec<State>,
    pub meta: GridMeta,
}

impl Snapshot {
    pub fn new(system: System, grid: &Grid, cells: Vec<State>, time: f64) -> Result<Self> {
        if cells.len() != grid.ncells() {
            return Err(Error::Shape(format!(
                "{} cells for a grid of {}",
                cells.len(),
                grid.ncells()
            )));
        }
        let meta = match grid {
            Grid::Line(g) => GridMeta::Line {
                x_min: g.x_left,
                x_max: g.x_right,
            },
            Grid::Plane(g) => GridMeta::Plane {
                x_min: g.x_min,
                x_max: g.x_max,
                y_min: g.y_min,
                y_max: g.y_max,
            },
            Grid::Sphere(s) => GridMeta::Sphere {
                vertices: s
                    .vertices
                    .iter()
                    .map(|v| [v[0] * s.radius, v[1] * s.radius, v[2] * s.radius])
                    .collect(),
            },
        };
        Ok(Snapshot {
            system,
            dims: grid.dims(),
            time,
            cells,
            meta,
        })
    }

    pub fn ndim(&self) -> usize {
        self.system.grid_dims()
    }

    pub fn ncells(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    /// Rebuild the grid the snapshot was written on.
    pub fn grid(&self) -> Result<Grid> {
        let (nx, ny) = self.dims;
        Ok(match &self.meta {
            GridMeta::Line { x_min, x_max } => Grid::Line(Grid1D::new(*x_min, *x_max, nx)?),
            GridMeta::Plane {
                x_min,
                x_max,
                y_min,
                y_max,
            } => Grid::Plane(Grid2D::new((*x_min, *x_max), (*y_min, *y_max), nx, ny)?),
            GridMeta::Sphere { vertices } => {
                let radius = vertices.first().map(|v| norm(*v)).unwrap_or(1.0);
                Grid::Sphere(Arc::new(SphereGrid::build(nx, ny, radius)?))
            }
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let ncomp = self.system.ncomp();
        let mut b = Vec::with_capacity(64 + 8 * ncomp * self.cells.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.push(self.system.tag());
        b.push(self.ndim() as u8);
        b.extend_from_slice(&(self.dims.0 as u32).to_le_bytes());
        if self.ndim() == 2 {
            b.extend_from_slice(&(self.dims.1 as u32).to_le_bytes());
        }
        b.extend_from_slice(&(ncomp as u32).to_le_bytes());
        b.extend_from_slice(&self.time.to_le_bytes());
        for k in 0..ncomp {
            for q in &self.cells {
                b.extend_from_slice(&q[k].to_le_bytes());
            }
        }
        let mut put = |v: f64| b.extend_from_slice(&v.to_le_bytes());
        match &self.meta {
            GridMeta::Line { x_min, x_max } => {
                put(*x_min);
                put(*x_max);
            }
            GridMeta::Plane {
                x_min,
                x_max,
                y_min,
                y_max,
            } => {
                put(*x_min);
                put(*x_max);
                put(*y_min);
                put(*y_max);
            }
            GridMeta::Sphere { vertices } => {
                for v in vertices {
                    v.iter().for_each(|c| put(*c));
                }
            }
        }
        let crc = crc32fast::hash(&b);
        b.extend_from_slice(&crc.to_le_bytes());
        b
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Format {
                offset: 0,
                msg: "not an FVX1 snapshot (bad magic)".into(),
            });
        }
        let mut r = Reader::new(bytes);
        r.take(4, "magic")?;
        let version = r.u32("version")?;
        if version != VERSION {
            if version.swap_bytes() == VERSION {
                return Err(r.error(
                    4,
                    "snapshot appears to be big-endian; the format is little-endian only",
                ));
            }
            return Err(r.error(4, format!("unsupported snapshot version {version}")));
        }
        let at = r.pos;
        let tag = r.u8("system tag")?;
        let system = System::from_tag(tag).ok_or_else(|| r.error(at, format!("unknown system tag {tag}")))?;
        let at = r.pos;
        let ndim = r.u8("ndim")? as usize;
        if ndim != system.grid_dims() {
            return Err(r.error(at, format!("ndim {ndim} does not match system {system}")));
        }
        let nx = r.u32("nx")? as usize;
        let ny = if ndim == 2 { r.u32("ny")? as usize } else { 1 };
        let at = r.pos;
        let ncomp = r.u32("component count")? as usize;
        if ncomp != system.ncomp() {
            return Err(r.error(
                at,
                format!("{ncomp} components, {system} has {}", system.ncomp()),
            ));
        }
        if nx == 0 || ny == 0 {
            return Err(r.error(at, "empty grid"));
        }
        let time = r.f64("time")?;
        let n = nx
            .checked_mul(ny)
            .ok_or_else(|| r.error(at, "grid dimensions overflow"))?;
        let mut cells = vec![State::ZERO; n];
        for k in 0..ncomp {
            let vals = r.f64s(n, "cell values")?;
            for (q, v) in cells.iter_mut().zip(vals) {
                q[k] = v;
            }
        }
        let meta = if system == System::SweSphere {
            let nv = (nx + 1) * (ny + 1);
            let flat = r.f64s(nv * 3, "sphere vertices")?;
            GridMeta::Sphere {
                vertices: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            }
        } else if ndim == 1 {
            GridMeta::Line {
                x_min: r.f64("x_min")?,
                x_max: r.f64("x_max")?,
            }
        } else {
            GridMeta::Plane {
                x_min: r.f64("x_min")?,
                x_max: r.f64("x_max")?,
                y_min: r.f64("y_min")?,
                y_max: r.f64("y_max")?,
            }
        };
        let body_end = bytes.len().saturating_sub(4);
        if r.pos > body_end {
            return Err(r.error(r.pos, "truncated: missing checksum"));
        }
        if r.pos < body_end {
            return Err(r.error(r.pos, format!("{} unexpected trailing bytes", body_end - r.pos)));
        }
        check_crc(bytes)?;
        Ok(Snapshot {
            system,
            dims: (nx, ny),
            time,
            cells,
            meta,
        })
    }
}

pub fn write_snapshot(snapshot: &Snapshot, path: &Path) -> Result<()> {
    std::fs::write(path, snapshot.encode())?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::decode(&std::fs::read(path)?)
}

/// Mean relative error of the first component (depth or density) of `test`
/// against `reference`. The finer of the two is block-averaged onto the
/// coarser grid first, area-weighted on the sphere.
pub fn compare(test: &Snapshot, reference: &Snapshot) -> Result<f64> {
    if test.system != reference.system {
        return Err(Error::Shape(format!(
            "cannot compare a {} field with a {} field",
            test.system, reference.system
        )));
    }
    let coarse_of = |s: &Snapshot, target: (usize, usize)| -> Result<Vec<f64>> {
        if s.dims == target {
            return Ok(s.cells.iter().map(|q| q[0]).collect());
        }
        let factor = s.dims.0 / target.0;
        let ok = factor >= 1
            && s.dims.0 == factor * target.0
            && (s.ndim() == 1 || s.dims.1 == factor * target.1);
        if !ok {
            return Err(Error::Shape(format!(
                "{}x{} does not coarsen onto {}x{} by an integer factor",
                s.dims.0, s.dims.1, target.0, target.1
            )));
        }
        let weights = match &s.meta {
            GridMeta::Sphere { .. } => match s.grid()? {
                Grid::Sphere(g) => Some(g.cell_area.clone()),
                _ => None,
            },
            _ => None,
        };
        let (cells, _) = coarsen(&s.cells, s.dims, s.ndim(), factor, weights.as_deref())?;
        Ok(cells.iter().map(|q| q[0]).collect())
    };
    let target = if test.ncells() <= reference.ncells() {
        test.dims
    } else {
        reference.dims
    };
    relative_error(&coarse_of(test, target)?, &coarse_of(reference, target)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let grid = Grid::Plane(Grid2D::new((0.0, 2.0), (-1.0, 1.0), 3, 2).unwrap());
        let cells = (0..6)
            .map(|c| State::from_slice(&[1.0 + c as f64, -0.0, 1.0 / 3.0]))
            .collect();
        Snapshot::new(System::Swe2D, &grid, cells, 0.125).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let bytes = s.encode();
        let back = Snapshot::decode(&bytes).unwrap();
        assert_eq!(back.encode(), bytes);
        assert_eq!(back.cells[0][1].to_bits(), (-0.0f64).to_bits());
        assert_eq!(back, s);
    }

    #[test]
    fn component_major_layout() {
        let bytes = sample().encode();
        // Header: 4 magic + 4 version + 1 tag + 1 ndim + 8 dims + 4 ncomp + 8 time.
        let first = f64::from_le_bytes(bytes[30..38].try_into().unwrap());
        let second = f64::from_le_bytes(bytes[38..46].try_into().unwrap());
        assert_eq!((first, second), (1.0, 2.0));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = sample().encode();
        let mut bad = bytes.clone();
        bad[1] = b'Y';
        assert!(Snapshot::decode(&bad).unwrap_err().to_string().contains("bad magic"));

        let mut be = bytes.clone();
        be[4..8].copy_from_slice(&1u32.to_be_bytes());
        assert!(Snapshot::decode(&be).unwrap_err().to_string().contains("big-endian"));

        let err = Snapshot::decode(&bytes[..50]).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");

        let mut flipped = bytes;
        flipped[40] ^= 0x10;
        assert!(Snapshot::decode(&flipped).unwrap_err().to_string().contains("checksum"));
    }

    #[test]
    fn sphere_grid_is_rebuilt() {
        let grid = Grid::Sphere(Arc::new(SphereGrid::build(8, 4, 2.0).unwrap()));
        let cells = vec![State::from_slice(&[1.0, 0.0, 0.0, 0.0]); 32];
        let s = Snapshot::new(System::SweSphere, &grid, cells, 1.0).unwrap();
        let back = Snapshot::decode(&s.encode()).unwrap();
        match back.grid().unwrap() {
            Grid::Sphere(g) => assert!((g.radius - 2.0).abs() < 1e-15),
            _ => panic!("expected a sphere grid"),
        }
    }

    #[test]
    fn compare_coarsens_the_finer_field() {
        let fine_grid = Grid::Line(Grid1D::new(0.0, 1.0, 8).unwrap());
        let coarse_grid = Grid::Line(Grid1D::new(0.0, 1.0, 4).unwrap());
        let fine: Vec<State> = (0..8).map(|i| State::from_slice(&[1.0 + i as f64, 0.0])).collect();
        let coarse: Vec<State> = (0..4).map(|i| State::from_slice(&[1.5 + 2.0 * i as f64, 0.0])).collect();
        let a = Snapshot::new(System::Swe1D, &fine_grid, fine, 1.0).unwrap();
        let b = Snapshot::new(System::Swe1D, &coarse_grid, coarse, 1.0).unwrap();
        assert_eq!(compare(&a, &b).unwrap(), 0.0);
        assert_eq!(compare(&b, &a).unwrap(), 0.0);
        assert_eq!(compare(&a, &a).unwrap(), 0.0);

        let odd = Grid::Line(Grid1D::new(0.0, 1.0, 3).unwrap());
        let c = Snapshot::new(System::Swe1D, &odd, vec![State::from_slice(&[1.0, 0.0]); 3], 1.0).unwrap();
        assert!(matches!(compare(&a, &c), Err(Error::Shape(_))));
    }
}

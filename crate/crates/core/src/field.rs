//! Cell-average storage with a ghost-cell halo, and boundary filling.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Grid, SphereGrid};
use crate::state::{State, System};

pub const DEFAULT_HALO: usize = 2;

/// Cell averages of one conserved system over a 1D or logically 2D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedField {
    pub system: System,
    nx: usize,
    ny: usize,
    ndim: usize,
    halo: usize,
    data: Vec<State>,
}

impl ConservedField {
    pub fn new(system: System, nx: usize, ny: usize, halo: usize) -> Self {
        let ndim = system.grid_dims();
        let ny = if ndim == 1 { 1 } else { ny };
        let (sx, sy) = Self::storage_dims(nx, ny, ndim, halo);
        ConservedField {
            system,
            nx,
            ny,
            ndim,
            halo,
            data: vec![State::ZERO; sx * sy],
        }
    }

    pub fn for_grid(system: System, grid: &Grid) -> Self {
        let (nx, ny) = grid.dims();
        Self::new(system, nx, ny, DEFAULT_HALO)
    }

    /// Build from interior values in row-major order (`i` fastest).
    pub fn from_interior(system: System, nx: usize, ny: usize, halo: usize, interior: &[State]) -> Result<Self> {
        let mut f = Self::new(system, nx, ny, halo);
        f.set_interior(interior)?;
        Ok(f)
    }

    fn storage_dims(nx: usize, ny: usize, ndim: usize, halo: usize) -> (usize, usize) {
        let sy = if ndim == 1 { 1 } else { ny + 2 * halo };
        (nx + 2 * halo, sy)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn halo(&self) -> usize {
        self.halo
    }

    pub fn ncells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn ncomp(&self) -> usize {
        self.system.ncomp()
    }

    #[inline]
    fn index(&self, i: isize, j: isize) -> usize {
        let h = self.halo as isize;
        let sx = (self.nx + 2 * self.halo) as isize;
        let jj = if self.ndim == 1 { 0 } else { j + h };
        debug_assert!(i + h >= 0 && i + h < sx, "i = {i} out of range");
        (jj * sx + i + h) as usize
    }

    /// Value at cell `(i, j)`; negative or past-the-end indices address the halo.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> State {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, q: State) {
        let k = self.index(i, j);
        self.data[k] = q;
    }

    /// Value of interior cell `c = j * nx + i`.
    #[inline]
    pub fn cell(&self, c: usize) -> State {
        self.at((c % self.nx) as isize, (c / self.nx) as isize)
    }

    pub fn interior(&self) -> Vec<State> {
        let mut out = Vec::with_capacity(self.ncells());
        for j in 0..self.ny as isize {
            for i in 0..self.nx as isize {
                out.push(self.at(i, j));
            }
        }
        out
    }

    pub fn set_interior(&mut self, values: &[State]) -> Result<()> {
        if values.len() != self.ncells() {
            return Err(Error::Shape(format!(
                "expected {} interior cells, got {}",
                self.ncells(),
                values.len()
            )));
        }
        let nx = self.nx;
        for (c, q) in values.iter().enumerate() {
            self.set((c % nx) as isize, (c / nx) as isize, *q);
        }
        Ok(())
    }

    /// Component `k` of every interior cell, row-major.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.interior().iter().map(|q| q[k]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    Periodic,
    Wall,
}

impl FromStr for BcKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(BcKind::Periodic),
            "wall" => Ok(BcKind::Wall),
            other => Err(Error::config(format!("unknown boundary kind '{other}'"))),
        }
    }
}

/// Boundary kinds per side of a Cartesian domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryCondition {
    pub left: BcKind,
    pub right: BcKind,
    pub bottom: BcKind,
    pub top: BcKind,
}

impl BoundaryCondition {
    pub fn uniform(kind: BcKind) -> Self {
        BoundaryCondition {
            left: kind,
            right: kind,
            bottom: kind,
            top: kind,
        }
    }

    pub fn periodic() -> Self {
        Self::uniform(BcKind::Periodic)
    }

    pub fn wall() -> Self {
        Self::uniform(BcKind::Wall)
    }

    pub fn validate(&self) -> Result<()> {
        let paired = |a: BcKind, b: BcKind| (a == BcKind::Periodic) == (b == BcKind::Periodic);
        if !paired(self.left, self.right) || !paired(self.bottom, self.top) {
            return Err(Error::config("periodic boundaries must be set on both opposite sides"));
        }
        Ok(())
    }
}

/// Mirror image of `q` across a wall whose normal is momentum axis `axis`.
#[inline]
pub fn reflect(q: State, axis: usize) -> State {
    let mut out = q;
    out[1 + axis] = -q[1 + axis];
    out
}

/// Fill the ghost halo. Sphere grids ignore `bc` and follow the grid seams.
pub fn fill_ghosts(field: &mut ConservedField, bc: &BoundaryCondition, grid: &Grid) {
    match grid {
        Grid::Sphere(sphere) => fill_sphere(field, sphere),
        _ => fill_cartesian(field, bc),
    }
}

fn fill_cartesian(field: &mut ConservedField, bc: &BoundaryCondition) {
    let (nx, ny) = (field.nx as isize, field.ny as isize);
    let h = field.halo as isize;
    let rows: Vec<isize> = if field.ndim == 1 { vec![0] } else { (0..ny).collect() };
    for &j in &rows {
        for k in 0..h {
            let (gl, gr) = (-1 - k, nx + k);
            let left = match bc.left {
                BcKind::Periodic => field.at(nx - 1 - k, j),
                BcKind::Wall => reflect(field.at(k, j), 0),
            };
            let right = match bc.right {
                BcKind::Periodic => field.at(k, j),
                BcKind::Wall => reflect(field.at(nx - 1 - k, j), 0),
            };
            field.set(gl, j, left);
            field.set(gr, j, right);
        }
    }
    if field.ndim == 1 {
        return;
    }
    for i in -h..nx + h {
        for k in 0..h {
            let (gb, gt) = (-1 - k, ny + k);
            let bottom = match bc.bottom {
                BcKind::Periodic => field.at(i, ny - 1 - k),
                BcKind::Wall => reflect(field.at(i, k), 1),
            };
            let top = match bc.top {
                BcKind::Periodic => field.at(i, k),
                BcKind::Wall => reflect(field.at(i, ny - 1 - k), 1),
            };
            field.set(i, gb, bottom);
            field.set(i, gt, top);
        }
    }
}

fn fill_sphere(field: &mut ConservedField, grid: &SphereGrid) {
    let (nx, ny) = (field.nx as isize, field.ny as isize);
    let h = field.halo as isize;
    for j in -h..ny + h {
        for i in -h..nx + h {
            if (0..nx).contains(&i) && (0..ny).contains(&j) {
                continue;
            }
            let (si, sj) = grid.wrap_index(i, j);
            let q = field.at(si as isize, sj as isize);
            field.set(i, j, q);
        }
    }
}

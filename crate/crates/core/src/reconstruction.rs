//! Cell-to-face reconstruction: piecewise constant, MINMOD-limited linear,
//! externally supplied stencil coefficients, and the flux-blend limiter.
//!
//! Every reconstruction produces one value per cell face. The solver pairs
//! the east face of cell `i` with the west face of cell `i + 1` (and north
//! with south in 2D) to form the left/right states of an interface.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ConservedField;
use crate::state::{State, MAX_VARS};

/// Widest coefficient stencil the two-cell ghost halo can feed.
pub const MAX_STENCIL: usize = 5;
pub const DEFAULT_STENCIL: usize = 3;

/// Face values of every interior cell, row-major. `south`/`north` are empty in 1D.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceStates {
    pub west: Vec<State>,
    pub east: Vec<State>,
    pub south: Vec<State>,
    pub north: Vec<State>,
}

impl FaceStates {
    fn from_cells(ndim: usize, cells: Vec<[State; 4]>) -> Self {
        let n = cells.len();
        let mut out = FaceStates {
            west: Vec::with_capacity(n),
            east: Vec::with_capacity(n),
            south: Vec::new(),
            north: Vec::new(),
        };
        if ndim == 2 {
            out.south.reserve(n);
            out.north.reserve(n);
        }
        for f in cells {
            out.west.push(f[0]);
            out.east.push(f[1]);
            if ndim == 2 {
                out.south.push(f[2]);
                out.north.push(f[3]);
            }
        }
        out
    }
}

pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Step offsets along each grid direction.
const DIRS: [(isize, isize); 2] = [(1, 0), (0, 1)];

fn per_cell<F>(field: &ConservedField, f: F) -> FaceStates
where
    F: Fn(isize, isize) -> [State; 4] + Sync,
{
    let (nx, _) = field.dims();
    let cells: Vec<[State; 4]> = (0..field.ncells())
        .into_par_iter()
        .map(|c| f((c % nx) as isize, (c / nx) as isize))
        .collect();
    FaceStates::from_cells(field.ndim(), cells)
}

pub fn reconstruct_first_order(field: &ConservedField) -> FaceStates {
    per_cell(field, |i, j| [field.at(i, j); 4])
}

/// MINMOD-limited linear reconstruction, applied componentwise and direction
/// by direction. With `literal_sign` the upwind face of each cell is built
/// with `+slope/2` on both sides, which reproduces the misprinted formula
/// but is not a consistent second-order reconstruction.
pub fn reconstruct_minmod(field: &ConservedField, literal_sign: bool) -> FaceStates {
    let ncomp = field.ncomp();
    let ndim = field.ndim();
    per_cell(field, |i, j| {
        let q = field.at(i, j);
        let mut faces = [q; 4];
        for (d, (di, dj)) in DIRS.iter().enumerate().take(ndim) {
            let back = q - field.at(i - di, j - dj);
            let fwd = field.at(i + di, j + dj) - q;
            let mut half = State::ZERO;
            for k in 0..ncomp {
                half[k] = 0.5 * minmod(back[k], fwd[k]);
            }
            faces[2 * d] = if literal_sign { q + half } else { q - half };
            faces[2 * d + 1] = q + half;
        }
        faces
    })
}

/// Per-cell linear stencil weights producing a reconstruction slope.
///
/// `alpha` is laid out as `[cell][direction][component][stencil]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeCoefficients {
    pub width: usize,
    pub ndirs: usize,
    pub ncomp: usize,
    pub ncells: usize,
    pub alpha: Vec<f64>,
}

impl SlopeCoefficients {
    pub fn zeros(ncells: usize, ndirs: usize, ncomp: usize, width: usize) -> Result<Self> {
        Self::new(ncells, ndirs, ncomp, width, vec![0.0; ncells * ndirs * ncomp * width])
    }

    pub fn new(ncells: usize, ndirs: usize, ncomp: usize, width: usize, alpha: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || width == 0 {
            return Err(Error::Shape(format!("stencil width {width} is not odd")));
        }
        if width > MAX_STENCIL {
            return Err(Error::Shape(format!(
                "stencil width {width} exceeds the ghost halo (max {MAX_STENCIL})"
            )));
        }
        if ncomp > MAX_VARS {
            return Err(Error::Shape(format!("{ncomp} components per cell")));
        }
        let expected = ncells * ndirs * ncomp * width;
        if alpha.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} coefficients, got {}",
                alpha.len()
            )));
        }
        Ok(SlopeCoefficients {
            width,
            ndirs,
            ncomp,
            ncells,
            alpha,
        })
    }

    /// The same stencil for every cell, direction and component.
    pub fn uniform(ncells: usize, ndirs: usize, ncomp: usize, stencil: &[f64]) -> Result<Self> {
        let alpha = stencil
            .iter()
            .copied()
            .cycle()
            .take(ncells * ndirs * ncomp * stencil.len())
            .collect();
        Self::new(ncells, ndirs, ncomp, stencil.len(), alpha)
    }

    #[inline]
    pub fn stencil(&self, cell: usize, dir: usize, comp: usize) -> &[f64] {
        let start = ((cell * self.ndirs + dir) * self.ncomp + comp) * self.width;
        &self.alpha[start..start + self.width]
    }
}

/// Linear reconstruction with slopes `Σ_k α_k Q_{i+k-w}` taken from `coeffs`.
pub fn reconstruct_with_coefficients(field: &ConservedField, coeffs: &SlopeCoefficients) -> Result<FaceStates> {
    let ndim = field.ndim();
    let ncomp = field.ncomp();
    if coeffs.ncells != field.ncells() || coeffs.ndirs != ndim || coeffs.ncomp != ncomp {
        return Err(Error::Shape(format!(
            "coefficients cover {} cells x {} directions x {} components, field has {} x {} x {}",
            coeffs.ncells,
            coeffs.ndirs,
            coeffs.ncomp,
            field.ncells(),
            ndim,
            ncomp
        )));
    }
    let w = (coeffs.width / 2) as isize;
    if w > field.halo() as isize {
        return Err(Error::Shape(format!(
            "stencil half-width {w} exceeds halo {}",
            field.halo()
        )));
    }
    let (nx, _) = field.dims();
    Ok(per_cell(field, |i, j| {
        let cell = j as usize * nx + i as usize;
        let q = field.at(i, j);
        let mut faces = [q; 4];
        for (d, (di, dj)) in DIRS.iter().enumerate().take(ndim) {
            let (mut west, mut east) = (q, q);
            for k in 0..ncomp {
                let alpha = coeffs.stencil(cell, d, k);
                let slope: f64 = alpha
                    .iter()
                    .enumerate()
                    .map(|(s, a)| {
                        let o = s as isize - w;
                        a * field.at(i + o * di, j + o * dj)[k]
                    })
                    .sum();
                // Skipping the add keeps a zero slope bit-identical to first order (-0.0 + 0.0 is +0.0).
                if slope != 0.0 {
                    west[k] = q[k] - 0.5 * slope;
                    east[k] = q[k] + 0.5 * slope;
                }
            }
            faces[2 * d] = west;
            faces[2 * d + 1] = east;
        }
        faces
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limiter {
    MinmodPhi,
    VanLeer,
    Superbee,
}

impl Limiter {
    /// Limiter function φ(r); zero for non-monotone data (r ≤ 0).
    pub fn phi(self, r: f64) -> f64 {
        if r.is_nan() || r <= 0.0 {
            return 0.0;
        }
        match self {
            Limiter::MinmodPhi => r.min(1.0),
            Limiter::VanLeer => {
                if r.is_infinite() {
                    2.0
                } else {
                    2.0 * r / (1.0 + r)
                }
            }
            Limiter::Superbee => (2.0 * r).min(1.0).max(r.min(2.0)),
        }
    }
}

impl FromStr for Limiter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minmod-phi" | "minmod" => Ok(Limiter::MinmodPhi),
            "vanleer" | "van-leer" => Ok(Limiter::VanLeer),
            "superbee" => Ok(Limiter::Superbee),
            other => Err(Error::Scheme(format!("unknown limiter '{other}'"))),
        }
    }
}

/// Ratio of successive gradients `(q_i - q_{i-1}) / (q_{i+1} - q_i)`.
pub fn gradient_ratio(q_prev: f64, q: f64, q_next: f64) -> f64 {
    let num = q - q_prev;
    let den = q_next - q;
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY * num.signum()
        }
    } else {
        num / den
    }
}

/// `F_low - φ(r) (F_low - F_high)`.
pub fn blend_flux(f_low: State, f_high: State, r: f64, limiter: Limiter) -> State {
    let phi = limiter.phi(r);
    if phi == 0.0 {
        return f_low;
    }
    f_low - (f_low - f_high) * phi
}
